"""Simplified tendon-driven endoscope kinematics and camera projection.

The instrument tip is a single bending segment driven by tendons routed at a
radial offset from the backbone. In the small-deflection regime the tip angles
are linear in the tendon displacements, and the camera (mounted at the tip)
rotates with it. Under these assumptions the pixel-space Jacobian mapping
tendon velocities to camera-center velocity is an analytic constant matrix.

That deliberate simplicity is the point: the adaptive controller built on top
only needs a plausible, possibly wrong model Jacobian. All model/reality
mismatch is injected downstream by the plant module, so the kinematic model
here is the sole "trusted" map and stays closed-form.

Conventions: image origin at the top-left corner, x rightward along columns,
y downward along rows. A positive bend in a plane shifts the projected scene
in the corresponding positive pixel direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tip angles are clamped strictly inside +-pi/2 so projections stay finite.
BEND_LIMIT = np.pi / 2 - 1e-9


class RankDeficiencyError(ValueError):
    """Jacobian has no right inverse and no damping was requested."""


class ProjectionError(ValueError):
    """Point cannot be projected (at or behind the camera plane)."""


@dataclass(frozen=True)
class CatheterConfig:
    """Physical constants of the bending segment.

    Attributes:
        segment_length: length of the bending section, meters.
        tendon_count: number of tendons; 4 = two antagonistic pairs at 90
            degree spacing, 2 = one tendon per bending plane.
        tendon_radius: radial offset of the tendon channels from the
            backbone, meters.
        max_tendon_displacement: saturation limit per tendon, meters.
    """

    segment_length: float = 0.05
    tendon_count: int = 4
    tendon_radius: float = 0.0009
    max_tendon_displacement: float = 0.004

    def __post_init__(self) -> None:
        if self.tendon_count not in (2, 4):
            raise ValueError("tendon_count must be 2 or 4")
        if self.tendon_radius <= 0:
            raise ValueError("tendon_radius must be > 0")
        if self.segment_length <= 0:
            raise ValueError("segment_length must be > 0")
        if self.max_tendon_displacement <= 0:
            raise ValueError("max_tendon_displacement must be > 0")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera at the instrument tip."""

    width: int = 380
    height: int = 400
    focal_px: float = 300.0
    frame_rate: float = 30.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0 or self.focal_px <= 0:
            raise ValueError("camera dimensions and focal length must be > 0")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.width / 2.0, self.height / 2.0])

    def in_view(self, px: np.ndarray) -> bool:
        return bool(0.0 <= px[0] < self.width and 0.0 <= px[1] < self.height)


@dataclass
class JointState:
    """Tendon displacements and the velocity applied on the last step."""

    q: np.ndarray
    qdot: np.ndarray

    @classmethod
    def zeros(cls, tendon_count: int) -> "JointState":
        return cls(q=np.zeros(tendon_count), qdot=np.zeros(tendon_count))


@dataclass(frozen=True)
class TipState:
    """Small-deflection tip angles in the two bending planes.

    ``clamped`` flags that a joint limit or the small-angle bound was hit and
    the angles were saturated; step logs surface it as a warning.
    """

    bend_x: float
    bend_y: float
    clamped: bool = False

    @property
    def bend(self) -> np.ndarray:
        return np.array([self.bend_x, self.bend_y])


@dataclass(frozen=True)
class Jacobian:
    """2xn pixel-space Jacobian (or its nx2 pseudo-inverse), with role tag."""

    m: np.ndarray
    role: str = "model"  # one of {model, true, pseudo_inverse}


def tip_from_joints(joints: JointState, cfg: CatheterConfig) -> TipState:
    """Map tendon displacements to tip bend angles.

    For the 4-tendon layout each antagonistic pair bends one plane:
    bend_x = (q1 - q3) / (2 r), bend_y = (q2 - q4) / (2 r). For 2 tendons
    each drives its own plane: bend_i = q_i / r. Displacements beyond the
    per-tendon limit and angles beyond the small-angle bound are saturated
    and flagged rather than raised, so a runaway command cannot crash a
    trial mid-loop.
    """
    q = np.asarray(joints.q, dtype=float)
    if q.shape != (cfg.tendon_count,):
        raise ValueError(f"expected {cfg.tendon_count} tendon displacements, got shape {q.shape}")
    clamped = bool(np.any(np.abs(q) > cfg.max_tendon_displacement))
    q = np.clip(q, -cfg.max_tendon_displacement, cfg.max_tendon_displacement)
    r = cfg.tendon_radius
    if cfg.tendon_count == 4:
        bend = np.array([(q[0] - q[2]) / (2 * r), (q[1] - q[3]) / (2 * r)])
    else:
        bend = q / r
    if np.any(np.abs(bend) > BEND_LIMIT):
        clamped = True
        bend = np.clip(bend, -BEND_LIMIT, BEND_LIMIT)
    return TipState(bend_x=float(bend[0]), bend_y=float(bend[1]), clamped=clamped)


def model_jacobian(joints: JointState, cfg: CatheterConfig, cam: CameraModel) -> Jacobian:
    """Analytic small-deflection Jacobian, pixels per meter of tendon motion.

    Pixel velocity is focal_px times the bend-angle rate, so for 4 tendons
    J = (focal_px / (2 r)) [[1,0,-1,0],[0,1,0,-1]] and for 2 tendons
    J = (focal_px / r) I. Constant in q within the small-angle regime; the
    argument is kept so configuration-dependent models can slot in later.
    """
    del joints  # constant in the small-deflection regime
    f = cam.focal_px
    r = cfg.tendon_radius
    if cfg.tendon_count == 4:
        m = (f / (2 * r)) * np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    else:
        m = (f / r) * np.eye(2)
    return Jacobian(m=m, role="model")


def pseudo_inverse(J: Jacobian, damping: float = 0.0) -> Jacobian:
    """Damped least-squares right pseudo-inverse J^T (J J^T + damping^2 I)^-1.

    With damping = 0 this is the exact Moore-Penrose right inverse and
    J @ J_pinv = I for full-row-rank J. A rank-deficient J with zero damping
    raises RankDeficiencyError instead of silently producing NaNs.
    """
    if damping < 0:
        raise ValueError("damping must be >= 0")
    m = np.asarray(J.m, dtype=float)
    if m.ndim != 2 or m.shape[0] != 2:
        raise ValueError(f"expected a 2xn Jacobian, got shape {m.shape}")
    if damping == 0.0:
        svals = np.linalg.svd(m, compute_uv=False)
        if svals[-1] <= svals[0] * 1e-12:
            raise RankDeficiencyError(
                "Jacobian is rank deficient and damping is 0; no exact pseudo-inverse"
            )
    jjt = m @ m.T + damping**2 * np.eye(2)
    return Jacobian(m=m.T @ np.linalg.inv(jjt), role="pseudo_inverse")


def _camera_rotation(tip: TipState) -> np.ndarray:
    """World-to-camera rotation for the given tip bend.

    Signs are chosen so that a positive bend shifts projections in the
    positive pixel direction on the matching axis.
    """
    bx, by = tip.bend_x, tip.bend_y
    cy_, sy_ = np.cos(bx), np.sin(bx)
    rot_y = np.array([[cy_, 0.0, sy_], [0.0, 1.0, 0.0], [-sy_, 0.0, cy_]])
    cx_, sx_ = np.cos(-by), np.sin(-by)
    rot_x = np.array([[1.0, 0.0, 0.0], [0.0, cx_, -sx_], [0.0, sx_, cx_]])
    return rot_x @ rot_y


def project_point(point: np.ndarray, tip: TipState, cam: CameraModel) -> np.ndarray:
    """Project a world point (x, y, z in the zero-bend camera frame) to pixels."""
    p = _camera_rotation(tip) @ np.asarray(point, dtype=float)
    if p[2] <= 0:
        raise ProjectionError(f"point {point} is at or behind the camera plane")
    return cam.center + cam.focal_px * p[:2] / p[2]


def project(tip: TipState, target_depth: float, cam: CameraModel) -> np.ndarray:
    """Project the fixed on-axis target at the given depth.

    At zero bend the target sits exactly at the image center; a small bend
    delta in one plane shifts the corresponding pixel coordinate by roughly
    focal_px * delta.
    """
    if target_depth <= 0:
        raise ValueError("target_depth must be > 0")
    return project_point(np.array([0.0, 0.0, target_depth]), tip, cam)
