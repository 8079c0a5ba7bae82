"""The "real" system: a hidden linear disturbance composed onto the model Jacobian.

The true Jacobian is J* = P J where P acts in pixel (output) space:

    P = s R(phi)                                    without shear
    P = R(psi) diag(sigma1, sigma2) R(-psi) R(phi) s   with shear

phi may drift linearly over time. A dead zone models frictional and
viscoelastic losses: commanded steps whose disturbed pixel magnitude falls
below it produce no motion at all, which is exactly the failure mode the
estimator's flow-magnitude gate exists to defend against.

The plant also owns the image-space bookkeeping. Camera-center motion and
scene motion are opposite in sign: when the camera moves by observed_motion,
the target and every feature point shift by -observed_motion in the image.
Keeping that convention in one place is what lets vision and controller agree
about signs.

Environment presets are invented fixtures, not measured ground truth; the
difficulty (rotation, attenuation, dead zone, noise) grows with the number of
bends in the path. They are versioned so recorded results stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import Jacobian, JointState
from .estimator import rotation_matrix

PRESET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ShearSpec:
    """Unequal principal gains sigma1/sigma2 along a rotated axis."""

    sigma1: float
    sigma2: float
    axis: float = 0.0  # radians, principal-axis angle psi

    def __post_init__(self) -> None:
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("shear singular values must be > 0")


@dataclass(frozen=True)
class DisturbanceSpec:
    rotation_phi: float = 0.0  # radians, hidden rotation in pixel space
    scale_s: float = 1.0  # energy-loss factor
    shear: ShearSpec | None = None
    dead_zone: float = 0.0  # pixels/step
    drift_rate: float = 0.0  # radians/step added to rotation_phi over time
    flow_noise_sigma: float = 0.0  # pixels, injected by the synthetic flow path

    def __post_init__(self) -> None:
        if self.scale_s <= 0:
            raise ValueError("scale_s must be > 0")
        if self.dead_zone < 0:
            raise ValueError("dead_zone must be >= 0")
        if self.flow_noise_sigma < 0:
            raise ValueError("flow_noise_sigma must be >= 0")

    def phi_at(self, t: int) -> float:
        return self.rotation_phi + self.drift_rate * t


@dataclass(frozen=True)
class EnvironmentPreset:
    name: str
    disturbance: DisturbanceSpec


_PRESETS = {
    "no_bend": EnvironmentPreset(
        name="no_bend",
        disturbance=DisturbanceSpec(
            rotation_phi=np.deg2rad(10.0), scale_s=0.95, dead_zone=0.5, flow_noise_sigma=0.5
        ),
    ),
    "one_bend": EnvironmentPreset(
        name="one_bend",
        disturbance=DisturbanceSpec(
            rotation_phi=np.deg2rad(35.0), scale_s=0.8, dead_zone=1.0, flow_noise_sigma=1.0
        ),
    ),
    "two_bend": EnvironmentPreset(
        name="two_bend",
        disturbance=DisturbanceSpec(
            rotation_phi=np.deg2rad(70.0), scale_s=0.6, dead_zone=2.0, flow_noise_sigma=2.0
        ),
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> EnvironmentPreset:
    """Look up a named environment preset."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown environment preset {name!r}; valid: {', '.join(PRESET_NAMES)}") from None


@dataclass
class PlantState:
    """World state of one trial: tendons, target pixel, scene features, time."""

    q: JointState
    target_px: np.ndarray
    t: int = 0
    phi_current: float = 0.0
    features_px: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    off_screen: bool = False


def initial_plant_state(
    target_px: np.ndarray, d: DisturbanceSpec, tendon_count: int, features_px: np.ndarray | None = None
) -> PlantState:
    return PlantState(
        q=JointState.zeros(tendon_count),
        target_px=np.asarray(target_px, dtype=float).copy(),
        t=0,
        phi_current=d.phi_at(0),
        features_px=np.zeros((0, 2)) if features_px is None else np.asarray(features_px, float).copy(),
    )


def disturbance_map(d: DisturbanceSpec, t: int) -> np.ndarray:
    """The 2x2 pixel-space map P composed onto the model Jacobian at step t."""
    p = d.scale_s * rotation_matrix(d.phi_at(t))
    if d.shear is not None:
        axis = rotation_matrix(d.shear.axis)
        p = axis @ np.diag([d.shear.sigma1, d.shear.sigma2]) @ axis.T @ p
    return p


def true_jacobian(J_model: Jacobian, d: DisturbanceSpec, t: int = 0) -> Jacobian:
    """J* = P J_model with the drifted rotation at step t."""
    return Jacobian(m=disturbance_map(d, t) @ J_model.m, role="true")


def plant_step(
    state: PlantState, qdot: np.ndarray, d: DisturbanceSpec, J_model: Jacobian
) -> tuple[PlantState, np.ndarray]:
    """Advance the plant one step and return (new state, observed camera motion).

    raw = J* qdot. If its magnitude is below the dead zone the step is
    swallowed by stiction: nothing moves, q stays put. Otherwise q integrates
    qdot and the scene (target and features) shifts by -raw.
    """
    qdot = np.asarray(qdot, dtype=float)
    if not np.all(np.isfinite(qdot)):
        raise ValueError("qdot must be finite")
    raw = true_jacobian(J_model, d, state.t).m @ qdot
    stalled = float(np.hypot(raw[0], raw[1])) < d.dead_zone
    if stalled:
        observed = np.zeros(2)
        q_next = state.q.q
        target_next = state.target_px
        features_next = state.features_px
    else:
        observed = raw
        q_next = state.q.q + qdot
        target_next = state.target_px - observed
        features_next = state.features_px - observed
    t_next = state.t + 1
    next_state = replace(
        state,
        q=JointState(q=q_next.copy(), qdot=qdot.copy()),
        target_px=target_next.copy(),
        t=t_next,
        phi_current=d.phi_at(t_next),
        features_px=features_next.copy(),
    )
    return next_state, observed
