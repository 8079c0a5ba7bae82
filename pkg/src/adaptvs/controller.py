"""Closed-loop pixel-space proportional control with online rotation correction.

One step of the loop: form the pixel error (target minus image center), turn
it into a capped pixel command, rotate the command by the current correction
R(theta_hat), map it to tendon space through the model pseudo-inverse, step
the plant, measure optical flow, and, when the flow gate opens, update the
correction estimate.

The estimator is fed the reconstructed total correction by default: the
residual angle between the pre-rotation command and the observed motion is
measure_angle(cmd, v) = -(phi + theta_hat), so adding the current estimate
back gives a measurement of -phi itself and the filter converges to the full
correction no matter how much of it is already applied. This is algebraically
the same as measuring against the rotated (actually executed) command. The
raw-residual alternative, which only chases the remaining misalignment and
settles halfway under a plain blend, sits behind
EstimatorConfig.raw_residual_updates.

The Lyapunov monitor is simulator-privileged: V_dot_analytic needs the true
Jacobian, which the controller itself never sees. The monitor reports, it
does not actuate.

closed_loop_step is the single implementation of the cycle. The autonomous
harness calls it with the P-controller command; the teleop server calls it
with a human override command. Keeping one path is what guarantees the two
modes cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import (
    AngleEstimate,
    EstimatorConfig,
    filter_update,
    measure_angle,
    rotation_matrix,
    should_update,
    wrap_angle,
)
from .kinematics import CameraModel, Jacobian, pseudo_inverse
from .plant import DisturbanceSpec, PlantState, plant_step, true_jacobian
from .vision import Image, lucas_kanade, render_points, synthetic_flow


@dataclass(frozen=True)
class ControllerConfig:
    """Proportional gain, step cap, and trial termination rules.

    Kp is per step (the loop runs at camera rate); step_cap bounds the
    commanded pixel motion so the optical-flow small-motion assumption holds.
    Convergence: error below convergence_radius_px for convergence_window
    consecutive steps. Divergence: error above divergence_factor times the
    initial error for divergence_window consecutive steps, or target off
    screen.
    """

    Kp: float = 0.2
    step_cap: float = 3.0
    convergence_radius_px: float = 2.0
    convergence_window: int = 30
    divergence_factor: float = 2.0
    divergence_window: int = 60
    damping: float = 0.0

    def __post_init__(self) -> None:
        if self.Kp <= 0:
            raise ValueError("Kp must be > 0")
        if self.step_cap <= 0:
            raise ValueError("step_cap must be > 0")
        if self.convergence_radius_px <= 0:
            raise ValueError("convergence_radius_px must be > 0")
        if self.convergence_window < 1 or self.divergence_window < 1:
            raise ValueError("convergence/divergence windows must be >= 1")
        if self.divergence_factor <= 1:
            raise ValueError("divergence_factor must be > 1")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")


@dataclass(frozen=True)
class ControlCommand:
    """Capped pixel command and the tendon velocities that realize it."""

    pixel_cmd: np.ndarray  # pixels/step, after the norm cap
    qdot: np.ndarray  # meters/step, J_pinv @ R(theta_hat) @ pixel_cmd


@dataclass
class LyapunovSample:
    """V = e'e/2 plus its analytic rate; the empirical delta is loop-filled."""

    V: float
    V_dot_analytic: float
    V_delta_empirical: float = 0.0


@dataclass
class StepRow:
    """One telemetry row per control step.

    target_px, error_norm_px, V, V_dot_analytic, and phi_current are
    sampled before the step; theta_hat is the value after this step's
    filter update (or the carried value when the gate stayed closed).
    """

    t: int
    target_px: np.ndarray
    error_norm_px: float
    theta_hat: float
    gate_open: bool
    flow_magnitude: float
    V: float
    V_delta: float
    V_dot_analytic: float
    phi_current: float


def clamp_step(v: np.ndarray, cap: float) -> np.ndarray:
    """Scale v down to the cap when its norm exceeds it; direction preserved."""
    v = np.asarray(v, dtype=float)
    norm = float(np.hypot(v[0], v[1]))
    if norm <= cap or norm == 0.0:
        return v.copy()
    return v * (cap / norm)


def control_step(
    error: np.ndarray,
    theta_hat: float,
    J_model: Jacobian,
    Kp: float,
    step_cap: float,
    damping: float = 0.0,
    J_pinv: Jacobian | None = None,
) -> ControlCommand:
    """Proportional pixel command, rotated then mapped to tendon space.

    The rotation is applied to the pixel command before the pseudo-inverse,
    so the correction acts in the camera frame where it was estimated. A
    precomputed J_pinv skips the per-step inversion inside the loop.
    """
    if Kp <= 0:
        raise ValueError("Kp must be > 0")
    pixel_cmd = clamp_step(Kp * np.asarray(error, dtype=float), step_cap)
    if J_pinv is None:
        J_pinv = pseudo_inverse(J_model, damping)
    qdot = J_pinv.m @ (rotation_matrix(theta_hat) @ pixel_cmd)
    return ControlCommand(pixel_cmd=pixel_cmd, qdot=qdot)


def lyapunov_sample(
    error: np.ndarray, J_true: Jacobian, J_pinv: Jacobian, R: np.ndarray
) -> LyapunovSample:
    """V = e'e/2 and the analytic rate -e' (J* J_pinv R) e."""
    e = np.asarray(error, dtype=float)
    V = 0.5 * float(e @ e)
    V_dot = -float(e @ (J_true.m @ J_pinv.m @ R) @ e)
    return LyapunovSample(V=V, V_dot_analytic=V_dot)


def mismatch_spectral_radius(Kp: float, s: float, phi: float) -> float:
    """Spectral radius of the uncorrected error map I - Kp s R(phi).

    The eigenvalues are 1 - Kp s e^{+-i phi}, so rho^2 =
    1 - 2 Kp s cos(phi) + (Kp s)^2. The discrete loop without adaptation
    converges iff this is < 1, i.e. iff cos(phi) > Kp s / 2.
    """
    g = Kp * s
    return float(np.sqrt(max(0.0, 1.0 - 2.0 * g * np.cos(phi) + g * g)))


@dataclass
class TrialContext:
    """Everything one trial's control loop needs besides the evolving state.

    Mutable on purpose: the RNG advances every synthetic-flow step and the
    previous rendered frame is carried between Lucas-Kanade steps. One
    context belongs to exactly one loop.
    """

    controller: ControllerConfig
    estimator: EstimatorConfig
    disturbance: DisturbanceSpec
    camera: CameraModel
    J_model: Jacobian
    J_pinv: Jacobian
    rng: np.random.Generator
    flow_source: str = "synthetic"  # one of {synthetic, lucas_kanade}
    flow_threshold: float = 0.0
    blob_sigma: float = 2.0
    prev_frame: Image | None = field(default=None, repr=False)

    @classmethod
    def create(
        cls,
        controller: ControllerConfig,
        estimator: EstimatorConfig,
        disturbance: DisturbanceSpec,
        camera: CameraModel,
        J_model: Jacobian,
        rng: np.random.Generator,
        flow_source: str = "synthetic",
        blob_sigma: float = 2.0,
    ) -> "TrialContext":
        if flow_source not in ("synthetic", "lucas_kanade"):
            raise ValueError("flow_source must be 'synthetic' or 'lucas_kanade'")
        threshold = estimator.flow_threshold
        if threshold is None:
            # unstated in config: gate at twice the environment's flow noise
            threshold = 2.0 * disturbance.flow_noise_sigma
        return cls(
            controller=controller,
            estimator=estimator,
            disturbance=disturbance,
            camera=camera,
            J_model=J_model,
            J_pinv=pseudo_inverse(J_model, controller.damping),
            rng=rng,
            flow_source=flow_source,
            flow_threshold=threshold,
            blob_sigma=blob_sigma,
        )

    def swap_disturbance(self, disturbance: DisturbanceSpec) -> None:
        """Replace the environment mid-session (teleop set_env), rethresholding."""
        self.disturbance = disturbance
        if self.estimator.flow_threshold is None:
            self.flow_threshold = 2.0 * disturbance.flow_noise_sigma


def _measure_flow(
    ctx: TrialContext, features_before: np.ndarray, state_after: PlantState
):
    if ctx.flow_source == "synthetic":
        return synthetic_flow(
            features_before,
            state_after.features_px,
            ctx.disturbance.flow_noise_sigma,
            ctx.rng,
        )
    if ctx.prev_frame is None:
        ctx.prev_frame = render_points(features_before, ctx.camera, ctx.blob_sigma)
    next_frame = render_points(state_after.features_px, ctx.camera, ctx.blob_sigma)
    flow = lucas_kanade(ctx.prev_frame, next_frame, features_before)
    ctx.prev_frame = next_frame
    return flow


def closed_loop_step(
    state: PlantState,
    est: AngleEstimate,
    ctx: TrialContext,
    pixel_cmd_override: np.ndarray | None = None,
    apply_correction: bool = True,
    update_estimator: bool = True,
) -> tuple[PlantState, AngleEstimate, StepRow]:
    """One full cycle: command, plant, flow, gated estimator update, telemetry.

    pixel_cmd_override replaces the P-controller's command (teleop steering);
    it is still norm-capped. apply_correction=False commands with R(0) and
    update_estimator=False freezes theta_hat, which together are the
    adaptation-off mode.
    """
    error = state.target_px - ctx.camera.center
    theta_used = est.theta_hat if apply_correction else 0.0
    if pixel_cmd_override is None:
        cmd = control_step(
            error,
            theta_used,
            ctx.J_model,
            ctx.controller.Kp,
            ctx.controller.step_cap,
            J_pinv=ctx.J_pinv,
        )
    else:
        pixel_cmd = clamp_step(pixel_cmd_override, ctx.controller.step_cap)
        qdot = ctx.J_pinv.m @ (rotation_matrix(theta_used) @ pixel_cmd)
        cmd = ControlCommand(pixel_cmd=pixel_cmd, qdot=qdot)

    R_used = rotation_matrix(theta_used)
    J_true = true_jacobian(ctx.J_model, ctx.disturbance, state.t)
    lyap = lyapunov_sample(error, J_true, ctx.J_pinv, R_used)

    features_before = state.features_px
    state_next, _observed = plant_step(state, cmd.qdot, ctx.disturbance, ctx.J_model)
    if not ctx.camera.in_view(state_next.target_px):
        state_next.off_screen = True

    flow = _measure_flow(ctx, features_before, state_next)

    cmd_magnitude = float(np.hypot(cmd.pixel_cmd[0], cmd.pixel_cmd[1]))
    gate = (
        update_estimator
        and cmd_magnitude > 0.0
        and should_update(flow, ctx.estimator, ctx.flow_threshold)
    )
    est_next = est
    if gate:
        residual = measure_angle(cmd.pixel_cmd, flow.aggregate_v)
        if ctx.estimator.raw_residual_updates:
            theta_meas = residual
        else:
            theta_meas = wrap_angle(est.theta_hat + residual)
        est_next = filter_update(est, theta_meas, ctx.estimator)

    row = StepRow(
        t=state.t,
        target_px=state.target_px.copy(),
        error_norm_px=float(np.hypot(error[0], error[1])),
        theta_hat=est_next.theta_hat,
        gate_open=bool(gate),
        flow_magnitude=flow.magnitude,
        V=lyap.V,
        V_delta=0.0,  # filled by the trial loop from consecutive V values
        V_dot_analytic=lyap.V_dot_analytic,
        phi_current=state.phi_current,
    )
    return state_next, est_next, row
