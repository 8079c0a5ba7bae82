"""Online estimation of the rotation correction between commanded and observed motion.

The controller commands a camera motion in pixel space; the plant executes a
rotated (and scaled) version of it. The estimator measures the signed angle
between the two vectors each step and filters it, either through a scalar
Kalman recursion or through its converged limit, a first-order IIR smoother

    theta_hat <- alpha * theta_hat + (1 - alpha) * theta_meas

wrapped to [-pi, pi). The Kalman gain recursion weights the prior by the
gain k and the measurement by (1 - k); its fixed point k_inf is what the IIR
alpha corresponds to, and the equivalence of the two modes after gain
convergence is part of the test suite rather than assumed.

Angle sign convention: measure_angle(cmd, v) is the rotation that carries the
observed motion v onto the commanded direction, i.e. the correction the
controller should compose into its next command. An arccos of the normalized
dot product would lose the sign, so the angle is taken as atan2 of the 2D
cross and dot products.

Updates are gated on flow magnitude: measurements taken while the commanded
motion was too small to overcome plant losses carry no directional
information and would only inject noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

_TWO_PI = 2.0 * np.pi

# Absolute gate floor in pixels/step. Pixel positions are stored at O(100) px
# where one ulp is ~6e-14 px, so flows far below this are representation
# noise with arbitrary direction; they must never reach the filter even when
# the configured threshold is zero.
FLOW_MEASUREMENT_FLOOR = 1e-9


class MeasurementUndefinedError(ValueError):
    """Angle measurement requested for a zero-length vector."""


class DegenerateFilterError(ValueError):
    """Kalman recursion has no meaningful fixed point (both noise terms zero)."""


def wrap_angle(x: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return float((x + np.pi) % _TWO_PI - np.pi)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class AngleEstimate:
    """Filtered correction angle, its variance (Kalman mode), and last update step."""

    theta_hat: float = 0.0
    variance: float = 1.0
    t: int = 0


@dataclass(frozen=True)
class RotationCorrection:
    theta: float
    matrix: np.ndarray


@dataclass(frozen=True)
class EstimatorConfig:
    """Filter mode and noise/gating parameters.

    flow_threshold None means "derive from the environment": the loop uses
    2x the environment's flow noise sigma. wrap_mode selects between the
    raw-blend-then-wrap update (blend_mod) and a shortest-arc variant that
    blends along the short way around the circle; they differ only when
    estimate and measurement straddle the +-pi seam.

    raw_residual_updates switches the measurement fed to the filter from the
    reconstructed total correction (current estimate plus measured residual;
    converges to the full correction) to the raw residual alone, which only
    chases the remaining misalignment. Default off; see controller notes.
    """

    mode: str = "iir"  # one of {iir, kalman}
    alpha: float = 0.95
    sigma_w: float = 0.05
    sigma_v: float = 0.2
    sigma_theta_0: float = 1.0
    theta_0: float = 0.0
    flow_threshold: float | None = None
    wrap_mode: str = "blend_mod"  # one of {blend_mod, shortest_arc}
    raw_residual_updates: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("iir", "kalman"):
            raise ValueError("mode must be 'iir' or 'kalman'")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        if self.sigma_w < 0 or self.sigma_v < 0 or self.sigma_theta_0 < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.flow_threshold is not None and self.flow_threshold < 0:
            raise ValueError("flow_threshold must be >= 0")
        if self.wrap_mode not in ("blend_mod", "shortest_arc"):
            raise ValueError("wrap_mode must be 'blend_mod' or 'shortest_arc'")

    def initial_estimate(self) -> AngleEstimate:
        return AngleEstimate(
            theta_hat=wrap_angle(self.theta_0), variance=self.sigma_theta_0**2, t=0
        )


def measure_angle(cmd: np.ndarray, v: np.ndarray) -> float:
    """Signed angle of the rotation carrying v onto cmd's direction.

    Returns atan2(cross(v, cmd), dot(v, cmd)) in [-pi, pi); magnitudes of
    both vectors are irrelevant. Zero-length input raises, callers gate on
    magnitude first.
    """
    cmd = np.asarray(cmd, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(cmd)) and np.all(np.isfinite(v))):
        raise MeasurementUndefinedError("non-finite vector in angle measurement")
    if np.hypot(cmd[0], cmd[1]) == 0.0 or np.hypot(v[0], v[1]) == 0.0:
        raise MeasurementUndefinedError("angle between zero-length vectors is undefined")
    cross = v[0] * cmd[1] - v[1] * cmd[0]
    dot = v[0] * cmd[0] + v[1] * cmd[1]
    return wrap_angle(np.arctan2(cross, dot))


def kalman_update(est: AngleEstimate, theta_meas: float, cfg: EstimatorConfig) -> AngleEstimate:
    """One step of the scalar gain/variance recursion.

    k = (sigma^2 + sigma_w^2) / (sigma^2 + sigma_w^2 + sigma_v^2)
    theta_hat <- k * theta_hat + (1 - k) * theta_meas
    sigma^2   <- (1 - k) (sigma^2 + sigma_w^2)
    """
    var_pred = est.variance + cfg.sigma_w**2
    k = var_pred / (var_pred + cfg.sigma_v**2)
    theta = wrap_angle(k * est.theta_hat + (1.0 - k) * theta_meas)
    return AngleEstimate(theta_hat=theta, variance=(1.0 - k) * var_pred, t=est.t + 1)


def steady_state_gain(cfg: EstimatorConfig, max_iter: int = 100_000) -> float:
    """Fixed point k_inf of the gain/variance recursion, the equivalent IIR alpha.

    Iterates the variance recursion from sigma_theta_0^2 until the gain's
    relative change drops below 1e-12.
    """
    if cfg.sigma_w == 0.0 and cfg.sigma_v == 0.0:
        raise DegenerateFilterError("sigma_w and sigma_v cannot both be zero")
    if cfg.sigma_w == 0.0:
        # variance decays harmonically to zero, too slow for the relative-change
        # stop; the limit gain is exactly 0 (measurements eventually ignored)
        return 0.0
    var = cfg.sigma_theta_0**2
    k_prev = None
    for _ in range(max_iter):
        var_pred = var + cfg.sigma_w**2
        k = var_pred / (var_pred + cfg.sigma_v**2)
        var = (1.0 - k) * var_pred
        if k_prev is not None and abs(k - k_prev) <= 1e-12 * max(abs(k), 1e-30):
            return float(k)
        k_prev = k
    raise RuntimeError("steady-state gain did not converge")


def iir_update(theta_hat_prev: float, theta_meas: float, cfg: EstimatorConfig) -> float:
    """Converged-filter update theta_hat <- alpha*prev + (1-alpha)*meas, wrapped.

    blend_mod blends the raw values and wraps the blend:
    mod(alpha*prev + (1-alpha)*meas + pi, 2pi) - pi. shortest_arc first wraps
    the innovation so the blend moves along the short way around the circle.
    """
    a = cfg.alpha
    if cfg.wrap_mode == "blend_mod":
        return wrap_angle(a * theta_hat_prev + (1.0 - a) * theta_meas)
    return wrap_angle(theta_hat_prev + (1.0 - a) * wrap_angle(theta_meas - theta_hat_prev))


def should_update(flow, cfg: EstimatorConfig, flow_threshold: float | None = None) -> bool:
    """Gate: update only on a usable flow measurement.

    True iff the flow carries signal (no no-signal flag) and its magnitude
    meets the threshold (inclusive). The threshold is never allowed below
    FLOW_MEASUREMENT_FLOOR, which keeps zero and sub-precision measurements
    out even when the configured threshold is zero.
    """
    threshold = cfg.flow_threshold if flow_threshold is None else flow_threshold
    if threshold is None:
        threshold = 0.0
    return (not flow.no_signal) and flow.magnitude >= max(threshold, FLOW_MEASUREMENT_FLOOR)


def correction(theta_hat: float) -> RotationCorrection:
    """Rotation correction R(theta) to compose into the next command."""
    return RotationCorrection(theta=theta_hat, matrix=rotation_matrix(theta_hat))


def filter_update(est: AngleEstimate, theta_meas: float, cfg: EstimatorConfig) -> AngleEstimate:
    """Dispatch one filter step to the configured mode."""
    if cfg.mode == "kalman":
        return kalman_update(est, theta_meas, cfg)
    theta = iir_update(est.theta_hat, theta_meas, cfg)
    return replace(est, theta_hat=theta, t=est.t + 1)
