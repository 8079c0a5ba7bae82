"""Synthetic imaging and optical flow: blob rendering, corner scoring, Lucas-Kanade.

Frames are Gaussian blobs on a mid-gray background. Corner scoring is the
minimum eigenvalue of the windowed structure tensor built from
central-difference gradients; flow is the classic windowed least-squares
solve A^T A v = A^T b with spatial gradients in A and the temporal
difference in b.

Aggregation turns per-feature flows into one camera-motion estimate:
scene flow is opposite camera motion, so aggregate_v is the negated robust
mean (features deviating from the median by more than 3 MADs are dropped,
which defends against ill-conditioned LK solves on degenerate windows).

synthetic_flow is the fast path used by most experiments: it produces the
same FlowMeasurement contract directly from known feature displacements plus
Gaussian noise, bypassing rendering entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import CameraModel, TipState, ProjectionError, project_point

DEFAULT_WINDOW = 7
CONDITION_THRESHOLD = 1e4
BLOB_AMPLITUDE = 0.45
BACKGROUND = 0.5


@dataclass
class Image:
    """Grayscale frame, intensities in [0, 1], row-major (height, width)."""

    data: np.ndarray
    featureless: bool = False

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class FeaturePoint:
    position: np.ndarray  # (x, y) pixels
    score: float


@dataclass
class FlowMeasurement:
    """Per-feature flows plus the aggregated camera-motion estimate."""

    per_feature: list = field(default_factory=list)  # (position, flow, valid) triples
    aggregate_v: np.ndarray = field(default_factory=lambda: np.zeros(2))
    magnitude: float = 0.0
    no_signal: bool = False


def render_points(points_px: np.ndarray, cam: CameraModel, blob_sigma: float = 2.0) -> Image:
    """Render Gaussian blobs at the given pixel positions on a mid-gray field."""
    data = np.full((cam.height, cam.width), BACKGROUND)
    points_px = np.asarray(points_px, dtype=float).reshape(-1, 2)
    reach = max(3, int(np.ceil(4 * blob_sigma)))
    any_in_view = False
    for cx, cy in points_px:
        if not cam.in_view(np.array([cx, cy])):
            continue
        any_in_view = True
        x0 = max(0, int(np.floor(cx)) - reach)
        x1 = min(cam.width, int(np.ceil(cx)) + reach + 1)
        y0 = max(0, int(np.floor(cy)) - reach)
        y1 = min(cam.height, int(np.ceil(cy)) + reach + 1)
        ys, xs = np.mgrid[y0:y1, x0:x1]
        r2 = (xs - cx) ** 2 + (ys - cy) ** 2
        data[y0:y1, x0:x1] += BLOB_AMPLITUDE * np.exp(-r2 / (2 * blob_sigma**2))
    np.clip(data, 0.0, 1.0, out=data)
    return Image(data=data, featureless=not any_in_view)


def render_frame(
    features_world: np.ndarray, tip: TipState, cam: CameraModel, blob_sigma: float = 2.0
) -> Image:
    """Project world feature points through the tip camera and render them.

    Features behind the camera plane or outside the frame are simply not
    drawn; if none are visible the frame comes back flat and flagged
    featureless.
    """
    pts = []
    for p in np.asarray(features_world, dtype=float).reshape(-1, 3):
        try:
            px = project_point(p, tip, cam)
        except ProjectionError:
            continue
        pts.append(px)
    if not pts:
        return Image(data=np.full((cam.height, cam.width), BACKGROUND), featureless=True)
    return render_points(np.array(pts), cam, blob_sigma)


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sum of a over a (2*radius+1)^2 window centered per pixel (zero padded)."""
    h, w = a.shape
    padded = np.zeros((h + 2 * radius + 1, w + 2 * radius + 1))
    padded[radius + 1 : radius + 1 + h, radius + 1 : radius + 1 + w] = a
    c = padded.cumsum(axis=0).cumsum(axis=1)
    k = 2 * radius + 1
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def _min_eigenvalue_map(data: np.ndarray, window: int) -> np.ndarray:
    gy, gx = np.gradient(data)
    r = window // 2
    sxx = _box_sum(gx * gx, r)
    syy = _box_sum(gy * gy, r)
    sxy = _box_sum(gx * gy, r)
    half_trace = 0.5 * (sxx + syy)
    disc = np.sqrt((0.5 * (sxx - syy)) ** 2 + sxy**2)
    return half_trace - disc


def shi_tomasi(img: Image, window: int = DEFAULT_WINDOW, max_count: int = 25) -> list[FeaturePoint]:
    """Corner detection: top local maxima of the minimum-eigenvalue score map.

    A pixel qualifies when its score strictly exceeds all 8 neighbors, so a
    flat image yields no features. Results are sorted by score descending.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    score = _min_eigenvalue_map(img.data, window)
    margin = window // 2 + 1
    interior = np.zeros_like(score, dtype=bool)
    interior[margin:-margin, margin:-margin] = True
    peak = interior.copy()
    center = score[1:-1, 1:-1]
    neighbors_max = np.full_like(center, -np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            shifted = score[1 + dy : score.shape[0] - 1 + dy, 1 + dx : score.shape[1] - 1 + dx]
            neighbors_max = np.maximum(neighbors_max, shifted)
    peak[1:-1, 1:-1] &= center > neighbors_max
    ys, xs = np.nonzero(peak)
    if len(ys) == 0:
        return []
    order = np.argsort(score[ys, xs])[::-1][:max_count]
    return [
        FeaturePoint(position=np.array([float(xs[i]), float(ys[i])]), score=float(score[ys[i], xs[i]]))
        for i in order
    ]


def _bilinear(data: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0 = np.clip(np.floor(x).astype(int), 0, data.shape[1] - 2)
    y0 = np.clip(np.floor(y).astype(int), 0, data.shape[0] - 2)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)
    return (
        data[y0, x0] * (1 - fx) * (1 - fy)
        + data[y0, x0 + 1] * fx * (1 - fy)
        + data[y0 + 1, x0] * (1 - fx) * fy
        + data[y0 + 1, x0 + 1] * fx * fy
    )


def _flow_at(
    prev: np.ndarray,
    nxt: np.ndarray,
    gx: np.ndarray,
    gy: np.ndarray,
    cx: int,
    cy: int,
    r: int,
    refine_steps: int,
) -> tuple[np.ndarray, bool]:
    """Windowed least-squares flow at one feature; False when ill conditioned."""
    h, w = prev.shape
    if not (r <= cx < w - r and r <= cy < h - r):
        return np.zeros(2), False
    sl = np.s_[cy - r : cy + r + 1, cx - r : cx + r + 1]
    a_x = gx[sl].ravel()
    a_y = gy[sl].ravel()
    ata = np.array(
        [[np.dot(a_x, a_x), np.dot(a_x, a_y)], [np.dot(a_x, a_y), np.dot(a_y, a_y)]]
    )
    eigs = np.linalg.eigvalsh(ata)
    if eigs[0] <= 0 or eigs[1] / eigs[0] > CONDITION_THRESHOLD:
        return np.zeros(2), False
    ys, xs = np.mgrid[cy - r : cy + r + 1, cx - r : cx + r + 1]
    v = np.zeros(2)
    prev_w = prev[sl].ravel()
    last_step = np.inf
    for _ in range(max(1, refine_steps)):
        # temporal difference against next warped back by the current flow
        warped = _bilinear(nxt, (xs + v[0]).ravel(), (ys + v[1]).ravel())
        b = -(warped - prev_w)
        atb = np.array([np.dot(a_x, b), np.dot(a_y, b)])
        step = np.linalg.solve(ata, atb)
        step_norm = float(np.hypot(step[0], step[1]))
        if step_norm > last_step:
            break  # refinement left the linearization basin; keep the last estimate
        v = v + step
        last_step = step_norm
        if step_norm < 1e-3:
            break
    return v, True


def aggregate_flows(per_feature: list) -> FlowMeasurement:
    """Negated robust mean of valid flows; 3-MAD outlier rejection."""
    valid = np.array([f for (_, f, ok) in per_feature if ok]).reshape(-1, 2)
    if len(valid) == 0:
        return FlowMeasurement(per_feature=per_feature, no_signal=True)
    med = np.median(valid, axis=0)
    dev = np.hypot(valid[:, 0] - med[0], valid[:, 1] - med[1])
    mad = np.median(dev)
    kept = valid[dev <= 3 * mad + 1e-12]
    aggregate = -kept.mean(axis=0)
    return FlowMeasurement(
        per_feature=per_feature,
        aggregate_v=aggregate,
        magnitude=float(np.hypot(aggregate[0], aggregate[1])),
    )


def lucas_kanade(
    prev: Image,
    nxt: Image,
    features: np.ndarray,
    window: int = DEFAULT_WINDOW,
    refine_steps: int = 3,
) -> FlowMeasurement:
    """Per-feature windowed LK flow between two frames, robustly aggregated.

    Spatial gradients come from the mean of the two frames (symmetric central
    differences); the temporal gradient is next - prev. A few warped
    re-solves of the same linear system sharpen larger shifts; the window and
    validity rules are unchanged by them.
    """
    if prev.data.shape != nxt.data.shape:
        raise ValueError("frames must have identical dimensions")
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    gy, gx = np.gradient(0.5 * (prev.data + nxt.data))
    r = window // 2
    per_feature = []
    for pos in np.asarray(features, dtype=float).reshape(-1, 2):
        cx, cy = int(round(pos[0])), int(round(pos[1]))
        v, ok = _flow_at(prev.data, nxt.data, gx, gy, cx, cy, r, refine_steps)
        per_feature.append((pos.copy(), v, ok))
    return aggregate_flows(per_feature)


def synthetic_flow(
    prev_projections: np.ndarray,
    next_projections: np.ndarray,
    noise_sigma: float,
    rng: np.random.Generator,
) -> FlowMeasurement:
    """Ground-truth feature displacements plus Gaussian noise, same contract as LK."""
    prev_p = np.asarray(prev_projections, dtype=float).reshape(-1, 2)
    next_p = np.asarray(next_projections, dtype=float).reshape(-1, 2)
    if prev_p.shape != next_p.shape:
        raise ValueError(
            f"feature list length mismatch: {prev_p.shape[0]} vs {next_p.shape[0]}"
        )
    if len(prev_p) == 0:
        return FlowMeasurement(no_signal=True)
    flows = next_p - prev_p + rng.normal(0.0, noise_sigma, size=prev_p.shape)
    per_feature = [(prev_p[i].copy(), flows[i], True) for i in range(len(prev_p))]
    return aggregate_flows(per_feature)


def write_pgm(img: Image, path) -> None:
    """Dump a frame as a binary portable graymap (8-bit)."""
    data = np.clip(np.round(img.data * 255), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5 {img.width} {img.height} 255\n".encode("ascii"))
        fh.write(data.tobytes())
