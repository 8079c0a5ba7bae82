"""Seeded trial runner: single trials, alpha x environment sweeps, CSV output.

A trial is fully determined by (scenario, trial index): the per-trial RNG is
a counter-based stream keyed on (seed, index), so running trials in parallel
or rerunning a single cell of a sweep cannot change any result. Export is
9-significant-digit text, which round-trips losslessly through import.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import StepRow, TrialContext, closed_loop_step
from .estimator import AngleEstimate
from .kinematics import CameraModel, CatheterConfig, JointState, model_jacobian
from .plant import PlantState, initial_plant_state
from .scenario import FeatureLayout, Scenario, scenario_hash

OUTCOMES = ("converged", "diverged", "timeout")

CSV_COLUMNS = (
    "t",
    "target_x",
    "target_y",
    "error_norm_px",
    "theta_hat",
    "gate_open",
    "flow_magnitude",
    "V",
    "V_delta",
    "V_dot_analytic",
    "phi_current",
)

DEFAULT_ALPHAS = (1.0, 0.95, 0.75, 0.5)

# Steady-state estimator spread is reported over this many trailing
# gate-open samples; enough to average out per-step measurement noise
# without reaching back into the transient.
THETA_SS_WINDOW = 20


@dataclass(frozen=True)
class TrialRecord:
    rows: list[StepRow]
    scenario_hash: str
    seed: int
    outcome: str
    steps_to_converge: int  # -1 when the trial did not converge

    @property
    def final_theta_hat(self) -> float:
        return self.rows[-1].theta_hat if self.rows else 0.0


@dataclass(frozen=True)
class SummaryRow:
    environment: str
    alpha: float
    outcome: str
    steps_to_converge: int
    final_theta_hat: float
    theta_ss_variance: float


@dataclass(frozen=True)
class SweepTrial:
    scenario: Scenario
    record: TrialRecord | None
    error: str | None = None


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    key = np.array([master_seed % 2**64, trial_index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def scatter_features(
    layout: FeatureLayout, camera: CameraModel, rng: np.random.Generator
) -> np.ndarray:
    """Random feature positions honoring border margin and pairwise separation."""
    lo = np.array([layout.margin_px, layout.margin_px])
    hi = np.array([camera.width - layout.margin_px, camera.height - layout.margin_px])
    if np.any(hi <= lo):
        raise ValueError("feature margin leaves no room inside the image")
    placed: list[np.ndarray] = []
    for _ in range(1000 * layout.count):
        p = rng.uniform(lo, hi)
        if all(np.hypot(*(p - q)) >= layout.min_separation_px for q in placed):
            placed.append(p)
            if len(placed) == layout.count:
                return np.array(placed)
    raise RuntimeError(
        f"could not place {layout.count} features {layout.min_separation_px} px apart"
    )


def prepare_trial(
    scenario: Scenario, rng: np.random.Generator
) -> tuple[PlantState, AngleEstimate, TrialContext]:
    """Build the initial loop state for a scenario; shared by runner and teleop."""
    catheter = CatheterConfig()
    J = model_jacobian(JointState.zeros(catheter.tendon_count), catheter, scenario.camera)
    disturbance = scenario.disturbance()
    ctx = TrialContext.create(
        controller=scenario.controller,
        estimator=scenario.estimator,
        disturbance=disturbance,
        camera=scenario.camera,
        J_model=J,
        rng=rng,
        flow_source=scenario.flow_source,
        blob_sigma=scenario.features.blob_sigma,
    )
    features = scatter_features(scenario.features, scenario.camera, rng)
    state = initial_plant_state(
        scenario.start_target(), disturbance, catheter.tendon_count, features
    )
    est = AngleEstimate(
        theta_hat=scenario.estimator.theta_0,
        variance=scenario.estimator.sigma_theta_0**2,
        t=0,
    )
    return state, est, ctx


def run_trial(scenario: Scenario, trial_index: int = 0) -> TrialRecord:
    """Run one closed-loop trial to convergence, divergence, or the step budget."""
    rng = trial_rng(scenario.seed, trial_index)
    state, est, ctx = prepare_trial(scenario, rng)
    initial_error = float(np.hypot(*(scenario.start_target() - scenario.camera.center)))

    rows: list[StepRow] = []
    conv_streak = 0
    div_streak = 0
    outcome = "timeout"
    steps_to_converge = -1
    prev_V: float | None = None

    for _ in range(scenario.duration_steps):
        state, est, row = closed_loop_step(state, est, ctx)
        v_delta = 0.0 if prev_V is None else row.V - prev_V
        prev_V = row.V
        rows.append(dataclasses.replace(row, V_delta=v_delta))

        if row.error_norm_px < ctx.controller.convergence_radius_px:
            conv_streak += 1
        else:
            conv_streak = 0
        if conv_streak >= ctx.controller.convergence_window:
            outcome = "converged"
            steps_to_converge = row.t + 1
            break

        if state.off_screen:
            outcome = "diverged"
            break
        if row.error_norm_px > ctx.controller.divergence_factor * initial_error:
            div_streak += 1
        else:
            div_streak = 0
        if div_streak >= ctx.controller.divergence_window:
            outcome = "diverged"
            break

    return TrialRecord(
        rows=rows,
        scenario_hash=scenario_hash(scenario),
        seed=scenario.seed,
        outcome=outcome,
        steps_to_converge=steps_to_converge,
    )


def theta_ss_variance(record: TrialRecord, window: int = THETA_SS_WINDOW) -> float:
    """Variance of the last `window` gate-open theta_hat samples (0 if < 2)."""
    samples = [r.theta_hat for r in record.rows if r.gate_open][-window:]
    if len(samples) < 2:
        return 0.0
    return float(np.var(samples))


def summarize(scenario: Scenario, record: TrialRecord) -> SummaryRow:
    return SummaryRow(
        environment=scenario.environment_name,
        alpha=scenario.estimator.alpha,
        outcome=record.outcome,
        steps_to_converge=record.steps_to_converge,
        final_theta_hat=record.final_theta_hat,
        theta_ss_variance=theta_ss_variance(record),
    )


def sweep_scenarios(
    base: Scenario, environments: tuple[str, ...], alphas: tuple[float, ...]
) -> list[Scenario]:
    if not environments:
        raise ValueError("sweep needs at least one environment")
    if not alphas:
        raise ValueError("sweep needs at least one alpha")
    out = []
    for env in environments:
        for alpha in alphas:
            out.append(
                dataclasses.replace(
                    base,
                    environment=env,
                    estimator=dataclasses.replace(base.estimator, alpha=alpha),
                )
            )
    return out


def _run_indexed(args: tuple[Scenario, int]) -> TrialRecord:
    scenario, index = args
    return run_trial(scenario, trial_index=index)


def run_sweep(
    base: Scenario,
    environments: tuple[str, ...],
    alphas: tuple[float, ...],
    jobs: int = 1,
) -> list[SweepTrial]:
    """Run the full environment x alpha grid; failures are isolated per trial."""
    grid = sweep_scenarios(base, environments, alphas)
    tasks = [(scen, i) for i, scen in enumerate(grid)]
    results: list[SweepTrial] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_indexed, task) for task in tasks]
            for scen, fut in zip(grid, futures):
                try:
                    results.append(SweepTrial(scenario=scen, record=fut.result()))
                except Exception as exc:  # noqa: BLE001  trial isolation
                    results.append(SweepTrial(scenario=scen, record=None, error=str(exc)))
    else:
        for task in tasks:
            try:
                results.append(SweepTrial(scenario=task[0], record=_run_indexed(task)))
            except Exception as exc:  # noqa: BLE001
                results.append(SweepTrial(scenario=task[0], record=None, error=str(exc)))
    return results


def _fmt(x: float) -> str:
    return "%.9g" % x


def export_csv(record: TrialRecord, path: str | Path) -> None:
    """Write rows as CSV plus a .meta.json sidecar; byte-stable across reruns."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for r in record.rows:
        lines.append(
            ",".join(
                (
                    str(r.t),
                    _fmt(r.target_px[0]),
                    _fmt(r.target_px[1]),
                    _fmt(r.error_norm_px),
                    _fmt(r.theta_hat),
                    str(int(r.gate_open)),
                    _fmt(r.flow_magnitude),
                    _fmt(r.V),
                    _fmt(r.V_delta),
                    _fmt(r.V_dot_analytic),
                    _fmt(r.phi_current),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", newline="\n")
    meta = {
        "scenario_hash": record.scenario_hash,
        "seed": record.seed,
        "outcome": record.outcome,
        "steps_to_converge": record.steps_to_converge,
    }
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", newline="\n"
    )


def import_csv(path: str | Path) -> TrialRecord:
    """Parse an exported trial back; export(import(x)) is byte-identical to x."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: not a trial CSV (bad header)")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}:{n}: expected {len(CSV_COLUMNS)} columns")
        rows.append(
            StepRow(
                t=int(parts[0]),
                target_px=np.array([float(parts[1]), float(parts[2])]),
                error_norm_px=float(parts[3]),
                theta_hat=float(parts[4]),
                gate_open=bool(int(parts[5])),
                flow_magnitude=float(parts[6]),
                V=float(parts[7]),
                V_delta=float(parts[8]),
                V_dot_analytic=float(parts[9]),
                phi_current=float(parts[10]),
            )
        )
    meta = json.loads(Path(str(path) + ".meta.json").read_text())
    return TrialRecord(
        rows=rows,
        scenario_hash=meta["scenario_hash"],
        seed=meta["seed"],
        outcome=meta["outcome"],
        steps_to_converge=meta["steps_to_converge"],
    )


def write_summary_csv(summary: list[SummaryRow], path: str | Path) -> None:
    lines = ["environment,alpha,outcome,steps_to_converge,final_theta_hat,theta_ss_variance"]
    for s in summary:
        lines.append(
            ",".join(
                (
                    s.environment,
                    _fmt(s.alpha),
                    s.outcome,
                    str(s.steps_to_converge),
                    _fmt(s.final_theta_hat),
                    _fmt(s.theta_ss_variance),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
