#!/usr/bin/env python3
"""Run the environment x alpha sweep and report the smoothing trade-off.

Produces per-trial CSVs, a summary table, and one overlay figure per
environment, then prints the pooled steady-state variance ratio between the
noisiest and the stiffest adapting filter. Usage:

    python3 scripts/run_alpha_sweep.py --out out/sweep --jobs 4
"""

import argparse
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from adaptvs.harness import export_csv, run_sweep, summarize, write_summary_csv
from adaptvs.plotting import render_plot
from adaptvs.scenario import load_scenario

ENVS = ("no_bend", "one_bend", "two_bend")


def trial_name(env: str, alpha: float) -> str:
    return f"{env}_alpha{alpha:g}".replace(".", "p")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, default=REPO / "scenarios" / "default_sweep.yaml")
    ap.add_argument("--out", type=Path, default=Path("out") / "sweep")
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 0.95, 0.75, 0.5])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    base = load_scenario(args.scenario)
    trials = run_sweep(base, ENVS, tuple(args.alphas), jobs=args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)

    summary = []
    for trial in trials:
        if trial.record is None:
            print(f"FAILED {trial.scenario.environment_name}: {trial.error}", file=sys.stderr)
            continue
        row = summarize(trial.scenario, trial.record)
        summary.append(row)
        export_csv(trial.record, args.out / (trial_name(row.environment, row.alpha) + ".csv"))
    write_summary_csv(summary, args.out / "summary.csv")

    for env in ENVS:
        labeled = [
            (f"alpha={s.alpha:g}", t.record)
            for s, t in zip(summary, trials)
            if t.record is not None and s.environment == env
        ]
        if labeled:
            render_plot(labeled, args.out / f"{env}.svg", camera=base.camera, title=env)

    print(f"{'environment':<10} {'alpha':>5} {'outcome':>12} {'steps':>6} {'theta_var':>12}")
    for s in summary:
        print(
            f"{s.environment:<10} {s.alpha:>5g} {s.outcome:>12} "
            f"{s.steps_to_converge:>6d} {s.theta_ss_variance:>12.3e}"
        )

    by_alpha = {}
    for s in summary:
        by_alpha.setdefault(s.alpha, []).append(s.theta_ss_variance)
    if 0.5 in by_alpha and 0.95 in by_alpha:
        lo, hi = np.mean(by_alpha[0.95]), np.mean(by_alpha[0.5])
        print(f"pooled variance ratio alpha 0.5 / 0.95: {hi / max(lo, 1e-300):.1f}x")

    print(f"wrote {args.out}/")
    return 1 if any(t.record is None for t in trials) else 0


if __name__ == "__main__":
    raise SystemExit(main())
