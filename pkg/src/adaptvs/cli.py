"""Command-line front end: run, sweep, plot, validate, teleop.

Output location: -o/--out wins, then the ADAPTVS_OUT_DIR environment
variable, then ./out. Exit codes: 0 all requested work executed, 1 a trial
failed to execute, 2 bad input (scenario or arguments).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .harness import DEFAULT_ALPHAS, run_sweep, run_trial, summarize, export_csv, import_csv, write_summary_csv
from .plant import PRESET_NAMES
from .scenario import Scenario, ScenarioError, load_scenario, scenario_hash

_FLOW_ALIASES = {"synthetic": "synthetic", "lk": "lucas_kanade"}


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out or os.environ.get("ADAPTVS_OUT_DIR") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    if getattr(args, "flow", None) is not None:
        scenario = dataclasses.replace(scenario, flow_source=_FLOW_ALIASES[args.flow])
    return scenario


def _trial_name(env: str, alpha: float) -> str:
    return f"{env}_alpha{alpha:g}".replace(".", "p")


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    record = run_trial(scenario)
    out = _out_dir(args)
    name = _trial_name(scenario.environment_name, scenario.estimator.alpha)
    csv_path = out / f"{name}.csv"
    export_csv(record, csv_path)
    s = summarize(scenario, record)
    print(
        f"{s.environment} alpha={s.alpha:g}: {s.outcome}"
        f" steps={s.steps_to_converge} theta_hat={s.final_theta_hat:.4f} -> {csv_path}"
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _apply_overrides(load_scenario(args.scenario), args)
    results = run_sweep(base, tuple(args.envs), tuple(args.alphas), jobs=args.jobs)
    out = _out_dir(args)
    summary = []
    failed = 0
    for res in results:
        name = _trial_name(res.scenario.environment_name, res.scenario.estimator.alpha)
        if res.record is None:
            print(f"{name}: FAILED: {res.error}", file=sys.stderr)
            failed += 1
            continue
        export_csv(res.record, out / f"{name}.csv")
        summary.append(summarize(res.scenario, res.record))
    write_summary_csv(summary, out / "summary.csv")

    try:
        from .plotting import render_plot

        for env in args.envs:
            labeled = [
                (f"alpha={r.scenario.estimator.alpha:g}", r.record)
                for r in results
                if r.record is not None and r.scenario.environment_name == env
            ]
            if labeled:
                render_plot(labeled, out / f"{env}.svg", camera=base.camera, title=env)
    except Exception as exc:  # noqa: BLE001  plots are best-effort, data already on disk
        print(f"plotting failed: {exc}", file=sys.stderr)

    for s in summary:
        print(
            f"{s.environment:9s} alpha={s.alpha:4g} {s.outcome:9s}"
            f" steps={s.steps_to_converge:5d} theta_hat={s.final_theta_hat:8.4f}"
        )
    print(f"wrote {len(summary)} trials + summary.csv to {out}")
    return 1 if failed else 0


def cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import render_plot

    labeled = [(Path(p).stem, import_csv(p)) for p in args.csvs]
    render_plot(labeled, args.out or "plot.svg")
    print(f"wrote {args.out or 'plot.svg'}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    print(f"ok: {args.scenario} (hash {scenario_hash(scenario)[:12]})")
    return 0


def cmd_teleop(args: argparse.Namespace) -> int:
    from .teleop import serve

    scenario = _apply_overrides(load_scenario(args.scenario), args)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ScenarioError(f"--bind expects host:port, got {args.bind!r}")
    ui_dir = None
    if args.serve_ui:
        ui_dir = str(Path(__file__).resolve().parents[2] / "frontend" / "dist")
        if not Path(ui_dir).is_dir():
            print(f"console not built (missing {ui_dir}); serving WebSocket only", file=sys.stderr)
            ui_dir = None
    print(f"teleop on ws://{host}:{port}/ws ({scenario.environment_name})")
    serve(scenario, host, int(port), ui_dir=ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptvs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--flow", choices=sorted(_FLOW_ALIASES), default=None, help="override the flow source")
        p.add_argument("-o", "--out", default=None, help="output directory (default $ADAPTVS_OUT_DIR or ./out)")

    p_run = sub.add_parser("run", help="run one trial and write its CSV")
    p_run.add_argument("scenario")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the environment x alpha grid")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--alphas", type=float, nargs="+", default=list(DEFAULT_ALPHAS))
    p_sweep.add_argument("--envs", nargs="+", default=list(PRESET_NAMES), choices=PRESET_NAMES)
    p_sweep.add_argument("--jobs", type=int, default=1)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plot", help="plot exported trial CSVs")
    p_plot.add_argument("csvs", nargs="+")
    p_plot.add_argument("-o", "--out", default=None, help="output SVG path")
    p_plot.set_defaults(func=cmd_plot)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=cmd_validate)

    p_tel = sub.add_parser("teleop", help="serve the teleoperation WebSocket")
    p_tel.add_argument("scenario")
    p_tel.add_argument("--bind", default="127.0.0.1:8700", help="host:port")
    p_tel.add_argument("--serve-ui", action="store_true", help="also serve the browser console")
    p_tel.add_argument("--seed", type=int, default=None)
    p_tel.add_argument("--flow", choices=sorted(_FLOW_ALIASES), default=None)
    p_tel.set_defaults(func=cmd_teleop)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
