#!/usr/bin/env python3
"""Map where the fixed controller fails as the camera twist grows.

With adaptation frozen (alpha = 1) the loop iterates e <- (I - Kp s R(phi)) e
plus saturation, so convergence is governed by the spectral radius of that
map. This sweeps phi, runs the actual closed loop at each point, and prints
the observed outcome next to the rho < 1 prediction.

    python3 scripts/stability_map.py --step-deg 15 --svg out/stability.svg
"""

import argparse
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from adaptvs.controller import mismatch_spectral_radius
from adaptvs.estimator import EstimatorConfig
from adaptvs.harness import run_trial
from adaptvs.plant import DisturbanceSpec
from adaptvs.scenario import Scenario

DEG = np.pi / 180.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step-deg", type=float, default=15.0)
    ap.add_argument("--max-deg", type=float, default=180.0)
    ap.add_argument("--kp", type=float, default=0.2)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--svg", type=Path, default=None)
    args = ap.parse_args(argv)

    phis = np.arange(0.0, args.max_deg + 1e-9, args.step_deg)
    rows = []
    print(f"{'phi_deg':>8} {'rho':>8} {'predicted':>10} {'observed':>12} {'steps':>6}")
    for phi_deg in phis:
        scn = Scenario(
            environment=DisturbanceSpec(rotation_phi=phi_deg * DEG, scale_s=args.scale),
            estimator=EstimatorConfig(alpha=1.0),
        )
        rho = mismatch_spectral_radius(args.kp, args.scale, phi_deg * DEG)
        rec = run_trial(scn)
        predicted = "converge" if rho < 1.0 else "fail"
        agree = "" if (rec.outcome == "converged") == (rho < 1.0) else "  <-- disagrees"
        print(
            f"{phi_deg:>8.1f} {rho:>8.4f} {predicted:>10} {rec.outcome:>12} "
            f"{rec.steps_to_converge:>6d}{agree}"
        )
        rows.append((phi_deg, rho, rec.outcome))

    if args.svg is not None:
        import adaptvs.plotting  # noqa: F401  (selects the headless backend)
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([r[0] for r in rows], [r[1] for r in rows], "k-", lw=1)
        for phi_deg, rho, outcome in rows:
            ax.plot(phi_deg, rho, "go" if outcome == "converged" else "rx")
        ax.axhline(1.0, color="gray", ls="--", lw=0.8)
        ax.set_xlabel("camera twist phi (deg)")
        ax.set_ylabel("spectral radius of error map")
        ax.set_title(f"fixed controller, Kp={args.kp:g}, s={args.scale:g}")
        args.svg.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(args.svg)
        print(f"wrote {args.svg}")

    mismatches = sum(1 for _, rho, out in rows if (out == "converged") != (rho < 1.0))
    print(f"{len(rows)} points, {mismatches} disagree with the spectral predicate")
    return 0 if mismatches == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
