from __future__ import annotations

import argparse
from pathlib import Path

from scripts.utils import Paths, write_json
from scripts._plateau.config import parse_config
from scripts._plateau.experiments import ExperimentPlan, fit_scaling_exponent, run_experiment, scaling_points
from scripts._plateau.theory import bitwise_selection_floors

SLOPE_BAND = (1.5, 2.5)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root")
    ap.add_argument("--config", default="configs/tournament_scaling.json")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()

    root = Path(args.root).resolve()
    paths = Paths(root=root)
    plan = parse_config(root / args.config, target=ExperimentPlan)

    floors = bitwise_selection_floors(plan.mutation.chi, args.delta)
    if plan.selection.kind == "tournament" and plan.selection.k < floors.k_min:
        raise ValueError(f"tournament size {plan.selection.k} below k_min={floors.k_min}")

    out_dir = paths.stage(plan.name)
    rows = run_experiment(plan, output_dir=out_dir, workers=args.workers)
    fit = fit_scaling_exponent(scaling_points(rows, "median"))
    in_band = SLOPE_BAND[0] <= fit.slope <= SLOPE_BAND[1]

    report = {
        "plan": plan.name,
        "k_min": floors.k_min,
        "summary": [r.csv_row() for r in rows],
        "slope": fit.slope,
        "slope_stderr": fit.stderr,
        "slope_band": list(SLOPE_BAND),
        "passed": bool(in_band),
    }
    out = paths.report("02_tournament_scaling")
    write_json(out, report)
    print(f"median runtime slope {fit.slope:.3f} ± {fit.stderr:.3f}")
    print(f"Wrote: {out_dir / 'runs.csv'}")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
