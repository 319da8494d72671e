from __future__ import annotations

import argparse
from pathlib import Path

from scripts.utils import Paths, write_json
from scripts._plateau.config import parse_config
from scripts._plateau.experiments import ExperimentPlan, run_experiment

MIN_SUCCESSES = 16


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root")
    ap.add_argument("--config", default="configs/fprop_recovery.json")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    root = Path(args.root).resolve()
    paths = Paths(root=root)
    plan = parse_config(root / args.config, target=ExperimentPlan)

    out_dir = paths.stage(plan.name)
    rows = run_experiment(plan, output_dir=out_dir, workers=args.workers)
    successes = sum(r.successes for r in rows)
    reps = sum(r.reps for r in rows)

    report = {
        "plan": plan.name,
        "lambda": plan.lambda_for(plan.n_grid[0]),
        "summary": [r.csv_row() for r in rows],
        "successes": successes,
        "replications": reps,
        "passed": bool(successes >= MIN_SUCCESSES),
    }
    out = paths.report("04_fprop_recovery")
    write_json(out, report)
    print(f"optimum found in {successes}/{reps}")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
