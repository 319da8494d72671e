from __future__ import annotations

import argparse
from pathlib import Path

from scripts.utils import Paths, write_json
from scripts._plateau.core import RandomSource
from scripts._plateau.defaults import DEFAULTS
from scripts._plateau.experiments import drift_probe
from scripts._plateau.fitness import FitnessSpec


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root")
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--lam", type=int, default=10)
    ap.add_argument("--chi", type=float, default=1.0)
    ap.add_argument("--family", choices=["plateau", "onemax"], default="plateau")
    ap.add_argument("--r", type=int, default=DEFAULTS.drift_plateau_r, help="Plateau width (plateau family only)")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()

    paths = Paths(root=Path(args.root).resolve())
    r = args.r if args.family == "plateau" else None
    fitness = FitnessSpec(family=args.family, n=args.n, r=r)
    rep = drift_probe(
        args.n,
        args.lam,
        args.chi,
        args.trials,
        RandomSource(args.seed),
        samples=args.samples,
        progress=True,
        fitness=fitness,
    )

    payload = rep.as_dict()
    payload["passed"] = bool(rep.flagged == 0 and rep.equality_within)
    out = paths.report("05_drift_probe")
    write_json(out, payload)
    print(f"fitness: {rep.function} r={rep.r}")
    print(f"flagged populations: {rep.flagged}/{args.trials}; equality case within margin: {rep.equality_within}")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
