from __future__ import annotations

import argparse
from pathlib import Path

from scripts.utils import Paths, default_workers, write_json
from scripts._plateau.experiments import opo_validation
from scripts._plateau.mutation import Bitwise
from scripts._plateau.theory import opo_asymptotic_runtime, opo_exact_expected_runtime

Z_LIMIT = 3.0


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root")
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--chi", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=2000)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    paths = Paths(root=Path(args.root).resolve())
    mutation = Bitwise(chi=args.chi)

    v = opo_validation(
        args.n, args.r, mutation, args.seeds,
        base_seed=args.base_seed,
        workers=args.workers or default_workers(),
    )

    # exact chain against the asymptotic formula on a small grid
    ratios = {}
    for n in (20, 30, 40):
        exact = opo_exact_expected_runtime(n, args.r, mutation)
        asym = opo_asymptotic_runtime(n, args.r, mutation)
        ratios[str(n)] = {"exact": exact, "asymptote": asym, "ratio": exact / asym}

    within = abs(v.z_score) <= Z_LIMIT
    report = {
        "n": v.n,
        "r": v.r,
        "chi": args.chi,
        "seeds": v.seeds,
        "successes": v.successes,
        "simulated_mean": v.mean,
        "simulated_stderr": v.stderr,
        "exact": v.exact,
        "asymptote": v.asymptote,
        "z_score": v.z_score,
        "within_3_stderr": within,
        "exact_over_asymptote": ratios,
        "passed": bool(within and v.successes == v.seeds),
    }
    out = paths.report("01_opo_baseline")
    write_json(out, report)
    print(f"simulated {v.mean:.1f} ± {v.stderr:.1f}  exact {v.exact:.1f}  asymptote {v.asymptote:.1f}  z={v.z_score:+.2f}")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
