from __future__ import annotations

import argparse
import os
import subprocess
import sys
from pathlib import Path

from utils import Paths, ensure_dir, read_json, write_json

STAGES = [
    ("00_config_schema", "00_export_config_schema.py"),
    ("01_opo_baseline", "01_opo_baseline.py"),
    ("02_tournament_scaling", "02_tournament_scaling.py"),
    ("03_fprop_stagnation", "03_fprop_stagnation.py"),
    ("04_fprop_recovery", "04_fprop_recovery.py"),
    ("05_drift_probe", "05_drift_probe.py"),
]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root (default .)")
    ap.add_argument("--only", nargs="*", default=None, help="Stage names to run (default all)")
    ap.add_argument("--force", action="store_true", help="Rerun stages whose report already exists")
    args = ap.parse_args()

    root = Path(args.root).resolve()
    paths = Paths(root=root)
    ensure_dir(paths.logs)

    # numbered scripts import scripts.* from the project root
    env = dict(os.environ)
    env["PYTHONPATH"] = os.pathsep.join(p for p in [str(root), env.get("PYTHONPATH", "")] if p)

    results = {}
    for name, script in STAGES:
        if args.only and name not in args.only:
            continue
        report_path = paths.report(name)
        if args.force or not report_path.exists():
            subprocess.check_call(
                [sys.executable, str(root / "scripts" / script), "--root", str(root)],
                env=env,
            )
        results[name] = bool(read_json(report_path).get("passed", False))

    out = paths.report("run_all")
    write_json(out, {"stages": results, "passed": all(results.values())})
    for name, ok in results.items():
        print(f"{name}: {'ok' if ok else 'FAILED'}")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
