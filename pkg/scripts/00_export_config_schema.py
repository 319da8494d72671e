from __future__ import annotations

import argparse
from pathlib import Path

from scripts.utils import Paths, write_json
from scripts._plateau.config import export_schemas, parse_config


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".", help="Project root")
    args = ap.parse_args()

    paths = Paths(root=Path(args.root).resolve())
    written = export_schemas(paths.configs / "schema")
    for p in written:
        print(f"Wrote: {p}")

    # every shipped example must still parse against the current models
    examples = sorted(paths.configs.glob("*.json"))
    parsed = {p.name: type(parse_config(p)).__name__ for p in examples}

    out = paths.report("00_config_schema")
    write_json(out, {
        "schemas": [str(p.relative_to(paths.root)) for p in written],
        "examples": parsed,
        "passed": True,
    })
    print(f"Checked {len(parsed)} example configs")
    print(f"Wrote: {out}")


if __name__ == "__main__":
    main()
