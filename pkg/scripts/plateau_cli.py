from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

from scripts.utils import default_output_dir, write_csv, write_json
from scripts._plateau.config import (
    TARGETS,
    BoundQuery,
    ConfigParseError,
    ConfigValidationError,
    parse_config,
    parse_value,
)
from scripts._plateau.engine import run_ea, run_opo_config
from scripts._plateau.experiments import RUN_COLUMNS, result_row, run_experiment, summary_frame
from scripts._plateau.theory import BOUND_CALCULATORS, evaluate_bound
from scripts._plateau.verify import report, run_checks

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4
EXIT_VERIFY = 5


@dataclass
class CommandConfig:
    subcommand: str
    config: Optional[Path] = None
    overrides: List[str] = field(default_factory=list)
    output: Optional[Path] = None
    workers: Optional[int] = None
    theorem: Optional[str] = None
    params: Dict[str, object] = field(default_factory=dict)
    report_path: Optional[Path] = None


def parse_params(tokens: List[str]) -> Dict[str, object]:
    """`--name value` / `--name=value` pairs into calculator keyword arguments."""
    params: Dict[str, object] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigParseError("<argv>", 1, i + 1, f"expected --name, got {tok!r}")
        name = tok[2:]
        if "=" in name:
            name, value = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigParseError("<argv>", 1, i + 1, f"missing value for {tok}")
            value = tokens[i + 1]
            i += 2
        params[name.replace("-", "_")] = parse_value(value)
    return params


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plateau_cli", description="Non-elitist EA lab on OneMax / Plateau_r.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    for name, help_text in [("run", "one non-elitist EA run"), ("opo", "one (1+1) EA run"), ("experiment", "replicated experiment plan")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--output", type=Path, default=None)
        if name == "experiment":
            p.add_argument("--workers", type=int, default=None)

    b = sub.add_parser(
        "bounds",
        help="evaluate a named bound calculator; extra --name value pairs are its parameters",
        allow_abbrev=False,
    )
    b.add_argument("--theorem", default=None, choices=sorted(BOUND_CALCULATORS))
    b.add_argument("--config", type=Path, default=None)

    v = sub.add_parser("verify", help="fast self-checks")
    v.add_argument("--report", dest="report_path", type=Path, default=None)
    return ap


def command_from_args(argv: Optional[List[str]] = None) -> CommandConfig:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if extra and args.subcommand != "bounds":
        ap.error(f"unrecognized arguments: {' '.join(extra)}")
    return CommandConfig(
        subcommand=args.subcommand,
        config=getattr(args, "config", None),
        overrides=getattr(args, "overrides", []),
        output=getattr(args, "output", None),
        workers=getattr(args, "workers", None),
        theorem=getattr(args, "theorem", None),
        params=parse_params(extra) if args.subcommand == "bounds" else {},
        report_path=getattr(args, "report_path", None),
    )


def _emit_row(row: dict) -> pd.DataFrame:
    df = pd.DataFrame([row], columns=RUN_COLUMNS)
    df.to_csv(sys.stdout, index=False, lineterminator="\n")
    return df


def _run(cmd: CommandConfig) -> int:
    config = parse_config(cmd.config, cmd.overrides, TARGETS["run"])
    result = run_ea(config)
    df = _emit_row(result_row(config.fitness, config.mutation, config.selection.kind, config.selection.param, config.lambda_, result))
    if cmd.output is not None:
        write_csv(df, cmd.output / "run.csv")
        if result.trajectory is not None:
            write_csv(pd.DataFrame(result.trajectory_rows()), cmd.output / "trajectory.csv")
    return EXIT_OK


def _opo(cmd: CommandConfig) -> int:
    config = parse_config(cmd.config, cmd.overrides, TARGETS["opo"])
    df = _emit_row(result_row(config.fitness, config.mutation, "none", "", 1, run_opo_config(config)))
    if cmd.output is not None:
        write_csv(df, cmd.output / "run.csv")
    return EXIT_OK


def _experiment(cmd: CommandConfig) -> int:
    plan = parse_config(cmd.config, cmd.overrides, TARGETS["experiment"])
    out = cmd.output or (Path(plan.output) if plan.output else default_output_dir() / plan.name)
    rows = run_experiment(plan, output_dir=out, workers=cmd.workers)
    summary_frame(rows).to_csv(sys.stdout, index=False, lineterminator="\n")
    print(f"Wrote: {out / 'runs.csv'}", file=sys.stderr)
    print(f"Wrote: {out / 'summary.csv'}", file=sys.stderr)
    return EXIT_OK


def _bounds(cmd: CommandConfig) -> int:
    query = parse_config(cmd.config, target=BoundQuery) if cmd.config else None
    theorem = cmd.theorem or (query.theorem if query else None)
    if theorem is None:
        raise ConfigValidationError("theorem: a calculator name is required")
    params = dict(query.params) if query else {}
    params.update(cmd.params)
    try:
        result = evaluate_bound(theorem, params)
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
    print(json.dumps(result.model_dump(mode="json"), indent=2, ensure_ascii=False))
    return EXIT_OK


def _verify(cmd: CommandConfig) -> int:
    payload = report(run_checks(progress=True))
    print(json.dumps(payload, indent=2, ensure_ascii=False))
    if cmd.report_path is not None:
        write_json(cmd.report_path, payload)
    return EXIT_OK if payload["passed"] else EXIT_VERIFY


HANDLERS = {"run": _run, "opo": _opo, "experiment": _experiment, "bounds": _bounds, "verify": _verify}


def dispatch(cmd: CommandConfig) -> int:
    try:
        return HANDLERS[cmd.subcommand](cmd)
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigValidationError, ValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cmd = command_from_args(argv)
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return dispatch(cmd)


if __name__ == "__main__":
    sys.exit(main())
