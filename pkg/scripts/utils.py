from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd
from dotenv import load_dotenv


# --------- I/O helpers ---------

def ensure_dir(p: Path) -> None:
    p.mkdir(parents=True, exist_ok=True)

def write_json(path: Path, payload: Any) -> None:
    ensure_dir(path.parent)
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)

def read_json(path: Path) -> Any:
    if not path.exists():
        raise FileNotFoundError(f"Missing JSON file: {path}")
    with path.open("r", encoding="utf-8") as f:
        return json.load(f)

def write_csv(df: pd.DataFrame, path: Path) -> None:
    ensure_dir(path.parent)
    df.to_csv(path, index=False, lineterminator="\n")

def read_csv(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"Missing CSV file: {path}")
    return pd.read_csv(path)


# --------- Environment ---------

def default_output_dir() -> Path:
    """
    Output directory for runs and experiments. PLATEAU_OUTPUT_DIR in .env wins.
    """
    load_dotenv()
    return Path(os.environ.get("PLATEAU_OUTPUT_DIR", "data/runs"))

def default_workers() -> int:
    load_dotenv()
    return max(1, int(os.environ.get("PLATEAU_WORKERS", "1")))


@dataclass
class Paths:
    root: Path

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def logs(self) -> Path:
        return self.root / "logs"

    @property
    def configs(self) -> Path:
        return self.root / "configs"

    def stage(self, name: str) -> Path:
        return self.data / name

    def report(self, name: str) -> Path:
        return self.logs / f"{name}_report.json"
