"""
Result files

Every command emits a list of flat rows. CSV columns are fixed per command:

    simulate       trial, seed, <SessionMetrics fields>
    sweep          key, value, trial, seed, <SessionMetrics fields>, error
    poisson-table  mu, p_empty, p_single, p_multi, p_nonempty,
                   multi_given_nonempty, multi_approximation
    verify         oracle, passed, detail, error

Floats are written with 9 significant digits and a `.` decimal point; absent
values are empty CSV cells or JSON nulls.
"""

import csv
import io
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import typer

from .metrics import SessionMetrics

SIMULATE_ID_COLUMNS = ["trial", "seed"]
SWEEP_ID_COLUMNS = ["key", "value", "trial", "seed"]
POISSON_COLUMNS = [
    "mu",
    "p_empty",
    "p_single",
    "p_multi",
    "p_nonempty",
    "multi_given_nonempty",
    "multi_approximation",
]

VERIFY_COLUMNS = ["oracle", "passed", "detail", "error"]

Row = Dict[str, Any]


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def simulate_header() -> List[str]:
    return SIMULATE_ID_COLUMNS + SessionMetrics.field_names()


def sweep_header() -> List[str]:
    return SWEEP_ID_COLUMNS + SessionMetrics.field_names() + ["error"]


def _normalize(value: Any) -> Any:
    """JSON-ready value with floats cut to 9 significant digits."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if hasattr(value, "item"):
        return _normalize(value.item())
    return str(value)


def format_cell(value: Any) -> str:
    value = _normalize(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def to_csv(rows: Sequence[Row], header: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(row.get(column)) for column in header])
    return buffer.getvalue()


def to_json(rows: Sequence[Row], header: Sequence[str]) -> str:
    objects = [{column: _normalize(row.get(column)) for column in header} for row in rows]
    return json.dumps(objects, indent=2) + "\n"


def render(rows: Sequence[Row], header: Sequence[str], fmt: OutputFormat) -> str:
    if fmt is OutputFormat.JSON:
        return to_json(rows, header)
    return to_csv(rows, header)


def write_output(text: str, path: Optional[Path]) -> None:
    """
    Write rendered rows to `path`, or to stdout when no path is given.

    Raises:
        OSError: If the file cannot be written
    """
    if path is None:
        typer.echo(text, nl=False)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
