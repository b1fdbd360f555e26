"""Result tables, CSV writers and the run manifest.

CSV files use a header row, ``.`` as decimal separator and LF line
endings. Floats are written with ``repr`` so identical numbers always
produce identical bytes.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

Cell = str | int | float | bool


class Table(BaseModel):
    """A named CSV table produced by an experiment."""

    name: str = Field(..., description="File stem, written as <name>.csv")
    header: list[str]
    rows: list[list[Cell]] = Field(default_factory=list)

    def column(self, name: str) -> list[Cell]:
        index = self.header.index(name)
        return [row[index] for row in self.rows]


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):  # numpy scalar
        return format_cell(value.item())
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write one CSV file with LF line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    logger.debug("Wrote %s", path)
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        return header, [row for row in reader]


def write_table(directory: Path, table: Table) -> Path:
    return write_csv(directory / f"{table.name}.csv", table.header, table.rows)


def write_manifest(directory: Path, manifest: dict[str, Any]) -> Path:
    """Write manifest.json with the resolved config and run metadata."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
