"""CSV and JSON interfaces.

Functional samples travel as wide CSV: first column ``id``, remaining
columns one per grid point with the header row carrying the grid values
as decimals, so the grid is recovered from the header alone.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import Grid
from .fpc import FunctionalSample
from .harness import RESULT_COLUMNS, SimResult, result_from_row, result_to_row


def write_functional_csv(sample: FunctionalSample, path: str | Path) -> None:
    """Write curves in the wide format with the grid in the header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [repr(float(p)) for p in sample.grid.points])
        for i, row in enumerate(sample.values):
            writer.writerow([i] + [repr(float(v)) for v in row])


def read_functional_csv(path: str | Path, label: str = "X") -> FunctionalSample:
    """Read wide-format curves; the grid interval is the header's range."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise ValueError(f"{path}: first column must be 'id'")
        try:
            points = np.array([float(h) for h in header[1:]])
        except ValueError as err:
            raise ValueError(f"{path}: header must hold grid values: {err}") from None
        rows = []
        for line in reader:
            if not line:
                continue
            if len(line) != len(header):
                raise ValueError(f"{path}: ragged row with {len(line)} fields")
            rows.append([float(v) for v in line[1:]])
    if not rows:
        raise ValueError(f"{path}: no curves")
    grid = Grid(points, (points[0], points[-1]))
    return FunctionalSample(np.array(rows), grid, label)


def write_results_csv(results: Sequence[SimResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow(result_to_row(r))


def read_results_csv(path: str | Path) -> list[SimResult]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"{path}: unexpected results header")
        return [result_from_row(row) for row in reader if row]


def write_long_tables(tables: dict[str, list[dict]], stem: str | Path) -> list[Path]:
    """Write the figure-grouping tables next to ``stem`` as ``<stem>_<name>.csv``."""
    stem = Path(stem)
    written = []
    for name, rows in tables.items():
        path = stem.with_name(f"{stem.stem}_{name}.csv")
        with open(path, "w", newline="") as fh:
            if not rows:
                fh.write("")
                written.append(path)
                continue
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow(
                    {
                        k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in row.items()
                    }
                )
        written.append(path)
    return written


def write_surface_csv(
    surface: np.ndarray, s_points: np.ndarray, t_points: np.ndarray, path: str | Path
) -> None:
    """Long-format surface export with columns s, t, beta_hat."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "t", "beta_hat"])
        for j, s in enumerate(s_points):
            for k, t in enumerate(t_points):
                writer.writerow([repr(float(s)), repr(float(t)), repr(float(surface[j, k]))])


def write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
