"""Parsing and validation of the trajectory CSV schema.

The optimizer CLI writes one row per outer step with the fixed header
below; everything here is read-only over its inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

EXPECTED_HEADER = [
    "step",
    "energy_ha",
    "err_ha",
    "err_kcal",
    "lambda_min",
    "step_scale",
    "matvecs",
    "wall_ms",
]


class SchemaError(Exception):
    """Raised when a CSV does not match the trajectory schema."""


@dataclass(frozen=True)
class TrajectoryFrame:
    """Validated columns of one trajectory CSV."""

    path: str
    steps: tuple[int, ...]
    energies: tuple[float, ...]
    errors_hartree: tuple[float, ...]
    errors_kcal: tuple[float, ...]

    @property
    def n_rows(self) -> int:
        return len(self.steps)


def load_trajectory(path: str) -> TrajectoryFrame:
    """Parse and validate one CSV; raises SchemaError on any mismatch."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise SchemaError(
                f"{path}: header {header!r} does not match the trajectory schema"
            )
        steps = []
        energies = []
        errors_ha = []
        errors_kcal = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(EXPECTED_HEADER):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(EXPECTED_HEADER)} columns, "
                    f"got {len(row)}"
                )
            try:
                steps.append(int(row[0]))
                energies.append(float(row[1]))
                errors_ha.append(float(row[2]))
                errors_kcal.append(float(row[3]))
                for column in row[4:]:
                    float(column)
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    if not steps:
        raise SchemaError(f"{path}: no data rows")
    return TrajectoryFrame(
        path=path,
        steps=tuple(steps),
        energies=tuple(energies),
        errors_hartree=tuple(errors_ha),
        errors_kcal=tuple(errors_kcal),
    )
