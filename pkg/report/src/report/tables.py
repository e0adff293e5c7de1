"""Markdown summary table in the per-method column layout.

Rows are molecules, grouped system columns (orbitals, electrons, valid
configurations), then N_p / steps / final error (kcal/mol) per method.
Error cells carry the JSON value verbatim.
"""

from __future__ import annotations

import json
import os

METHODS = ("irl", "sl", "adam")
METHOD_TITLES = {"irl": "IRL-NQS", "sl": "SL-NQS", "adam": "Adam-NQS"}
MISSING = "—"


class SummaryError(Exception):
    """Raised when a JSON summary is missing required fields."""


def _molecule_name(summary: dict, path: str) -> str:
    fcidump = summary.get("config", {}).get("fcidump", "")
    stem = os.path.splitext(os.path.basename(fcidump or path))[0]
    return stem.split("_")[0].upper() if stem else stem


def load_summary(path: str) -> dict:
    with open(path) as fh:
        try:
            summary = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SummaryError(f"{path}: {exc}") from exc
    for key in ("molecule", "n_parameters", "steps_taken", "final_error_kcal",
                "config"):
        if key not in summary:
            raise SummaryError(f"{path}: missing field {key!r}")
    if "method" not in summary["config"]:
        raise SummaryError(f"{path}: missing field 'config.method'")
    return summary


def summarize(json_paths: list[str]) -> str:
    """Markdown table with one row per molecule, one column group per method."""
    if not json_paths:
        raise ValueError("at least one summary JSON is required")

    # molecule -> method -> summary, molecules ordered by first appearance
    rows: dict[str, dict[str, dict]] = {}
    for path in sorted(json_paths):
        summary = load_summary(path)
        name = _molecule_name(summary, path)
        rows.setdefault(name, {})[summary["config"]["method"]] = summary

    header = ["Molecule", "N_o", "N_e", "PVCs"]
    for method in METHODS:
        title = METHOD_TITLES[method]
        header += [f"{title} N_p", f"{title} steps", f"{title} err (kcal/mol)"]

    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(" --- " for _ in header) + "|",
    ]
    for name, by_method in rows.items():
        any_summary = next(iter(by_method.values()))
        molecule = any_summary["molecule"]
        cells = [
            name,
            str(molecule.get("n_spin_orbitals", MISSING)),
            str(molecule.get("n_electrons", MISSING)),
            str(molecule.get("pvc_count", MISSING)),
        ]
        for method in METHODS:
            summary = by_method.get(method)
            if summary is None:
                cells += [MISSING, MISSING, MISSING]
            else:
                cells += [
                    str(summary["n_parameters"]),
                    str(summary["steps_taken"]),
                    str(summary["final_error_kcal"]),
                ]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
