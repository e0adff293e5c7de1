"""Convergence figure: one log-scale error-vs-step curve per input CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .trajectory import TrajectoryFrame, load_trajectory

FIGURE_SIZE = (6.0, 4.0)


def _label(frame: TrajectoryFrame) -> str:
    return os.path.splitext(os.path.basename(frame.path))[0]


def plot_convergence(csv_paths: list[str], out_path: str) -> None:
    """Write an SVG with one labeled |error|-vs-step curve per CSV.

    Inputs are validated before any output is produced; the byte content
    is deterministic for identical inputs (fixed size, fixed hash salt,
    no embedded date, inputs ordered by filename).
    """
    if not csv_paths:
        raise ValueError("at least one trajectory CSV is required")
    frames = [load_trajectory(path) for path in sorted(csv_paths)]

    with matplotlib.rc_context({"svg.hashsalt": "report"}):
        fig, ax = plt.subplots(figsize=FIGURE_SIZE)
        try:
            for frame in frames:
                errors = [abs(e) for e in frame.errors_hartree]
                ax.plot(frame.steps, errors, marker="o", label=_label(frame))
            ax.set_yscale("log")
            ax.set_xlabel("outer step")
            ax.set_ylabel("|E - E_FCI| (Hartree)")
            ax.legend()
            ax.grid(True, which="both", alpha=0.3)
            fig.tight_layout()
            fig.savefig(out_path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
