"""Post-processing for optimization runs: SVG convergence plots and
markdown summary tables built from the trajectory CSV / summary JSON
files the optimizer CLI writes."""

__version__ = "0.1.0"
