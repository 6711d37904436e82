"""Figure scripts for nlcsim outputs (read-only consumers)."""

from .figures import (
    PLOT_KINDS,
    PlotJob,
    plot_energy,
    plot_field,
    plot_maxd,
    plot_residual,
    run_job,
)
from .readers import SERIES_COLUMNS, Snapshot, read_series, read_snapshot

__version__ = "0.1.0"

__all__ = [
    "PLOT_KINDS",
    "PlotJob",
    "SERIES_COLUMNS",
    "Snapshot",
    "plot_energy",
    "plot_field",
    "plot_maxd",
    "plot_residual",
    "read_series",
    "read_snapshot",
    "run_job",
    "__version__",
]
