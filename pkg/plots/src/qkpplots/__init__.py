"""Publication-style figures from qkpsim CSV outputs and QKPF field dumps.

Consumes only the documented file interfaces; the simulation package is
never imported.
"""

from .qkpf import FormatError, read_field, write_field
from .studycsv import SchemaError, read_study_csv, read_timeseries_csv
from .figures import FigureSpec, plot_convergence, plot_snapshot, plot_timeseries

__all__ = [
    "FormatError",
    "SchemaError",
    "FigureSpec",
    "read_field",
    "write_field",
    "read_study_csv",
    "read_timeseries_csv",
    "plot_convergence",
    "plot_snapshot",
    "plot_timeseries",
]
__version__ = "0.1.0"
