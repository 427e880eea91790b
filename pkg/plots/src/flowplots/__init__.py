"""Offline rendering of standard figures from simulator run outputs."""

from .io import ContractError, read_snapshots, read_summary, read_trace, read_verdicts
from .render import FIGURES, PlotJob, render

__all__ = [
    "ContractError",
    "FIGURES",
    "PlotJob",
    "render",
    "read_trace",
    "read_summary",
    "read_verdicts",
    "read_snapshots",
]

__version__ = "0.1.0"
