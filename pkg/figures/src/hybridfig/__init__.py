"""File-driven figure rendering for hybridsim output directories."""

__version__ = "0.1.0"

from .io import (
    SchemaError,
    SweepTable,
    WignerMap,
    read_all_wigner,
    read_fock,
    read_meta,
    read_sweep,
    read_trajectory,
)
from .render import KINDS, FigureJob, render

__all__ = [
    "SchemaError",
    "SweepTable",
    "WignerMap",
    "read_all_wigner",
    "read_fock",
    "read_meta",
    "read_sweep",
    "read_trajectory",
    "KINDS",
    "FigureJob",
    "render",
]
