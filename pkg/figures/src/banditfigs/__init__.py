"""Figure generation from simulator CSV logs: average regret, average
per-round attack cost, and target-arm chosen-times curves with mean and
standard-deviation bands."""

from .render import (
    FigureSpec,
    GridMismatchError,
    SchemaMismatchError,
    SeriesTable,
    aggregate,
    load_series,
    render,
)

__version__ = "0.1.0"
