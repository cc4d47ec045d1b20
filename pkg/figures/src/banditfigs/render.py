"""Reads the simulator's grid-point CSV schema and renders figure styles:
regret curves, per-round cost curves, and target-arm chosen-times curves.

Rendering is a pure function of the CSV contents; no timestamps or other
ambient state end up in the image, so re-rendering reproduces it byte for
byte.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

EXPECTED_COLUMNS = (
    "run_id", "seed", "t", "regret", "cost", "target_pulls",
    "affected_agent_count", "per_agent_optimal_fraction",
    "bound_regret_lb", "bound_cost_ub",
)

KINDS = ("regret", "cost", "chosen_times")


class SchemaMismatchError(ValueError):
    """CSV header or row shape differs from the simulator schema."""


class GridMismatchError(ValueError):
    """Input series do not share one time grid."""


@dataclass
class SeriesTable:
    """One CSV parsed into per-run series on a common grid."""

    label: str
    grid: np.ndarray                 # (G,)
    regret: np.ndarray               # (runs, G)
    cost: np.ndarray                 # (runs, G)
    target_pulls: np.ndarray         # (runs, G)
    bound_regret_lb: np.ndarray      # (G,)
    bound_cost_ub: np.ndarray        # (G,)


@dataclass
class FigureSpec:
    """Inputs and style for one figure.

    inputs maps series labels to CSV paths (insertion order is the legend
    order); aggregation is mean with a +-1 standard deviation band across
    run ids. regret_per_round divides the regret curve by t.
    """

    inputs: list[tuple[str, str]]    # (path, label)
    kind: str
    out: str
    regret_per_round: bool = False
    show_bounds: bool = True
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatchError(f"unknown figure kind {self.kind!r}")
        labels = [label for _, label in self.inputs]
        if len(set(labels)) != len(labels):
            raise SchemaMismatchError(f"duplicate series labels: {labels}")
        if not self.inputs:
            raise SchemaMismatchError("at least one input CSV is required")


def load_series(path: str, label: str) -> SeriesTable:
    """Parse one simulator CSV; every run must share one time grid."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaMismatchError(f"{path}: empty file") from None
        if header != EXPECTED_COLUMNS:
            raise SchemaMismatchError(
                f"{path}: header {header} does not match the simulator schema")
        runs: dict[int, list[tuple[int, float, float, float, float, float]]] = {}
        for row in reader:
            if len(row) != len(EXPECTED_COLUMNS):
                raise SchemaMismatchError(f"{path}: row with {len(row)} fields")
            run_id = int(row[0])
            runs.setdefault(run_id, []).append(
                (int(row[2]), float(row[3]), float(row[4]), float(row[5]),
                 float(row[8]), float(row[9])))
    if not runs:
        raise SchemaMismatchError(f"{path}: no data rows")
    grids = {tuple(r[0] for r in rows) for rows in runs.values()}
    if len(grids) != 1:
        raise GridMismatchError(f"{path}: runs disagree on the time grid")
    grid = np.array(next(iter(grids)), dtype=np.int64)
    ordered = [runs[k] for k in sorted(runs)]
    data = np.array(ordered, dtype=np.float64)  # (runs, G, 6)
    return SeriesTable(
        label=label,
        grid=grid,
        regret=data[:, :, 1],
        cost=data[:, :, 2],
        target_pulls=data[:, :, 3],
        bound_regret_lb=data[0, :, 4],
        bound_cost_ub=data[0, :, 5],
    )


def aggregate(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation across runs (axis 0)."""
    return values.mean(axis=0), values.std(axis=0)


def _series_for_kind(table: SeriesTable, spec: FigureSpec) -> np.ndarray:
    if spec.kind == "cost":
        return table.cost / table.grid[None, :]
    if spec.kind == "chosen_times":
        return table.target_pulls
    if spec.regret_per_round:
        return table.regret / table.grid[None, :]
    return table.regret


def _bound_for_kind(table: SeriesTable, spec: FigureSpec) -> Optional[np.ndarray]:
    if spec.kind == "cost":
        bound = table.bound_cost_ub / table.grid
    elif spec.kind == "regret":
        bound = table.bound_regret_lb
        if spec.regret_per_round:
            bound = bound / table.grid
    else:
        return None
    return bound if np.isfinite(bound).any() else None


_YLABELS = {
    "regret": "cumulative regret",
    "cost": "attack cost per round",
    "chosen_times": "target arm pulls",
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    tables = [load_series(path, label) for path, label in spec.inputs]
    base_grid = tables[0].grid
    for table in tables[1:]:
        if len(table.grid) != len(base_grid) or (table.grid != base_grid).any():
            raise GridMismatchError(
                f"series {table.label!r} uses a different time grid")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for table in tables:
        series = _series_for_kind(table, spec)
        mean, std = aggregate(series)
        line, = ax.plot(table.grid, mean, label=table.label, linewidth=1.6)
        ax.fill_between(table.grid, mean - std, mean + std,
                        color=line.get_color(), alpha=0.2, linewidth=0)
        if spec.show_bounds:
            bound = _bound_for_kind(table, spec)
            if bound is not None:
                ax.plot(table.grid, bound, linestyle="--", linewidth=1.0,
                        color=line.get_color(),
                        label=f"{table.label} (bound)")
    ax.set_xlabel("round")
    ylabel = _YLABELS[spec.kind]
    if spec.kind == "regret" and spec.regret_per_round:
        ylabel = "regret per round"
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=spec.dpi, metadata={"Software": "banditfigs"})
    plt.close(fig)
    return spec.out
