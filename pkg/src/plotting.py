"""Static heatmaps of risk landscapes."""

import logging
from pathlib import Path
from typing import Dict, List, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .landscape import LandscapeTable  # noqa: E402

logger = logging.getLogger(__name__)

STATISTICS: Dict[str, str] = {"A_mean": "mean", "A_q999": "q999"}
SINGLE_CELL_WIDTH = 0.1


def _edges(centers: np.ndarray) -> np.ndarray:
    if centers.size == 1:
        half = SINGLE_CELL_WIDTH / 2
        return np.array([centers[0] - half, centers[0] + half])
    mids = (centers[:-1] + centers[1:]) / 2
    first = centers[0] - (mids[0] - centers[0])
    last = centers[-1] + (centers[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def render_heatmap(table: LandscapeTable, column: str, path: Union[str, Path]) -> None:
    """Heatmap of one statistic over (delta, epsilon); missing cells are hatched."""
    grid = table.pivot(column).sort_index().sort_index(axis=1)
    deltas = grid.columns.to_numpy(dtype=float)
    epsilons = grid.index.to_numpy(dtype=float)
    values = np.ma.masked_invalid(grid.to_numpy(dtype=float))
    x_edges, y_edges = _edges(deltas), _edges(epsilons)

    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    ax.add_patch(
        Rectangle(
            (x_edges[0], y_edges[0]),
            x_edges[-1] - x_edges[0],
            y_edges[-1] - y_edges[0],
            facecolor="white",
            edgecolor="lightgray",
            hatch="///",
            zorder=0,
        )
    )
    if values.count():
        mesh = ax.pcolormesh(x_edges, y_edges, values, cmap="viridis", zorder=1)
        fig.colorbar(mesh, ax=ax, label=column)
    ax.set_xlim(x_edges[0], x_edges[-1])
    ax.set_ylim(y_edges[0], y_edges[-1])
    ax.set_xlabel("delta (portfolio diversity)")
    ax.set_ylabel("epsilon (risk exposure)")
    ax.set_title(f"{column} over (delta, epsilon)")
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})


def render_landscape(table: LandscapeTable, out: Union[str, Path]) -> List[Path]:
    """Write ``<stem>_mean.png`` and ``<stem>_q999.png`` next to ``out``.

    Returns:
        Paths of the written images
    """
    out = Path(out)
    written = []
    for column, suffix in STATISTICS.items():
        path = out.with_name(f"{out.stem}_{suffix}.png")
        render_heatmap(table, column, path)
        logger.info("wrote %s", path)
        written.append(path)
    return written
