"""Static figures for reports (Agg backend, written straight to files)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def reduce_to_plane(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse a grid onto its first two coordinates, keeping the max over the others.

    Returns the x axis, the y axis and an image indexed ``[iy, ix]``.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(points))
    xs, ix = np.unique(points[:, 0], return_inverse=True)
    ys, iy = np.unique(points[:, 1], return_inverse=True)
    img = np.full((len(ys), len(xs)), -np.inf)
    np.maximum.at(img, (iy, ix), values)
    return xs, ys, img


def _edges(axis: np.ndarray) -> tuple[float, float]:
    if len(axis) == 1:
        return axis[0] - 0.5, axis[0] + 0.5
    step = (axis[-1] - axis[0]) / (len(axis) - 1)
    return axis[0] - step / 2, axis[-1] + step / 2


def heatmap(points, values, path: str | Path, coords: Sequence[str] = ("x", "y"), title: str = "",
            label: str = "", log: bool = False) -> Path:
    xs, ys, img = reduce_to_plane(points, values)
    if log:
        img = np.log10(np.maximum(np.abs(img), 1e-300))
        label = f"log10 {label}".strip()
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    x0, x1 = _edges(xs)
    y0, y1 = _edges(ys)
    im = ax.imshow(img, origin="lower", extent=(x0, x1, y0, y1), aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label=label)
    ax.set_xlabel(coords[0])
    ax.set_ylabel(coords[1])
    if len(coords) > 2:
        title = f"{title} (max over {', '.join(coords[2:])})".strip()
    ax.set_title(title, fontsize=9)
    return _save(fig, path)


def panel_heatmaps(points, columns: dict[str, np.ndarray], path: str | Path, coords: Sequence[str],
                   title: str = "") -> Path:
    """One heatmap per named column, side by side."""
    names = list(columns)
    fig, axes = plt.subplots(1, len(names), figsize=(4.2 * len(names), 3.8), squeeze=False)
    for ax, name in zip(axes[0], names):
        xs, ys, img = reduce_to_plane(points, columns[name])
        x0, x1 = _edges(xs)
        y0, y1 = _edges(ys)
        im = ax.imshow(img, origin="lower", extent=(x0, x1, y0, y1), aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_title(name, fontsize=9)
        ax.set_xlabel(coords[0])
        ax.set_ylabel(coords[1])
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def bar_chart(labels: Sequence[str], values: Sequence[float], tol: float | None, path: str | Path,
              title: str = "", ylabel: str = "") -> Path:
    vals = np.maximum(np.abs(np.asarray(values, dtype=float)), 1e-18)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.35 * len(labels)), 4.4))
    ax.bar(range(len(vals)), vals, color="tab:blue")
    ax.set_yscale("log")
    if tol is not None:
        ax.axhline(tol, color="tab:red", lw=1, ls="--", label=f"tol {tol:g}")
        ax.legend(fontsize=8)
    ax.set_xticks(range(len(vals)))
    ax.set_xticklabels(labels, rotation=70, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def line_plot(t, y, path: str | Path, tol: float | None = None, title: str = "", xlabel: str = "t",
              ylabel: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.semilogy(t, np.maximum(np.abs(np.asarray(y, dtype=float)), 1e-18), "o-", ms=3)
    if tol is not None:
        ax.axhline(tol, color="tab:red", lw=1, ls="--", label=f"tol {tol:g}")
        ax.legend(fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    p = Path(path)
    # drop timestamps/version stamps so repeated runs give identical files
    meta = {".png": {"Software": None}, ".svg": {"Date": None}, ".pdf": {"CreationDate": None}}
    fig.savefig(p, dpi=110, metadata=meta.get(p.suffix.lower()))
    plt.close(fig)
    return p
