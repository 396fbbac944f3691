"""Batch figure rendering from validated fracflow tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import CsvTable, SchemaError, read_table

FIGSIZE = (6.4, 4.2)
DPI = 130


@dataclass
class FigureSpec:
    kind: str  # snapshot | rates | sweep
    inputs: list
    output: str
    guides: list = field(default_factory=list)
    title: str | None = None


def render(spec: FigureSpec) -> Path:
    if spec.kind not in ("snapshot", "rates", "sweep"):
        raise SchemaError(f"unknown figure kind {spec.kind!r}")
    if not spec.inputs:
        raise SchemaError("no input files given")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    try:
        if spec.kind == "snapshot":
            _render_snapshot(ax, spec)
        elif spec.kind == "rates":
            _render_rates(ax, spec)
        else:
            _render_sweep(fig, ax, spec)
        fig.tight_layout()
        out = Path(spec.output)
        fig.savefig(out)
        return out
    finally:
        plt.close(fig)


def _snapshot_axis(table: CsvTable, n_nodes: int) -> np.ndarray:
    a = table.meta_float("domain.a")
    b = table.meta_float("domain.b")
    if a is None or b is None:
        # node index axis when the provenance block lacks the domain
        return np.arange(1, n_nodes + 1, dtype=float)
    h = (b - a) / (n_nodes + 1)
    return a + h * np.arange(1, n_nodes + 1)


def _render_snapshot(ax, spec: FigureSpec) -> None:
    table = read_table(spec.inputs[0], "trajectory")
    t = np.asarray(table.columns["t"])
    node = np.asarray(table.columns["node"])
    value = np.asarray(table.columns["value"])
    t_last = t.max()
    sel = t == t_last
    order = np.argsort(node[sel])
    nodes = node[sel][order]
    profile = value[sel][order]
    x = _snapshot_axis(table, len(nodes))
    ax.plot(x, profile, color="tab:red", lw=1.2, label=f"state at t = {t_last:g}")
    guides = list(spec.guides)
    if not guides:
        eps2 = table.meta_float("eps2")
        if eps2 is not None and 0.0 < eps2 < 1.0:
            m = math.sqrt(1.0 - eps2)
            guides = [m, -m]
    for gv in guides:
        ax.axhline(gv, color="black", ls="--", lw=0.9)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(spec.title or "solution snapshot")
    ax.legend(loc="best", fontsize=9)


def _render_rates(ax, spec: FigureSpec) -> None:
    for path in spec.inputs:
        table = read_table(path, "rates")
        step = np.asarray(table.columns["step"])
        err = np.asarray(table.columns["error"])
        fitted = table.meta_float("fitted_order")
        if fitted is None:
            raise SchemaError(f"{path}: missing '# fitted_order' provenance line")
        label = f"{Path(path).stem}: order = {fitted:.2f}"
        ax.loglog(step, err, "o-", ms=5, label=label)
        # guide line with the fitted slope, anchored at the finest level
        gx = np.array([step.min(), step.max()])
        gy = err[np.argmin(step)] * (gx / step.min()) ** fitted
        ax.loglog(gx, gy, "k:", lw=0.8)
        ax.annotate(
            f"order $\\approx$ {fitted:.2f}",
            xy=(step[len(step) // 2], err[len(err) // 2]),
            textcoords="offset points",
            xytext=(8, -12),
            fontsize=9,
        )
    axis = table.meta.get("axis", "step")
    ax.set_xlabel("h" if axis == "space" else "tau")
    ax.set_ylabel("L2 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title(spec.title or f"{axis} convergence")
    ax.legend(loc="best", fontsize=9)


def _render_sweep(fig, ax, spec: FigureSpec) -> None:
    table = read_table(spec.inputs[0], "sweep")
    alphas = sorted(set(table.columns["alpha"]))
    esses = sorted(set(table.columns["s"]))
    grid = np.full((len(alphas), len(esses)), np.nan)
    ok = np.zeros_like(grid, dtype=bool)
    for a, s, m, p in zip(
        table.columns["alpha"], table.columns["s"],
        table.columns["max_linf"], table.columns["pass"],
    ):
        i, j = alphas.index(a), esses.index(s)
        grid[i, j] = m
        ok[i, j] = p
    im = ax.imshow(grid, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(esses)), [f"{s:g}" for s in esses])
    ax.set_yticks(range(len(alphas)), [f"{a:g}" for a in alphas])
    ax.set_xlabel("s")
    ax.set_ylabel("alpha")
    for i in range(len(alphas)):
        for j in range(len(esses)):
            ax.text(
                j, i, f"{grid[i, j]:.6f}\n{'pass' if ok[i, j] else 'FAIL'}",
                ha="center", va="center",
                color="white" if ok[i, j] else "red", fontsize=8,
            )
    fig.colorbar(im, ax=ax, label="max |U|_inf")
    ax.set_title(spec.title or "maximum-principle sweep")
