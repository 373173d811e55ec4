"""SVG figures for runs and sweeps (matplotlib, Agg backend).

Figures are 800 x 600 px.  Output is deterministic: the SVG id salt and
metadata date are fixed, so identical inputs give identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_profiles", "plot_loglog", "plot_norm_series"]

_SIZE = (8.0, 6.0)
_DPI = 100
_RC = {"svg.hashsalt": "vwparabolic", "axes.grid": True, "grid.alpha": 0.3,
       "legend.fontsize": 9, "axes.titlesize": 11}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_profiles(profiles: dict, t: float, path, title: str = "") -> None:
    """Overlay ``u(t, .)`` for several epsilons.

    ``profiles`` maps epsilon to ``(x, u)``.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_SIZE, dpi=_DPI)
        for eps, (x, u) in profiles.items():
            ax.plot(x, u, lw=1.2, label=f"eps = {eps:g}")
        ax.set_xlabel("x")
        ax.set_ylabel(f"u({t:g}, x)")
        ax.set_title(title or f"profiles at t = {t:g}")
        ax.legend(loc="best")
        _save(fig, path)


def plot_loglog(epsilons, table: dict, fits: dict, path, names=None, title: str = "") -> None:
    """Tracked norms against epsilon on log-log axes with their fitted curves."""
    eps = np.asarray(epsilons, float)
    names = list(names or table)
    grid = np.geomspace(eps.min(), eps.max(), 100)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_SIZE, dpi=_DPI)
        for name in names:
            vals = np.asarray(table[name], float)
            keep = vals > 0
            if not keep.any():
                continue
            (line,) = ax.loglog(eps[keep], vals[keep], "o", label=name)
            fit = fits.get(name)
            if fit is not None and np.isfinite(fit.exponent):
                model = fit.background + fit.constant * grid ** (-fit.exponent)
                ax.loglog(grid, model, "-", color=line.get_color(), lw=0.8,
                          label=f"fit N = {fit.exponent:.3f}, R2 = {fit.r2:.4f}")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("norm")
        ax.set_title(title or "epsilon sweep")
        ax.legend(loc="best")
        _save(fig, path)


def plot_norm_series(series: dict, path, mark: float | None = None, title: str = "") -> None:
    """``||u(t, .)||`` against time for several epsilons; ``mark`` draws a vertical line."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_SIZE, dpi=_DPI)
        for eps, (t, norm) in series.items():
            ax.semilogy(t, norm, lw=1.2, label=f"eps = {eps:g}")
        if mark is not None:
            ax.axvline(mark, color="0.4", ls="--", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("||u(t, .)||")
        ax.set_title(title or "L2 norm in time")
        ax.legend(loc="best")
        _save(fig, path)
