"""PNG figures written next to the CSV outputs (matplotlib, Agg backend)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def scan_figure(Qs: Sequence[int], maxima: Sequence[float], fit: tuple[float, float] | None,
                references: dict[str, float], path: str | Path) -> Path:
    """log max|L(1/2, f, chi)| against log Q with the fitted line and reference slopes."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(Qs, maxima, "o", ms=3, label="max over characters")
    if fit is not None and len(Qs) > 1:
        slope, icpt = fit
        lo, hi = min(Qs), max(Qs)
        xs = [lo, hi]
        ax.loglog(xs, [math.exp(icpt) * x**slope for x in xs], "-", label=f"fit, exponent {slope:.3f}")
        anchor = math.exp(icpt) * lo**slope
        for name, e in references.items():
            ax.loglog(xs, [anchor * (x / lo) ** e for x in xs], "--", lw=0.8, label=f"{name} {e:.4f}")
    ax.set_xlabel("Q")
    ax.set_ylabel("max |L(1/2, f, chi)|")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", lw=0.3)
    fig.tight_layout()
    return _save(fig, path)


def curves_figure(x: Sequence[float], curves: dict[str, Sequence[float]], path: str | Path,
                  xlabel: str = "", ylabel: str = "", logy: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, ys in curves.items():
        (ax.semilogy if logy else ax.plot)(x, ys, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(True, lw=0.3)
    fig.tight_layout()
    return _save(fig, path)
