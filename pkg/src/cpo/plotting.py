"""Figures for the analytics report.

Uses the non-interactive Agg backend and strips the software stamp from
PNG metadata so the same report renders to the same bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analytics import RegressionReport, TypeStats, UnitComparison  # noqa: E402

_RC = {
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def short_signature(signature: Sequence[str], width: int = 48) -> str:
    label = " > ".join(s.replace("Process", "") or s for s in signature)
    return label if len(label) <= width else label[: width - 3] + "..."


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_type_stats(stats: Sequence[TypeStats], path: Path, top: int = 20) -> Path:
    shown = list(stats)[:top]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 0.3 * max(len(shown), 3) + 1.2))
        ys = range(len(shown))
        means = [float(s.mean) for s in shown]
        sds = [float(s.variance) ** 0.5 for s in shown]
        ax.barh(list(ys), means, xerr=sds, color="0.55", ecolor="0.2", capsize=2)
        ax.set_yticks(list(ys), [f"{short_signature(s.signature)} (n={s.n})" for s in shown])
        ax.invert_yaxis()
        ax.set_xlim(0, 1)
        ax.set_xlabel("mean outcome (bar: one population sd)")
        ax.set_title("Outcome by workflow type")
        return _save(fig, path)


def plot_regression(report: RegressionReport, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 0.35 * max(len(report.features), 2) + 1.4))
        names = list(report.features)
        coefs = [float(c) for c in report.coefficients[1:]]
        colors = ["#3b6ea5" if c >= 0 else "#b5533c" for c in coefs]
        ax.barh(range(len(names)), coefs, color=colors)
        ax.axvline(0, color="0.3", lw=0.8)
        ax.set_yticks(range(len(names)), names)
        ax.invert_yaxis()
        ax.set_xlabel("effect per step on outcome")
        r2 = float(report.r_squared)
        ax.set_title(f"Step regression: intercept {float(report.intercept):.3g}, R² {r2:.3f}, n={report.n}")
        return _save(fig, path)


def plot_unit_deltas(comparison: UnitComparison, path: Path, top: int = 15) -> Path:
    deltas = comparison.deltas[:top]
    units = sorted(comparison.per_unit)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 0.35 * max(len(deltas), 3) + 1.4))
        if not deltas:
            ax.text(0.5, 0.5, "no workflow type shared by two units", ha="center", va="center")
            ax.set_axis_off()
            return _save(fig, path)
        height = 0.8 / len(units)
        for k, unit in enumerate(units):
            xs = [float(d.means[unit]) if unit in d.means else 0.0 for d in deltas]
            ax.barh([i + k * height for i in range(len(deltas))], xs, height=height, label=unit)
        ax.set_yticks([i + 0.4 - height / 2 for i in range(len(deltas))], [short_signature(d.signature) for d in deltas])
        ax.invert_yaxis()
        ax.set_xlim(0, 1)
        ax.set_xlabel("mean outcome")
        ax.set_title("Shared workflow types by unit")
        ax.legend(frameon=False, fontsize=8)
        return _save(fig, path)
