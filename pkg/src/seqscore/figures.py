"""Render study and evaluation figures to image files.

Uses the object-oriented matplotlib API (no pyplot, no GUI backend); PNGs
are written with fixed metadata so repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

from matplotlib.figure import Figure

_SAVE_KWARGS = {"dpi": 130, "metadata": {"Software": "seqscore"}}


def _settings(rows: Sequence[dict]) -> list[tuple[int, int]]:
    return sorted({(int(r["width"]), int(r["depth"])) for r in rows})


def _series_label(row: dict) -> str:
    if row["strategy"] == "beam":
        return "beam search"
    return f"multinomial, tau={row['tau'] if 'tau' in row else row['param']}"


def _save(fig: Figure, path: Union[str, Path]) -> None:
    fig.savefig(path, **_SAVE_KWARGS)


def plot_entropy_study(rows: Sequence[dict], path: Union[str, Path]) -> None:
    """One panel per (width, depth): estimate mean +- std vs sample count."""
    settings = _settings(rows)
    fig = Figure(figsize=(4.2 * len(settings), 3.4))
    axes = fig.subplots(1, len(settings), squeeze=False)[0]
    for ax, (width, depth) in zip(axes, settings):
        panel = [r for r in rows if (int(r["width"]), int(r["depth"])) == (width, depth)]
        taus = sorted({float(r["tau"]) for r in panel})
        for tau in taus:
            series = sorted((r for r in panel if float(r["tau"]) == tau), key=lambda r: int(r["n"]))
            n = [int(r["n"]) for r in series]
            mean = [float(r["mean_est"]) for r in series]
            std = [float(r["std_est"]) for r in series]
            (line,) = ax.plot(n, mean, label=f"MS tau={tau:g}")
            ax.fill_between(
                n,
                [m - s for m, s in zip(mean, std)],
                [m + s for m, s in zip(mean, std)],
                alpha=0.2,
                color=line.get_color(),
            )
        if panel:
            ax.axhline(float(panel[0]["exact_entropy"]), color="black", ls="--", lw=1,
                       label="exact")
        ax.set_title(f"width {width}, depth {depth}")
        ax.set_xlabel("samples N")
        ax.set_ylabel("entropy estimate (nats)")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_maxlik_study(rows: Sequence[dict], path: Union[str, Path]) -> None:
    """One panel per (width, depth): log-prob gap to the exact maximum."""
    settings = _settings(rows)
    fig = Figure(figsize=(4.2 * len(settings), 3.4))
    axes = fig.subplots(1, len(settings), squeeze=False)[0]
    for ax, (width, depth) in zip(axes, settings):
        panel = [r for r in rows if (int(r["width"]), int(r["depth"])) == (width, depth)]
        keys = sorted({(r["strategy"], str(r["param"])) for r in panel})
        for strategy, param in keys:
            series = sorted(
                (r for r in panel if (r["strategy"], str(r["param"])) == (strategy, param)),
                key=lambda r: int(r["n"]),
            )
            n = [int(r["n"]) for r in series]
            med = [float(r["median_gap"]) for r in series]
            lo = [float(r["q05"]) for r in series]
            hi = [float(r["q95"]) for r in series]
            label = "beam search" if strategy == "beam" else f"MS tau={param}"
            (line,) = ax.plot(n, med, label=label)
            ax.fill_between(n, lo, hi, alpha=0.2, color=line.get_color())
        ax.axhline(0.0, color="black", ls="--", lw=1)
        ax.set_title(f"width {width}, depth {depth}")
        ax.set_xlabel("samples / beam width N")
        ax.set_ylabel("log-prob gap to exact max")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_evaluation(report_rows: Sequence[dict], metric: str, path: Union[str, Path]) -> None:
    """Grouped bars of a metric per measure, one group per (dataset, labeler)."""
    measures = sorted({r["measure"] for r in report_rows})
    groups = sorted({(r["dataset"], r["labeler"]) for r in report_rows})
    fig = Figure(figsize=(1.2 + 1.3 * len(groups), 3.6))
    ax = fig.subplots()
    group_w = 0.8
    bar_w = group_w / max(1, len(measures))
    for mi, measure in enumerate(measures):
        xs, ys = [], []
        for gi, group in enumerate(groups):
            match = [
                r for r in report_rows
                if r["measure"] == measure and (r["dataset"], r["labeler"]) == group
            ]
            if match:
                xs.append(gi - group_w / 2 + (mi + 0.5) * bar_w)
                ys.append(float(match[0][metric]))
        ax.bar(xs, ys, width=bar_w, label=measure)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"{d}\n{l}" for d, l in groups], fontsize=8)
    ax.set_ylabel(metric)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    _save(fig, path)
