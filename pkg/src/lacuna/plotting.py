"""Figures for evaluation results, written to image files."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport  # noqa: E402

STYLE = {
    "figure.dpi": 120,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def sweep_figure(aggregates: Iterable[EvalReport], path: Path | str, top: int = 30) -> Path:
    """Horizontal bars of mean F-score per analyzer combination, best first."""
    rows = sorted(aggregates, key=lambda r: (-(r.f_score or 0.0), -r.precision, r.name))[:top]
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 0.28 * max(len(rows), 3) + 1.2))
        labels = [r.name for r in rows][::-1]
        y = range(len(rows))
        ax.barh(list(y), [r.f_score or 0.0 for r in rows][::-1], color="#4878a8", label="F-score")
        ax.plot([r.precision for r in rows][::-1], list(y), "o", ms=3, color="#d1495b", label="precision")
        ax.plot([r.recall for r in rows][::-1], list(y), "s", ms=3, color="#66a182", label="recall")
        ax.set_yticks(list(y))
        ax.set_yticklabels(labels)
        ax.set_xlim(0, 1.02)
        ax.set_xlabel("mean over apps")
        ax.set_title("Analyzer combinations")
        ax.legend(loc="upper center", bbox_to_anchor=(0.5, -0.12 - 1.0 / max(len(rows), 3)), ncol=3)
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
    return path


def per_app_figure(reports: Iterable[EvalReport], path: Path | str) -> Path:
    """Precision and recall of one combination on each app."""
    rows = sorted((r for r in reports if r.error is None), key=lambda r: r.app)
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(rows) + 1.5), 3.2))
        x = list(range(len(rows)))
        w = 0.38
        ax.bar([i - w / 2 for i in x], [r.precision for r in rows], w, color="#d1495b", label="precision")
        ax.bar([i + w / 2 for i in x], [r.recall for r in rows], w, color="#66a182", label="recall")
        ax.set_xticks(x)
        ax.set_xticklabels([r.app for r in rows], rotation=45, ha="right")
        ax.set_ylim(0, 1.05)
        if rows:
            ax.set_title(rows[0].name)
        ax.legend(loc="lower left")
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
    return path


def render_eval(per_app: list[EvalReport], aggregates: list[EvalReport], out_dir: Path | str) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    if aggregates:
        written.append(sweep_figure(aggregates, out_dir / "combinations.png"))
        best = aggregates[0].combination
        written.append(per_app_figure([r for r in per_app if r.combination == best], out_dir / "per_app.png"))
    return written
