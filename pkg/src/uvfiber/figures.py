"""Evaluation figures rendered straight to PNG files.

Forces the Agg backend so rendering works on headless machines; nothing in
here opens a window.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


@dataclass(frozen=True)
class PageResult:
    """One evaluated page: what the detector concluded and how long it took."""

    stem: str
    model_page: bool
    fiber_count: int
    verdict: str
    correct: bool
    detect_ms: float


def _save(fig, out_dir: str | os.PathLike, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_eval_figures(
    results: list[PageResult], metrics, min_fiber_count: int, out_dir: str | os.PathLike
) -> list[str]:
    """Write the evaluation figures into out_dir and return their paths.

    Three plots: detected fiber counts split by page kind with the decision
    threshold marked, the headline metrics, and per-page detection time.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    auth = [r.fiber_count for r in results if not r.model_page]
    model = [r.fiber_count for r in results if r.model_page]
    top = max(auth + model, default=0)
    fig, ax = plt.subplots(figsize=(7, 4))
    bins = [i - 0.5 for i in range(top + 2)]
    ax.hist(auth, bins=bins, alpha=0.6, label=f"authentic pages ({len(auth)})")
    ax.hist(model, bins=bins, alpha=0.6, label=f"model pages ({len(model)})")
    ax.axvline(min_fiber_count - 0.5, color="black", linestyle="--", linewidth=1,
               label=f"verdict threshold ({min_fiber_count})")
    ax.set_xlabel("detected fibers per page")
    ax.set_ylabel("pages")
    ax.legend()
    fig.tight_layout()
    written.append(_save(fig, out_dir, "fiber_counts.png"))

    fig, ax = plt.subplots(figsize=(5, 4))
    names = ["precision", "recall", "doc accuracy"]
    values = [metrics.fiber_precision, metrics.fiber_recall, metrics.doc_accuracy]
    bars = ax.bar(names, values, color=["#4878d0", "#ee854a", "#6acc64"])
    for bar, value in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, value, f"{value:.3f}",
                ha="center", va="bottom")
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("score")
    fig.tight_layout()
    written.append(_save(fig, out_dir, "metrics_summary.png"))

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist([r.detect_ms for r in results], bins=30, color="#4878d0")
    ax.set_xlabel("detection time per page (ms)")
    ax.set_ylabel("pages")
    fig.tight_layout()
    written.append(_save(fig, out_dir, "detect_times.png"))

    return written
