"""Figure and table rendering for evaluation reports and corpus analytics.

Every figure gets a TSV twin next to it so the numbers stay script-friendly.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .jsonio import write_tsv
from .metrics import EvalReport, StatsReport

_MAX_BARS = 20


def _bar_figure(path: Path, labels, values, xlabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(8, max(2.5, 0.35 * len(labels) + 1.2)))
    ypos = range(len(labels))
    ax.barh(ypos, values, color="#4878a8")
    ax.set_yticks(list(ypos))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _hist_figure(path: Path, hist: dict[int, int], mean: float, xlabel: str, title: str) -> None:
    xs = sorted(hist)
    ys = [hist[x] for x in xs]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(xs, ys, width=0.8, color="#4878a8")
    ax.axvline(mean, color="#b04a4a", linestyle="--", label=f"mean = {mean:.2f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("records")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_stats_report(stats: StatsReport, outdir) -> list[Path]:
    """Write prefix-distribution and length-histogram figures plus TSVs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    ranked = sorted(stats.prefix_distribution.items(), key=lambda kv: (-kv[1], kv[0]))
    top = ranked[:_MAX_BARS]
    fig_path = outdir / "prefix_distribution.png"
    _bar_figure(
        fig_path,
        [p for p, _ in top],
        [f for _, f in top],
        "fraction of questions",
        "Question prefix distribution",
    )
    written.append(fig_path)
    tsv_path = outdir / "prefix_distribution.tsv"
    write_tsv(
        tsv_path,
        ("prefix", "count", "fraction"),
        ((p, stats.prefix_counts[p], f"{f:.6f}") for p, f in ranked),
    )
    written.append(tsv_path)

    for name, hist, mean, label in (
        ("question_length", stats.question_length_hist, stats.question_length_mean, "question length (words)"),
        ("answer_length", stats.answer_length_hist, stats.answer_length_mean, "answer length (words)"),
    ):
        fig_path = outdir / f"{name}_hist.png"
        _hist_figure(fig_path, hist, mean, label, f"{label} distribution")
        written.append(fig_path)
        tsv_path = outdir / f"{name}_hist.tsv"
        write_tsv(tsv_path, ("words", "count"), sorted(hist.items()))
        written.append(tsv_path)

    if stats.filter_pass_ratios is not None:
        rows = [
            (prefix, b["passed"], b["failed"], b["skipped"],
             "" if b["ratio"] is None else f"{b['ratio']:.6f}")
            for prefix, b in stats.filter_pass_ratios.items()
        ]
        tsv_path = outdir / "filter_pass_ratios.tsv"
        write_tsv(tsv_path, ("prefix", "passed", "failed", "skipped", "ratio"), rows)
        written.append(tsv_path)
        with_ratio = [(p, b["ratio"]) for p, b in stats.filter_pass_ratios.items() if b["ratio"] is not None]
        if with_ratio:
            with_ratio.sort(key=lambda kv: (-kv[1], kv[0]))
            fig_path = outdir / "filter_pass_ratios.png"
            _bar_figure(
                fig_path,
                [p for p, _ in with_ratio[:_MAX_BARS]],
                [r for _, r in with_ratio[:_MAX_BARS]],
                "pass ratio",
                "Filter pass ratio by question prefix",
            )
            written.append(fig_path)
    return written


def render_eval_report(report: EvalReport, outdir) -> list[Path]:
    """Write the per-prefix accuracy figure and its TSV."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    ranked = sorted(report.breakdown.items(), key=lambda kv: (-kv[1][1], kv[0]))
    fig_path = outdir / "prefix_accuracy.png"
    _bar_figure(
        fig_path,
        [p for p, _ in ranked[:_MAX_BARS]],
        [acc for _, (acc, _) in ranked[:_MAX_BARS]],
        f"{report.metric} accuracy",
        f"Accuracy by question prefix ({report.metric})",
    )
    written.append(fig_path)
    tsv_path = outdir / "prefix_accuracy.tsv"
    write_tsv(
        tsv_path,
        ("prefix", "accuracy", "count"),
        ((p, f"{acc:.6f}", count) for p, (acc, count) in ranked),
    )
    written.append(tsv_path)
    return written
