"""Figure rendering for reports, sweeps, and bootstrap intervals.

Everything draws through the Agg backend and writes PNG files next to the
delimited output; nothing here opens a window.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .io import ResultRow
from .pseudo_r2 import BootstrapInterval

_REPORT_SKIP = {"tau", "cause", "variant", "n_total", "n_uncensored"}


def plot_report(mapping: Mapping[str, object], path) -> str:
    """Bar chart of the numeric metric values in an evaluation report."""
    items = [
        (k, float(v))
        for k, v in mapping.items()
        if k not in _REPORT_SKIP and isinstance(v, (int, float)) and math.isfinite(float(v))
    ]
    fig, ax = plt.subplots(figsize=(6, 0.6 * max(len(items), 3) + 1.2))
    names = [k for k, _ in items]
    vals = [v for _, v in items]
    ax.barh(range(len(items)), vals, color="#4878a8")
    ax.set_yticks(range(len(items)))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    for i, v in enumerate(vals):
        ax.text(v, i, f" {v:.4f}", va="center", fontsize=9)
    title = f"tau={mapping.get('tau')}  variant={mapping.get('variant')}"
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def _varying_label(key: str, all_keys: list[str]) -> str:
    """Drop key=value fragments shared by every scenario in the batch."""
    parts = key.split(";")
    if len(all_keys) <= 1:
        return key
    common = set(parts)
    for other in all_keys:
        common &= set(other.split(";"))
    kept = [p for p in parts if p not in common]
    return ";".join(kept) if kept else key


def plot_results(rows: Iterable[ResultRow], path) -> str:
    """Boxplots of replicate values, one panel per metric, grouped by
    scenario.  Replicate-0 rows (scenario-level constants) are skipped."""
    by_metric: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    metric_order: list[str] = []
    for r in rows:
        if r.replicate == 0:
            continue
        if r.metric not in by_metric:
            metric_order.append(r.metric)
        by_metric[r.metric][r.scenario_key].append(r.value)
    if not metric_order:
        raise ValueError("no replicate rows to plot")
    n_panels = len(metric_order)
    widest = max(len(by_metric[m]) for m in metric_order)
    fig, axes = plt.subplots(
        n_panels, 1,
        figsize=(max(6.0, 0.9 * widest + 2.0), 2.8 * n_panels),
        squeeze=False,
    )
    for ax, metric in zip(axes[:, 0], metric_order):
        groups = by_metric[metric]
        keys = list(groups)
        data = []
        for k in keys:
            clean = [v for v in groups[k] if math.isfinite(v)]
            data.append(clean if clean else [math.nan])
        ax.boxplot(data)
        ax.set_xticks(range(1, len(keys) + 1))
        ax.set_xticklabels([_varying_label(k, keys) for k in keys])
        ax.set_ylabel(metric)
        ax.tick_params(axis="x", labelrotation=30, labelsize=7)
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_bootstrap(interval: BootstrapInterval, path) -> str:
    """Point estimate with its percentile interval."""
    fig, ax = plt.subplots(figsize=(5, 2.4))
    ax.errorbar(
        [interval.estimate], [0],
        xerr=[[interval.estimate - interval.lower], [interval.upper - interval.estimate]],
        fmt="o", capsize=5, color="#4878a8",
    )
    ax.set_yticks([])
    ax.set_xlabel("pseudo R2")
    ax.set_title(
        f"estimate {interval.estimate:.4f}  "
        f"[{interval.lower:.4f}, {interval.upper:.4f}] at level {interval.level}",
        fontsize=10,
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
