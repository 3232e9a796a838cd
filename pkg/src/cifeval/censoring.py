"""Censoring-distribution estimation and inverse-probability weights.

The censoring survivor function G(c) = P(C > c) is estimated by the
product-limit method with the roles of event and censoring reversed.  At
tied times, events are removed from the risk set before censorings are
counted, matching the dataset sort order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (
    CompetingRisksDataset,
    DegenerateDataError,
    StepFunction,
    step_left_limit,
)


@dataclass(frozen=True)
class IpcwWeights:
    """Normalized inverse-probability-of-censoring weights.

    weights sum to 1 over all subjects; censored subjects carry weight 0;
    dropped lists subject ids excluded because G(T-) = 0 (only when the
    caller opted into dropping).
    """

    weights: np.ndarray
    uncensored_mask: np.ndarray
    dropped: tuple[Any, ...] = ()

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        m = np.ascontiguousarray(np.asarray(self.uncensored_mask, dtype=bool))
        w.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "uncensored_mask", m)


def km_censoring_survival(dataset: CompetingRisksDataset) -> StepFunction:
    """Product-limit estimate of the censoring survivor function.

    Treats event = 0 as the terminal event and event >= 1 as censoring for
    this reversed estimation.  The factor at a tied time uses the risk set
    with same-time events already removed.  A dataset without censoring
    yields the constant function 1.
    """
    time = dataset.time
    censored = dataset.event == 0
    if not np.any(censored):
        return StepFunction(np.empty(0), np.empty(0), anchor=1.0, monotone="decreasing")
    uniq, start = np.unique(time, return_index=True)
    n = time.shape[0]
    # per distinct time: total count, event count, censoring count
    counts = np.diff(np.append(start, n))
    cens_counts = np.add.reduceat(censored.astype(np.int64), start)
    event_counts = counts - cens_counts
    at_risk = n - start  # sorted times: subjects with T >= uniq[k]
    keep = cens_counts > 0
    denom = at_risk[keep] - event_counts[keep]
    factors = 1.0 - cens_counts[keep] / denom
    values = np.cumprod(factors)
    # guard against roundoff pushing a product below zero
    values = np.clip(values, 0.0, 1.0)
    values = np.minimum.accumulate(values)
    return StepFunction(uniq[keep], values, anchor=1.0, monotone="decreasing")


def ipcw_weights(
    dataset: CompetingRisksDataset,
    G: StepFunction,
    drop_degenerate: bool = False,
) -> IpcwWeights:
    """Normalized weights w_i = (delta_i / G(T_i-)) / sum_j (delta_j / G(T_j-)).

    delta is the any-cause event indicator.  An uncensored subject with
    G(T-) = 0 is an error by default; with drop_degenerate the subject is
    excluded (recorded in ``dropped``) and the rest renormalized.
    """
    delta = dataset.event != 0
    g_left = np.asarray(step_left_limit(G, dataset.time), dtype=float)
    raw = np.zeros(dataset.n)
    dropped: list[Any] = []
    usable = delta & (g_left > 0.0)
    starved = delta & (g_left <= 0.0)
    if np.any(starved):
        if not drop_degenerate:
            bad = dataset.ids[int(np.flatnonzero(starved)[0])]
            raise DegenerateDataError(
                f"G(T-) = 0 for uncensored subject {bad!r}; "
                "pass drop_degenerate=True to exclude such subjects"
            )
        dropped = [dataset.ids[i] for i in np.flatnonzero(starved)]
    raw[usable] = 1.0 / g_left[usable]
    total = math.fsum(raw)
    if total <= 0.0:
        raise DegenerateDataError("no usable events")
    return IpcwWeights(raw / total, delta, tuple(dropped))
