"""Comparison metrics: IPCW Brier score, truncated concordance index for
competing risks, and cumulative/dynamic time-dependent AUC.

All three use the same reversed product-limit censoring curve as the
pseudo R2.  Values may differ from other software in tie and weighting
conventions; the conventions used here are stated on each function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CompetingRisksDataset,
    DegenerateDataError,
    PredictionSet,
    ValidationError,
    quantile_lower,
    step_eval,
    step_left_limit,
)
from .censoring import km_censoring_survival


@dataclass(frozen=True)
class QuantileGrid:
    """Evaluation times at evenly spaced quantiles of observed event times.

    Levels are k / (count + 1) for k = 1..count, interior on purpose: the
    extreme quantiles are where IPCW support degenerates first.
    """

    count: int
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size != self.count:
            raise ValidationError("times must be a 1-d array of length count")
        if times.size == 0:
            raise ValidationError("grid must have at least one time")
        if np.any(times <= 0) or np.any(np.diff(times) < 0):
            raise ValidationError("grid times must be positive and nondecreasing")
        times = np.ascontiguousarray(times)
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_dataset(cls, dataset: CompetingRisksDataset, count: int = 10) -> "QuantileGrid":
        if count < 1:
            raise ValidationError("count must be >= 1")
        times = dataset.event_times()
        if times.size == 0:
            raise DegenerateDataError("no uncensored events to build a grid from")
        levels = [k / (count + 1) for k in range(1, count + 1)]
        return cls(count, np.array([quantile_lower(times, q) for q in levels]))


def _curve_values_at(dataset, predictions, t):
    return np.array([step_eval(c, t) for c in predictions.aligned(dataset)])


def _check_cause(dataset, predictions, cause):
    if cause is None:
        cause = predictions.cause
    elif predictions is not None and cause != predictions.cause:
        raise ValidationError(
            f"requested cause {cause} but predictions are for cause {predictions.cause}"
        )
    if not 1 <= cause <= dataset.n_causes:
        raise ValidationError(f"cause {cause} out of range 1..{dataset.n_causes}")
    return int(cause)


def brier_score_at(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    t: float,
    cause: int | None = None,
) -> float:
    """IPCW Brier score of the predicted CIF at time t.

    Uncensored subjects with T <= t contribute (xi - F)^2 / G(T-), where
    xi indicates the cause of interest (so competing events are scored
    against 0); subjects with T > t contribute F^2 / G(t); subjects
    censored at or before t contribute 0.  Without censoring this is the
    plain mean squared error against xi(t).
    """
    t = float(t)
    if t <= 0:
        raise ValidationError("t must be positive")
    cause = _check_cause(dataset, predictions, cause)
    f_vals = _curve_values_at(dataset, predictions, t)
    G = km_censoring_survival(dataset)
    g_t = float(step_eval(G, t))
    if g_t <= 0.0:
        raise DegenerateDataError(f"no censoring support at t = {t}")
    time = dataset.time
    event = dataset.event
    past = (time <= t) & (event != 0)
    future = time > t
    terms = np.zeros(dataset.n)
    if np.any(past):
        g_left = np.asarray(step_left_limit(G, time[past]), dtype=float)
        xi = (event[past] == cause).astype(float)
        terms[past] = (xi - f_vals[past]) ** 2 / g_left
    terms[future] = f_vals[future] ** 2 / g_t
    return math.fsum(terms) / dataset.n


def brier_average(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    grid: QuantileGrid,
    cause: int | None = None,
) -> float:
    """Arithmetic mean of brier_score_at over the grid times."""
    vals = [brier_score_at(dataset, predictions, t, cause) for t in grid.times]
    return math.fsum(vals) / len(vals)


def risk_scores_from_predictions(
    dataset: CompetingRisksDataset, predictions: PredictionSet, tau: float
) -> np.ndarray:
    """Per-subject risk score F*(tau | X), the curve value at the horizon."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    return _curve_values_at(dataset, predictions, float(tau))


def cindex_competing(
    dataset: CompetingRisksDataset,
    risk_scores,
    tau: float,
    cause: int = 1,
) -> float:
    """Truncated cause-specific concordance with IPCW pair weights.

    Comparable pairs (i, j): subject i had the cause of interest strictly
    before tau and strictly before T_j.  Pair weight G(T_i-)^-2; score
    ties count 0.5.  Higher score must mean higher predicted risk.
    """
    tau = float(tau)
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if not 1 <= cause <= dataset.n_causes:
        raise ValidationError(f"cause {cause} out of range 1..{dataset.n_causes}")
    scores = np.asarray(risk_scores, dtype=float)
    if scores.shape != (dataset.n,):
        raise ValidationError("risk_scores must have one value per subject")
    time = dataset.time
    G = km_censoring_survival(dataset)
    case_idx = np.flatnonzero((dataset.event == cause) & (time < tau))
    num_terms: list[float] = []
    den_terms: list[float] = []
    for i in case_idx:
        # dataset rows are sorted by time, so later times form a suffix
        j_start = int(np.searchsorted(time, time[i], side="right"))
        others = scores[j_start:]
        if others.size == 0:
            continue
        g_left = float(step_left_limit(G, time[i]))
        if g_left <= 0.0:
            raise DegenerateDataError("no censoring support at an event time")
        w = 1.0 / (g_left * g_left)
        less = int(np.count_nonzero(others < scores[i]))
        ties = int(np.count_nonzero(others == scores[i]))
        num_terms.append(w * (less + 0.5 * ties))
        den_terms.append(w * others.size)
    den = math.fsum(den_terms)
    if den <= 0.0:
        raise DegenerateDataError("no comparable pairs")
    return math.fsum(num_terms) / den


def auc_timedep_at(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    t: float,
    cause: int | None = None,
) -> float:
    """Cumulative-case / dynamic-control AUC of the predicted CIF at t.

    Cases are subjects with the cause of interest by t (weight 1/G(T-));
    controls are subjects still event-free at t.  The control weight
    1/G(t) is constant across controls and cancels from the weighted pair
    fraction, so it never appears below.  Prediction ties count 0.5.
    """
    t = float(t)
    if t <= 0:
        raise ValidationError("t must be positive")
    cause = _check_cause(dataset, predictions, cause)
    f_vals = _curve_values_at(dataset, predictions, t)
    time = dataset.time
    event = dataset.event
    case_mask = (time <= t) & (event == cause)
    control_mask = time > t
    if not np.any(case_mask):
        raise DegenerateDataError(f"no cases at t = {t}")
    if not np.any(control_mask):
        raise DegenerateDataError(f"no controls at t = {t}")
    G = km_censoring_survival(dataset)
    g_left = np.asarray(step_left_limit(G, time[case_mask]), dtype=float)
    if np.any(g_left <= 0.0):
        raise DegenerateDataError("no censoring support at a case event time")
    case_w = 1.0 / g_left
    case_scores = f_vals[case_mask]
    controls = np.sort(f_vals[control_mask])
    m = controls.size
    less = np.searchsorted(controls, case_scores, side="left")
    ties = np.searchsorted(controls, case_scores, side="right") - less
    conc = less + 0.5 * ties
    num = math.fsum(case_w * conc)
    den = math.fsum(case_w * m)
    return num / den


def auc_average(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    grid: QuantileGrid,
    cause: int | None = None,
) -> float:
    """Arithmetic mean of auc_timedep_at over the grid times."""
    vals = [auc_timedep_at(dataset, predictions, t, cause) for t in grid.times]
    return math.fsum(vals) / len(vals)
