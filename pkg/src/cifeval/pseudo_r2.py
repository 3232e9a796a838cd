"""Time-dependent pseudo R2 for predicted cumulative incidence curves.

The estimand treats the tau-restricted time to the event of interest as a
working outcome: events of other causes and event-free survival past tau
are both mapped to tau (horizon variant), or the outcome is the binary
indicator of an interesting event by tau (point variant).  Predictions are
scored after a weighted linear recalibration; the final index is the
product of an explained-variance term (R2) and a calibration term (L2),
both computed under inverse-probability-of-censoring weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace
from typing import Callable

import numpy as np

from ._util import make_rng, parallel_map, spawn_seeds, weighted_sum
from .censoring import ipcw_weights, km_censoring_survival
from .core import (
    CompetingRisksDataset,
    CompetingRisksRecord,
    DegenerateDataError,
    MetricReport,
    PredictionSet,
    StepFunction,
    ValidationError,
    step_eval,
)


@dataclass(frozen=True)
class WorkingOutcome:
    """Per-subject transformed outcome.

    value is the restricted working time (horizon variant, in (0, tau])
    or the binary indicator (point variant).  observed is the any-cause
    event indicator; unobserved values carry weight 0 downstream and are
    never imputed.
    """

    value: float
    observed: bool


@dataclass(frozen=True)
class CalibrationFit:
    """Weighted least-squares line y ~ intercept + slope * x.

    degenerate means the predictor had zero weighted variance, in which
    case slope = 0 and intercept is the weighted mean response.
    """

    intercept: float
    slope: float
    degenerate: bool = False

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau > 0 and math.isfinite(tau)):
        raise ValidationError(f"tau must be a positive finite time, got {tau}")
    return tau


def working_time(record: CompetingRisksRecord, tau: float, cause: int) -> WorkingOutcome:
    """Restricted working time: the observed time if the interesting event
    happened by tau, else tau.

    A censored record gets min(time, tau) and observed = False; such values
    exist only so callers can form arrays, they always carry weight 0.
    """
    tau = _check_tau(tau)
    observed = record.event != 0
    if observed:
        value = record.time if (record.time <= tau and record.event == cause) else tau
    else:
        value = min(record.time, tau)
    return WorkingOutcome(float(value), observed)


def event_indicator(record: CompetingRisksRecord, tau: float, cause: int) -> WorkingOutcome:
    """Binary working outcome I(time <= tau and event = cause)."""
    tau = _check_tau(tau)
    value = 1.0 if (record.time <= tau and record.event == cause) else 0.0
    return WorkingOutcome(value, record.event != 0)


def _working_values(time, event, tau, cause):
    observed = event != 0
    hit = (time <= tau) & (event == cause)
    return np.where(observed, np.where(hit, time, tau), np.minimum(time, tau))


def _indicator_values(time, event, tau, cause):
    return ((time <= tau) & (event == cause)).astype(float)


def restricted_mean(cif: StepFunction, tau: float) -> float:
    """Mean of the tau-restricted outcome implied by a predicted CIF.

    Equals tau - integral of cif over [0, tau], an exact rectangle sum on
    the step grid: the restricted outcome distribution places its leftover
    mass at tau, so no tail assumption is needed.
    """
    tau = _check_tau(tau)
    grid = cif.grid
    k = int(np.searchsorted(grid, tau, side="left"))
    bounds = np.append(grid[:k], tau)
    widths = np.diff(np.concatenate(([0.0], bounds)))
    heights = np.concatenate(([cif.anchor], cif.values[:k]))
    return tau - math.fsum(widths * heights)


def weighted_linear_fit(x, y, w) -> CalibrationFit:
    """Closed-form weighted least squares of y on x.

    Weights must be nonnegative with at least one positive entry.  A
    predictor with zero weighted variance returns the degenerate fit
    (slope 0, intercept = weighted mean of y).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (x.shape == y.shape == w.shape) or x.ndim != 1:
        raise ValidationError("x, y, w must be 1-d arrays of equal length")
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    sw = math.fsum(w)
    if sw <= 0.0:
        raise DegenerateDataError("all weights zero")
    xbar = weighted_sum(w, x) / sw
    ybar = weighted_sum(w, y) / sw
    pos = w > 0
    xp = x[pos]
    if np.all(xp == xp[0]):
        return CalibrationFit(ybar, 0.0, True)
    sxx = weighted_sum(w, (x - xbar) ** 2)
    if sxx <= 0.0:
        return CalibrationFit(ybar, 0.0, True)
    sxy = weighted_sum(w, (x - xbar) * (y - ybar))
    slope = sxy / sxx
    return CalibrationFit(ybar - slope * xbar, slope, False)


def _clamp01(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def _r2_l2(y: np.ndarray, mu: np.ndarray, w: np.ndarray, outcome_noun: str):
    pos = w > 0
    yp = y[pos]
    if np.all(yp == yp[0]):
        raise DegenerateDataError(f"degenerate outcome: all weighted {outcome_noun} equal")
    fit = weighted_linear_fit(mu, y, w)
    fitted = fit.predict(mu)
    sw = math.fsum(w)
    ybar = weighted_sum(w, y) / sw
    ss_tot = weighted_sum(w, (y - ybar) ** 2)
    if ss_tot <= 0.0:
        raise DegenerateDataError(f"degenerate outcome: all weighted {outcome_noun} equal")
    ss_fit = weighted_sum(w, (fitted - ybar) ** 2)
    ss_res = weighted_sum(w, (y - fitted) ** 2)
    ss_raw = weighted_sum(w, (y - mu) ** 2)
    r2 = _clamp01(ss_fit / ss_tot)
    # zero raw residual means the uncalibrated predictor is already exact
    l2 = 1.0 if ss_raw == 0.0 else _clamp01(ss_res / ss_raw)
    return r2, l2


def _resolve_cause(dataset, predictions, cause):
    if cause is None:
        cause = predictions.cause
    elif cause != predictions.cause:
        raise ValidationError(
            f"requested cause {cause} but predictions are for cause {predictions.cause}"
        )
    if not 1 <= cause <= dataset.n_causes:
        raise ValidationError(f"cause {cause} out of range 1..{dataset.n_causes}")
    return int(cause)


def _variant_report(dataset, predictions, tau, cause, variant, drop_degenerate):
    tau = _check_tau(tau)
    cause = _resolve_cause(dataset, predictions, cause)
    curves = predictions.aligned(dataset)
    G = km_censoring_survival(dataset)
    weights = ipcw_weights(dataset, G, drop_degenerate=drop_degenerate)
    if variant == "horizon":
        y = _working_values(dataset.time, dataset.event, tau, cause)
        mu = np.array([restricted_mean(c, tau) for c in curves])
        noun = "working times"
    else:
        y = _indicator_values(dataset.time, dataset.event, tau, cause)
        mu = np.array([step_eval(c, tau) for c in curves])
        noun = "working indicators"
    r2, l2 = _r2_l2(y, mu, weights.weights, noun)
    return MetricReport(
        tau=tau,
        cause=cause,
        r2=r2,
        l2=l2,
        pseudo_r2=r2 * l2,
        variant=variant,
        n_total=dataset.n,
        n_uncensored=int(np.count_nonzero(weights.uncensored_mask)),
    )


def pseudo_r2_horizon(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    tau: float,
    cause: int | None = None,
    *,
    drop_degenerate: bool = False,
) -> MetricReport:
    """Pseudo R2 of the restricted working time over the window [0, tau).

    Pipeline: censoring survival by reversed product-limit, normalized
    inverse-probability weights, per-subject restricted means from the
    predicted curves, weighted linear recalibration, then
    R2 = explained weighted variance of the calibrated means and
    L2 = calibrated over raw weighted residual sums (1 when the raw
    residual sum is 0).  pseudo_r2 = R2 * L2.
    """
    return _variant_report(dataset, predictions, tau, cause, "horizon", drop_degenerate)


def pseudo_r2_point(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    tau: float,
    cause: int | None = None,
    *,
    drop_degenerate: bool = False,
) -> MetricReport:
    """Pseudo R2 of the binary outcome I(event of the cause by tau).

    Same pipeline as the horizon variant with the working time replaced by
    the indicator and the restricted mean replaced by the curve value at
    tau; the L2 denominator uses the raw curve value.
    """
    return _variant_report(dataset, predictions, tau, cause, "point", drop_degenerate)


@dataclass(frozen=True)
class PopulationPseudoR2:
    """Monte Carlo summary of the pseudo R2 over uncensored test sets."""

    mean: float
    sd: float
    values: tuple[float, ...]


def population_pseudo_r2(
    scenario,
    cif_provider: Callable[[np.ndarray], StepFunction],
    tau: float,
    variant: str = "horizon",
    n_test: int = 5000,
    reps: int = 100,
    seed: int = 0,
    cause: int = 1,
    jobs: int | None = None,
) -> PopulationPseudoR2:
    """Population-level pseudo R2, approximated on uncensored test sets.

    Generates `reps` uncensored datasets of size n_test from the scenario,
    scores cif_provider's curves on each (weights are uniform without
    censoring), and returns the mean and standard deviation across
    replicates.  Replicates use independent seeds derived from `seed` and
    may run in parallel; results do not depend on the parallelism degree.
    """
    from .simulator import generate_uncensored, resolve_scenario

    if n_test < 100:
        raise ValidationError("n_test must be >= 100")
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    if variant not in ("horizon", "point"):
        raise ValidationError(f"unknown variant {variant!r}")
    scenario = resolve_scenario(scenario)
    evaluate = pseudo_r2_horizon if variant == "horizon" else pseudo_r2_point

    def one(rep_seed: int) -> float:
        ds = generate_uncensored(dc_replace(scenario, n=n_test, seed=rep_seed))
        curves = {sid: cif_provider(x) for sid, x in zip(ds.ids, ds.covariates)}
        preds = PredictionSet(cause, curves)
        return evaluate(ds, preds, tau, cause).pseudo_r2

    values = parallel_map(one, spawn_seeds(seed, reps), jobs)
    mean = math.fsum(values) / reps
    sd = float(np.std(values, ddof=1)) if reps > 1 else 0.0
    return PopulationPseudoR2(mean, sd, tuple(values))


def nonparametric_r2_benchmark(
    scenario,
    tau: float,
    variant: str = "horizon",
    n_mc: int = 10**6,
    seed: int = 0,
    cause: int = 1,
) -> float:
    """Monte Carlo estimate of var(E[W|X]) / var(W) for the working outcome.

    This is the ceiling a correctly specified predictor attains.  The
    conditional mean E[W|X] is analytic from the generator's closed-form
    CIF (restricted mean for the horizon variant, CIF at tau for the point
    variant); var(W) comes from one simulated draw per covariate vector.
    """
    from .simulator import (
        generate_uncensored,
        resolve_scenario,
        true_cif,
        true_restricted_mean,
    )

    tau = _check_tau(tau)
    if variant not in ("horizon", "point"):
        raise ValidationError(f"unknown variant {variant!r}")
    scenario = resolve_scenario(scenario)
    ds = generate_uncensored(dc_replace(scenario, n=n_mc, seed=seed))
    x = ds.covariates
    if variant == "horizon":
        cond_mean = true_restricted_mean(scenario, x, tau, cause)
        w_draws = _working_values(ds.time, ds.event, tau, cause)
    else:
        cond_mean = true_cif(scenario, x, tau, cause)
        w_draws = _indicator_values(ds.time, ds.event, tau, cause)
    var_w = float(np.var(w_draws))
    if var_w <= 0.0:
        raise DegenerateDataError("working outcome has zero variance at this tau")
    return float(np.var(cond_mean) / var_w)


@dataclass(frozen=True)
class BootstrapInterval:
    """Percentile bootstrap interval for the pseudo R2."""

    lower: float
    upper: float
    estimate: float
    level: float
    n_resamples: int
    n_failed: int


def bootstrap_ci(
    dataset: CompetingRisksDataset,
    predictions: PredictionSet,
    tau: float,
    cause: int | None = None,
    variant: str = "horizon",
    B: int = 200,
    level: float = 0.95,
    seed: int = 0,
    jobs: int | None = None,
    *,
    drop_degenerate: bool = False,
) -> BootstrapInterval:
    """Percentile bootstrap for the pseudo R2.

    Subjects are resampled with replacement and the entire pipeline
    (censoring curve, weights, calibration) is refit per resample.
    Resamples on which the estimator is undefined are discarded and
    counted; more than 20% failures is an error.
    """
    if B < 100:
        raise ValidationError("B must be >= 100")
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must be in (0, 1), got {level}")
    if variant not in ("horizon", "point"):
        raise ValidationError(f"unknown variant {variant!r}")
    evaluate = pseudo_r2_horizon if variant == "horizon" else pseudo_r2_point
    estimate = evaluate(
        dataset, predictions, tau, cause, drop_degenerate=drop_degenerate
    ).pseudo_r2
    n = dataset.n

    def one(rep_seed: int) -> float | None:
        idx = make_rng(rep_seed).integers(0, n, size=n)
        try:
            return evaluate(
                dataset.take(idx), predictions, tau, cause,
                drop_degenerate=drop_degenerate,
            ).pseudo_r2
        except DegenerateDataError:
            return None

    results = parallel_map(one, spawn_seeds(seed, B), jobs)
    values = [v for v in results if v is not None]
    n_failed = B - len(values)
    if n_failed > 0.2 * B:
        raise DegenerateDataError(f"{n_failed} of {B} bootstrap resamples failed")
    alpha = (1.0 - level) / 2.0
    lower, upper = np.percentile(values, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return BootstrapInterval(float(lower), float(upper), estimate, level, B, n_failed)
