"""Simulation study drivers.

Each driver sweeps generator settings, scores the closed-form CIF
providers on simulated data, and returns tidy long-format rows
(scenario_key, replicate, metric, value).  Row order is fully determined
by the sweep definition and the master seed, never by the parallelism
degree.  Replicates that hit a degenerate-estimator condition contribute
NaN values instead of aborting the sweep.
"""

from __future__ import annotations

import math
from dataclasses import replace as dc_replace

import numpy as np

from ._util import parallel_map, spawn_seeds
from .baselines import (
    QuantileGrid,
    auc_average,
    brier_average,
    cindex_competing,
    risk_scores_from_predictions,
)
from .core import DegenerateDataError, ValidationError, quantile_lower
from .io import ResultRow
from .pseudo_r2 import population_pseudo_r2, pseudo_r2_horizon, pseudo_r2_point
from .simulator import (
    SimScenario,
    attach_censoring,
    cif_provider,
    default_scenario,
    generate_uncensored,
    resolve_scenario,
    _GRID_CALIBRATION_SEED,
)

BETA_GRID = (0.5, 0.75, 1.0, 1.5)
P_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 0.95, 0.99)
V_GRID = (0.5, 0.75, 1.0, 3.0, 5.0, 10.0)
CENSOR_GRID = (0.0, 0.25, 0.5, 0.75, 0.9)
N_GRID = (100, 500, 3000)
TAU_QUANTILES = (0.5, 0.9)

EXPERIMENTS = ("fig1", "fig2", "fig5", "supp")


def _key(**kv) -> str:
    return ";".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in kv.items())


def _reference_tau(scenario: SimScenario, q: float, n_cal: int = 4000) -> float:
    """Scenario-level horizon: a quantile of event times from a fixed-seed
    calibration draw, so tau is a population constant across replicates."""
    probe = dc_replace(scenario, n=n_cal, seed=_GRID_CALIBRATION_SEED)
    return quantile_lower(generate_uncensored(probe).time, q)


def _evaluator(variant: str):
    if variant == "horizon":
        return pseudo_r2_horizon
    if variant == "point":
        return pseudo_r2_point
    raise ValueError(f"unknown variant {variant!r}")


def run_fig1(
    reps: int = 10,
    n_test: int = 5000,
    seed: int = 11,
    jobs: int | None = None,
    variant: str = "horizon",
    beta_grid: tuple[float, ...] = BETA_GRID,
    p_grid: tuple[float, ...] = P_GRID,
    v_grid: tuple[float, ...] = V_GRID,
    rows_included: tuple[str, ...] = ("beta1", "p", "v"),
    tau_quantile: float = 1.0,
    grid_size: int = 400,
) -> list[ResultRow]:
    """Population pseudo R2 sweeps, one generator parameter at a time.

    The predictor is always the scenario's own closed-form CIF, so each
    sweep traces how the attainable population value moves with the
    parameter.  The p row additionally reports the Brier average on the
    same uncensored test sets, which peaks near p = 0.5 rather than
    tracking predictive strength.
    """
    sweeps: list[tuple[str, float, SimScenario]] = []
    if "beta1" in rows_included:
        for b in beta_grid:
            sweeps.append(("beta1", b, default_scenario(beta1=(b, b), beta2=None)))
    if "p" in rows_included:
        for p in p_grid:
            sweeps.append(("p", p, default_scenario(p_target=p)))
    if "v" in rows_included:
        for v in v_grid:
            sweeps.append(("v", v, default_scenario(v=v)))
    evaluate = _evaluator(variant)
    rows: list[ResultRow] = []
    sweep_seeds = spawn_seeds(seed, len(sweeps))
    for (param, value, base), sc_seed in zip(sweeps, sweep_seeds):
        scenario = resolve_scenario(base)
        tau = _reference_tau(scenario, tau_quantile)
        provider = cif_provider(scenario, "full", grid_size=grid_size, t_max=tau)
        key = _key(
            experiment="fig1", variant=variant, param=param, value=value,
            tau_q=tau_quantile, n=n_test,
        )
        want_brier = param == "p"

        def one(rep_seed: int, _scenario=scenario, _tau=tau, _provider=provider,
                _brier=want_brier):
            ds = generate_uncensored(dc_replace(_scenario, n=n_test, seed=rep_seed))
            preds = _provider.prediction_set(ds)
            try:
                rep = evaluate(ds, preds, _tau)
                out = {"pseudo_r2": rep.pseudo_r2, "r2": rep.r2, "l2": rep.l2}
            except DegenerateDataError:
                out = {"pseudo_r2": math.nan, "r2": math.nan, "l2": math.nan}
            if _brier:
                try:
                    grid = QuantileGrid.from_dataset(ds)
                    out["brier_avg"] = brier_average(ds, preds, grid)
                except DegenerateDataError:
                    out["brier_avg"] = math.nan
            return out

        per_rep = parallel_map(one, spawn_seeds(sc_seed, reps), jobs)
        for r, metrics in enumerate(per_rep, start=1):
            for metric, val in metrics.items():
                rows.append(ResultRow(key, r, metric, val))
    return rows


FIG2_MODELS = ("full", "reduced", "distorted")


def run_fig2(
    reps: int = 10,
    n: int = 5000,
    censor_rate: float = 0.25,
    seed: int = 22,
    jobs: int | None = None,
    variant: str = "horizon",
    tau_quantile: float = 0.9,
    grid_size: int = 400,
    models: tuple[str, ...] = FIG2_MODELS,
) -> list[ResultRow]:
    """Model-menu comparison on censored data.

    Three predictors derived from one generating scenario: the true CIF
    (full), the true CIF with the second covariate's coefficients zeroed
    (reduced), and the true CIF recomputed under a wrong shape parameter
    (distorted, v = 0.2, mimicking a badly misspecified accelerated
    failure time model).  Every model is scored with the pseudo R2, the
    Brier average, the truncated concordance index, and the AUC average
    on the same replicate datasets.
    """
    scenario = resolve_scenario(default_scenario())
    tau = _reference_tau(scenario, tau_quantile)
    providers = {}
    for m in models:
        if m == "full":
            providers[m] = cif_provider(scenario, "full", grid_size=grid_size)
        elif m == "reduced":
            providers[m] = cif_provider(
                scenario, "reduced", reduced_dims=(1,), grid_size=grid_size
            )
        elif m == "distorted":
            providers[m] = cif_provider(
                scenario, "distorted", distortion={"v": 0.2}, grid_size=grid_size
            )
        else:
            raise ValueError(f"unknown fig2 model {m!r}")
    evaluate = _evaluator(variant)

    def one(rep_seed: int) -> dict[str, dict[str, float]]:
        gen_seed, cens_seed = spawn_seeds(rep_seed, 2)
        ds = generate_uncensored(dc_replace(scenario, n=n, seed=gen_seed))
        if censor_rate > 0:
            ds = attach_censoring(ds, censor_rate, cens_seed)
        grid = QuantileGrid.from_dataset(ds)
        out: dict[str, dict[str, float]] = {}
        for m, provider in providers.items():
            preds = provider.prediction_set(ds)
            vals: dict[str, float] = {}
            try:
                vals["pseudo_r2"] = evaluate(ds, preds, tau).pseudo_r2
            except DegenerateDataError:
                vals["pseudo_r2"] = math.nan
            try:
                vals["brier_avg"] = brier_average(ds, preds, grid)
            except DegenerateDataError:
                vals["brier_avg"] = math.nan
            try:
                scores = risk_scores_from_predictions(ds, preds, tau)
                vals["cindex"] = cindex_competing(ds, scores, tau, preds.cause)
            except DegenerateDataError:
                vals["cindex"] = math.nan
            try:
                vals["auc_avg"] = auc_average(ds, preds, grid)
            except DegenerateDataError:
                vals["auc_avg"] = math.nan
            out[m] = vals
        return out

    per_rep = parallel_map(one, spawn_seeds(seed, reps), jobs)
    rows: list[ResultRow] = []
    for m in models:
        key = _key(
            experiment="fig2", variant=variant, model=m, tau_q=tau_quantile,
            n=n, censoring=censor_rate,
        )
        for r, rep_out in enumerate(per_rep, start=1):
            for metric, val in rep_out[m].items():
                rows.append(ResultRow(key, r, metric, val))
    return rows


def run_fig5(
    reps: int = 50,
    seed: int = 55,
    jobs: int | None = None,
    variant: str = "horizon",
    ns: tuple[int, ...] = N_GRID,
    censor_rates: tuple[float, ...] = CENSOR_GRID,
    tau_quantiles: tuple[float, ...] = TAU_QUANTILES,
    pop_reps: int = 20,
    pop_n: int = 5000,
    grid_size: int = 400,
) -> list[ResultRow]:
    """Estimation-error study of the sample pseudo R2 under censoring.

    For each (tau quantile, censoring rate, n) cell the default scenario
    is generated `reps` times, censored, and scored with the true-CIF
    provider; each replicate reports its estimate and its error against
    the population value, which is approximated once per tau from large
    uncensored test sets and emitted as a replicate-0 row.
    """
    scenario = resolve_scenario(default_scenario())
    evaluate = _evaluator(variant)
    rows: list[ResultRow] = []
    cell_seed_count = len(tau_quantiles) * (1 + len(censor_rates) * len(ns))
    cell_seeds = iter(spawn_seeds(seed, cell_seed_count))
    for tau_q in tau_quantiles:
        tau = _reference_tau(scenario, tau_q)
        provider = cif_provider(scenario, "full", grid_size=grid_size, t_max=tau)
        pop = population_pseudo_r2(
            scenario, provider, tau, variant=variant, n_test=pop_n,
            reps=pop_reps, seed=next(cell_seeds), jobs=jobs,
        ).mean
        for pi_c in censor_rates:
            for n in ns:
                key = _key(
                    experiment="fig5", variant=variant, tau_q=tau_q,
                    censoring=pi_c, n=n,
                )
                rows.append(ResultRow(key, 0, "population_value", pop))

                def one(rep_seed: int, _n=n, _pi=pi_c, _tau=tau, _prov=provider):
                    gen_seed, cens_seed = spawn_seeds(rep_seed, 2)
                    ds = generate_uncensored(
                        dc_replace(scenario, n=_n, seed=gen_seed)
                    )
                    if _pi > 0:
                        ds = attach_censoring(ds, _pi, cens_seed)
                    try:
                        return evaluate(ds, _prov.prediction_set(ds), _tau).pseudo_r2
                    except DegenerateDataError:
                        return math.nan

                estimates = parallel_map(one, spawn_seeds(next(cell_seeds), reps), jobs)
                for r, est in enumerate(estimates, start=1):
                    rows.append(ResultRow(key, r, "pseudo_r2", est))
                    rows.append(ResultRow(key, r, "error", est - pop))
    return rows


def run_supp(
    reps: int = 10,
    seed: int = 77,
    jobs: int | None = None,
    n_test: int = 5000,
) -> list[ResultRow]:
    """Point-variant companions to the sweep and consistency studies."""
    rows = run_fig1(
        reps=reps, n_test=n_test, seed=seed, jobs=jobs, variant="point",
        tau_quantile=0.5,
    )
    rows += run_fig5(
        reps=reps, seed=seed + 1, jobs=jobs, variant="point",
        censor_rates=(0.25, 0.75), tau_quantiles=(0.5,),
    )
    return rows


def run_experiment(name: str, reps: int, seed: int, jobs: int | None = None,
                   **kwargs) -> list[ResultRow]:
    """Dispatch by experiment name (fig1, fig2, fig5, supp)."""
    if name == "fig1":
        return run_fig1(reps=reps, seed=seed, jobs=jobs, **kwargs)
    if name == "fig2":
        return run_fig2(reps=reps, seed=seed, jobs=jobs, **kwargs)
    if name == "fig5":
        return run_fig5(reps=reps, seed=seed, jobs=jobs, **kwargs)
    if name == "supp":
        return run_supp(reps=reps, seed=seed, jobs=jobs, **kwargs)
    raise ValidationError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
