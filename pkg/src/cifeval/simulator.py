"""Competing-risks data generation with cause-specific Weibull hazards.

Cause k has hazard h_k(t; x) = v * lambda_k^v * t^(v-1) * exp(x.beta_k)
with a shared shape v, so the subdistribution has the closed form
F_k(t; x) = [a_k / (a_1 + a_2)] * (1 - exp(-(a_1 + a_2) t^v)) with
a_k = lambda_k^v * exp(x.beta_k).  Latent times come from inverse
transform sampling; the observed pair is (min, argmin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np
from scipy import special

from ._util import make_rng
from .core import (
    CompetingRisksDataset,
    DegenerateDataError,
    PredictionSet,
    StepFunction,
    ValidationError,
    quantile_lower,
)

# internal Monte Carlo seeds, fixed so that solved parameters and provider
# grids depend only on scenario parameters, never on the data seed
_LAMBDA2_MC_SEED = 202_303_011
_GRID_CALIBRATION_SEED = 202_303_012


@dataclass(frozen=True)
class SimScenario:
    """Generator parameters.

    Exactly one of lambda2 / p_target must be set before generating;
    p_target is the marginal probability of a type-1 event and is turned
    into lambda2 by solve_lambda2.  beta2 defaults to -0.2 * beta1 when
    left unset.
    """

    lambda1: float = 0.5
    lambda2: float | None = None
    v: float = 10.0
    beta1: tuple[float, ...] = (1.0, 1.0)
    beta2: tuple[float, ...] | None = None
    p_target: float | None = 0.7
    censor_rate: float = 0.0
    n: int = 1000
    covariate_dim: int = 2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta1", tuple(float(b) for b in self.beta1))
        if self.beta2 is not None:
            object.__setattr__(self, "beta2", tuple(float(b) for b in self.beta2))
        if self.lambda1 <= 0 or self.v <= 0:
            raise ValidationError("lambda1 and v must be positive")
        if self.lambda2 is not None and self.lambda2 <= 0:
            raise ValidationError("lambda2 must be positive")
        if self.p_target is not None and not 0.0 < self.p_target < 1.0:
            raise ValidationError("p_target must lie in (0, 1)")
        if not 0.0 <= self.censor_rate < 1.0:
            raise ValidationError("censor_rate must lie in [0, 1)")
        if self.covariate_dim < 1:
            raise ValidationError("covariate_dim must be >= 1")
        if len(self.beta1) != self.covariate_dim or (
            self.beta2 is not None and len(self.beta2) != self.covariate_dim
        ):
            raise ValidationError("beta vectors must have length covariate_dim")
        if self.n < 1:
            raise ValidationError("n must be >= 1")

    @property
    def beta2_effective(self) -> tuple[float, ...]:
        if self.beta2 is not None:
            return self.beta2
        return tuple(-0.2 * b for b in self.beta1)


def default_scenario(**overrides) -> SimScenario:
    """The standard simulation setting: lambda1 = 0.5, p = 0.7,
    beta1 = (1, 1), beta2 = -0.2 * beta1, v = 10, X ~ N(0, I_2)."""
    return SimScenario(**overrides)


def _rates(scenario: SimScenario, x: np.ndarray):
    """a_k = lambda_k^v * exp(x.beta_k) for both causes; x is (p,) or (n, p)."""
    if scenario.lambda2 is None:
        raise ValidationError("lambda2 unresolved; call resolve_scenario first")
    x = np.asarray(x, dtype=float)
    b1 = np.asarray(scenario.beta1)
    b2 = np.asarray(scenario.beta2_effective)
    a1 = scenario.lambda1**scenario.v * np.exp(x @ b1)
    a2 = scenario.lambda2**scenario.v * np.exp(x @ b2)
    return a1, a2


def latent_time(u, x, lambda_k: float, beta_k, v: float):
    """Inverse-transform draw: (1/lambda_k) * (-log(u) * exp(-x.beta_k))^(1/v)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
        raise ValidationError("u must lie strictly inside (0, 1)")
    eta = np.asarray(x, dtype=float) @ np.asarray(beta_k, dtype=float)
    out = (1.0 / lambda_k) * (-np.log(u_arr) * np.exp(-eta)) ** (1.0 / v)
    if np.isscalar(u) and np.ndim(out) == 0:
        return float(out)
    return out


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws with 0 and 1 excluded (0 has probability 2^-53)."""
    u = rng.random(shape)
    while True:
        bad = (u <= 0.0) | (u >= 1.0)
        if not np.any(bad):
            return u
        u[bad] = rng.random(int(np.count_nonzero(bad)))


def generate_uncensored(scenario: SimScenario) -> CompetingRisksDataset:
    """Draw n subjects: X ~ N(0, I), two latent Weibull times, observe
    (min, argmin).  Event codes are 1 and 2; nothing is censored.

    Draw order is fixed (X block first, then the two uniform blocks), so a
    given seed yields the same dataset on any platform.
    """
    if scenario.lambda2 is None:
        raise ValidationError(
            "lambda2 unresolved; call resolve_scenario or solve_lambda2 first"
        )
    n = scenario.n
    rng = make_rng(scenario.seed)
    x = rng.standard_normal((n, scenario.covariate_dim))
    u1 = _open_uniform(rng, n)
    u2 = _open_uniform(rng, n)
    y1 = latent_time(u1, x, scenario.lambda1, scenario.beta1, scenario.v)
    y2 = latent_time(u2, x, scenario.lambda2, scenario.beta2_effective, scenario.v)
    y = np.minimum(y1, y2)
    d = np.where(y1 <= y2, 1, 2)
    ids = list(range(1, n + 1))
    return CompetingRisksDataset.from_arrays(ids, y, d, x, n_causes=2)


def solve_lambda2(
    scenario: SimScenario,
    n_mc: int = 200_000,
    tol: float = 0.005,
    mc_seed: int = _LAMBDA2_MC_SEED,
    regenerate: bool = False,
) -> float:
    """Bisect lambda2 so the type-1 proportion hits scenario.p_target.

    The default objective is the analytic pair probability
    E_X[a_1 / (a_1 + a_2)] over a fixed Monte Carlo covariate sample, which
    is exactly monotone decreasing in lambda2 (common random numbers).
    regenerate=True instead regenerates full latent-time datasets per
    candidate, sharing the uniform draws, as a fidelity cross-check.
    """
    if scenario.p_target is None:
        raise ValidationError("scenario has no p_target to solve for")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if n_mc < 100_000:
        raise ValidationError("n_mc must be >= 100000")
    rng = make_rng(mc_seed)
    x = rng.standard_normal((n_mc, scenario.covariate_dim))
    w1 = scenario.lambda1**scenario.v * np.exp(x @ np.asarray(scenario.beta1))
    e2 = np.exp(x @ np.asarray(scenario.beta2_effective))
    if regenerate:
        u1 = _open_uniform(rng, n_mc)
        u2 = _open_uniform(rng, n_mc)
        y1 = latent_time(u1, x, scenario.lambda1, scenario.beta1, scenario.v)
        base2 = (-np.log(u2) / e2) ** (1.0 / scenario.v)  # lambda2 * Y2

        def p_of(lam2: float) -> float:
            return float(np.mean(y1 <= base2 / lam2))

    else:

        def p_of(lam2: float) -> float:
            return float(np.mean(w1 / (w1 + lam2**scenario.v * e2)))

    target = scenario.p_target
    lo = hi = scenario.lambda1
    p_here = p_of(scenario.lambda1)
    if p_here > target:
        for _ in range(60):
            hi *= 2.0
            if p_of(hi) < target:
                break
        else:
            raise DegenerateDataError("could not bracket lambda2 after 60 doublings")
    elif p_here < target:
        for _ in range(60):
            lo /= 2.0
            if p_of(lo) > target:
                break
        else:
            raise DegenerateDataError("could not bracket lambda2 after 60 doublings")
    else:
        return float(scenario.lambda1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p_mid = p_of(mid)
        if abs(p_mid - target) < tol:
            return float(mid)
        if p_mid > target:
            lo = mid
        else:
            hi = mid
    raise DegenerateDataError("lambda2 bisection did not converge")


def resolve_scenario(
    scenario: SimScenario, n_mc: int = 400_000, tol: float = 0.002
) -> SimScenario:
    """Return a scenario with lambda2 concrete; solves from p_target if needed."""
    if scenario.lambda2 is not None and scenario.p_target is not None:
        raise ValidationError("set exactly one of lambda2 and p_target")
    if scenario.lambda2 is not None:
        return scenario
    if scenario.p_target is None:
        raise ValidationError("set exactly one of lambda2 and p_target")
    lam2 = solve_lambda2(scenario, n_mc=n_mc, tol=tol)
    return dc_replace(scenario, lambda2=lam2, p_target=None)


def attach_censoring(
    dataset: CompetingRisksDataset, pi_c: float, seed: int
) -> CompetingRisksDataset:
    """Mask a target fraction of events with lognormal censoring times.

    Noise r_i ~ N(0, sd of log event times) is drawn once; the location mu
    of C_i = exp(mu + r_i) is bisected until the realized censored fraction
    mean(C_i < Y_i) is within 0.01 of pi_c (ties C = Y stay events).  Rows
    with C_i >= Y_i are returned untouched; censored rows keep their
    covariates and get time C_i, event 0.
    """
    if not 0.0 <= pi_c <= 0.95:
        raise ValidationError("pi_c must lie in [0, 0.95]")
    if np.any(dataset.event == 0):
        raise ValidationError("dataset is already censored")
    if pi_c == 0.0:
        return dataset
    n = dataset.n
    if n < 2:
        raise DegenerateDataError("need at least 2 subjects to attach censoring")
    log_y = np.log(dataset.time)
    sd = float(np.std(log_y, ddof=1))
    r = make_rng(seed).standard_normal(n) * sd
    # censored iff exp(mu + r_i) < Y_i, i.e. mu < s_i
    s = log_y - r
    tol = 0.01

    def frac(mu: float) -> float:
        return float(np.mean(s > mu))

    lo = float(np.min(s)) - 1.0  # frac(lo) = 1
    hi = float(np.max(s)) + 1.0  # frac(hi) = 0
    mu = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = frac(mid)
        if abs(f - pi_c) <= tol:
            mu = mid
            break
        if f > pi_c:
            lo = mid
        else:
            hi = mid
    if mu is None:
        below = math.floor(pi_c * n) / n
        above = math.ceil(pi_c * n) / n
        raise DegenerateDataError(
            f"censoring rate {pi_c} unattainable within +/-{tol}: "
            f"achievable fractions step by 1/{n}, nearest are {below} and {above}"
        )
    c = np.exp(mu + r)
    censored = c < dataset.time
    time = np.where(censored, c, dataset.time)
    event = np.where(censored, 0, dataset.event)
    return CompetingRisksDataset.from_arrays(
        dataset.ids, time, event, dataset.covariates, dataset.n_causes
    )


def true_cif(scenario: SimScenario, x, t, cause: int = 1):
    """Closed-form cumulative incidence of the requested cause at time t.

    Valid because both causes share the shape v.  x may be one covariate
    vector or an (n, p) block; t may be a scalar or an array broadcastable
    against the resulting rate shape.  t = 0 gives 0.
    """
    if cause not in (1, 2):
        raise ValidationError("generation supports causes 1 and 2 only")
    a1, a2 = _rates(scenario, x)
    total = a1 + a2
    share = (a1 if cause == 1 else a2) / total
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValidationError("t must be >= 0")
    out = share * -np.expm1(-total * t_arr**scenario.v)
    if np.ndim(out) == 0:
        return float(out)
    return out


def true_restricted_mean(scenario: SimScenario, x, tau: float, cause: int = 1):
    """Analytic tau - integral of the true CIF over [0, tau].

    Uses the lower incomplete gamma function:
    integral of exp(-a u^v) du over [0, tau] equals
    (1/v) a^(-1/v) Gamma(1/v) P(1/v, a tau^v) with P the regularized form.
    """
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if cause not in (1, 2):
        raise ValidationError("generation supports causes 1 and 2 only")
    a1, a2 = _rates(scenario, x)
    total = a1 + a2
    share = (a1 if cause == 1 else a2) / total
    v = scenario.v
    shape = 1.0 / v
    surv_integral = (
        shape * total**-shape * special.gamma(shape)
        * special.gammainc(shape, total * tau**v)
    )
    out = tau - share * (tau - surv_integral)
    if np.ndim(out) == 0:
        return float(out)
    return out


def marginal_type1_probability(scenario: SimScenario, n_mc: int = 400_000,
                               mc_seed: int = _LAMBDA2_MC_SEED) -> float:
    """Monte Carlo E_X[a_1 / (a_1 + a_2)], the limiting type-1 proportion."""
    x = make_rng(mc_seed).standard_normal((n_mc, scenario.covariate_dim))
    a1, a2 = _rates(scenario, x)
    return float(np.mean(a1 / (a1 + a2)))


class CifProvider:
    """Maps a covariate vector to a predicted CIF step curve.

    The curve samples a closed-form CIF (possibly with altered parameters,
    see cif_provider) on a fixed time grid, so predictions enter the
    metrics exactly like externally supplied step functions would.
    """

    def __init__(self, scenario: SimScenario, cause: int, grid: np.ndarray):
        if scenario.lambda2 is None:
            raise ValidationError("provider scenario must have lambda2 resolved")
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing and positive")
        self.scenario = scenario
        self.cause = int(cause)
        self.grid = grid
        self._grid_v = grid**scenario.v

    def __call__(self, x) -> StepFunction:
        a1, a2 = _rates(self.scenario, np.asarray(x, dtype=float))
        total = a1 + a2
        share = (a1 if self.cause == 1 else a2) / total
        vals = share * -np.expm1(-total * self._grid_v)
        # libm exp is not guaranteed monotone to the last ulp; enforce shape
        vals = np.maximum.accumulate(np.clip(vals, 0.0, 1.0))
        return StepFunction(self.grid, vals, 0.0, "increasing")

    def prediction_set(self, dataset: CompetingRisksDataset) -> PredictionSet:
        if dataset.covariates is None:
            raise ValidationError("dataset has no covariates to predict from")
        curves = {
            sid: self(x) for sid, x in zip(dataset.ids, dataset.covariates)
        }
        return PredictionSet(self.cause, curves)


def default_time_grid(
    scenario: SimScenario,
    grid_size: int = 200,
    t_max: float | None = None,
    upper_quantile: float = 0.99,
) -> np.ndarray:
    """Evenly spaced curve grid; the upper end defaults to an internally
    calibrated 99th percentile of the scenario's event times (fixed seed,
    so the grid depends only on scenario parameters)."""
    if grid_size < 2:
        raise ValidationError("grid_size must be >= 2")
    if t_max is None:
        probe = dc_replace(scenario, n=4000, seed=_GRID_CALIBRATION_SEED)
        times = generate_uncensored(probe).time
        t_max = quantile_lower(times, upper_quantile)
    if t_max <= 0:
        raise ValidationError("t_max must be positive")
    return np.linspace(0.0, float(t_max), grid_size + 1)[1:]


def cif_provider(
    scenario: SimScenario,
    variant: str = "full",
    *,
    cause: int = 1,
    reduced_dims: tuple[int, ...] | None = None,
    distortion: dict | None = None,
    grid_size: int = 200,
    t_max: float | None = None,
) -> CifProvider:
    """Build a predicted-CIF provider from the generator's closed form.

    variant "full" uses the scenario's own parameters; "reduced" zeroes the
    named covariate entries (0-based indices) in both coefficient vectors;
    "distorted" substitutes caller-supplied parameter overrides (any of
    lambda1, lambda2, v, beta1, beta2), which is how misspecified models
    are emulated without fitting anything.
    """
    scenario = resolve_scenario(scenario)
    grid = default_time_grid(scenario, grid_size=grid_size, t_max=t_max)
    if variant == "full":
        pred_scenario = scenario
    elif variant == "reduced":
        if not reduced_dims:
            raise ValidationError("reduced variant needs reduced_dims")
        dims = tuple(int(d) for d in reduced_dims)
        for d in dims:
            if not 0 <= d < scenario.covariate_dim:
                raise ValidationError(f"reduced dim {d} out of range")
        b1 = list(scenario.beta1)
        b2 = list(scenario.beta2_effective)
        for d in dims:
            b1[d] = 0.0
            b2[d] = 0.0
        pred_scenario = dc_replace(scenario, beta1=tuple(b1), beta2=tuple(b2))
    elif variant == "distorted":
        if not distortion:
            raise ValidationError("distorted variant needs parameter overrides")
        allowed = {"lambda1", "lambda2", "v", "beta1", "beta2"}
        unknown = set(distortion) - allowed
        if unknown:
            raise ValidationError(f"unknown distortion keys {sorted(unknown)}")
        pred_scenario = dc_replace(scenario, **distortion)
    else:
        raise ValidationError(f"unknown provider variant {variant!r}")
    return CifProvider(pred_scenario, cause, grid)
