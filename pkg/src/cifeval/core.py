"""Domain types shared by every other module.

A competing-risks observation is the triple (time, event, covariates) with
event code 0 for censoring and k >= 1 for failure from cause k.  Curves
(predicted CIFs, censoring survival) are right-continuous step functions on
a strictly increasing positive grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


class ValidationError(ValueError):
    """Malformed input: bad records, bad curves, bad file schemas."""


class DegenerateDataError(ValueError):
    """Data on which the requested estimator is undefined.

    Examples: no uncensored events, zero outcome variance, no comparable
    pairs, no censoring support at the requested time.  Resampling code
    catches this class to count failed replicates.
    """


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CompetingRisksRecord:
    """One subject: observed time, event code, optional covariates.

    event is 0 for a censored subject and k in {1..K} for failure from
    cause k.  covariates, when present, must have the same length for all
    records of a dataset.
    """

    id: Any
    time: float
    event: int
    covariates: tuple[float, ...] | None = None


class CompetingRisksDataset:
    """Validated, immutable competing-risks sample.

    Records are sorted by time with events ordered before censorings at
    tied times (the convention under which the censoring Kaplan-Meier risk
    set at t excludes same-time events).  Construct via
    :func:`validate_dataset` or :meth:`from_arrays`.
    """

    __slots__ = ("ids", "time", "event", "covariates", "n_causes")

    def __init__(self, ids, time, event, covariates, n_causes, _presorted=False):
        time = np.asarray(time, dtype=float)
        event = np.asarray(event, dtype=np.int64)
        n = time.shape[0]
        if n == 0:
            raise ValidationError("empty dataset")
        if event.shape != (n,) or len(ids) != n:
            raise ValidationError("ids, time and event must have equal length")
        if covariates is not None:
            covariates = np.asarray(covariates, dtype=float)
            if covariates.ndim != 2 or covariates.shape[0] != n:
                raise ValidationError("covariates must be an (n, p) array")
        if not np.all(np.isfinite(time)):
            bad = ids[int(np.flatnonzero(~np.isfinite(time))[0])]
            raise ValidationError(f"nonfinite time for subject {bad!r}")
        if np.any(time <= 0):
            bad = ids[int(np.flatnonzero(time <= 0)[0])]
            raise ValidationError(f"nonpositive time for subject {bad!r}")
        if int(n_causes) < 1:
            raise ValidationError("n_causes must be >= 1")
        out_of_range = (event < 0) | (event > int(n_causes))
        if np.any(out_of_range):
            bad = ids[int(np.flatnonzero(out_of_range)[0])]
            raise ValidationError(
                f"event code out of range 0..{int(n_causes)} for subject {bad!r}"
            )
        if not _presorted:
            order = np.lexsort((event == 0, time))  # stable: censorings after events
            time = time[order]
            event = event[order]
            ids = [ids[i] for i in order]
            if covariates is not None:
                covariates = covariates[order]
        self.ids = tuple(ids)
        self.time = _readonly(time)
        self.event = _readonly(event)
        self.covariates = None if covariates is None else _readonly(covariates)
        self.n_causes = int(n_causes)

    @classmethod
    def from_arrays(cls, ids, time, event, covariates=None, n_causes=2):
        return cls(list(ids), time, event, covariates, n_causes)

    def __len__(self) -> int:
        return self.time.shape[0]

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def covariate_dim(self) -> int:
        return 0 if self.covariates is None else self.covariates.shape[1]

    @property
    def uncensored_mask(self) -> np.ndarray:
        return self.event != 0

    @property
    def censoring_fraction(self) -> float:
        return float(np.mean(self.event == 0))

    def records(self) -> list[CompetingRisksRecord]:
        covs = self.covariates
        return [
            CompetingRisksRecord(
                self.ids[i],
                float(self.time[i]),
                int(self.event[i]),
                None if covs is None else tuple(float(v) for v in covs[i]),
            )
            for i in range(self.n)
        ]

    def take(self, indices) -> "CompetingRisksDataset":
        """Row subset/resample (e.g. a bootstrap draw); result is re-sorted."""
        indices = np.asarray(indices, dtype=np.intp)
        covs = None if self.covariates is None else self.covariates[indices]
        return CompetingRisksDataset(
            [self.ids[i] for i in indices],
            self.time[indices],
            self.event[indices],
            covs,
            self.n_causes,
        )

    def event_times(self, cause: int | None = None) -> np.ndarray:
        """Observed times of uncensored records (any cause, or one cause)."""
        mask = self.event != 0 if cause is None else self.event == cause
        return self.time[mask]


def validate_dataset(
    records: Sequence[CompetingRisksRecord], n_causes: int
) -> CompetingRisksDataset:
    """Check record invariants and return the sorted immutable dataset.

    Raises ValidationError naming the offending subject for: nonpositive
    time, event code outside 0..n_causes, inconsistent covariate dimension,
    repeated subject id.
    """
    if not records:
        raise ValidationError("empty dataset")
    seen = set()
    for r in records:
        if r.id in seen:
            raise ValidationError(f"duplicate subject id {r.id!r}")
        seen.add(r.id)
    has_cov = records[0].covariates is not None
    dim = len(records[0].covariates) if has_cov else 0
    covs = [] if has_cov else None
    for r in records:
        if (r.covariates is not None) != has_cov or (
            has_cov and len(r.covariates) != dim
        ):
            raise ValidationError(f"ragged covariates for subject {r.id!r}")
        if has_cov:
            covs.append(r.covariates)
    return CompetingRisksDataset(
        [r.id for r in records],
        [r.time for r in records],
        [r.event for r in records],
        covs,
        n_causes,
    )


_MONOTONE = (None, "increasing", "decreasing")


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on a positive time grid.

    f(t) = anchor for t < grid[0], values[j] for the largest grid[j] <= t,
    and values[-1] past the last knot.  An empty grid gives the constant
    anchor.  When ``monotone`` is set the values (including the anchor)
    must satisfy it and lie in [0, 1].
    """

    grid: np.ndarray
    values: np.ndarray
    anchor: float = 0.0
    monotone: str | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValidationError("grid and values must be 1-d arrays of equal length")
        if grid.size:
            if not np.all(np.isfinite(grid)) or grid[0] <= 0:
                raise ValidationError("grid must be finite and positive")
            if np.any(np.diff(grid) <= 0):
                raise ValidationError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        if self.monotone not in _MONOTONE:
            raise ValidationError(f"unknown monotone flag {self.monotone!r}")
        if self.monotone is not None:
            seq = np.concatenate(([self.anchor], values))
            diffs = np.diff(seq)
            ok = np.all(diffs >= 0) if self.monotone == "increasing" else np.all(diffs <= 0)
            if not ok:
                raise ValidationError(f"values violate monotone {self.monotone} flag")
            if np.any(seq < 0) or np.any(seq > 1):
                raise ValidationError("monotone curves must take values in [0, 1]")
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "anchor", float(self.anchor))

    def __call__(self, t):
        return step_eval(self, t)

    def left_limit(self, t):
        return step_left_limit(self, t)


def step_eval(f: StepFunction, t):
    """Right-continuous evaluation; t may be a scalar or array, all >= 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValidationError("evaluation time must be >= 0")
    if f.grid.size == 0:
        out = np.full_like(t_arr, f.anchor, dtype=float)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out
    idx = np.searchsorted(f.grid, t_arr, side="right") - 1
    padded = np.concatenate(([f.anchor], f.values))
    out = padded[idx + 1]
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def step_left_limit(f: StepFunction, t):
    """Left-limit evaluation f(t-); anchor for t <= grid[0]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValidationError("evaluation time must be >= 0")
    if f.grid.size == 0:
        out = np.full_like(t_arr, f.anchor, dtype=float)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out
    idx = np.searchsorted(f.grid, t_arr, side="left") - 1
    padded = np.concatenate(([f.anchor], f.values))
    out = padded[idx + 1]
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass(frozen=True)
class PredictionSet:
    """Per-subject predicted CIF curves for one cause of interest.

    Every curve must be monotone nondecreasing with values in [0, 1] and
    anchor 0.  Coverage of a particular dataset is checked at evaluation
    time by :meth:`aligned`.
    """

    cause: int
    curves: Mapping[Any, StepFunction]

    def __post_init__(self):
        if self.cause < 1:
            raise ValidationError("cause must be >= 1")
        for sid, curve in self.curves.items():
            if curve.anchor != 0.0:
                raise ValidationError(f"curve for subject {sid!r} must have anchor 0")
            seq = np.concatenate(([0.0], curve.values))
            if np.any(np.diff(seq) < 0) or np.any(curve.values > 1):
                raise ValidationError(
                    f"curve for subject {sid!r} is not a CIF (nondecreasing in [0, 1])"
                )

    def aligned(self, dataset: CompetingRisksDataset) -> list[StepFunction]:
        """Curves in dataset row order; raises naming any uncovered subject."""
        out = []
        for sid in dataset.ids:
            try:
                out.append(self.curves[sid])
            except KeyError:
                raise ValidationError(f"no predicted curve for subject {sid!r}") from None
        return out

    def transform_values(self, fn) -> "PredictionSet":
        """New set with values fn(v) per curve (fn must preserve CIF shape)."""
        new = {
            sid: StepFunction(c.grid, fn(np.asarray(c.values)), 0.0, "increasing")
            for sid, c in self.curves.items()
        }
        return PredictionSet(self.cause, new)


@dataclass(frozen=True)
class MetricReport:
    """Result bundle for one pseudo-R2 evaluation.

    pseudo_r2 must equal r2 * l2 (checked to 1e-12 relative).  baselines
    optionally carries named comparison metrics computed on the same data.
    """

    tau: float
    cause: int
    r2: float
    l2: float
    pseudo_r2: float
    variant: str
    n_total: int
    n_uncensored: int
    baselines: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.variant not in ("horizon", "point"):
            raise ValidationError(f"unknown variant {self.variant!r}")
        prod = self.r2 * self.l2
        if abs(self.pseudo_r2 - prod) > 1e-12 * max(1.0, abs(prod)):
            raise ValidationError("pseudo_r2 must equal r2 * l2")
        for name in ("r2", "l2", "pseudo_r2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValidationError(f"{name} = {val} outside [0, 1]")

    def with_baselines(self, baselines: Mapping[str, float]) -> "MetricReport":
        return replace(self, baselines=dict(baselines))

    def to_dict(self) -> dict:
        d = {
            "tau": self.tau,
            "cause": self.cause,
            "variant": self.variant,
            "n_total": self.n_total,
            "n_uncensored": self.n_uncensored,
            "r2": self.r2,
            "l2": self.l2,
            "pseudo_r2": self.pseudo_r2,
        }
        if self.baselines:
            d.update(self.baselines)
        return d


def quantile_lower(values: np.ndarray, q: float) -> float:
    """Lower-interpolation empirical quantile: sorted[floor(q * (m - 1))].

    This is numpy's method="lower"; q in (0, 1], q = 1 gives the maximum.
    Fixed here once so the CLI's tau resolution and the baseline grids use
    one documented rule.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DegenerateDataError("no values to take a quantile of")
    if not 0.0 < q <= 1.0:
        raise ValidationError(f"quantile level {q} outside (0, 1]")
    srt = np.sort(values)
    return float(srt[int(math.floor(q * (srt.size - 1)))])


def event_time_quantile(dataset: CompetingRisksDataset, q: float) -> float:
    """Lower-interpolation quantile of uncensored event times (any cause)."""
    times = dataset.event_times()
    if times.size == 0:
        raise DegenerateDataError("no uncensored events to resolve a quantile against")
    return quantile_lower(times, q)
