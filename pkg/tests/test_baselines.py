import numpy as np
import pytest

import _oracles
from cifeval import (
    DegenerateDataError,
    PredictionSet,
    QuantileGrid,
    StepFunction,
    ValidationError,
    auc_average,
    auc_timedep_at,
    brier_average,
    brier_score_at,
    cindex_competing,
    risk_scores_from_predictions,
)
from test_core import make_dataset
from test_pseudo_r2 import flat_curve, predictions_for


def flat_predictions(ds, levels, cause=1):
    return predictions_for(ds, [flat_curve(v) for v in levels], cause=cause)


class TestQuantileGrid:
    def test_interior_levels(self):
        # 11 event times 1..11; count=10 -> levels k/11 -> lower rule picks
        # floor(k/11 * 10) -> times 1..10 (never the extremes' both ends)
        ds = make_dataset(np.arange(1.0, 12.0), [1] * 11)
        grid = QuantileGrid.from_dataset(ds, count=10)
        assert list(grid.times) == [float(k) for k in range(1, 11)]

    def test_excludes_censored_times(self):
        ds = make_dataset([1.0, 2.0, 50.0], [1, 1, 0])
        grid = QuantileGrid.from_dataset(ds, count=3)
        assert max(grid.times) <= 2.0

    def test_nondecreasing_positive(self):
        rng = np.random.default_rng(1)
        times, events = _oracles.random_small_dataset(rng)
        grid = QuantileGrid.from_dataset(make_dataset(times, events), count=7)
        assert np.all(np.diff(grid.times) >= 0)
        assert np.all(grid.times > 0)

    def test_no_events_is_degenerate(self):
        ds = make_dataset([1.0, 2.0], [0, 0])
        with pytest.raises(DegenerateDataError):
            QuantileGrid.from_dataset(ds)


class TestBrier:
    def test_perfect_predictions_score_zero(self):
        ds = make_dataset([1.0, 2.0, 5.0, 6.0], [1, 1, 1, 1])
        preds = flat_predictions(ds, [1.0, 1.0, 0.0, 0.0])
        assert brier_score_at(ds, preds, 3.0) == 0.0

    def test_constant_prediction_reduces_to_mse(self):
        ds = make_dataset([1.0, 2.0, 5.0, 6.0], [1, 2, 1, 1])
        q = 0.3
        preds = flat_predictions(ds, [q] * 4)
        # xi(3) = (1, 0, 0, 0): competing event scored against 0
        expect = ((1 - q) ** 2 + 3 * q * q) / 4
        assert brier_score_at(ds, preds, 3.0) == pytest.approx(expect, abs=1e-15)

    def test_censored_before_t_contributes_zero(self):
        ds = make_dataset([1.0, 2.0, 5.0], [1, 0, 1], ids=[1, 2, 3])
        preds = PredictionSet(cause=1, curves={
            1: flat_curve(0.8), 2: flat_curve(0.9), 3: flat_curve(0.1)})
        got = brier_score_at(ds, preds, 3.0)
        ref = _oracles.brier_oracle([1.0, 2.0, 5.0], [1, 0, 1],
                                    [0.8, 0.9, 0.1], 3.0, 1)
        assert got == pytest.approx(ref, abs=1e-14)

    def test_matches_oracle_on_random_data(self):
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(20):
            times, events = _oracles.random_small_dataset(rng, n_max=12)
            ds = make_dataset(times, events)
            levels = rng.uniform(0, 1, size=ds.n)
            preds = flat_predictions(ds, levels)
            t = float(rng.uniform(0.5, 5.5))
            # keep clear of the zero-support region
            knots, values = _oracles.km_censoring_oracle(times, events)
            if _oracles.km_eval(knots, values, t) <= 0:
                continue
            f_at = [
                _ordered_level(ds, preds, i) for i in range(ds.n)
            ]
            ref = _oracles.brier_oracle(list(ds.time), list(ds.event), f_at, t, 1)
            assert brier_score_at(ds, preds, t) == pytest.approx(ref, abs=1e-13)
            checked += 1
        assert checked >= 12

    def test_no_support_error(self):
        # last subject censored kills G at its time
        ds = make_dataset([1.0, 2.0], [1, 0])
        preds = flat_predictions(ds, [0.5, 0.5])
        with pytest.raises(DegenerateDataError) as exc:
            brier_score_at(ds, preds, 3.0)
        assert "no censoring support" in str(exc.value)

    def test_average_of_single_point_grid(self):
        ds = make_dataset([1.0, 2.0, 5.0, 6.0], [1, 2, 1, 1])
        preds = flat_predictions(ds, [0.4, 0.2, 0.6, 0.1])
        grid = QuantileGrid(1, np.array([3.0]))
        assert brier_average(ds, preds, grid) == brier_score_at(ds, preds, 3.0)


def _ordered_level(ds, preds, i):
    curve = preds.curves[ds.ids[i]]
    return float(curve.values[-1])


class TestCindex:
    def test_perfect_ordering(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
        scores = [4.0, 3.0, 2.0, 1.0]  # earliest event = highest risk
        assert cindex_competing(ds, scores, tau=5.0) == 1.0

    def test_all_tied_scores(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
        assert cindex_competing(ds, [0.5] * 4, tau=5.0) == 0.5

    def test_matches_pair_enumeration_oracle(self):
        rng = np.random.default_rng(31)
        checked = 0
        for _ in range(20):
            times, events = _oracles.random_small_dataset(rng, n_max=12)
            ds = make_dataset(times, events)
            scores = np.round(rng.uniform(0, 1, size=ds.n), 2)
            tau = float(rng.uniform(1.5, 6.0))
            try:
                got = cindex_competing(ds, scores, tau=tau)
            except DegenerateDataError:
                continue
            ref = _oracles.cindex_oracle(list(ds.time), list(ds.event),
                                         list(scores), tau, 1)
            assert got == pytest.approx(ref, abs=1e-12)
            checked += 1
        assert checked >= 12

    def test_no_comparable_pairs_error(self):
        # single subject with the cause, nobody surviving past it
        ds = make_dataset([2.0, 2.0], [1, 1])
        with pytest.raises(DegenerateDataError):
            cindex_competing(ds, [0.1, 0.9], tau=5.0)

    def test_strictly_increasing_transform_invariance(self):
        rng = np.random.default_rng(33)
        times, events = _oracles.random_small_dataset(rng, n_max=15)
        ds = make_dataset(times, events)
        scores = rng.uniform(0, 1, size=ds.n)
        base = cindex_competing(ds, scores, tau=4.0)
        mono = cindex_competing(ds, np.exp(3 * scores) - 0.5, tau=4.0)
        assert mono == pytest.approx(base, abs=1e-12)

    def test_risk_scores_from_predictions(self):
        ds = make_dataset([1.0, 2.0], [1, 1], ids=[1, 2])
        preds = PredictionSet(cause=1, curves={
            1: flat_curve(0.7), 2: flat_curve(0.2)})
        scores = risk_scores_from_predictions(ds, preds, tau=3.0)
        assert list(scores) == [0.7, 0.2]


class TestAuc:
    def test_perfect_separation(self):
        ds = make_dataset([1.0, 2.0, 5.0, 6.0], [1, 1, 1, 1])
        preds = flat_predictions(ds, [0.9, 0.8, 0.1, 0.2])
        assert auc_timedep_at(ds, preds, 3.0) == 1.0

    def test_constant_predictions_give_half(self):
        ds = make_dataset([1.0, 2.0, 5.0, 6.0], [1, 1, 1, 1])
        preds = flat_predictions(ds, [0.5] * 4)
        assert auc_timedep_at(ds, preds, 3.0) == 0.5

    def test_matches_weighted_pair_oracle(self):
        rng = np.random.default_rng(47)
        checked = 0
        for _ in range(20):
            times, events = _oracles.random_small_dataset(rng, n_max=12)
            ds = make_dataset(times, events)
            levels = np.round(rng.uniform(0, 1, size=ds.n), 2)
            preds = flat_predictions(ds, levels)
            t = float(rng.uniform(0.5, 5.0))
            try:
                got = auc_timedep_at(ds, preds, t)
            except DegenerateDataError:
                continue
            f_at = [_ordered_level(ds, preds, i) for i in range(ds.n)]
            ref = _oracles.auc_oracle(list(ds.time), list(ds.event), f_at, t, 1)
            assert got == pytest.approx(ref, abs=1e-12)
            checked += 1
        assert checked >= 10

    def test_error_without_cases_or_controls(self):
        ds = make_dataset([1.0, 2.0], [1, 1])
        preds = flat_predictions(ds, [0.5, 0.4])
        with pytest.raises(DegenerateDataError):
            auc_timedep_at(ds, preds, 0.5)   # nobody has had the event yet
        with pytest.raises(DegenerateDataError):
            auc_timedep_at(ds, preds, 2.0)   # nobody remains at risk

    def test_increasing_transform_invariance(self):
        rng = np.random.default_rng(53)
        ds = make_dataset([1.0, 2.0, 3.0, 5.0, 6.0, 7.0], [1, 2, 1, 1, 0, 2])
        levels = rng.uniform(0.05, 0.95, size=6)
        base = auc_timedep_at(ds, flat_predictions(ds, levels), 4.0)
        squashed = auc_timedep_at(ds, flat_predictions(ds, levels ** 3), 4.0)
        assert squashed == pytest.approx(base, abs=1e-12)

    def test_average_over_grid(self):
        ds = make_dataset([1.0, 2.0, 3.0, 5.0, 6.0, 7.0], [1, 1, 1, 1, 1, 1])
        preds = flat_predictions(ds, [0.9, 0.7, 0.6, 0.2, 0.3, 0.1])
        grid = QuantileGrid(2, np.array([2.5, 4.0]))
        direct = (auc_timedep_at(ds, preds, 2.5) + auc_timedep_at(ds, preds, 4.0)) / 2
        assert auc_average(ds, preds, grid) == pytest.approx(direct, abs=1e-15)
