import numpy as np
import pytest

from cifeval import (
    CompetingRisksDataset,
    CompetingRisksRecord,
    MetricReport,
    PredictionSet,
    StepFunction,
    ValidationError,
    event_time_quantile,
    quantile_lower,
    step_eval,
    step_left_limit,
    validate_dataset,
)


def make_dataset(times, events, ids=None, covariates=None, n_causes=2):
    n = len(times)
    if ids is None:
        ids = list(range(1, n + 1))
    records = []
    for i in range(n):
        cov = None if covariates is None else tuple(covariates[i])
        records.append(CompetingRisksRecord(ids[i], float(times[i]), int(events[i]), cov))
    return validate_dataset(records, n_causes=n_causes)


class TestStepFunction:
    def test_empty_grid_is_constant_anchor(self):
        f = StepFunction(grid=(), values=(), anchor=1.0)
        ts = np.array([0.0, 0.5, 100.0])
        assert np.all(step_eval(f, ts) == 1.0)
        assert np.all(step_left_limit(f, ts) == 1.0)

    def test_right_continuous_eval(self):
        f = StepFunction(grid=(1.0, 3.0), values=(0.25, 0.5), anchor=0.0)
        ts = np.array([0.0, 0.999, 1.0, 2.0, 3.0, 10.0])
        out = step_eval(f, ts)
        assert np.allclose(out, [0.0, 0.0, 0.25, 0.25, 0.5, 0.5])

    def test_left_limit(self):
        f = StepFunction(grid=(1.0, 3.0), values=(0.25, 0.5), anchor=0.0)
        assert step_left_limit(f, np.array([1.0]))[0] == 0.0
        assert step_left_limit(f, np.array([3.0]))[0] == 0.25
        assert step_left_limit(f, np.array([3.5]))[0] == 0.5

    def test_scalar_eval(self):
        f = StepFunction(grid=(1.0,), values=(0.4,), anchor=0.0)
        assert step_eval(f, 1.0) == 0.4
        assert step_left_limit(f, 1.0) == 0.0

    def test_monotone_violation_rejected(self):
        with pytest.raises(ValidationError):
            StepFunction(grid=(1.0, 2.0), values=(0.5, 0.4), anchor=0.0,
                         monotone="increasing")
        with pytest.raises(ValidationError):
            StepFunction(grid=(1.0,), values=(1.2,), anchor=1.0,
                         monotone="decreasing")

    def test_anchor_participates_in_monotone_check(self):
        # first value below the anchor breaks an increasing curve
        with pytest.raises(ValidationError):
            StepFunction(grid=(1.0,), values=(0.1,), anchor=0.2,
                         monotone="increasing")

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValidationError):
            StepFunction(grid=(2.0, 1.0), values=(0.1, 0.2), anchor=0.0)


class TestDataset:
    def test_sorts_by_time(self):
        ds = make_dataset([3.0, 1.0, 2.0], [1, 2, 0])
        assert list(ds.time) == [1.0, 2.0, 3.0]
        assert list(ds.event) == [2, 0, 1]
        assert ds.ids == (2, 3, 1)

    def test_tied_events_precede_censorings(self):
        ds = make_dataset([2.0, 2.0, 2.0], [0, 1, 2], ids=[10, 11, 12])
        assert list(ds.event[:2]) != [0, 0]
        assert ds.event[2] == 0
        # stable within the event block: original file order kept
        assert ds.ids[:2] == (11, 12)

    def test_sort_idempotent(self):
        rng = np.random.default_rng(5)
        times = rng.integers(1, 4, size=12).astype(float)
        events = rng.integers(0, 3, size=12)
        ds = make_dataset(times, events)
        again = make_dataset(ds.time, ds.event, ids=list(ds.ids))
        assert again.ids == ds.ids
        assert np.array_equal(again.time, ds.time)
        assert np.array_equal(again.event, ds.event)

    def test_nonpositive_time_rejected(self):
        with pytest.raises(ValidationError) as exc:
            make_dataset([1.0, 0.0], [1, 1], ids=[7, 8])
        assert "8" in str(exc.value)

    def test_bad_event_code_rejected(self):
        with pytest.raises(ValidationError) as exc:
            make_dataset([1.0, 2.0], [1, 3], ids=[7, 8], n_causes=2)
        assert "8" in str(exc.value)

    def test_nan_time_rejected(self):
        with pytest.raises(ValidationError):
            make_dataset([1.0, float("nan")], [1, 1])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            make_dataset([1.0, 2.0], [1, 1], ids=[3, 3])

    def test_ragged_covariates_rejected(self):
        recs = [
            CompetingRisksRecord(1, 1.0, 1, (0.1, 0.2)),
            CompetingRisksRecord(2, 2.0, 1, (0.1,)),
        ]
        with pytest.raises(ValidationError):
            validate_dataset(recs, n_causes=2)

    def test_arrays_read_only(self):
        ds = make_dataset([1.0, 2.0], [1, 0])
        with pytest.raises(ValueError):
            ds.time[0] = 9.0

    def test_take_resorts(self):
        ds = make_dataset([1.0, 2.0, 3.0], [1, 0, 2])
        sub = ds.take(np.array([2, 0, 2]))
        assert np.array_equal(sub.time, [1.0, 3.0, 3.0])
        assert sub.n == 3

    def test_censoring_fraction_and_masks(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [0, 1, 0, 2])
        assert ds.censoring_fraction == 0.5
        assert list(ds.uncensored_mask) == [False, True, False, True]
        assert list(ds.event_times(1)) == [2.0]

    def test_from_arrays(self):
        ds = CompetingRisksDataset.from_arrays(
            ids=[1, 2], time=[2.0, 1.0], event=[0, 1],
            covariates=[[0.5], [0.25]], n_causes=2)
        assert ds.covariates.shape == (2, 1)
        assert ds.covariates[0, 0] == 0.25


class TestQuantiles:
    def test_lower_rule_even_count(self):
        vals = np.array([4.0, 1.0, 3.0, 2.0])
        # sorted -> [1,2,3,4]; floor(0.5 * 3) = 1 -> value 2
        assert quantile_lower(vals, 0.5) == 2.0

    def test_lower_rule_endpoints(self):
        vals = np.array([5.0, 1.0, 3.0])
        assert quantile_lower(vals, 1.0) == 5.0
        with pytest.raises(ValidationError):
            quantile_lower(vals, 0.0)

    def test_event_time_quantile_skips_censored(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [1, 0, 2, 1])
        # uncensored times [1,3,4]; lower rule at q=0.5 picks index 1
        assert event_time_quantile(ds, 0.5) == 3.0


class TestPredictionSet:
    def _curve(self, v):
        return StepFunction(grid=(1.0,), values=(v,), anchor=0.0,
                            monotone="increasing")

    def test_missing_subject_named(self):
        ds = make_dataset([1.0, 2.0], [1, 1], ids=[5, 6])
        preds = PredictionSet(cause=1, curves={5: self._curve(0.3)})
        with pytest.raises(ValidationError) as exc:
            preds.aligned(ds)
        assert "6" in str(exc.value)

    def test_bad_anchor_rejected(self):
        bad = StepFunction(grid=(1.0,), values=(0.5,), anchor=0.2)
        with pytest.raises(ValidationError):
            PredictionSet(cause=1, curves={1: bad})

    def test_value_above_one_rejected(self):
        bad = StepFunction(grid=(1.0,), values=(1.5,), anchor=0.0)
        with pytest.raises(ValidationError):
            PredictionSet(cause=1, curves={1: bad})

    def test_cause_must_be_positive(self):
        with pytest.raises(ValidationError):
            PredictionSet(cause=0, curves={1: self._curve(0.3)})


class TestMetricReport:
    def test_product_identity_enforced(self):
        with pytest.raises(ValidationError):
            MetricReport(tau=1.0, cause=1, r2=0.5, l2=0.5, pseudo_r2=0.4,
                         variant="horizon", n_total=10, n_uncensored=8)

    def test_range_enforced(self):
        with pytest.raises(ValidationError):
            MetricReport(tau=1.0, cause=1, r2=1.2, l2=1.0, pseudo_r2=1.2,
                         variant="horizon", n_total=10, n_uncensored=8)

    def test_to_dict_round_numbers(self):
        rep = MetricReport(tau=2.0, cause=1, r2=0.8, l2=0.5, pseudo_r2=0.4,
                           variant="point", n_total=3, n_uncensored=2)
        d = rep.to_dict()
        assert d["pseudo_r2"] == 0.4
        assert d["variant"] == "point"
        rep2 = rep.with_baselines({"brier": 0.1})
        assert rep2.baselines["brier"] == 0.1
        assert rep.baselines is None
