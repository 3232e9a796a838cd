import math

import pytest

from cifeval import ValidationError
from cifeval.experiments import (
    EXPERIMENTS,
    run_experiment,
    run_fig1,
    run_fig2,
    run_fig5,
    run_supp,
)


class TestFig1:
    def test_sweep_structure(self):
        rows = run_fig1(reps=2, n_test=500, seed=1, beta_grid=(0.5, 1.0),
                        rows_included=("beta1",), grid_size=80)
        keys = {r.scenario_key for r in rows}
        assert keys == {
            "experiment=fig1;variant=horizon;param=beta1;value=0.5;tau_q=1;n=500",
            "experiment=fig1;variant=horizon;param=beta1;value=1;tau_q=1;n=500",
        }
        metrics = {r.metric for r in rows}
        assert {"pseudo_r2", "r2", "l2"} <= metrics
        per = [r for r in rows if r.metric == "pseudo_r2"
               and "value=1;" in r.scenario_key]
        assert sorted(r.replicate for r in per) == [1, 2]

    def test_p_row_adds_brier(self):
        rows = run_fig1(reps=1, n_test=500, seed=2, p_grid=(0.3, 0.7),
                        rows_included=("p",), grid_size=80)
        briers = [r for r in rows if r.metric == "brier_avg"]
        assert len(briers) == 2 * 1
        assert all(math.isfinite(r.value) for r in briers)


class TestFig2:
    def test_model_menu_structure(self):
        rows = run_fig2(reps=1, n=800, seed=3, grid_size=80)
        models = {r.scenario_key.split(";")[2] for r in rows}
        assert models == {"model=full", "model=reduced", "model=distorted"}
        metrics = {r.metric for r in rows}
        assert metrics == {"pseudo_r2", "brier_avg", "cindex", "auc_avg"}

    def test_full_dominates_reduced_pseudo(self):
        rows = run_fig2(reps=2, n=1500, seed=4, grid_size=80)

        def mean_of(model, metric):
            vals = [r.value for r in rows
                    if f"model={model};" in r.scenario_key and r.metric == metric]
            return sum(vals) / len(vals)

        assert mean_of("full", "pseudo_r2") > mean_of("reduced", "pseudo_r2")


class TestFig5:
    def _tiny(self, jobs=None):
        return run_fig5(reps=3, seed=5, jobs=jobs, ns=(100, 300),
                        censor_rates=(0.25,), tau_quantiles=(0.5,),
                        pop_reps=2, pop_n=500, grid_size=60)

    def test_population_row_and_errors(self):
        rows = self._tiny()
        pop = [r for r in rows if r.metric == "population_value"]
        # one marker row per (censoring, n) cell, all quoting the same value
        assert len(pop) == 2
        assert all(r.replicate == 0 for r in pop)
        assert len({r.value for r in pop}) == 1
        pop_val = pop[0].value
        by_key = {}
        for r in rows:
            if r.metric in ("pseudo_r2", "error"):
                by_key.setdefault((r.scenario_key, r.replicate), {})[r.metric] = r.value
        assert len(by_key) == 2 * 3  # cells x replicates
        for (_key, _rep), pair in by_key.items():
            assert set(pair) == {"pseudo_r2", "error"}
            assert pair["error"] == pytest.approx(pair["pseudo_r2"] - pop_val,
                                                  abs=1e-12)

    def test_jobs_do_not_change_values(self):
        serial = self._tiny(jobs=1)
        threaded = self._tiny(jobs=4)
        assert serial == threaded


class TestDispatch:
    def test_names(self):
        assert set(EXPERIMENTS) == {"fig1", "fig2", "fig5", "supp"}
        with pytest.raises(ValidationError):
            run_experiment("fig9", reps=1, seed=0)

    def test_supp_smoke(self):
        rows = run_supp(reps=1, seed=6, n_test=500)
        assert any(r.metric == "pseudo_r2" for r in rows)
        assert any("variant=point" in r.scenario_key for r in rows)
        assert all("variant=horizon" not in r.scenario_key for r in rows)
        assert any(r.metric == "population_value" for r in rows)
