import math

from cifeval.io import ResultRow
from cifeval.plotting import plot_bootstrap, plot_report, plot_results
from cifeval.pseudo_r2 import BootstrapInterval


def test_plot_report_writes_png(tmp_path):
    out = tmp_path / "report.png"
    mapping = {"tau": 1.8, "cause": 1, "variant": "horizon", "n_total": 100,
               "n_uncensored": 80, "pseudo_r2": 0.4, "r2": 0.8, "l2": 0.5,
               "brier_avg": 0.12}
    path = plot_report(mapping, out)
    assert out.exists() and out.stat().st_size > 0
    assert str(out) == path


def test_plot_results_skips_markers_and_nans(tmp_path):
    rows = [
        ResultRow("experiment=fig5;n=100", 0, "population_value", 0.38),
        ResultRow("experiment=fig5;n=100", 1, "pseudo_r2", 0.30),
        ResultRow("experiment=fig5;n=100", 2, "pseudo_r2", math.nan),
        ResultRow("experiment=fig5;n=300", 1, "pseudo_r2", 0.35),
        ResultRow("experiment=fig5;n=100", 1, "error", -0.08),
        ResultRow("experiment=fig5;n=300", 1, "error", -0.03),
    ]
    out = tmp_path / "rows.png"
    plot_results(rows, out)
    assert out.exists() and out.stat().st_size > 0


def test_plot_bootstrap(tmp_path):
    interval = BootstrapInterval(lower=0.2, upper=0.5, estimate=0.35,
                                 level=0.95, n_resamples=200, n_failed=0)
    out = tmp_path / "ci.png"
    plot_bootstrap(interval, out)
    assert out.exists() and out.stat().st_size > 0
