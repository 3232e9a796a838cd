"""Command-line front end.

Four subcommands: evaluate (score a predictions file against a dataset),
simulate (generate competing-risks data), replicate (run a built-in
simulation study), bootstrap (percentile interval for the pseudo R2).
Reports are written as delimited files; unless --no-plot is given, a PNG
rendering is written alongside each report.  Exit code 0 means a complete
report was written.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

from ._util import JOBS_ENV_VAR, resolve_jobs, spawn_seeds
from .baselines import (
    QuantileGrid,
    auc_average,
    brier_average,
    cindex_competing,
    risk_scores_from_predictions,
)
from .core import (
    DegenerateDataError,
    ValidationError,
    event_time_quantile,
)
from .experiments import EXPERIMENTS, run_experiment
from .io import (
    parse_scenario_file,
    read_dataset_csv,
    read_predictions_csv,
    report_to_mapping,
    write_dataset_csv,
    write_predictions_csv,
    write_report,
    write_results_csv,
)
from .pseudo_r2 import bootstrap_ci, pseudo_r2_horizon, pseudo_r2_point
from .simulator import (
    attach_censoring,
    cif_provider,
    default_scenario,
    generate_uncensored,
    marginal_type1_probability,
    resolve_scenario,
)

BASELINE_NAMES = ("brier", "cindex", "auc")


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: one command plus its options."""

    command: str
    data: str | None = None
    pred: str | None = None
    scenario: str | None = None
    tau: float | None = None
    tau_quantile: float | None = None
    cause: int = 1
    variant: str = "horizon"
    metrics: tuple[str, ...] = ()
    boot: int = 200
    level: float = 0.95
    seed: int | None = None
    jobs: int | None = None
    out: str = ""
    fmt: str = "csv"
    plot: bool = True
    reps: int = 10
    experiment: str | None = None
    censoring: float | None = None
    n: int | None = None
    emit_true_cif: str | None = None
    grid_count: int = 10
    grid_size: int = 200


def _parse_metrics(spec: str) -> tuple[str, ...]:
    spec = spec.strip().lower()
    if spec in ("", "none"):
        return ()
    if spec == "all":
        return BASELINE_NAMES
    names = tuple(tok.strip() for tok in spec.split(",") if tok.strip())
    unknown = [m for m in names if m not in BASELINE_NAMES]
    if unknown:
        raise ValidationError(
            f"unknown metrics {unknown}; choose from {','.join(BASELINE_NAMES)} or all/none"
        )
    return names


def _add_tau_options(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tau", type=float, help="absolute evaluation horizon")
    g.add_argument(
        "--tau-quantile", type=float,
        help="horizon as a quantile in (0, 1] of uncensored event times "
             "(lower-interpolation rule)",
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master RNG seed (default 0, or the scenario file's seed)")
    p.add_argument("--jobs", type=int, default=None,
                   help=f"worker count (default ${JOBS_ENV_VAR} or 1)")
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--no-plot", dest="plot", action="store_false",
                   help="skip the PNG rendering next to the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cifeval",
        description="Score predicted cumulative incidence curves against "
                    "right-censored competing-risks data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("evaluate", help="score a predictions file against a dataset")
    pe.add_argument("--data", required=True, help="dataset CSV (id,time,event[,x1..xp])")
    pe.add_argument("--pred", required=True, help="predictions CSV (id,time,cif)")
    _add_tau_options(pe)
    pe.add_argument("--cause", type=int, default=1)
    pe.add_argument("--variant", choices=("horizon", "point"), default="horizon")
    pe.add_argument("--metrics", default="all",
                    help="comma list of brier,cindex,auc, or all/none (default all)")
    pe.add_argument("--grid-count", type=int, default=10,
                    help="quantile grid size for averaged baselines")
    pe.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    _add_common(pe)

    ps = sub.add_parser("simulate", help="generate a competing-risks dataset")
    ps.add_argument("--scenario", help="key = value scenario file")
    ps.add_argument("--n", type=int, default=None, help="override scenario n")
    ps.add_argument("--censoring", type=float, default=None,
                    help="override scenario censor_rate")
    ps.add_argument("--emit-true-cif", metavar="PATH",
                    help="also write the true per-subject CIF curves as a predictions CSV")
    ps.add_argument("--grid-size", type=int, default=200,
                    help="knots per emitted true-CIF curve")
    _add_common(ps)

    pr = sub.add_parser("replicate", help="run a built-in simulation study")
    pr.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    pr.add_argument("--reps", type=int, default=10,
                    help="replicates per scenario (study scale: 100)")
    _add_common(pr)

    pb = sub.add_parser("bootstrap", help="percentile interval for the pseudo R2")
    pb.add_argument("--data", required=True)
    pb.add_argument("--pred", required=True)
    _add_tau_options(pb)
    pb.add_argument("--cause", type=int, default=1)
    pb.add_argument("--variant", choices=("horizon", "point"), default="horizon")
    pb.add_argument("--boot", type=int, default=200, metavar="B",
                    help="number of resamples (>= 100)")
    pb.add_argument("--level", type=float, default=0.95)
    pb.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    _add_common(pb)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    kv = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    if "metrics" in kv and isinstance(kv["metrics"], str):
        kv["metrics"] = _parse_metrics(kv["metrics"])
    return RunConfig(**kv)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_tau(cfg: RunConfig, dataset) -> float:
    if cfg.tau is not None:
        if cfg.tau <= 0:
            raise ValidationError("--tau must be positive")
        return float(cfg.tau)
    return event_time_quantile(dataset, cfg.tau_quantile)


def _load_pair(cfg: RunConfig):
    dataset = read_dataset_csv(cfg.data)
    if cfg.cause > dataset.n_causes:
        # an event code never observed can still be a valid cause label
        dataset = dc_replace_causes(dataset, cfg.cause)
    predictions = read_predictions_csv(cfg.pred, cause=cfg.cause)
    return dataset, predictions


def dc_replace_causes(dataset, n_causes):
    from .core import CompetingRisksDataset

    return CompetingRisksDataset.from_arrays(
        dataset.ids, dataset.time, dataset.event, dataset.covariates, n_causes
    )


def cmd_evaluate(cfg: RunConfig) -> int:
    dataset, predictions = _load_pair(cfg)
    tau = _resolve_tau(cfg, dataset)
    _log(
        f"evaluate: n={dataset.n} censored_fraction={dataset.censoring_fraction:.4f} "
        f"resolved_tau={tau:.17g}"
    )
    evaluate = pseudo_r2_horizon if cfg.variant == "horizon" else pseudo_r2_point
    report = evaluate(dataset, predictions, tau, cfg.cause)
    extra: dict[str, float] = {}
    if cfg.metrics:
        grid = QuantileGrid.from_dataset(dataset, cfg.grid_count)
        if "brier" in cfg.metrics:
            extra["brier_avg"] = brier_average(dataset, predictions, grid, cfg.cause)
        if "cindex" in cfg.metrics:
            scores = risk_scores_from_predictions(dataset, predictions, tau)
            extra["cindex"] = cindex_competing(dataset, scores, tau, cfg.cause)
        if "auc" in cfg.metrics:
            extra["auc_avg"] = auc_average(dataset, predictions, grid, cfg.cause)
    mapping = report_to_mapping(report.with_baselines(extra) if extra else report)
    mapping["censored_fraction"] = dataset.censoring_fraction
    write_report(mapping, cfg.out, cfg.fmt)
    _log(f"wrote {cfg.out}")
    if cfg.plot:
        from .plotting import plot_report

        png = str(Path(cfg.out).with_suffix(".png"))
        plot_report(mapping, png)
        _log(f"wrote {png}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    scenario = parse_scenario_file(cfg.scenario) if cfg.scenario else default_scenario()
    overrides = {}
    if cfg.seed is not None:
        overrides["seed"] = cfg.seed
    if cfg.n is not None:
        overrides["n"] = cfg.n
    if cfg.censoring is not None:
        overrides["censor_rate"] = cfg.censoring
    if overrides:
        scenario = dc_replace(scenario, **overrides)
    resolved = resolve_scenario(scenario)
    if scenario.lambda2 is None:
        achieved = marginal_type1_probability(resolved)
        _log(
            f"simulate: solved lambda2={resolved.lambda2:.17g} "
            f"(target p={scenario.p_target}, achieved p={achieved:.4f})"
        )
    dataset = generate_uncensored(resolved)
    if resolved.censor_rate > 0:
        cens_seed = spawn_seeds(resolved.seed, 2)[1]
        dataset = attach_censoring(dataset, resolved.censor_rate, cens_seed)
        _log(
            f"simulate: target censoring={resolved.censor_rate} "
            f"realized={dataset.censoring_fraction:.4f}"
        )
    write_dataset_csv(dataset, cfg.out)
    _log(f"wrote {cfg.out} ({dataset.n} rows)")
    if cfg.emit_true_cif:
        provider = cif_provider(resolved, "full", grid_size=cfg.grid_size)
        preds = provider.prediction_set(dataset)
        write_predictions_csv(preds, cfg.emit_true_cif, id_order=dataset.ids)
        _log(f"wrote {cfg.emit_true_cif}")
    return 0


def cmd_replicate(cfg: RunConfig) -> int:
    seed = cfg.seed if cfg.seed is not None else 0
    rows = run_experiment(cfg.experiment, reps=cfg.reps, seed=seed, jobs=cfg.jobs)
    write_results_csv(rows, cfg.out)
    n_scenarios = len({r.scenario_key for r in rows})
    _log(f"wrote {cfg.out} ({len(rows)} rows, {n_scenarios} scenarios)")
    if cfg.plot:
        from .plotting import plot_results

        png = str(Path(cfg.out).with_suffix(".png"))
        plot_results(rows, png)
        _log(f"wrote {png}")
    return 0


def cmd_bootstrap(cfg: RunConfig) -> int:
    dataset, predictions = _load_pair(cfg)
    tau = _resolve_tau(cfg, dataset)
    _log(
        f"bootstrap: n={dataset.n} censored_fraction={dataset.censoring_fraction:.4f} "
        f"resolved_tau={tau:.17g} B={cfg.boot}"
    )
    interval = bootstrap_ci(
        dataset, predictions, tau, cfg.cause, cfg.variant,
        B=cfg.boot, level=cfg.level,
        seed=cfg.seed if cfg.seed is not None else 0,
        jobs=cfg.jobs,
    )
    mapping = {
        "tau": tau,
        "cause": cfg.cause,
        "variant": cfg.variant,
        "estimate": interval.estimate,
        "lower": interval.lower,
        "upper": interval.upper,
        "level": interval.level,
        "n_resamples": interval.n_resamples,
        "n_failed": interval.n_failed,
    }
    write_report(mapping, cfg.out, cfg.fmt)
    _log(f"wrote {cfg.out}")
    if cfg.plot:
        from .plotting import plot_bootstrap

        png = str(Path(cfg.out).with_suffix(".png"))
        plot_bootstrap(interval, png)
        _log(f"wrote {png}")
    return 0


_COMMANDS = {
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "replicate": cmd_replicate,
    "bootstrap": cmd_bootstrap,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        resolve_jobs(cfg.jobs)  # fail fast on a bad jobs value
        return _COMMANDS[cfg.command](cfg)
    except ValidationError as exc:
        _log(f"error: {exc}")
        return 2
    except DegenerateDataError as exc:
        _log(f"error: {exc}")
        return 1
    except OSError as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
