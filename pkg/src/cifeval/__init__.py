"""Evaluation of predicted cumulative incidence functions under right censoring."""

from .core import (
    CompetingRisksDataset,
    CompetingRisksRecord,
    DegenerateDataError,
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
from .censoring import IpcwWeights, ipcw_weights, km_censoring_survival
from .pseudo_r2 import (
    BootstrapInterval,
    CalibrationFit,
    PopulationPseudoR2,
    WorkingOutcome,
    bootstrap_ci,
    event_indicator,
    nonparametric_r2_benchmark,
    population_pseudo_r2,
    pseudo_r2_horizon,
    pseudo_r2_point,
    restricted_mean,
    weighted_linear_fit,
    working_time,
)
from .baselines import (
    QuantileGrid,
    auc_average,
    auc_timedep_at,
    brier_average,
    brier_score_at,
    cindex_competing,
    risk_scores_from_predictions,
)
from .simulator import (
    CifProvider,
    SimScenario,
    attach_censoring,
    cif_provider,
    default_scenario,
    default_time_grid,
    generate_uncensored,
    latent_time,
    marginal_type1_probability,
    resolve_scenario,
    solve_lambda2,
    true_cif,
    true_restricted_mean,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapInterval",
    "CalibrationFit",
    "CifProvider",
    "CompetingRisksDataset",
    "CompetingRisksRecord",
    "DegenerateDataError",
    "IpcwWeights",
    "MetricReport",
    "PopulationPseudoR2",
    "PredictionSet",
    "QuantileGrid",
    "SimScenario",
    "StepFunction",
    "ValidationError",
    "WorkingOutcome",
    "attach_censoring",
    "auc_average",
    "auc_timedep_at",
    "bootstrap_ci",
    "brier_average",
    "brier_score_at",
    "cif_provider",
    "cindex_competing",
    "default_scenario",
    "default_time_grid",
    "event_indicator",
    "event_time_quantile",
    "generate_uncensored",
    "ipcw_weights",
    "km_censoring_survival",
    "latent_time",
    "marginal_type1_probability",
    "nonparametric_r2_benchmark",
    "population_pseudo_r2",
    "pseudo_r2_horizon",
    "pseudo_r2_point",
    "quantile_lower",
    "resolve_scenario",
    "restricted_mean",
    "risk_scores_from_predictions",
    "solve_lambda2",
    "step_eval",
    "step_left_limit",
    "true_cif",
    "true_restricted_mean",
    "validate_dataset",
    "weighted_linear_fit",
    "working_time",
    "__version__",
]
