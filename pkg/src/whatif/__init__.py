"""Hybrid counterfactual explanations for mixed-type tabular classifiers."""

from .cf_core import (
    EPSILON,
    CfQuery,
    Counterfactual,
    Predictor,
    Violation,
    changed_features,
    effective_fixed,
    score,
    validate,
)
from .cf_enum import EnumerationInfeasible, EnumResult, enumerate_toggles, toggle
from .cf_moc import MocConfig, MocIndividual, moc_search, pareto_front
from .cf_nice import nice_search, restrict_pool
from .cohort import (
    CohortConfig,
    EventTimeline,
    MatchResult,
    TimelineEvent,
    WindowSpec,
    build_dataset,
    featurize,
    generate_cohort,
    match_controls,
)
from .evaluation import EvalReport, auroc, bootstrap_ci, evaluate_scores, youden_threshold
from .gbm import GbmConfig, GbmModel, cross_validate, train
from .gower import gower_distance
from .hybrid import HybridReport, branch_gate, generate
from .schema import (
    Dataset,
    FeatureSchema,
    FeatureSpec,
    SchemaError,
    identify_binary_features,
    infer_schema,
    load_dataset,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "EPSILON",
    "CfQuery",
    "Counterfactual",
    "Predictor",
    "Violation",
    "changed_features",
    "effective_fixed",
    "score",
    "validate",
    "EnumerationInfeasible",
    "EnumResult",
    "enumerate_toggles",
    "toggle",
    "MocConfig",
    "MocIndividual",
    "moc_search",
    "pareto_front",
    "nice_search",
    "restrict_pool",
    "CohortConfig",
    "EventTimeline",
    "MatchResult",
    "TimelineEvent",
    "WindowSpec",
    "build_dataset",
    "featurize",
    "generate_cohort",
    "match_controls",
    "EvalReport",
    "auroc",
    "bootstrap_ci",
    "evaluate_scores",
    "youden_threshold",
    "GbmConfig",
    "GbmModel",
    "cross_validate",
    "train",
    "gower_distance",
    "HybridReport",
    "branch_gate",
    "generate",
    "Dataset",
    "FeatureSchema",
    "FeatureSpec",
    "SchemaError",
    "identify_binary_features",
    "infer_schema",
    "load_dataset",
    "save_dataset",
    "__version__",
]
