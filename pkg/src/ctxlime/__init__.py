"""Local linear surrogate explanations with context-aware perturbations."""

from .evaluation import (
    ComparisonRun,
    ExplainConfig,
    SweepTable,
    compare_explainers,
    compare_feature_removal,
    contribution_variance,
    emit_plot_data,
    explain_instance,
    sigma_sweep,
)
from .metrics import FaithfulnessReport, faithfulness
from .models import ExternalModel, predict_batch, train_knn, train_rbf_ridge
from .perturbation import (
    AnchorDistribution,
    Method,
    PerturbationSet,
    anchor_distribution,
    chilli_draws,
    chilli_perturb,
    label_perturbations,
    lime_perturb,
)
from .proximity import Kernel, ProximityConfig, aggregate_distance, feature_distance, proximity, proximity_vector
from .schema import Dataset, FeatureKind, FeatureSchema, load_dataset, load_schema, normalize
from .surrogate import Explanation, LinearSurrogate, explain, fit_weighted_linear, select_best

__version__ = "0.1.0"
