"""Kernel-weighted claim-rate prediction for insurance policy portfolios.

Policies are encoded feature-by-feature into claim-rate space (each category
value becomes the mean claim rate of the training samples holding it), and a
test policy's rate is predicted as the (1 + d)^(-kappa) weighted average of
all training claim rates over the normalized Euclidean distance d in that
space. The package covers the full workflow: ingestion and cleaning,
encoding, prediction, cross-validated tuning of kappa, feature importance
and greedy selection, calibration, and per-feature explanation.
"""

__version__ = "0.1.0"

from .dataset import (CleaningRules, Feature, FeatureSchema, FoldAssignment,
                      PolicyRecord, Portfolio, Rejection, RowError, SchemaError,
                      clean, fold_split, load_portfolio, parse_schema_file,
                      split_folds, write_schema_file)
from .encoder import (TargetStats, distance, encode, encode_portfolio, encode_value,
                      fit_target_stats, read_target_stats, write_target_stats)
from .evaluation import (Calibration, DegenerateTestSetError, EvaluationReport,
                         KFoldEngine, apply_calibration, calibrate,
                         default_kappa_grid, evaluate_kappa_curve, normalized_mae,
                         optimize_kappa)
from .explain import ImpactReport, ImpactRow, explain, single_feature_prediction
from .features import (ImportanceRow, ImportanceTable, SelectionStep, SelectionTrace,
                       feature_importance, greedy_select)
from .predictor import (KernelModel, Prediction, kernel_weights, predict,
                        predict_batch, predict_record)
from .synth import SynthConfig, SynthFeature, generate, noise_feature, oracle_predict

__all__ = [
    "CleaningRules", "Feature", "FeatureSchema", "FoldAssignment", "PolicyRecord",
    "Portfolio", "Rejection", "RowError", "SchemaError", "clean", "fold_split",
    "load_portfolio", "parse_schema_file", "split_folds", "write_schema_file",
    "TargetStats", "distance", "encode", "encode_portfolio", "encode_value",
    "fit_target_stats", "read_target_stats", "write_target_stats",
    "Calibration", "DegenerateTestSetError", "EvaluationReport", "KFoldEngine",
    "apply_calibration", "calibrate", "default_kappa_grid", "evaluate_kappa_curve",
    "normalized_mae", "optimize_kappa",
    "ImpactReport", "ImpactRow", "explain", "single_feature_prediction",
    "ImportanceRow", "ImportanceTable", "SelectionStep", "SelectionTrace",
    "feature_importance", "greedy_select",
    "KernelModel", "Prediction", "kernel_weights", "predict", "predict_batch",
    "predict_record",
    "SynthConfig", "SynthFeature", "generate", "noise_feature", "oracle_predict",
]
