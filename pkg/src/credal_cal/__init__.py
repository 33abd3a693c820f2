"""
credal_cal - test whether a set of probabilistic classifiers admits a
calibrated, instance-dependent convex combination.

Modules
-------
simplex      probability-simplex primitives, hull projection, seeded sampling
estimators   calibration-error estimators and scoring rules with gradients
metalearner  weight network mapping features to mixture weights
testkit      consistency-resampling bootstrap tests and baselines
datagen      synthetic scenarios with known ground truth
io           CSV exchange format for ensemble predictions
cli          ``credal-cal`` command-line front end
"""

__version__ = "0.1.0"

from .datagen import Case, Family, GroundTruth, ScenarioSpec, generate, generate_split
from .estimators import (
    CalEstimate,
    CalEstimatorKind,
    Kind,
    brier_score,
    ce2_kde,
    cek_unbiased,
    cekl_kde,
    cemmd,
    kde_conditional_mean,
    log_loss,
)
from .metalearner import TrainConfig, WeightNet, evaluate_weights, grid_search_constant_lambda, train_weight_net
from .simplex import (
    CredalDataset,
    DimensionError,
    DomainError,
    NumericError,
    RngStream,
    SimplexError,
    combine_dataset,
    convex_combine,
    point_in_hull,
    sample_categorical,
    sample_dirichlet,
    sample_weight_simplex,
)
from .testkit import (
    TestConfig,
    TestResult,
    run_credal_test,
    run_mortier_baseline,
    run_npbe_on_fixed_predictor,
)
