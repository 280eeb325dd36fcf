"""Center-of-mass estimation for grasped rigid objects.

Simulates wrist force-torque readings for a grasped payload, fits a Bayesian
regressor with calibrated per-axis uncertainty, scores candidate second
rotations, and benchmarks the resulting two-measurement pipeline against
single-reading baselines.
"""

from .actions import (
    ActionScoreExample,
    ActionScorerModel,
    make_training_labels,
    score_action,
    select_action,
    train_action_scorer,
)
from .analytical import ComEstimate, solve_com_analytical
from .bnn import (
    NormalizationStats,
    PosteriorSamples,
    PredictiveDistribution,
    predict,
    predict_batch,
    train_bnn,
)
from .config import RunConfig, desk_config, large_config
from .errors import ConfigError, InsufficientSignalError, NumericalError
from .fusion import fuse
from .mlp import MlpArchitecture
from .nuts import nuts_sample
from .pipeline import (
    EpisodeResult,
    SimulatedWrenchSource,
    evaluate,
    run_active,
    run_analytical,
    run_one_grasp,
    run_random_rotate,
)
from .sim import (
    DatasetRecord,
    NoiseModel,
    RigidGraspScene,
    Wrench,
    WristOrientation,
    generate_dataset,
    generate_grasp_trial,
    gravity_wrench,
    observe_wrench,
    orientation_to_rotation,
)

__version__ = "0.1.0"
