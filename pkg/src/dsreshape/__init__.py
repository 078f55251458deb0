"""Incremental reshaping of stable dynamical systems from demonstrations."""

from .systems import (
    GAS,
    UNSTABLE_UNKNOWN,
    ComposedSystem,
    DimensionMismatchError,
    DynamicalSystem,
    Handcrafted,
    LinearGain,
    NonFiniteInputError,
    SecondOrderWrapper,
    as_state,
    compose,
    wrap_second_order,
)
from .gp import (
    DEFAULT_HYPER,
    FitError,
    GpField,
    GpModel,
    Hyperparameters,
    NumericalError,
    Prediction,
    fit_hyperparameters,
    kernel,
    marginal_log_likelihood,
)
from .reshaper import (
    ClockParams,
    Demonstration,
    ReshapedSystem,
    clock_step,
    default_clock,
    extract_training_pairs,
)
from .sim import (
    FieldGrid,
    Hold,
    RolloutConfig,
    SetState,
    Trajectory,
    detect_stall,
    lyapunov_decrease_check,
    rollout,
    vector_field_grid,
)
from .metrics import (
    MetricReport,
    quantile_summary,
    resample_equidistant,
    swept_error_area,
    velocity_rmse,
)
from .dataset import (
    Motion,
    ParseError,
    estimate_velocities,
    load_dataset,
    load_demonstration,
    load_motion,
    save_demonstration,
    subsample,
    truncate_near_goal,
)

__version__ = "0.1.0"
