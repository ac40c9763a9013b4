"""Layer-wise adaptive rate scaling for MLPs, backed by the C++ core."""

from ._lars import (
    ConfigError,
    DivergenceError,
    ExperimentSpec,
    FormatError,
    Model,
    OptimizerConfig,
    ShapeError,
    SinkError,
    check_model,
    global_lr,
    l2_norm,
    lars_step,
    linear_scaled_lr,
    load_config,
    local_lr,
    make_synthetic,
    run_experiment,
    run_sweep,
    sgd_step,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "ExperimentSpec",
    "FormatError",
    "Model",
    "OptimizerConfig",
    "ShapeError",
    "SinkError",
    "check_model",
    "global_lr",
    "l2_norm",
    "lars_step",
    "linear_scaled_lr",
    "load_config",
    "local_lr",
    "make_synthetic",
    "run_experiment",
    "run_sweep",
    "sgd_step",
]
