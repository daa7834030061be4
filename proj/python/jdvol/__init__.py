from ._jdvol import (
    NumericalError,
    ParseError,
    SimulationError,
    __version__,
    bias_constant,
    confidence_interval,
    default_config,
    estimate_moments,
    list_kernels,
    list_models,
    local_time,
    model_moments,
    optimal_bandwidth,
    simulate,
    single_smoothed,
    theta_phi,
)

__all__ = [
    "NumericalError",
    "ParseError",
    "SimulationError",
    "__version__",
    "bias_constant",
    "confidence_interval",
    "default_config",
    "estimate_moments",
    "list_kernels",
    "list_models",
    "local_time",
    "model_moments",
    "optimal_bandwidth",
    "simulate",
    "single_smoothed",
    "theta_phi",
]
