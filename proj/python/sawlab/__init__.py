"""Self-avoiding walks on Z^d: exact counts, uniform sampling, couplings."""

from ._sawlab import (
    BudgetError,
    Enumerator,
    InvalidArgument,
    NotSelfAvoiding,
    Sampler,
    SawError,
    count_saws,
    couple,
    decoupling_stats,
    endpoint,
    escapes,
    exact_mean_density,
    fixed_point,
    geometric_schedule,
    list_saws,
    mc_density,
    pattern_density,
    run_command,
    scalar_estimates,
    shift,
    validate,
    verify,
)

__all__ = [
    "BudgetError",
    "Enumerator",
    "InvalidArgument",
    "NotSelfAvoiding",
    "Sampler",
    "SawError",
    "count_saws",
    "couple",
    "decoupling_stats",
    "endpoint",
    "escapes",
    "exact_mean_density",
    "fixed_point",
    "geometric_schedule",
    "list_saws",
    "mc_density",
    "pattern_density",
    "run_command",
    "scalar_estimates",
    "shift",
    "validate",
    "verify",
]

__version__ = "0.1.0"
