"""Python access to the ncsym core: timing, relation checks, synthesis and simulation."""

from ._ncsym import (
    CapExceeded,
    ConfigError,
    DerivedTiming,
    Error,
    InfeasibleScenario,
    NcsParameters,
    Plant,
    TransitionSystem,
    check_alt_bisim,
    check_alt_sim,
    check_approx_bisim,
    check_approx_sim,
    derive_timing,
    gamma_from_config,
    make_plant,
    measure_tracking,
    simulate_config,
    synthesize_config,
    timing_from_config,
)

__all__ = [
    "CapExceeded",
    "ConfigError",
    "DerivedTiming",
    "Error",
    "InfeasibleScenario",
    "NcsParameters",
    "Plant",
    "TransitionSystem",
    "check_alt_bisim",
    "check_alt_sim",
    "check_approx_bisim",
    "check_approx_sim",
    "derive_timing",
    "gamma_from_config",
    "make_plant",
    "measure_tracking",
    "simulate_config",
    "synthesize_config",
    "timing_from_config",
]
