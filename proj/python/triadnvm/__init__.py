"""Python bindings for the secure NVM controller simulator."""

from ._core import (
    Config,
    ConfigError,
    IntegrityViolation,
    RecoveryReport,
    Simulator,
    analytic_recovery_time,
    crashtest,
    payload,
    scenario,
    scenario_names,
)

__all__ = [
    "Config",
    "ConfigError",
    "IntegrityViolation",
    "RecoveryReport",
    "Simulator",
    "analytic_recovery_time",
    "crashtest",
    "payload",
    "scenario",
    "scenario_names",
]
