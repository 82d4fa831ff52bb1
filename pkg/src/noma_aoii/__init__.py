"""Age of incorrect information for a NOMA semantic uplink feeding a
two-server base-station queueing network: analytic model, simulator,
optimizer and experiment harness."""

from .errors import (
    AoiiError,
    ConfigError,
    DomainError,
    EmptyInput,
    InfeasibleError,
    NonConvergence,
    StabilityError,
    UnstableSimulation,
)
from .numerics import Interval, SolveSettings, fixed_point, lambert_w0, minimize_1d
from .optimizer import PolicySpace, hessian_check, solve_p0, solve_p1, solve_p3
from .queueing import QueueParams, average_aoi, average_aoii, eta_dm1, solve_stationary
from .semantic import LogisticParams, NomaScenario, UserChannel, semantic_rate, similarity, sinr_vector
from .simulator import Routing, SimConfig, run

__version__ = "0.1.0"

__all__ = [
    "AoiiError",
    "ConfigError",
    "DomainError",
    "EmptyInput",
    "InfeasibleError",
    "Interval",
    "LogisticParams",
    "NomaScenario",
    "NonConvergence",
    "PolicySpace",
    "QueueParams",
    "Routing",
    "SimConfig",
    "SolveSettings",
    "StabilityError",
    "UnstableSimulation",
    "UserChannel",
    "average_aoi",
    "average_aoii",
    "eta_dm1",
    "fixed_point",
    "hessian_check",
    "lambert_w0",
    "minimize_1d",
    "run",
    "semantic_rate",
    "similarity",
    "sinr_vector",
    "solve_p0",
    "solve_p1",
    "solve_p3",
    "solve_stationary",
]
