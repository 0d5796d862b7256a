"""sddesim: stochastic delay differential equations with negative feedback.

Simulates Mackey-Glass / Nicholson type systems under Brownian or
regulated Levy noise, estimates invariant measures by time averaging,
classifies deterministic stability regimes, and evaluates and
Monte-Carlo-verifies tail bounds and pathwise estimates.
"""

__version__ = "0.1.0"

from .models import MackeyGlass, ModelSpec, Nicholson
from .noise import JumpEvent, NoisePath, NoiseSpec
from .solver import Trajectory, TrajectoryConfig, simulate_ensemble, simulate_original, simulate_transformed

__all__ = [
    "__version__",
    "NoiseSpec",
    "JumpEvent",
    "NoisePath",
    "MackeyGlass",
    "Nicholson",
    "ModelSpec",
    "TrajectoryConfig",
    "Trajectory",
    "simulate_transformed",
    "simulate_original",
    "simulate_ensemble",
]
