"""Distributed projected gradient methods with randomly idling nodes."""
from .costs import Ball, Box, LogisticCost, ProblemInstance, QuadraticCost, derive_constants
from .engine import Reference, RunConfig, RunState, Trace, run
from .graph import Network, WeightMatrix, metropolis_weights, random_geometric_graph
from .kernels import BACKEND
from .schedule import AlwaysOn, CappedGeometric, Geometric, HalfGeometric, Sublinear, stream

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "LogisticCost", "ProblemInstance", "QuadraticCost", "derive_constants",
    "Reference", "RunConfig", "RunState", "Trace", "run",
    "Network", "WeightMatrix", "metropolis_weights", "random_geometric_graph",
    "BACKEND", "AlwaysOn", "CappedGeometric", "Geometric", "HalfGeometric", "Sublinear",
    "stream", "__version__",
]
