"""
knowbal - knowledge-balance toy theory toolkit.

Epistemic states over ontic configurations of elementary systems,
their validity, transformations, measurements and protocols.
"""

__version__ = "0.1.0"

from .core.errors import KnowbalError
from .ontic import EpistemicState, SystemShape, from_cells, marginal, render
from .validity import Catalog, CatalogStore, enumerate_valid, explain, is_valid
from .transforms import Permutation, closure, enumerate_allowed, from_cycles
from .measurements import Measurement, epistemic_update, make_measurement
from .ontic_sim import RunConfig, epistemic_branches, run_trials
from .protocols import PROTOCOLS, ProtocolContext, run_suite

__all__ = [
    "__version__",
    "KnowbalError",
    "EpistemicState",
    "SystemShape",
    "from_cells",
    "marginal",
    "render",
    "Catalog",
    "CatalogStore",
    "enumerate_valid",
    "explain",
    "is_valid",
    "Permutation",
    "closure",
    "enumerate_allowed",
    "from_cycles",
    "Measurement",
    "epistemic_update",
    "make_measurement",
    "RunConfig",
    "epistemic_branches",
    "run_trials",
    "PROTOCOLS",
    "ProtocolContext",
    "run_suite",
]
