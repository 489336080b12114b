"""Stochastic scheduling of Bernoulli jobs on identical parallel machines.

Exact and grid-restricted dynamic programs for minimizing total expected
completion time, baseline policies, a replay/simulation harness, and
instance tooling.
"""

from .instances import (
    Instance,
    JobType,
    build_groups,
    load_instance,
    save_instance,
    validate_and_canonicalize,
)
from .dp_exact import solve_exact
from .dp_stratified import sandwich_bound, solve_stratified
from .timegrid import build_grid

__all__ = [
    "Instance",
    "JobType",
    "build_groups",
    "build_grid",
    "load_instance",
    "save_instance",
    "sandwich_bound",
    "solve_exact",
    "solve_stratified",
    "validate_and_canonicalize",
]

__version__ = "0.1.0"
