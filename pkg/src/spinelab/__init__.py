"""
spinelab

Random constraint satisfaction instances, exact spine and backbone order
parameters, resolution-complexity measurements and threshold sweeps.
"""

__version__ = "0.1.0"

from .config import Budgets, EoConfig, Problem, SweepConfig
from .core import ExperimentRunner, SweepPoint, sweep
from .model import ConstraintTemplate, ConstraintUniverse, Formula, Graph, TemplateSet

__all__ = [
    "Budgets",
    "ConstraintTemplate",
    "ConstraintUniverse",
    "EoConfig",
    "ExperimentRunner",
    "Formula",
    "Graph",
    "Problem",
    "SweepConfig",
    "SweepPoint",
    "TemplateSet",
    "sweep",
    "__version__",
]
