"""
Shared fixtures.
"""

import pytest

from spinelab.config import Budgets
from spinelab.model import ConstraintTemplate

from .helpers import graph, ksat


@pytest.fixture
def budgets():
    """Default budgets with the progress-free limits used by the exact tests."""
    return Budgets()


@pytest.fixture
def unsat_2sat():
    """x1 <-> x2 together with x1 and not x2: the smallest unsatisfiable 2-SAT core."""
    return ksat(2, [(1, 2), (1, -2), (-1, 2), (-1, -2)], k=2)


@pytest.fixture
def implies_template():
    """x -> y, a binary relation with no coordinate symmetry."""
    return ConstraintTemplate.from_predicate("imp", 2, 2, lambda v: v[0] <= v[1])


@pytest.fixture
def triangle():
    return graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4():
    return graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
