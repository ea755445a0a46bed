"""
Small instance builders shared by the tests.
"""

from typing import Iterable, Sequence, Tuple

from spinelab.generators import named_family
from spinelab.model import Constraint, Formula, Graph, TemplateSet


def ksat(n: int, clauses: Iterable[Sequence[int]], k: int = 3) -> Formula:
    """Signed k-SAT formula from DIMACS-style clauses (all of length k)."""
    ts = named_family("k-sat", k)
    template = ts.templates[0]
    constraints = tuple(
        Constraint(template, tuple(abs(l) - 1 for l in cl), tuple(l > 0 for l in cl))
        for cl in clauses
    )
    return Formula(n, constraints, ts)


def two_sat(n: int, clauses: Iterable[Sequence[int]]) -> Formula:
    return ksat(n, clauses, k=2)


def xor3(n: int, triples: Iterable[Tuple[Sequence[int], int]]) -> Formula:
    """3-XOR equations x_a + x_b + x_c = parity (variables 1-indexed)."""
    ts = named_family("k-xor-sat", 3)
    template = ts.templates[0]
    constraints = []
    for variables, parity in triples:
        # flipping one coordinate turns the even-parity relation into odd parity
        signs = (parity == 0, True, True)
        constraints.append(Constraint(template, tuple(v - 1 for v in variables), signs))
    return Formula(n, tuple(constraints), ts)


def one_in_three(n: int, triples: Iterable[Sequence[int]]) -> Formula:
    """Unsigned 1-in-3 constraints (variables 1-indexed)."""
    ts = named_family("1-in-k-sat", 3)
    template = ts.templates[0]
    return Formula(
        n, tuple(Constraint(template, tuple(v - 1 for v in t)) for t in triples), ts
    )


def signed_one_in_three(n: int, triples: Iterable[Sequence[int]]) -> Formula:
    """1-in-3 constraints over DIMACS-style literals; a negative literal flips its variable."""
    ts = named_family("1-in-k-sat", 3)
    template = ts.templates[0]
    constraints = tuple(
        Constraint(template, tuple(abs(l) - 1 for l in t), tuple(l > 0 for l in t))
        for t in triples
    )
    return Formula(n, constraints, ts)


def graph(n: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    return Graph.from_edges(n, edges)


def template_set_of(f: Formula) -> TemplateSet:
    return f.template_set
