"""
Structural analyzers for unsatisfiable cores and formula density:
MUS extraction, c*, delta*_r, (x, y)-sparsity, the sparsity bound x(y, c, k),
short implicates, private/free-variable orderings with greedy witnesses,
and the entailment measure mu.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from .config import BranchingPolicy
from .errors import (
    BudgetExceeded,
    DomainError,
    PreconditionError,
    SatisfiableInputError,
    UnsupportedDomain,
)
from .model import Assignment, ConstraintTemplate, Formula, Hypergraph, UNASSIGNED
from .solver import AssignmentTable, Clause, decide

Number = Union[int, float, Fraction]


# Minimally unsatisfiable subformulas


@dataclass(frozen=True)
class MusResult:
    """A minimally unsatisfiable subformula, by index into the input."""

    indices: Tuple[int, ...]
    subformula: Formula
    certificates: Dict[int, Assignment] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def variable_fraction(self) -> Fraction:
        n = self.subformula.n
        return Fraction(len(self.subformula.variables()), n) if n else Fraction(0)

    def to_text(self) -> str:
        lines = [f"mus {self.size}"]
        for index, c in zip(self.indices, self.subformula.constraints):
            lines.append(f"c {index + 1} {c.label()}")
        for index in self.indices:
            lines.append(f"w {index + 1} {self.certificates[index].to_text()}")
        return "\n".join(lines) + "\n"


def mus_extract(
    f: Formula, policy: BranchingPolicy = BranchingPolicy.MOMS
) -> MusResult:
    """
    Deletion-based minimization scanning constraints in ascending index order.

    A constraint is dropped whenever the rest stays unsatisfiable; when it
    must stay, the satisfying assignment of the rest is kept as its
    certificate.
    """
    if decide(f, policy).satisfiable:
        raise SatisfiableInputError("MUS extraction needs an unsatisfiable formula")
    kept = list(range(f.m))
    certificates: Dict[int, Assignment] = {}
    for index in range(f.m):
        trial = [i for i in kept if i != index]
        decision = decide(f.subformula(trial), policy)
        if decision.satisfiable:
            assert decision.witness is not None
            certificates[index] = decision.witness
        else:
            kept = trial
    return MusResult(tuple(kept), f.subformula(kept), certificates)


# Density: c* and delta*_r


def _closure_network(
    f: Formula, profit: int, cost: int, forced: Optional[int] = None
) -> nx.DiGraph:
    network = nx.DiGraph()
    network.add_node("s")
    network.add_node("t")
    for i, c in enumerate(f.constraints):
        if i == forced:
            network.add_edge("s", ("c", i))
        else:
            network.add_edge("s", ("c", i), capacity=profit)
        for v in c.vars:
            # no capacity attribute means unbounded
            network.add_edge(("c", i), ("v", v))
    for v in f.variables():
        network.add_edge(("v", v), "t", capacity=cost)
    return network


def _max_closure(
    f: Formula, profit: int, cost: int, forced: Optional[int] = None
) -> Tuple[int, Tuple[int, ...]]:
    """Max of profit*|H| - cost*|Var(H)| with H (optionally containing ``forced``)."""
    network = _closure_network(f, profit, cost, forced)
    _, (source_side, _) = nx.minimum_cut(network, "s", "t")
    chosen = tuple(sorted(node[1] for node in source_side
                          if isinstance(node, tuple) and node[0] == "c"))
    variables = {v for i in chosen for v in f.constraints[i].vars}
    return profit * len(chosen) - cost * len(variables), chosen


def _ratio(f: Formula, indices: Sequence[int]) -> Fraction:
    variables = {v for i in indices for v in f.constraints[i].vars}
    return Fraction(len(indices), len(variables))


def c_star(f: Formula) -> Tuple[Fraction, Tuple[int, ...]]:
    """
    max |H| / |Var(H)| over nonempty H, with a witness.

    Binary search on the ratio with a min-cut test per step. Achievable
    ratios have denominators at most |Var(F)|, so once the bracket is
    narrower than 1/|Var(F)|^2 the best witnessed ratio is the maximum.
    """
    if f.m == 0:
        raise ValueError("c* is undefined for an empty formula")
    witness = tuple(range(f.m))
    lo = _ratio(f, witness)
    hi = Fraction(f.m, f.k)
    resolution = Fraction(1, len(f.variables()) ** 2)
    while hi - lo >= resolution:
        mid = (lo + hi) / 2
        value, chosen = _max_closure(f, mid.denominator, mid.numerator)
        if value > 0:
            witness = chosen
            lo = _ratio(f, chosen)
        else:
            hi = mid
    return lo, witness


def delta_value(f: Formula, indices: Sequence[int], r: Number) -> Fraction:
    """r|G| - 2|Var(G)|."""
    variables = {v for i in indices for v in f.constraints[i].vars}
    return Fraction(r) * len(indices) - 2 * len(variables)


def delta_star(f: Formula, r: Number) -> Tuple[Fraction, Tuple[int, ...]]:
    """
    max of r|G| - 2|Var(G)| over nonempty G, with a witness.

    When the unconstrained optimum is the empty set, every constraint is
    forced in turn and the best forced closure is reported.
    """
    r = Fraction(r)
    if r < 1:
        raise ValueError(f"r must be at least 1, got {r}")
    if f.m == 0:
        raise ValueError("delta* is undefined for an empty formula")
    profit, cost = r.numerator, 2 * r.denominator
    _, chosen = _max_closure(f, profit, cost)
    if chosen:
        return delta_value(f, chosen, r), chosen
    best: Optional[Tuple[Fraction, Tuple[int, ...]]] = None
    for i in range(f.m):
        _, forced = _max_closure(f, profit, cost, forced=i)
        value = delta_value(f, forced, r)
        if best is None or value > best[0]:
            best = (value, forced)
    assert best is not None
    return best


@dataclass(frozen=True)
class DensityReport:
    c_star: Fraction
    c_star_witness: Tuple[int, ...]
    r: Optional[Fraction] = None
    delta_star: Optional[Fraction] = None
    delta_witness: Tuple[int, ...] = ()

    def to_text(self) -> str:
        lines = [
            f"c_star {self.c_star.numerator}/{self.c_star.denominator} "
            f"{float(self.c_star):.6f}",
            "c_star_witness " + " ".join(str(i + 1) for i in self.c_star_witness),
        ]
        if self.delta_star is not None and self.r is not None:
            lines.append(
                f"delta_star r={self.r} {self.delta_star.numerator}/"
                f"{self.delta_star.denominator} {float(self.delta_star):.6f}"
            )
            lines.append("delta_witness " + " ".join(str(i + 1) for i in self.delta_witness))
        return "\n".join(lines) + "\n"


def density_report(f: Formula, r: Optional[Number] = None) -> DensityReport:
    value, witness = c_star(f)
    if r is None:
        return DensityReport(value, witness)
    delta, delta_witness = delta_star(f, r)
    return DensityReport(value, witness, Fraction(r), delta, delta_witness)


def literal_density(f: Formula) -> Fraction:
    """|F| divided by the number of distinct literals occurring in F."""
    literals = {
        (v, True if c.signs is None else c.signs[i])
        for c in f.constraints
        for i, v in enumerate(c.vars)
    }
    return Fraction(f.m, len(literals)) if literals else Fraction(0)


# (x, y)-sparsity


@dataclass(frozen=True)
class SparsityVerdict:
    x: Fraction
    y: Fraction
    sparse: bool
    violating: Optional[FrozenSet[int]] = None
    edges_inside: int = 0
    method: str = "flow"

    def to_text(self) -> str:
        head = f"sparse {int(self.sparse)} x={self.x} y={self.y} method={self.method}"
        if self.violating is None:
            return head + "\n"
        members = " ".join(str(v + 1) for v in sorted(self.violating))
        return f"{head}\nviolating {self.edges_inside} edges on {members}\n"


def edges_inside(h: Hypergraph, vertices: FrozenSet[int]) -> int:
    return sum(1 for e in h.edges if set(e) <= vertices)


def _densest_vertex_set(h: Hypergraph, y: Fraction) -> Tuple[int, FrozenSet[int]]:
    """Max of q*e(W) - p*|W| for y = p/q, with the maximizing vertex set."""
    network = nx.DiGraph()
    network.add_node("s")
    network.add_node("t")
    for i, e in enumerate(h.edges):
        network.add_edge("s", ("e", i), capacity=y.denominator)
        for v in e:
            network.add_edge(("e", i), ("v", v))
    for v in h.vertices():
        network.add_edge(("v", v), "t", capacity=y.numerator)
    _, (source_side, _) = nx.minimum_cut(network, "s", "t")
    vertices = frozenset(node[1] for node in source_side
                         if isinstance(node, tuple) and node[0] == "v")
    return y.denominator * edges_inside(h, vertices) - y.numerator * len(vertices), vertices


def is_xy_sparse(
    h: Hypergraph,
    x: Number,
    y: Number,
    enumeration_budget: int = 2_000_000,
) -> SparsityVerdict:
    """
    Whether every set of s <= xn vertices spans at most ys edges.

    A min-cut finds the vertex set maximizing e(W) - y|W|. If that maximum
    is not positive no set violates the bound at any size. If the maximizer
    is small enough it is itself a violating set. Otherwise unions of
    overlapping edges up to size xn are enumerated, which suffices because
    a violating set always contains a violating edge-connected union.
    """
    x, y = Fraction(x), Fraction(y)
    if x <= 0 or y <= 0:
        raise ValueError("x and y must be positive")
    limit = math.floor(x * h.n)
    if not h.edges or limit <= 0:
        return SparsityVerdict(x, y, True)

    value, vertices = _densest_vertex_set(h, y)
    if value <= 0:
        return SparsityVerdict(x, y, True)
    if len(vertices) <= limit:
        return SparsityVerdict(x, y, False, vertices, edges_inside(h, vertices))

    incident: Dict[int, List[int]] = {}
    for i, e in enumerate(h.edges):
        for v in e:
            incident.setdefault(v, []).append(i)
    seen: Set[FrozenSet[int]] = set()
    stack: List[FrozenSet[int]] = []
    for e in h.edges:
        start = frozenset(e)
        if len(start) <= limit and start not in seen:
            seen.add(start)
            stack.append(start)
    while stack:
        current = stack.pop()
        inside = edges_inside(h, current)
        if inside > y * len(current):
            return SparsityVerdict(x, y, False, current, inside, method="enumeration")
        touching = {i for v in current for i in incident[v]}
        for i in sorted(touching):
            grown = current | frozenset(h.edges[i])
            if grown == current or len(grown) > limit or grown in seen:
                continue
            seen.add(grown)
            if len(seen) > enumeration_budget:
                raise BudgetExceeded("sparsity enumeration", len(seen), enumeration_budget)
            stack.append(grown)
    return SparsityVerdict(x, y, True, method="enumeration")


def x_bound(y: Number, c: Number, k: int) -> float:
    """x = ((1/(2e)) * (y/(c e))^y) ^ (1/(y(k-1) - 1))."""
    y_f, c_f = float(y), float(c)
    if k < 2:
        raise DomainError(f"arity must be at least 2, got {k}")
    if Fraction(y) * (k - 1) <= 1:
        raise DomainError(f"y must exceed 1/(k-1) = {1 / (k - 1):g}, got {y_f:g}")
    if c_f <= 0:
        raise DomainError(f"c must be positive, got {c_f:g}")
    base = (1.0 / (2.0 * math.e)) * (y_f / (c_f * math.e)) ** y_f
    return base ** (1.0 / (y_f * (k - 1) - 1.0))


# Implicates, orderings and greedy witnesses


def implicate_check(tpl: ConstraintTemplate, max_len: int = 2) -> List[Clause]:
    """
    Clauses of at most ``max_len`` literals over the template's coordinates
    (coordinate i is variable i) that the relation entails.
    """
    if tpl.t != 2:
        raise UnsupportedDomain("implicates are defined for boolean templates")
    if max_len not in (1, 2):
        raise ValueError(f"max_len must be 1 or 2, got {max_len}")
    rows = tpl.sat_tuples()
    found: List[Clause] = []
    for length in range(1, max_len + 1):
        for coords in itertools.combinations(range(tpl.k), length):
            for signs in itertools.product((True, False), repeat=length):
                if all(any((row[i] == 1) == s for i, s in zip(coords, signs)) for row in rows):
                    found.append(Clause.from_pairs(zip(coords, signs)))
    return found


def has_short_implicates(table: Sequence[bool], k: int) -> bool:
    return bool(implicate_check(ConstraintTemplate("_", 2, k, tuple(table)), 2))


def private_variables(f: Formula, among: Optional[Sequence[int]] = None) -> Dict[int, FrozenSet[int]]:
    """Per constraint, the variables that occur in no other constraint of ``among``."""
    indices = list(range(f.m)) if among is None else list(among)
    counts: Dict[int, int] = {}
    for i in indices:
        for v in set(f.constraints[i].vars):
            counts[v] = counts.get(v, 0) + 1
    return {
        i: frozenset(v for v in f.constraints[i].vars if counts[v] == 1) for i in indices
    }


def private_census(f: Formula) -> int:
    """Number of constraints with at least k-2 private variables."""
    return sum(len(p) >= f.k - 2 for p in private_variables(f).values())


@dataclass(frozen=True)
class OrderingReport:
    ordering: Optional[Tuple[int, ...]]
    private: Dict[int, FrozenSet[int]]
    free: Dict[int, FrozenSet[int]]

    @property
    def peelable(self) -> bool:
        return self.ordering is not None


def free_variables(f: Formula, ordering: Sequence[int]) -> Dict[int, FrozenSet[int]]:
    """Per constraint, the variables that occur in no earlier constraint."""
    seen: Set[int] = set()
    free: Dict[int, FrozenSet[int]] = {}
    for i in ordering:
        free[i] = frozenset(v for v in f.constraints[i].vars if v not in seen)
        seen.update(f.constraints[i].vars)
    return free


def free_private_ordering(f: Formula) -> OrderingReport:
    """
    Peel constraints that keep at least k-2 private variables in the
    remaining formula; the reversed peel order gives every constraint at
    least k-2 free variables.
    """
    need = f.k - 2
    residue = list(range(f.m))
    peeled: List[int] = []
    while residue:
        private = private_variables(f, residue)
        pick = next((i for i in residue if len(private[i]) >= need), None)
        if pick is None:
            return OrderingReport(None, private_variables(f), {})
        peeled.append(pick)
        residue.remove(pick)
    ordering = tuple(reversed(peeled))
    return OrderingReport(ordering, private_variables(f), free_variables(f, ordering))


def greedy_witness(f: Formula, ordering: Sequence[int]) -> Optional[Assignment]:
    """
    Satisfy the constraints one at a time in ``ordering``, fixing only the
    variables that are still free. Needs every relation to be free of
    implicates of length 1 or 2 and at most two bound variables per step.
    """
    if f.t != 2:
        raise UnsupportedDomain("greedy witnesses need a boolean domain")
    if sorted(ordering) != list(range(f.m)):
        raise PreconditionError("ordering must list every constraint exactly once")
    for c in f.constraints:
        if has_short_implicates(c.table, c.k):
            raise PreconditionError(f"constraint {c.label()} has an implicate of length <= 2")

    values = [UNASSIGNED] * f.n
    for i in ordering:
        c = f.constraints[i]
        bound = [p for p, v in enumerate(c.vars) if values[v] != UNASSIGNED]
        if len(bound) > 2:
            raise PreconditionError(
                f"constraint {c.label()} has {len(bound)} bound variables"
            )
        open_positions = [p for p in range(c.k) if p not in bound]
        for guess in itertools.product((0, 1), repeat=len(open_positions)):
            tuple_values = [values[v] for v in c.vars]
            for p, d in zip(open_positions, guess):
                tuple_values[p] = d
            if c.accepts(tuple_values):
                for p, d in zip(open_positions, guess):
                    values[c.vars[p]] = d
                break
        else:
            return None
    witness = Assignment(tuple(0 if v == UNASSIGNED else v for v in values))
    return witness if f.satisfied_by(witness) else None


# Entailment measure


def mu(
    f: Formula,
    clause: Clause,
    budget_m: int = 14,
    row_limit: int = 2 ** 20,
) -> Union[int, float]:
    """
    Smallest number of constraints of F that entail ``clause``;
    ``math.inf`` when even F does not.
    """
    if f.t != 2:
        raise UnsupportedDomain("mu needs a boolean domain")
    if f.m > budget_m:
        raise BudgetExceeded("mu brute force (m)", f.m, budget_m)
    if clause.is_tautology:
        return 0
    variables = sorted(f.variables() | clause.variables())
    table = AssignmentTable(f, variables, row_limit)
    falsifying = np.ones(table.rows, dtype=bool)
    for v, positive in clause.pairs():
        falsifying &= table.column(v) == (0 if positive else 1)

    def bits(rows: np.ndarray) -> int:
        return int.from_bytes(np.packbits(rows[falsifying]).tobytes(), "big")

    all_rows = bits(np.ones(table.rows, dtype=bool))
    masks = [bits(table.satisfied(c)) for c in f.constraints]
    for size in range(0, f.m + 1):
        for combo in itertools.combinations(range(f.m), size):
            alive = all_rows
            for i in combo:
                alive &= masks[i]
                if not alive:
                    break
            if not alive:
                return size
    return math.inf
