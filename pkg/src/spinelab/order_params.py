"""
Exact backbone and spine order parameters.

Both are computed on an :class:`AssignmentTable` of all t^n assignments:

* C is in the constraint backbone iff every optimal assignment of F
  violates C.
* C is in the constraint spine iff some maximal satisfiable subformula Xi
  of F has no solution that also satisfies C. Maximal satisfiable
  subformulas are the maximal "satisfied sets" over all assignments, and
  the solutions of such a Xi are exactly the rows whose satisfied set
  equals it.

The second point covers both cases of the spine contract: for a
satisfiable F the only maximal satisfied set is F itself.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .config import BranchingPolicy, Budgets
from .errors import BudgetExceeded, UnsupportedDomain
from .model import (
    Constraint,
    ConstraintUniverse,
    Formula,
    Graph,
    coloring_formula,
)
from .solver import (
    AssignmentTable,
    decide,
    satisfiable_with,
)

Pair = Tuple[int, int]
Literal = Tuple[int, bool]


def _fraction_line(name: str, value: Fraction) -> str:
    return f"fraction {name} {value.numerator}/{value.denominator} {float(value):.6f}"


@dataclass(frozen=True)
class BackboneReport:
    n: int
    universe_size: int
    opt_value: int
    variables: FrozenSet[int]
    constraints: Tuple[Constraint, ...]

    @property
    def f_B(self) -> Fraction:
        return Fraction(len(self.variables), self.n) if self.n else Fraction(0)

    @property
    def f_BC(self) -> Fraction:
        if not self.universe_size:
            return Fraction(0)
        return Fraction(len(self.constraints), self.universe_size)

    def to_text(self) -> str:
        lines = [f"opt {self.opt_value}"]
        lines += [f"c {c.label()}" for c in self.constraints]
        lines += [f"v {v + 1}" for v in sorted(self.variables)]
        lines += [_fraction_line("f_B", self.f_B), _fraction_line("f_BC", self.f_BC)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SpineReport:
    n: int
    universe_size: int
    satisfiable: bool
    variables: FrozenSet[int]
    constraints: Tuple[Constraint, ...]
    literals: Optional[FrozenSet[Literal]] = None

    @property
    def f_S(self) -> Fraction:
        return Fraction(len(self.variables), self.n) if self.n else Fraction(0)

    @property
    def f_SC(self) -> Fraction:
        if not self.universe_size:
            return Fraction(0)
        return Fraction(len(self.constraints), self.universe_size)

    def to_text(self) -> str:
        lines = [f"satisfiable {int(self.satisfiable)}"]
        lines += [f"c {c.label()}" for c in self.constraints]
        lines += [f"v {v + 1}" for v in sorted(self.variables)]
        if self.literals is not None:
            lines += [
                f"l {v + 1 if positive else -(v + 1)}"
                for v, positive in sorted(self.literals)
            ]
        lines += [_fraction_line("f_S", self.f_S), _fraction_line("f_SC", self.f_SC)]
        return "\n".join(lines) + "\n"


def _exact_table(f: Formula, budgets: Budgets) -> AssignmentTable:
    if f.n > budgets.budget_n:
        raise BudgetExceeded("exact order parameters (n)", f.n, budgets.budget_n)
    return AssignmentTable(f, row_limit=budgets.exhaustive_rows)


def _universe(f: Formula, u: Optional[ConstraintUniverse]) -> ConstraintUniverse:
    if u is None:
        return ConstraintUniverse.for_formula(f)
    if u.n != f.n or u.template_set != f.template_set:
        raise ValueError("universe and formula must share n and the template set")
    return u


class MaximalGroups:
    """Rows grouped by satisfied set, keeping only the maximal sets."""

    def __init__(self, table: AssignmentTable):
        masks = table.masks()
        unique, inverse = np.unique(masks, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        popcount = np.unpackbits(unique, axis=1).sum(axis=1)
        accepted = np.empty_like(unique)
        count = 0
        group_of = np.full(len(unique), -1, dtype=np.int64)
        for g in np.argsort(-popcount, kind="stable"):
            candidate = unique[g]
            if count and np.any(np.all((candidate & ~accepted[:count]) == 0, axis=1)):
                continue
            accepted[count] = candidate
            group_of[g] = count
            count += 1
        self.count = count
        self.row_group = group_of[inverse]
        self.in_maximal = self.row_group >= 0

    def refuted_somewhere(self, rows: np.ndarray) -> bool:
        """True iff some maximal group has no row inside ``rows``."""
        hits = np.bincount(self.row_group[self.in_maximal & rows], minlength=self.count)
        return bool(np.any(hits == 0))


def backbone(
    f: Formula,
    u: Optional[ConstraintUniverse] = None,
    budgets: Optional[Budgets] = None,
) -> BackboneReport:
    """B_C = {C : opt(F + C) > opt(F)} and B = union of their variables."""
    budgets = budgets or Budgets()
    u = _universe(f, u)
    table = _exact_table(f, budgets)
    counts = table.violations()
    best = int(counts.min())
    optimal = counts == best
    members = [c for c in u if not np.any(table.satisfied(c)[optimal])]
    variables = frozenset(v for c in members for v in c.vars)
    return BackboneReport(f.n, len(u), best, variables, tuple(members))


def _literal_rows(table: AssignmentTable, var: int, positive: bool) -> np.ndarray:
    return table.column(var) == (1 if positive else 0)


def spine(
    f: Formula,
    u: Optional[ConstraintUniverse] = None,
    budgets: Optional[Budgets] = None,
    with_literals: bool = False,
) -> SpineReport:
    """
    S_C = {C : some satisfiable Xi in F has Xi + C unsatisfiable};
    S = union of Var(C) over S_C.
    """
    budgets = budgets or Budgets()
    u = _universe(f, u)
    table = _exact_table(f, budgets)
    groups = MaximalGroups(table)
    satisfiable = bool(np.any(table.violations() == 0))
    members = [c for c in u if groups.refuted_somewhere(table.satisfied(c))]
    variables = frozenset(v for c in members for v in c.vars)
    literals = None
    if with_literals:
        literals = _literal_spine(f, table, groups)
    return SpineReport(f.n, len(u), satisfiable, variables, tuple(members), literals)


def _literal_spine(
    f: Formula, table: AssignmentTable, groups: MaximalGroups
) -> FrozenSet[Literal]:
    if f.t != 2:
        raise UnsupportedDomain("the literal spine needs a boolean domain (t = 2)")
    return frozenset(
        (var, positive)
        for var in range(f.n)
        for positive in (True, False)
        if groups.refuted_somewhere(_literal_rows(table, var, positive))
    )


def literal_spine(f: Formula, budgets: Optional[Budgets] = None) -> FrozenSet[Literal]:
    """
    Literals W such that some satisfiable subformula forces W false.

    Literals are (variable, polarity) pairs; (x, True) is the literal x.
    """
    if f.t != 2:
        raise UnsupportedDomain("the literal spine needs a boolean domain (t = 2)")
    budgets = budgets or Budgets()
    table = _exact_table(f, budgets)
    return _literal_spine(f, table, MaximalGroups(table))


@dataclass(frozen=True)
class SpineBound:
    """A certified subset of the variable spine for instances beyond the exact budget."""

    n: int
    satisfiable: bool
    variables: FrozenSet[int]
    method: str = "mus-bound"

    @property
    def f_S(self) -> Fraction:
        return Fraction(len(self.variables), self.n) if self.n else Fraction(0)


def _violable(f: Formula, frozen: Dict[int, int], combo: Sequence[int], signed: bool) -> bool:
    values = [frozen[v] for v in combo]
    for template in f.template_set:
        if signed and not template.is_full:
            return True
        for order in itertools.permutations(range(len(combo))):
            if not template.accepts([values[i] for i in order]):
                return True
    return False


def spine_lower_bound(
    f: Formula, policy: BranchingPolicy = BranchingPolicy.MOMS
) -> SpineBound:
    """
    Variables certainly in S(F).

    Unsatisfiable F: the variables of one MUS (every variable of a minimally
    unsatisfiable formula is in its spine, and the spine only grows with F).
    Satisfiable F: variables of universe constraints that every solution
    violates, found among the frozen variables.
    """
    from .structure import mus_extract

    decision = decide(f, policy)
    if not decision.satisfiable:
        core = mus_extract(f, policy).subformula
        return SpineBound(f.n, False, core.variables())

    assert decision.witness is not None
    witness = decision.witness
    frozen: Dict[int, int] = {}
    for var in sorted(f.variables()):
        others = [d for d in range(f.t) if d != witness[var]]
        if all(not satisfiable_with(f, {var: d}) for d in others):
            frozen[var] = witness[var]

    covered: Set[int] = set()
    for combo in itertools.combinations(sorted(frozen), f.k):
        if set(combo) <= covered:
            continue
        if _violable(f, frozen, combo, f.is_signed):
            covered.update(combo)
    return SpineBound(f.n, True, frozenset(covered))


def _pairs(constraints: Sequence[Constraint]) -> FrozenSet[Pair]:
    return frozenset((min(c.vars), max(c.vars)) for c in constraints)


def col3_spine(g: Graph, budgets: Optional[Budgets] = None) -> FrozenSet[Pair]:
    """
    Pairs (x, y) such that some 3-colorable subgraph H of G turns
    non-3-colorable when the edge (x, y) is added.
    """
    if g.n < 2:
        return frozenset()
    f = coloring_formula(g, 3)
    report = spine(f, ConstraintUniverse(g.n, f.template_set), budgets)
    return _pairs(report.constraints)


def col3_backbone(g: Graph, budgets: Optional[Budgets] = None) -> BackboneReport:
    """Constraint backbone of the 3-coloring CSP of ``g``."""
    f = coloring_formula(g, 3)
    return backbone(f, ConstraintUniverse(g.n, f.template_set), budgets)


def pair_fraction(pairs: FrozenSet[Pair], n: int) -> Fraction:
    total = n * (n - 1) // 2
    return Fraction(len(pairs), total) if total else Fraction(0)


def _require_even(g: Graph) -> None:
    if g.n % 2:
        raise ValueError(f"graph bipartition needs an even vertex count, got {g.n}")


def subset_sums(sizes: Sequence[int]) -> int:
    """Bitset of achievable subset sums."""
    reach = 1
    for size in sizes:
        reach |= reach << size
    return reach


def gbp_decide(g: Graph) -> bool:
    """True iff the components can be packed into two equal halves."""
    _require_even(g)
    sizes = [len(c) for c in g.components()]
    return bool(subset_sums(sizes) >> (g.n // 2) & 1)


def giant_component_pairs(g: Graph) -> FrozenSet[Pair]:
    """All pairs inside a component larger than n/2 (always part of the GBP spine)."""
    pairs: Set[Pair] = set()
    for component in g.components():
        if 2 * len(component) > g.n:
            pairs.update(itertools.combinations(component, 2))
    return frozenset(pairs)


def _connected_sets(root: int, allowed: FrozenSet[int], adj: List[List[int]]):
    """Every connected vertex set inside ``allowed`` that contains ``root``, once."""

    def grow(current: FrozenSet[int], frontier: FrozenSet[int], banned: FrozenSet[int]):
        yield current
        candidates = sorted(frontier)
        for i, v in enumerate(candidates):
            new_banned = banned | frozenset(candidates[:i])
            new_frontier = (frontier - frozenset(candidates[: i + 1])) | frozenset(
                w for w in adj[v]
                if w in allowed and w not in current and w not in new_banned and w != v
            )
            yield from grow(current | {v}, new_frontier, new_banned)

    start = frozenset(w for w in adj[root] if w in allowed)
    yield from grow(frozenset([root]), start, frozenset())


def _connected_partitions(
    vertices: FrozenSet[int], adj: List[List[int]], memo: Dict[FrozenSet[int], list]
) -> List[Tuple[FrozenSet[int], ...]]:
    if not vertices:
        return [()]
    if vertices in memo:
        return memo[vertices]
    root = min(vertices)
    out: List[Tuple[FrozenSet[int], ...]] = []
    for block in _connected_sets(root, vertices, adj):
        for rest in _connected_partitions(vertices - block, adj, memo):
            out.append((block,) + rest)
    memo[vertices] = out
    return out


def _bad_merges(sizes: Tuple[int, ...], half: int) -> Optional[Set[Tuple[int, int]]]:
    """
    For a yes-instance block-size list, the index pairs whose merge turns
    it into a no-instance; None for a no-instance.
    """
    if not subset_sums(sizes) >> half & 1:
        return None
    bad: Set[Tuple[int, int]] = set()
    for a, b in itertools.combinations(range(len(sizes)), 2):
        merged = [s for i, s in enumerate(sizes) if i not in (a, b)]
        merged.append(sizes[a] + sizes[b])
        if not subset_sums(merged) >> half & 1:
            bad.add((a, b))
    return bad


def gbp_spine(
    g: Graph,
    budgets: Optional[Budgets] = None,
    partition_limit: int = 200_000,
) -> FrozenSet[Pair]:
    """
    Pairs (u, v) such that some zero-cut-bisectable subgraph H of G stops
    being bisectable when (u, v) is added.

    Only the component partition of H matters, so the search runs over
    partitions of V into blocks that are connected in G.
    """
    budgets = budgets or Budgets()
    _require_even(g)
    if g.n > budgets.gbp_spine_n:
        raise BudgetExceeded("exact GBP spine (n)", g.n, budgets.gbp_spine_n)
    adj = g.adjacency()
    memo: Dict[FrozenSet[int], list] = {}
    per_component = [
        _connected_partitions(frozenset(c), adj, memo) for c in g.components()
    ]
    total = 1
    for options in per_component:
        total *= len(options)
    if total > partition_limit:
        raise BudgetExceeded("connected partitions", total, partition_limit)

    half = g.n // 2
    found: Set[Pair] = set(giant_component_pairs(g))
    verdicts: Dict[Tuple[int, ...], Optional[Set[Tuple[int, int]]]] = {}
    for choice in itertools.product(*per_component):
        blocks = [block for part in choice for block in part]
        order = sorted(range(len(blocks)), key=lambda i: (len(blocks[i]), min(blocks[i])))
        blocks = [blocks[i] for i in order]
        sizes = tuple(len(b) for b in blocks)
        if sizes not in verdicts:
            verdicts[sizes] = _bad_merges(sizes, half)
        bad = verdicts[sizes]
        if not bad:
            continue
        for a, b in bad:
            for u in blocks[a]:
                for v in blocks[b]:
                    found.add((min(u, v), max(u, v)))
    return frozenset(found)


@dataclass(frozen=True)
class PairBackbone:
    """Pairs whose added edge raises the optimum, with the optimum and its multiplicity."""

    fraction: Fraction
    pairs: FrozenSet[Pair]
    optimum: int
    optima: int


def balanced_sides(n: int) -> np.ndarray:
    """All balanced 0/1 side vectors with vertex 0 on side 0."""
    rows = [
        combo for combo in itertools.combinations(range(1, n), n // 2)
    ]
    sides = np.zeros((len(rows), n), dtype=np.int8)
    for r, combo in enumerate(rows):
        sides[r, list(combo)] = 1
    return sides


def cut_sizes(g: Graph, sides: np.ndarray) -> np.ndarray:
    cuts = np.zeros(len(sides), dtype=np.int32)
    for u, v in g.sorted_edges():
        cuts += sides[:, u] != sides[:, v]
    return cuts


def always_separated(sides: np.ndarray, n: int) -> FrozenSet[Pair]:
    """Pairs on different sides in every row of ``sides``."""
    pairs: Set[Pair] = set()
    for u in range(n):
        separated = np.all(sides[:, u][:, None] != sides, axis=0)
        pairs.update((u, int(v)) for v in np.nonzero(separated)[0] if v > u)
    return frozenset(pairs)


def gbp_backbone_exact(g: Graph, budgets: Optional[Budgets] = None) -> PairBackbone:
    """Pairs separated by every minimum balanced cut, by exact enumeration."""
    budgets = budgets or Budgets()
    _require_even(g)
    if g.n > budgets.gbp_exact_n:
        raise BudgetExceeded("exact GBP enumeration (n)", g.n, budgets.gbp_exact_n)
    if g.n == 0:
        return PairBackbone(Fraction(0), frozenset(), 0, 1)
    sides = balanced_sides(g.n)
    cuts = cut_sizes(g, sides)
    best = int(cuts.min())
    optimal = sides[cuts == best]
    pairs = always_separated(optimal, g.n)
    return PairBackbone(pair_fraction(pairs, g.n), pairs, best, int(len(optimal)))
