"""
Extremal optimization for 3-coloring and graph bipartitioning, plus the
exact enumeration baselines it is checked against.

Configurations are stored canonically: colorings up to a permutation of the
colors (relabelled by first appearance), bipartitions up to swapping the two
sides (vertex 0 on side 0).
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np
from rich.console import Console

from .config import Budgets, EoConfig, EoProblem
from .errors import BudgetExceeded
from .generators import make_rng
from .model import Graph
from .order_params import (
    Pair,
    PairBackbone,
    always_separated,
    balanced_sides,
    cut_sizes,
    pair_fraction,
)

# Rich console for warnings, kept off stdout
console = Console(stderr=True)

Configuration = Tuple[int, ...]

PROTOCOL = "optima-intersection (reconstructed)"
CHUNK_ROWS = 1 << 18


def canonical_coloring(colors) -> Configuration:
    """Relabel colors in order of first appearance."""
    mapping: Dict[int, int] = {}
    out = []
    for c in colors:
        c = int(c)
        if c not in mapping:
            mapping[c] = len(mapping)
        out.append(mapping[c])
    return tuple(out)


def canonical_sides(sides) -> Configuration:
    """Swap sides so that vertex 0 sits on side 0."""
    values = tuple(int(s) for s in sides)
    if values and values[0] == 1:
        return tuple(1 - s for s in values)
    return values


def canonical(problem: EoProblem, configuration) -> Configuration:
    if problem == EoProblem.COL3:
        return canonical_coloring(configuration)
    return canonical_sides(configuration)


@dataclass(frozen=True)
class GroundStatePool:
    """Distinct best-cost configurations found for one graph."""

    problem: EoProblem
    n: int
    best_cost: int
    configurations: Tuple[Configuration, ...]
    restarts: int = 0
    truncated: bool = False
    exhaustive: bool = False

    def __len__(self) -> int:
        return len(self.configurations)

    def to_text(self) -> str:
        lines = [
            f"cost {self.best_cost} pool {len(self)} problem {self.problem.value} "
            f"truncated {int(self.truncated)} exhaustive {int(self.exhaustive)}"
        ]
        lines += ["".join(str(x) for x in config) for config in self.configurations]
        return "\n".join(lines) + "\n"


def _require_even(problem: EoProblem, n: int) -> None:
    if problem == EoProblem.GBP and n % 2:
        raise ValueError(f"graph bipartition needs an even vertex count, got {n}")


class _PoolCollector:
    """Keeps the lowest cost seen and the canonical configurations reaching it."""

    def __init__(self, problem: EoProblem, limit: int):
        self.problem = problem
        self.limit = limit
        self.best: Optional[int] = None
        self.found: Set[Configuration] = set()
        self.truncated = False

    def offer(self, cost: int, configuration) -> None:
        if self.best is not None and cost > self.best:
            return
        key = canonical(self.problem, configuration)
        if self.best is None or cost < self.best:
            self.best = cost
            self.found = {key}
            self.truncated = False
        elif key not in self.found:
            if len(self.found) >= self.limit:
                self.truncated = True
                return
            self.found.add(key)


def _rank_cdf(size: int, tau: float) -> np.ndarray:
    weights = np.arange(1, size + 1, dtype=float) ** -tau
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _pick(order: np.ndarray, cdf: np.ndarray, u: float) -> int:
    rank = min(int(np.searchsorted(cdf, u, side="right")), len(order) - 1)
    return int(order[rank])


def _eo_col3_restart(
    adj: List[List[int]], n: int, cfg: EoConfig, stream: int, pool: _PoolCollector
) -> None:
    rng = make_rng(cfg.seed, stream)
    colors = rng.integers(0, 3, size=n)
    fitness = np.zeros(n, dtype=np.int64)
    for v in range(n):
        fitness[v] = sum(1 for w in adj[v] if colors[w] == colors[v])
    cost = int(fitness.sum()) // 2
    pool.offer(cost, colors)
    if n == 0:
        return

    steps = cfg.steps_for(n)
    cdf = _rank_cdf(n, cfg.tau)
    draws = rng.random(steps)
    shifts = rng.integers(1, 3, size=steps)
    for step in range(steps):
        # worst fitness first; stable sort breaks ties by vertex index
        order = np.argsort(-fitness, kind="stable")
        v = _pick(order, cdf, draws[step])
        old = int(colors[v])
        new = (old + int(shifts[step])) % 3
        for w in adj[v]:
            if colors[w] == old:
                fitness[w] -= 1
                fitness[v] -= 1
                cost -= 1
            elif colors[w] == new:
                fitness[w] += 1
                fitness[v] += 1
                cost += 1
        colors[v] = new
        pool.offer(cost, colors)


def _eo_gbp_restart(
    adj: List[List[int]], n: int, cfg: EoConfig, stream: int, pool: _PoolCollector
) -> None:
    rng = make_rng(cfg.seed, stream)
    sides = np.zeros(n, dtype=np.int8)
    sides[rng.permutation(n)[: n // 2]] = 1
    fitness = np.zeros(n, dtype=np.int64)
    for v in range(n):
        fitness[v] = sum(1 for w in adj[v] if sides[w] != sides[v])
    cost = int(fitness.sum()) // 2
    pool.offer(cost, sides)
    if n < 2:
        return

    def flip(x: int) -> None:
        nonlocal cost
        for w in adj[x]:
            change = -1 if sides[w] != sides[x] else 1
            fitness[w] += change
            fitness[x] += change
            cost += change
        sides[x] ^= 1

    steps = cfg.steps_for(n)
    cdf = _rank_cdf(n // 2, cfg.tau)
    draws = rng.random((steps, 2))
    for step in range(steps):
        chosen = []
        for side in (0, 1):
            members = np.nonzero(sides == side)[0]
            order = members[np.argsort(-fitness[members], kind="stable")]
            chosen.append(_pick(order, cdf, draws[step, side]))
        flip(chosen[0])
        flip(chosen[1])
        pool.offer(cost, sides)


def eo_sample(g: Graph, cfg: Optional[EoConfig] = None) -> GroundStatePool:
    """
    Run ``cfg.restarts`` independent extremal-optimization walks on ``g``.

    Each step ranks the elements by local fitness (violated or cut incident
    edges, worst first) and updates the element of rank r, drawn with
    probability proportional to r^-tau. 3-coloring recolors that vertex to
    one of the other two colors; bipartitioning swaps one vertex from each
    side so the halves stay balanced. Restart i draws from stream i.
    """
    cfg = cfg or EoConfig()
    _require_even(cfg.problem, g.n)
    adj = g.adjacency()
    pool = _PoolCollector(cfg.problem, cfg.pool_limit)
    run = _eo_col3_restart if cfg.problem == EoProblem.COL3 else _eo_gbp_restart
    for restart in range(cfg.restarts):
        run(adj, g.n, cfg, restart, pool)
    if pool.truncated:
        console.print(
            f"⚠️  [yellow]Ground-state pool truncated at {cfg.pool_limit} "
            f"configurations[/yellow]"
        )
    assert pool.best is not None
    return GroundStatePool(
        cfg.problem,
        g.n,
        pool.best,
        tuple(sorted(pool.found)),
        restarts=cfg.restarts,
        truncated=pool.truncated,
    )


# Exact enumeration


def _coloring_chunks(n: int, chunk: int = CHUNK_ROWS):
    """All 3-colorings with vertex 0 colored 0, in blocks of rows."""
    free = n - 1
    total = 3 ** free
    powers = 3 ** np.arange(free - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        rows = np.zeros((len(codes), n), dtype=np.int8)
        if free:
            rows[:, 1:] = (codes[:, None] // powers[None, :]) % 3
        yield rows


def _monochromatic_edges(g: Graph, rows: np.ndarray) -> np.ndarray:
    cost = np.zeros(len(rows), dtype=np.int32)
    for u, v in g.sorted_edges():
        cost += rows[:, u] == rows[:, v]
    return cost


def _canonical_rows(rows: np.ndarray) -> np.ndarray:
    """Vectorized first-appearance relabelling for rows with column 0 == 0."""
    rows = rows.copy()
    nonzero = rows != 0
    first = nonzero.argmax(axis=1)
    leading = rows[np.arange(len(rows)), first]
    swap = nonzero.any(axis=1) & (leading == 2)
    rows[swap] = (3 - rows[swap]) % 3
    return rows


def _optimal_colorings(g: Graph, budgets: Budgets):
    """Yield (best cost so far, reset flag, optimal rows of the block)."""
    if g.n > budgets.col3_exact_n:
        raise BudgetExceeded("exact 3-coloring enumeration (n)", g.n, budgets.col3_exact_n)
    best: Optional[int] = None
    for rows in _coloring_chunks(g.n):
        cost = _monochromatic_edges(g, rows)
        low = int(cost.min())
        if best is not None and low > best:
            continue
        reset = best is None or low < best
        best = low
        yield best, reset, rows[cost == best]


def col3_backbone_exact(g: Graph, budgets: Optional[Budgets] = None) -> PairBackbone:
    """
    Vertex pairs monochromatic in every minimum-conflict 3-coloring, by
    exhaustive enumeration with vertex 0 pinned to color 0.
    """
    budgets = budgets or Budgets()
    if g.n == 0:
        return PairBackbone(Fraction(0), frozenset(), 0, 1)
    same = np.ones((g.n, g.n), dtype=bool)
    best = 0
    optima = 0
    for best, reset, rows in _optimal_colorings(g, budgets):
        if reset:
            same[:] = True
            optima = 0
        optima += len(rows)
        for u in range(g.n):
            same[u] &= np.all(rows[:, u][:, None] == rows, axis=0)
    pairs = frozenset((u, v) for u, v in itertools.combinations(range(g.n), 2) if same[u, v])
    # pinning vertex 0 keeps a third of the labelled colorings
    return PairBackbone(pair_fraction(pairs, g.n), pairs, best, optima * 3)


def exact_ground_states(
    g: Graph,
    problem: EoProblem = EoProblem.COL3,
    budgets: Optional[Budgets] = None,
    limit: int = 100_000,
) -> GroundStatePool:
    """Every canonical optimum of ``g``, as an exhaustive pool."""
    budgets = budgets or Budgets()
    _require_even(problem, g.n)
    if g.n == 0:
        return GroundStatePool(problem, 0, 0, ((),), exhaustive=True)

    if problem == EoProblem.GBP:
        if g.n > budgets.gbp_exact_n:
            raise BudgetExceeded("exact GBP enumeration (n)", g.n, budgets.gbp_exact_n)
        sides = balanced_sides(g.n)
        cuts = cut_sizes(g, sides)
        best = int(cuts.min())
        optimal = sides[cuts == best]
        if len(optimal) > limit:
            raise BudgetExceeded("exact ground-state pool", len(optimal), limit)
        configs = sorted(tuple(int(x) for x in row) for row in optimal)
        return GroundStatePool(problem, g.n, best, tuple(configs), exhaustive=True)

    collected: List[np.ndarray] = []
    best = 0
    for best, reset, rows in _optimal_colorings(g, budgets):
        if reset:
            collected = []
        collected.append(np.unique(_canonical_rows(rows), axis=0))
        if sum(len(block) for block in collected) > limit:
            raise BudgetExceeded("exact ground-state pool", limit + 1, limit)
    unique = np.unique(np.concatenate(collected), axis=0)
    configs = tuple(tuple(int(x) for x in row) for row in unique)
    return GroundStatePool(problem, g.n, best, configs, exhaustive=True)


@dataclass(frozen=True)
class BackboneEstimate:
    """Constraint-backbone fraction read off a ground-state pool."""

    fraction: Fraction
    pairs: FrozenSet[Pair]
    pool_size: int
    exhaustive: bool
    protocol: str = PROTOCOL

    def to_text(self) -> str:
        return (
            f"f_BC {self.fraction.numerator}/{self.fraction.denominator} "
            f"{float(self.fraction):.6f} pool {self.pool_size} "
            f"exhaustive {int(self.exhaustive)} protocol {self.protocol}\n"
        )


def backbone_estimate(pool: GroundStatePool) -> BackboneEstimate:
    """
    3-coloring: pairs monochromatic in every pooled coloring.
    Bipartitioning: pairs separated in every pooled partition.

    A pool missing some optima can only overestimate the exact fraction.
    """
    if not pool.configurations:
        raise ValueError("backbone estimation needs a nonempty pool")
    rows = np.array(pool.configurations, dtype=np.int8).reshape(len(pool), pool.n)
    if pool.problem == EoProblem.GBP:
        pairs = always_separated(rows, pool.n)
    else:
        pairs = frozenset(
            (u, v)
            for u, v in itertools.combinations(range(pool.n), 2)
            if np.all(rows[:, u] == rows[:, v])
        )
    return BackboneEstimate(
        pair_fraction(pairs, pool.n), pairs, len(pool), pool.exhaustive
    )
