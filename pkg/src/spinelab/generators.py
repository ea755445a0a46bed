"""
Seeded samplers for random CSP instances, the negation model and random
graphs, plus named template families.

Every draw comes from a PCG64 generator keyed by (seed, stream), so one
instance of a batch never depends on how many others were drawn before it.
"""

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Set, Tuple, Union

import numpy as np
from rich.console import Console

from .config import GenModel, Problem
from .errors import InvalidSpec, UnsupportedDomain
from .model import (
    Constraint,
    ConstraintTemplate,
    Formula,
    Graph,
    TemplateSet,
    sign_string,
    signed_table,
)

# Rich console for warnings, kept off stdout
console = Console(stderr=True)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, stream) pair."""
    if seed < 0 or stream < 0:
        raise InvalidSpec("seed and stream index must be non-negative")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,)))
    )


def constraints_for_density(c: float, n: int) -> int:
    """m = round(c * n), halves rounded up."""
    return int(math.floor(c * n + 0.5))


def edges_for_mean_degree(c: float, n: int) -> int:
    """m = round(c * n / 2), halves rounded up."""
    return int(math.floor(c * n / 2 + 0.5))


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one random draw."""

    model: GenModel
    n: int
    m: int
    template_set: Optional[TemplateSet] = None
    seed: int = 0
    stream: int = 0

    def __post_init__(self) -> None:
        if self.m < 0:
            raise InvalidSpec(f"m must be non-negative, got {self.m}")
        if self.n < 0:
            raise InvalidSpec(f"n must be non-negative, got {self.n}")
        if self.model == GenModel.GRAPH:
            if self.m > self.n * (self.n - 1) // 2:
                raise InvalidSpec(f"a simple graph on {self.n} vertices has at most "
                                  f"{self.n * (self.n - 1) // 2} edges, asked for {self.m}")
        elif self.template_set is None:
            raise InvalidSpec(f"model {self.model.value} needs a template set")

    @property
    def density(self) -> float:
        return self.m / self.n if self.n else 0.0


def _draw_constraints(spec: GenSpec, signed: bool) -> Formula:
    ts = spec.template_set
    assert ts is not None
    if spec.n < ts.k:
        raise InvalidSpec(f"need n >= k (n={spec.n}, k={ts.k})")
    rng = make_rng(spec.seed, spec.stream)
    constraints = []
    for _ in range(spec.m):
        hyperedge = np.sort(rng.choice(spec.n, size=ts.k, replace=False))
        ordered = tuple(int(v) for v in rng.permutation(hyperedge))
        template = ts.templates[int(rng.integers(len(ts)))]
        signs = None
        if signed:
            signs = tuple(bool(b) for b in rng.integers(0, 2, size=ts.k) == 1)
        constraints.append(Constraint(template, ordered, signs))
    return Formula(spec.n, tuple(constraints), ts)


def gen_csp(spec: GenSpec) -> Formula:
    """
    Random CSP(C) under the counting model.

    Each of the m constraints picks a uniform k-subset of variables, a
    uniform ordering of it and a uniform template, with replacement.
    """
    if spec.model != GenModel.CSP_COUNTING:
        raise InvalidSpec(f"gen_csp expects model csp-counting, got {spec.model.value}")
    return _draw_constraints(spec, signed=False)


def gen_sat_neg(spec: GenSpec) -> Formula:
    """gen_csp plus an independent fair-coin polarity per variable occurrence."""
    if spec.model != GenModel.SAT_NEG:
        raise InvalidSpec(f"gen_sat_neg expects model sat-neg, got {spec.model.value}")
    assert spec.template_set is not None
    if spec.template_set.t != 2:
        raise UnsupportedDomain("the negation model needs a boolean domain (t = 2)")
    if not is_good(spec.template_set):
        console.print(
            "⚠️  [yellow]Template set is not good: signed variants coincide[/yellow]"
        )
    return _draw_constraints(spec, signed=True)


def generate(spec: GenSpec) -> Formula:
    """Dispatch a CSP spec to its sampler."""
    if spec.model == GenModel.SAT_NEG:
        return gen_sat_neg(spec)
    if spec.model == GenModel.CSP_COUNTING:
        return gen_csp(spec)
    raise InvalidSpec("graph specs are drawn with gen_graph")


def _sign_patterns(k: int) -> List[Tuple[bool, ...]]:
    return [tuple(p) for p in itertools.product((True, False), repeat=k)]


def closure(ts: TemplateSet) -> TemplateSet:
    """All sign-pattern variants of every template, deduplicated by relation."""
    if ts.t != 2:
        raise UnsupportedDomain("closure needs a boolean domain (t = 2)")
    seen: Set[Tuple[bool, ...]] = set()
    variants = []
    for template in ts:
        for signs in _sign_patterns(ts.k):
            table = signed_table(template, signs)
            if table in seen:
                continue
            seen.add(table)
            variants.append(
                ConstraintTemplate(f"{template.id}[{sign_string(signs)}]", 2, ts.k, table)
            )
    return TemplateSet(2, ts.k, tuple(variants))


def is_good(ts: TemplateSet) -> bool:
    """True iff all |C| * 2^k signed variants are pairwise distinct relations."""
    if ts.t != 2:
        raise UnsupportedDomain("goodness is defined for boolean template sets")
    tables = {signed_table(t, s) for t in ts for s in _sign_patterns(ts.k)}
    return len(tables) == len(ts) * 2 ** ts.k


FamilyName = Union[Problem, str]


def named_family(name: FamilyName, k: int = 3) -> TemplateSet:
    """Template sets for k-SAT, 1-in-k-SAT, k-XOR-SAT and 2-SAT."""
    try:
        problem = Problem(name)
    except ValueError:
        raise InvalidSpec(f"unknown template family {name!r}") from None

    if problem == Problem.TWO_SAT:
        if k != 2:
            raise InvalidSpec(f"2-sat has arity 2, got k={k}")
        problem = Problem.K_SAT
    if k < 2:
        raise InvalidSpec(f"arity must be at least 2, got k={k}")

    if problem == Problem.K_SAT:
        template = ConstraintTemplate.from_predicate("or", 2, k, lambda v: any(v))
    elif problem == Problem.ONE_IN_K_SAT:
        template = ConstraintTemplate.from_predicate("one", 2, k, lambda v: sum(v) == 1)
    elif problem == Problem.K_XOR_SAT:
        template = ConstraintTemplate.from_predicate("xor", 2, k, lambda v: sum(v) % 2 == 0)
    else:
        raise InvalidSpec(f"{problem.value} is a graph problem, not a template family")
    return TemplateSet(2, k, (template,))


def gen_graph(n: int, m: int, seed: int = 0, stream: int = 0) -> Graph:
    """Uniform simple graph with exactly m edges (rejection of repeats)."""
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise InvalidSpec(f"a simple graph on {n} vertices has at most {total} edges, "
                          f"asked for {m}")
    rng = make_rng(seed, stream)
    dense = m > total // 2
    wanted = total - m if dense else m
    chosen: Set[Tuple[int, int]] = set()
    while len(chosen) < wanted:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v:
            continue
        chosen.add((min(u, v), max(u, v)))
    if dense:
        edges = frozenset(e for e in itertools.combinations(range(n), 2) if e not in chosen)
    else:
        edges = frozenset(chosen)
    return Graph(n, edges)
