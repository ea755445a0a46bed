"""
Core domain types: templates, constraints, formulas, assignments, graphs
and the constraint universe.

Tuples over D = {0..t-1} are indexed with the first coordinate most
significant, which is the order ``itertools.product(range(t), repeat=k)``
produces.
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import networkx as nx
from rich.console import Console

from .errors import ContractViolation, InvalidUniverse

# Rich console for warnings, kept off stdout
console = Console(stderr=True)

UNASSIGNED = -1

Values = Tuple[int, ...]
Key = Tuple[Tuple[int, ...], Tuple[bool, ...]]


def tuple_index(values: Sequence[int], t: int) -> int:
    """Map (d_1..d_k) to sum d_i * t^(k-i)."""
    index = 0
    for value in values:
        index = index * t + value
    return index


def index_tuple(index: int, t: int, k: int) -> Values:
    """Inverse of :func:`tuple_index`."""
    values = [0] * k
    for position in range(k - 1, -1, -1):
        index, values[position] = divmod(index, t)
    return tuple(values)


@dataclass(frozen=True)
class ConstraintTemplate:
    """A k-ary relation over {0..t-1} stored as a bit table of length t^k."""

    id: str
    t: int
    k: int
    table: Tuple[bool, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.t < 2 or self.k < 2:
            raise ValueError(f"template {self.id!r}: need t >= 2 and k >= 2")
        if len(self.table) != self.t ** self.k:
            raise ValueError(
                f"template {self.id!r}: table has {len(self.table)} entries, "
                f"expected {self.t ** self.k}"
            )

    @classmethod
    def from_tuples(
        cls, id: str, t: int, k: int, tuples: Iterable[Sequence[int]]
    ) -> "ConstraintTemplate":
        """Build a template from its satisfying tuples."""
        table = [False] * (t ** k)
        for values in tuples:
            if len(values) != k or any(v < 0 or v >= t for v in values):
                raise ValueError(f"template {id!r}: bad tuple {tuple(values)}")
            table[tuple_index(values, t)] = True
        return cls(id, t, k, tuple(table))

    @classmethod
    def from_predicate(
        cls, id: str, t: int, k: int, predicate: Callable[[Values], bool]
    ) -> "ConstraintTemplate":
        """Build a template from a predicate over value tuples."""
        return cls(
            id,
            t,
            k,
            tuple(bool(predicate(v)) for v in itertools.product(range(t), repeat=k)),
        )

    @property
    def size(self) -> int:
        """Number of satisfying tuples."""
        return sum(self.table)

    @property
    def is_empty(self) -> bool:
        return not any(self.table)

    @property
    def is_full(self) -> bool:
        return all(self.table)

    def accepts(self, values: Sequence[int]) -> bool:
        return self.table[tuple_index(values, self.t)]

    def sat_tuples(self) -> List[Values]:
        """Satisfying tuples in canonical index order."""
        return [
            index_tuple(i, self.t, self.k) for i, ok in enumerate(self.table) if ok
        ]

    def signed(self, signs: Sequence[bool], id: Optional[str] = None) -> "ConstraintTemplate":
        """Relation C(x^e1..x^ek): negative coordinates see their value flipped."""
        if self.t != 2:
            raise ValueError("sign patterns need a boolean domain")
        table = signed_table(self, tuple(signs))
        return ConstraintTemplate(id or f"{self.id}[{sign_string(signs)}]", 2, self.k, table)


def sign_string(signs: Sequence[bool]) -> str:
    return "".join("+" if s else "-" for s in signs)


@lru_cache(maxsize=None)
def signed_table(template: ConstraintTemplate, signs: Tuple[bool, ...]) -> Tuple[bool, ...]:
    """Bit table of the template with XOR-negation applied per coordinate."""
    if all(signs):
        return template.table
    k = template.k
    flip = 0
    for position, positive in enumerate(signs):
        if not positive:
            flip |= 1 << (k - 1 - position)
    return tuple(template.table[u ^ flip] for u in range(len(template.table)))


@dataclass(frozen=True)
class TemplateSet:
    """Domain size, arity and the nonempty list of templates C."""

    t: int
    k: int
    templates: Tuple[ConstraintTemplate, ...]

    def __post_init__(self) -> None:
        if self.t < 2 or self.k < 2:
            raise ValueError("template set needs t >= 2 and k >= 2")
        if not self.templates:
            raise ValueError("template set must contain at least one template")
        seen: Set[str] = set()
        for template in self.templates:
            if template.t != self.t or template.k != self.k:
                raise ValueError(
                    f"template {template.id!r} has (t={template.t}, k={template.k}), "
                    f"expected (t={self.t}, k={self.k})"
                )
            if template.id in seen:
                raise ValueError(f"duplicate template id {template.id!r}")
            seen.add(template.id)
            if template.is_empty or template.is_full:
                kind = "empty" if template.is_empty else "full"
                console.print(
                    f"⚠️  [yellow]Template {template.id!r} has an {kind} relation[/yellow]"
                )

    @classmethod
    def of(cls, *templates: ConstraintTemplate) -> "TemplateSet":
        first = templates[0]
        return cls(first.t, first.k, tuple(templates))

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self) -> Iterator[ConstraintTemplate]:
        return iter(self.templates)

    def get(self, template_id: str) -> ConstraintTemplate:
        for template in self.templates:
            if template.id == template_id:
                return template
        raise KeyError(f"unknown template id {template_id!r}")


@dataclass(frozen=True)
class Constraint:
    """A template applied to an ordered tuple of distinct variables."""

    template: ConstraintTemplate
    vars: Tuple[int, ...]
    signs: Optional[Tuple[bool, ...]] = None

    def __post_init__(self) -> None:
        if len(self.vars) != self.template.k:
            raise ValueError(
                f"constraint on {self.vars} does not match arity {self.template.k}"
            )
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"constraint variables must be distinct: {self.vars}")
        if self.signs is not None:
            if self.template.t != 2:
                raise ValueError("signed constraints need a boolean domain")
            if len(self.signs) != len(self.vars):
                raise ValueError("one sign per variable is required")

    @property
    def k(self) -> int:
        return len(self.vars)

    @property
    def table(self) -> Tuple[bool, ...]:
        """Effective relation over ``vars`` after applying the signs."""
        if self.signs is None:
            return self.template.table
        return signed_table(self.template, self.signs)

    def accepts(self, values: Sequence[int]) -> bool:
        """Whether the value tuple (in ``vars`` order) satisfies the constraint."""
        return self.table[tuple_index(values, self.template.t)]

    def key(self) -> Key:
        """Semantic identity: variable set plus satisfying set over it."""
        return semantic_key(self)

    def label(self) -> str:
        """Canonical one-line encoding, 1-indexed like instance files."""
        text = f"{self.template.id} " + " ".join(str(v + 1) for v in self.vars)
        if self.signs is not None:
            text += " " + " ".join("+" if s else "-" for s in self.signs)
        return text


@lru_cache(maxsize=None)
def semantic_key(c: Constraint) -> Key:
    t, k = c.template.t, c.k
    order = sorted(range(k), key=lambda i: c.vars[i])
    table = c.table
    canonical = [False] * len(table)
    for index, ok in enumerate(table):
        if ok:
            values = index_tuple(index, t, k)
            canonical[tuple_index([values[i] for i in order], t)] = True
    return tuple(sorted(c.vars)), tuple(canonical)


@dataclass(frozen=True)
class Assignment:
    """Values per variable; UNASSIGNED marks a variable left open."""

    values: Tuple[int, ...]

    @classmethod
    def empty(cls, n: int) -> "Assignment":
        return cls((UNASSIGNED,) * n)

    @classmethod
    def of(cls, values: Iterable[int]) -> "Assignment":
        return cls(tuple(int(v) for v in values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, var: int) -> int:
        return self.values[var]

    @property
    def is_total(self) -> bool:
        return UNASSIGNED not in self.values

    def assigned(self, var: int) -> bool:
        return self.values[var] != UNASSIGNED

    def with_value(self, var: int, value: int) -> "Assignment":
        values = list(self.values)
        values[var] = value
        return Assignment(tuple(values))

    def completed(self, default: int = 0) -> "Assignment":
        """Fill unassigned variables with ``default``."""
        return Assignment(tuple(default if v == UNASSIGNED else v for v in self.values))

    def to_text(self) -> str:
        return " ".join("?" if v == UNASSIGNED else str(v) for v in self.values)


def constraint_satisfied(c: Constraint, a: Assignment) -> bool:
    """True iff the signed value tuple of ``c`` under ``a`` is in its relation."""
    values = []
    for var in c.vars:
        if var >= len(a) or a[var] == UNASSIGNED:
            raise ContractViolation(f"variable {var} of constraint {c.label()} is unassigned")
        value = a[var]
        if value < 0 or value >= c.template.t:
            raise ContractViolation(f"value {value} of variable {var} is outside the domain")
        values.append(value)
    return c.accepts(values)


@dataclass(frozen=True)
class Formula:
    """An ordered multiset of constraints over n variables."""

    n: int
    constraints: Tuple[Constraint, ...]
    template_set: TemplateSet

    def __post_init__(self) -> None:
        for c in self.constraints:
            if any(v < 0 or v >= self.n for v in c.vars):
                raise ValueError(f"constraint {c.label()} uses a variable outside [0, {self.n})")
            if c.template.t != self.template_set.t or c.template.k != self.template_set.k:
                raise ValueError(f"constraint {c.label()} does not fit the template set")

    @classmethod
    def empty(cls, n: int, template_set: TemplateSet) -> "Formula":
        return cls(n, (), template_set)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def t(self) -> int:
        return self.template_set.t

    @property
    def k(self) -> int:
        return self.template_set.k

    @property
    def density(self) -> Fraction:
        return Fraction(self.m, self.n) if self.n else Fraction(0)

    @property
    def is_signed(self) -> bool:
        return any(c.signs is not None for c in self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    def variables(self) -> FrozenSet[int]:
        """Var(F): variables occurring in at least one constraint."""
        return frozenset(v for c in self.constraints for v in c.vars)

    def satisfied_by(self, a: Assignment) -> bool:
        return all(constraint_satisfied(c, a) for c in self.constraints)

    def violations(self, a: Assignment) -> int:
        return sum(not constraint_satisfied(c, a) for c in self.constraints)

    def subformula(self, indices: Iterable[int]) -> "Formula":
        return Formula(self.n, tuple(self.constraints[i] for i in indices), self.template_set)

    def without(self, index: int) -> "Formula":
        return Formula(
            self.n,
            self.constraints[:index] + self.constraints[index + 1 :],
            self.template_set,
        )


class ConstraintUniverse:
    """
    The set of distinct constraints obtained by applying every template to
    every ordered k-tuple of the n variables.

    With ``signed=True`` every sign pattern is applied as well, which makes
    the universe match formulas drawn under the negation model.
    """

    def __init__(self, n: int, template_set: TemplateSet, signed: bool = False):
        if n < template_set.k:
            raise InvalidUniverse(f"universe needs n >= k (n={n}, k={template_set.k})")
        if signed and template_set.t != 2:
            raise InvalidUniverse("signed universe needs a boolean domain")
        self.n = n
        self.template_set = template_set
        self.signed = signed

    @classmethod
    def for_formula(cls, formula: Formula) -> "ConstraintUniverse":
        return cls(formula.n, formula.template_set, signed=formula.is_signed)

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def _applications(self) -> Iterator[Constraint]:
        k = self.template_set.k
        patterns: List[Optional[Tuple[bool, ...]]] = [None]
        if self.signed:
            patterns = [
                tuple(p) for p in itertools.product((True, False), repeat=k)
            ]
        for combo in itertools.combinations(range(self.n), k):
            for ordered in itertools.permutations(combo):
                for template in self.template_set:
                    for signs in patterns:
                        yield Constraint(template, ordered, signs)

    @cached_property
    def members(self) -> Tuple[Constraint, ...]:
        seen: Set[Key] = set()
        out: List[Constraint] = []
        for c in self._applications():
            key = c.key()
            if key not in seen:
                seen.add(key)
                out.append(c)
        return tuple(out)

    @cached_property
    def index(self) -> Dict[Key, int]:
        """Semantic key to position in the enumeration."""
        return {c.key(): i for i, c in enumerate(self.members)}


def universe_enumerate(u: ConstraintUniverse) -> Iterator[Constraint]:
    """Yield each semantically distinct applied constraint of ``u`` once."""
    return iter(u.members)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1."""

    n: int
    edges: FrozenSet[Tuple[int, int]]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        normalized: Set[Tuple[int, int]] = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {n})")
            edge = (min(u, v), max(u, v))
            if edge in normalized:
                raise ValueError(f"duplicate edge {edge}")
            normalized.add(edge)
        return cls(n, frozenset(normalized))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(itertools.combinations(range(n), 2)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def mean_degree(self) -> float:
        return 2 * self.m / self.n if self.n else 0.0

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.sorted_edges():
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    def components(self) -> List[List[int]]:
        """Connected components, each sorted, ordered by smallest vertex."""
        return sorted(
            (sorted(c) for c in nx.connected_components(self.to_networkx())),
            key=lambda c: c[0],
        )


@dataclass(frozen=True)
class Hypergraph:
    """Multiset of vertex sets (edges) on vertices 0..n-1."""

    n: int
    edges: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_formula(cls, formula: Formula) -> "Hypergraph":
        return cls(formula.n, tuple(tuple(sorted(c.vars)) for c in formula.constraints))

    @property
    def m(self) -> int:
        return len(self.edges)

    def vertices(self) -> FrozenSet[int]:
        return frozenset(v for e in self.edges for v in e)


def not_equal_template(colors: int) -> ConstraintTemplate:
    return ConstraintTemplate.from_predicate("neq", colors, 2, lambda v: v[0] != v[1])


def coloring_formula(g: Graph, colors: int = 3) -> Formula:
    """Encode proper colorability of ``g`` as a CSP with one "neq" per edge."""
    template = not_equal_template(colors)
    template_set = TemplateSet(colors, 2, (template,))
    return Formula(
        g.n,
        tuple(Constraint(template, edge) for edge in g.sorted_edges()),
        template_set,
    )
