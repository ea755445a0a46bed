"""
Exact decision and optimization, CNF conversion, DPLL refutation with
tree-resolution proof extraction, and proof checking.

Literals use the DIMACS convention: variable v is literal v+1, its
negation -(v+1). A positive literal is true when the variable is 1.
"""

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import (
    Deque,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import numpy as np

from .config import BranchingPolicy
from .errors import BudgetExceeded, ProofError, UnsupportedDomain
from .model import Assignment, Constraint, Formula, index_tuple

DEFAULT_ROW_LIMIT = 2 ** 20


def literal(var: int, positive: bool) -> int:
    return var + 1 if positive else -(var + 1)


def literal_var(lit: int) -> int:
    return abs(lit) - 1


@dataclass(frozen=True)
class Clause:
    """Disjunction of literals; the empty clause is the contradiction."""

    literals: FrozenSet[int]

    @classmethod
    def of(cls, *lits: int) -> "Clause":
        return cls(frozenset(lits))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, bool]]) -> "Clause":
        """Build from (variable, polarity) pairs."""
        return cls(frozenset(literal(v, p) for v, p in pairs))

    def pairs(self) -> List[Tuple[int, bool]]:
        return [(literal_var(l), l > 0) for l in self.sorted()]

    def sorted(self) -> List[int]:
        return sorted(self.literals, key=lambda l: (abs(l), l < 0))

    @property
    def width(self) -> int:
        return len(self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    @property
    def is_tautology(self) -> bool:
        return any(-l in self.literals for l in self.literals)

    def variables(self) -> Set[int]:
        return {literal_var(l) for l in self.literals}

    def resolve(self, other: "Clause", var: int) -> "Clause":
        """Resolvent on ``var``; the two clauses must clash on it."""
        p = var + 1
        if not ((p in self.literals and -p in other.literals)
                or (-p in self.literals and p in other.literals)):
            raise ProofError(f"clauses do not clash on variable {var}")
        return Clause((self.literals | other.literals) - {p, -p})

    def satisfied_by(self, values: Sequence[int]) -> bool:
        return any((values[literal_var(l)] == 1) == (l > 0) for l in self.literals)

    def __str__(self) -> str:
        if not self.literals:
            return "□"
        return "(" + " ".join(str(l) for l in self.sorted()) + ")"


@dataclass(frozen=True)
class CnfFormula:
    """Cl(F): clauses plus the index of the constraint each came from."""

    n: int
    clauses: Tuple[Clause, ...]
    origins: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.origins and len(self.origins) != len(self.clauses):
            raise ValueError("one origin per clause is required")

    @property
    def m(self) -> int:
        return len(self.clauses)

    def origin(self, index: int) -> int:
        return self.origins[index] if self.origins else -1

    def satisfied_by(self, values: Sequence[int]) -> bool:
        return all(c.satisfied_by(values) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n} {len(self.clauses)}"]
        for clause in self.clauses:
            lines.append(" ".join(str(l) for l in clause.sorted() + [0]))
        return "\n".join(lines) + "\n"


def _falsifying_clause(c: Constraint, values: Sequence[int]) -> Clause:
    # the clause false exactly on this tuple
    return Clause(frozenset(literal(v, d == 0) for v, d in zip(c.vars, values)))


def _prime_cubes(minterms: List[Tuple[int, ...]], k: int) -> List[Tuple[int, ...]]:
    """Quine-McCluskey merge; coordinate value 2 means "either"."""
    current: Set[Tuple[int, ...]] = set(minterms)
    primes: Set[Tuple[int, ...]] = set()
    while current:
        merged: Set[Tuple[int, ...]] = set()
        used: Set[Tuple[int, ...]] = set()
        for a, b in itertools.combinations(sorted(current), 2):
            diff = [i for i in range(k) if a[i] != b[i]]
            if len(diff) == 1 and a[diff[0]] != 2 and b[diff[0]] != 2:
                cube = list(a)
                cube[diff[0]] = 2
                merged.add(tuple(cube))
                used.update((a, b))
        primes.update(current - used)
        current = merged
    return sorted(primes)


def to_cnf(f: Formula, minimize: bool = False) -> CnfFormula:
    """
    Canonical maxterm CNF: one clause per falsifying tuple of each constraint.

    With ``minimize=True`` each constraint contributes its prime implicates
    instead, which is logically equivalent but not canonical in size.
    """
    if f.t != 2:
        raise UnsupportedDomain("CNF conversion needs a boolean domain (t = 2)")
    clauses: List[Clause] = []
    origins: List[int] = []
    for index, c in enumerate(f.constraints):
        falsifying = [
            index_tuple(u, 2, c.k) for u, ok in enumerate(c.table) if not ok
        ]
        if minimize:
            local: List[Clause] = []
            for cube in _prime_cubes(falsifying, c.k):
                local.append(Clause(frozenset(
                    literal(v, d == 0) for v, d in zip(c.vars, cube) if d != 2
                )))
            local.sort(key=lambda cl: (cl.width, cl.sorted()))
        else:
            local = [_falsifying_clause(c, values) for values in falsifying]
        clauses.extend(local)
        origins.extend([index] * len(local))
    return CnfFormula(f.n, tuple(clauses), tuple(origins))


@dataclass(frozen=True)
class ProofStep:
    """An axiom (origin = CNF clause index) or a resolution of two earlier steps."""

    clause: Clause
    origin: Optional[int] = None
    antecedents: Optional[Tuple[int, int]] = None
    pivot: Optional[int] = None

    @property
    def is_axiom(self) -> bool:
        return self.antecedents is None


@dataclass(frozen=True)
class ResolutionProof:
    steps: Tuple[ProofStep, ...]

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def width(self) -> int:
        return max((s.clause.width for s in self.steps), default=0)

    @property
    def final(self) -> Optional[Clause]:
        return self.steps[-1].clause if self.steps else None

    @property
    def is_refutation(self) -> bool:
        return self.final is not None and self.final.is_empty

    def to_text(self) -> str:
        lines = []
        for i, step in enumerate(self.steps):
            if step.is_axiom:
                how = f"axiom {step.origin}"
            else:
                assert step.antecedents is not None and step.pivot is not None
                a, b = step.antecedents
                how = f"resolve {a} {b} on {step.pivot + 1}"
            lines.append(f"{i}: {step.clause}  {how}")
        return "\n".join(lines) + "\n"


def check_proof(
    proof: ResolutionProof,
    cnf: Optional[CnfFormula] = None,
    require_refutation: bool = True,
) -> bool:
    """Verify every step; raises ProofError on the first bad one."""
    if not proof.steps:
        raise ProofError("proof has no steps")
    for i, step in enumerate(proof.steps):
        if step.clause.is_tautology:
            raise ProofError(f"step {i} is a tautology")
        if step.is_axiom:
            if cnf is not None:
                if step.origin is None or not 0 <= step.origin < cnf.m:
                    raise ProofError(f"step {i} cites unknown axiom {step.origin}")
                if cnf.clauses[step.origin] != step.clause:
                    raise ProofError(f"step {i} does not match axiom {step.origin}")
            continue
        assert step.antecedents is not None
        a, b = step.antecedents
        if not (0 <= a < i and 0 <= b < i):
            raise ProofError(f"step {i} uses antecedents that do not precede it")
        if step.pivot is None:
            raise ProofError(f"step {i} has no pivot")
        resolvent = proof.steps[a].clause.resolve(proof.steps[b].clause, step.pivot)
        if resolvent != step.clause:
            raise ProofError(f"step {i} is not the resolvent of steps {a} and {b}")
    if require_refutation and not proof.is_refutation:
        raise ProofError("final clause is not the empty clause")
    return True


def proof_metrics(p: ResolutionProof, cnf: Optional[CnfFormula] = None) -> Tuple[int, int]:
    """(size, width) of a checked proof."""
    check_proof(p, cnf, require_refutation=False)
    return p.size, p.width


@dataclass(frozen=True)
class DpllTrace:
    nodes: int
    proof: Optional[ResolutionProof]
    policy: BranchingPolicy = BranchingPolicy.MOMS


@dataclass(frozen=True)
class DpllOutcome:
    satisfiable: bool
    witness: Optional[Assignment]
    trace: DpllTrace


_Derived = Tuple[Clause, int]


class _DpllSearch:
    """
    DPLL with unit propagation. Every failed node returns a clause falsified
    by the assignment it was entered with, so the search tree is read back
    as a tree-like resolution refutation.
    """

    def __init__(self, cnf: CnfFormula, policy: BranchingPolicy, record_proof: bool):
        self.cnf = cnf
        self.policy = policy
        self.record_proof = record_proof
        self.clauses: List[Tuple[int, ...]] = [tuple(c.sorted()) for c in cnf.clauses]
        self.occurrences: Dict[int, List[int]] = defaultdict(list)
        for ci, clause in enumerate(self.clauses):
            for lit in clause:
                self.occurrences[lit].append(ci)
        self.value = [-1] * (cnf.n + 1)
        self.trail: List[Tuple[int, int]] = []
        self.nodes = 0
        self.steps: List[ProofStep] = []
        self.axioms: Dict[int, int] = {}

    # assignment bookkeeping

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        if v < 0:
            return -1
        return int((v == 1) == (lit > 0))

    def _assign(self, lit: int, reason: int) -> None:
        self.value[abs(lit)] = 1 if lit > 0 else 0
        self.trail.append((lit, reason))

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            lit, _ = self.trail.pop()
            self.value[abs(lit)] = -1

    def _inspect(self, ci: int) -> Tuple[str, int]:
        free = 0
        last = 0
        for lit in self.clauses[ci]:
            state = self._lit_value(lit)
            if state == 1:
                return "sat", 0
            if state < 0:
                free += 1
                last = lit
        if free == 0:
            return "conflict", 0
        if free == 1:
            return "unit", last
        return "open", 0

    def _propagate(self, pending: Deque[int]) -> Optional[int]:
        while pending:
            lit = pending.popleft()
            for ci in self.occurrences.get(-lit, ()):
                status, unit = self._inspect(ci)
                if status == "conflict":
                    return ci
                if status == "unit":
                    self._assign(unit, ci)
                    pending.append(unit)
        return None

    def _root_scan(self) -> Optional[int]:
        pending: Deque[int] = deque()
        for ci in range(len(self.clauses)):
            status, unit = self._inspect(ci)
            if status == "conflict":
                return ci
            if status == "unit":
                self._assign(unit, ci)
                pending.append(unit)
        return self._propagate(pending)

    # proof bookkeeping

    def _axiom(self, ci: int) -> _Derived:
        clause = self.cnf.clauses[ci]
        if ci not in self.axioms:
            self.axioms[ci] = len(self.steps)
            self.steps.append(ProofStep(clause, origin=ci))
        return clause, self.axioms[ci]

    def _resolve(self, a: _Derived, b: _Derived, var: int) -> _Derived:
        clause = a[0].resolve(b[0], var)
        self.steps.append(ProofStep(clause, antecedents=(a[1], b[1]), pivot=var))
        return clause, len(self.steps) - 1

    def _explain(self, derived: _Derived, start: int) -> _Derived:
        for index in range(len(self.trail) - 1, start - 1, -1):
            lit, reason = self.trail[index]
            if -lit in derived[0].literals:
                derived = self._resolve(derived, self._axiom(reason), abs(lit) - 1)
        return derived

    # branching

    def _choose(self) -> Optional[int]:
        open_clauses: List[List[int]] = []
        for clause in self.clauses:
            free = []
            satisfied = False
            for lit in clause:
                state = self._lit_value(lit)
                if state == 1:
                    satisfied = True
                    break
                if state < 0:
                    free.append(lit)
            if not satisfied:
                open_clauses.append(free)
        if not open_clauses:
            return None

        if self.policy == BranchingPolicy.LEXICOGRAPHIC:
            var = min(abs(l) for free in open_clauses for l in free)
            return var

        scores: Dict[int, float] = defaultdict(float)
        if self.policy == BranchingPolicy.JEROSLOW_WANG:
            for free in open_clauses:
                for lit in free:
                    scores[lit] += 2.0 ** -len(free)
            return min(scores, key=lambda l: (-scores[l], abs(l), l < 0))

        shortest = min(len(free) for free in open_clauses)
        for free in open_clauses:
            if len(free) == shortest:
                for lit in free:
                    scores[lit] += 1
        var_score: Dict[int, float] = defaultdict(float)
        for lit, score in scores.items():
            var_score[abs(lit)] += score
        var = min(var_score, key=lambda v: (-var_score[v], v))
        return var if scores.get(var, 0) >= scores.get(-var, 0) else -var

    def _node(self, decision: Optional[int]) -> Tuple[bool, Optional[_Derived]]:
        self.nodes += 1
        mark = len(self.trail)
        if decision is None:
            conflict = self._root_scan()
            own = mark
        else:
            self._assign(decision, -1)
            conflict = self._propagate(deque([decision]))
            own = mark + 1

        if conflict is not None:
            derived = self._axiom(conflict)
        else:
            choice = self._choose()
            if choice is None:
                return True, None
            sat, first = self._node(choice)
            if sat:
                return True, None
            assert first is not None
            if -choice in first[0].literals:
                sat, second = self._node(-choice)
                if sat:
                    return True, None
                assert second is not None
                if choice in second[0].literals:
                    derived = self._resolve(first, second, abs(choice) - 1)
                else:
                    derived = second
            else:
                derived = first

        derived = self._explain(derived, own)
        self._undo(mark)
        return False, derived

    def _extract(self, final: int) -> ResolutionProof:
        keep: Set[int] = set()
        stack = [final]
        while stack:
            i = stack.pop()
            if i in keep:
                continue
            keep.add(i)
            antecedents = self.steps[i].antecedents
            if antecedents is not None:
                stack.extend(antecedents)
        order = sorted(keep)
        renumber = {old: new for new, old in enumerate(order)}
        steps = []
        for old in order:
            step = self.steps[old]
            if step.antecedents is not None:
                a, b = step.antecedents
                step = ProofStep(step.clause, None, (renumber[a], renumber[b]), step.pivot)
            steps.append(step)
        return ResolutionProof(tuple(steps))

    def run(self) -> DpllOutcome:
        sat, derived = self._node(None)
        if sat:
            values = [max(v, 0) for v in self.value[1:]]
            return DpllOutcome(True, Assignment(tuple(values)), DpllTrace(self.nodes, None, self.policy))
        assert derived is not None
        proof = self._extract(derived[1]) if self.record_proof else None
        return DpllOutcome(False, None, DpllTrace(self.nodes, proof, self.policy))


def dpll_refute(
    cnf: CnfFormula,
    policy: BranchingPolicy = BranchingPolicy.MOMS,
    record_proof: bool = True,
) -> DpllOutcome:
    """
    Run DPLL on ``cnf``. Unsatisfiable inputs come back with the node count
    and the tree-resolution refutation read off the search tree.
    """
    return _DpllSearch(cnf, policy, record_proof).run()


@dataclass(frozen=True)
class Decision:
    satisfiable: bool
    witness: Optional[Assignment] = None

    def __bool__(self) -> bool:
        return self.satisfiable


def csp_search(f: Formula, fixed: Optional[Dict[int, int]] = None) -> Optional[List[int]]:
    """Backtracking with smallest-domain-first and forward checking."""
    n, t = f.n, f.t
    by_var: Dict[int, List[int]] = defaultdict(list)
    for ci, c in enumerate(f.constraints):
        for v in c.vars:
            by_var[v].append(ci)
    values = [-1] * n
    domains: List[Set[int]] = [set(range(t)) for _ in range(n)]
    for var, value in (fixed or {}).items():
        domains[var] = {value}
        if var not in by_var:
            values[var] = value
    active = sorted(by_var)

    def check(var: int, doms: List[Set[int]]) -> Optional[List[Set[int]]]:
        doms = list(doms)
        for ci in by_var[var]:
            c = f.constraints[ci]
            open_vars = [v for v in c.vars if values[v] < 0]
            if not open_vars:
                if not c.accepts([values[v] for v in c.vars]):
                    return None
            elif len(open_vars) == 1:
                w = open_vars[0]
                keep = set()
                for d in doms[w]:
                    values[w] = d
                    if c.accepts([values[v] for v in c.vars]):
                        keep.add(d)
                values[w] = -1
                if not keep:
                    return None
                doms[w] = keep
        return doms

    def search(doms: List[Set[int]]) -> bool:
        open_vars = [v for v in active if values[v] < 0]
        if not open_vars:
            return True
        var = min(open_vars, key=lambda v: (len(doms[v]), -len(by_var[v]), v))
        for d in sorted(doms[var]):
            values[var] = d
            narrowed = list(doms)
            narrowed[var] = {d}
            result = check(var, narrowed)
            if result is not None and search(result):
                return True
            values[var] = -1
        return False

    if not search(domains):
        return None
    return [max(v, 0) for v in values]


def decide(f: Formula, policy: BranchingPolicy = BranchingPolicy.MOMS) -> Decision:
    """sat(witness) iff some total assignment satisfies every constraint."""
    if f.m == 0:
        return Decision(True, Assignment((0,) * f.n))
    if f.t == 2:
        outcome = dpll_refute(to_cnf(f), policy, record_proof=False)
        return Decision(outcome.satisfiable, outcome.witness)
    values = csp_search(f)
    if values is None:
        return Decision(False)
    return Decision(True, Assignment(tuple(values)))


class AssignmentTable:
    """
    Every assignment of ``variables`` as rows of a numpy array, first
    variable most significant, with per-constraint satisfaction vectors.
    """

    def __init__(
        self,
        formula: Formula,
        variables: Optional[Sequence[int]] = None,
        row_limit: int = DEFAULT_ROW_LIMIT,
    ):
        self.formula = formula
        self.t = formula.t
        self.variables = list(range(formula.n)) if variables is None else sorted(variables)
        self.position = {v: j for j, v in enumerate(self.variables)}
        width = len(self.variables)
        self.rows = self.t ** width
        if self.rows > row_limit:
            raise BudgetExceeded("assignment enumeration", self.rows, row_limit)
        codes = np.arange(self.rows, dtype=np.int64)
        powers = self.t ** np.arange(width - 1, -1, -1, dtype=np.int64)
        self.values = ((codes[:, None] // powers[None, :]) % self.t).astype(np.int8)

    def column(self, var: int) -> np.ndarray:
        return self.values[:, self.position[var]]

    def satisfied(self, c: Constraint) -> np.ndarray:
        """Boolean vector: which rows satisfy ``c``."""
        index = np.zeros(self.rows, dtype=np.int64)
        for var in c.vars:
            index = index * self.t + self.column(var)
        return np.asarray(c.table, dtype=bool)[index]

    def violations(self) -> np.ndarray:
        counts = np.zeros(self.rows, dtype=np.int32)
        for c in self.formula.constraints:
            counts += ~self.satisfied(c)
        return counts

    def masks(self) -> np.ndarray:
        """Packed per-row bitmask of satisfied constraints (rows x ceil(m/8))."""
        m = self.formula.m
        packed = np.zeros((self.rows, max(1, (m + 7) // 8)), dtype=np.uint8)
        for i, c in enumerate(self.formula.constraints):
            bit = np.uint8(1 << (7 - i % 8))
            packed[self.satisfied(c), i // 8] |= bit
        return packed

    def assignment(self, row: int, n: Optional[int] = None) -> Assignment:
        values = [0] * (self.formula.n if n is None else n)
        for j, var in enumerate(self.variables):
            values[var] = int(self.values[row, j])
        return Assignment(tuple(values))


@dataclass(frozen=True)
class OptResult:
    value: int
    witness: Assignment


def _branch_and_bound(f: Formula) -> OptResult:
    counts: Dict[int, int] = defaultdict(int)
    for c in f.constraints:
        for v in c.vars:
            counts[v] += 1
    order = sorted(counts, key=lambda v: (-counts[v], v))
    depth_of = {v: d for d, v in enumerate(order)}
    complete_at: List[List[Constraint]] = [[] for _ in order]
    for c in f.constraints:
        complete_at[max(depth_of[v] for v in c.vars)].append(c)

    values = [0] * f.n
    best = [f.violations(Assignment(tuple(values))), list(values)]

    def search(depth: int, violated: int) -> None:
        if violated >= best[0]:
            return
        if depth == len(order):
            best[0] = violated
            best[1] = list(values)
            return
        var = order[depth]
        for d in range(f.t):
            values[var] = d
            extra = sum(
                not c.accepts([values[v] for v in c.vars]) for c in complete_at[depth]
            )
            search(depth + 1, violated + extra)
        values[var] = 0

    search(0, 0)
    return OptResult(int(best[0]), Assignment(tuple(best[1])))


def opt(f: Formula, row_limit: int = DEFAULT_ROW_LIMIT) -> OptResult:
    """Minimum number of violated constraints, with an optimal assignment."""
    if f.m == 0:
        return OptResult(0, Assignment((0,) * f.n))
    variables = sorted(f.variables())
    if f.t ** len(variables) <= row_limit:
        table = AssignmentTable(f, variables, row_limit)
        counts = table.violations()
        row = int(np.argmin(counts))
        return OptResult(int(counts[row]), table.assignment(row))
    return _branch_and_bound(f)


@dataclass(frozen=True)
class MusRefutation:
    satisfiable: bool
    trace: Optional[DpllTrace] = None
    mus: Optional[Formula] = None
    witness: Optional[Assignment] = None


def refute_via_mus(
    f: Formula, policy: BranchingPolicy = BranchingPolicy.MOMS
) -> MusRefutation:
    """Extract a minimally unsatisfiable core first, then refute only its CNF."""
    from .structure import mus_extract

    if f.t != 2:
        raise UnsupportedDomain("refutation needs a boolean domain (t = 2)")
    decision = decide(f, policy)
    if decision.satisfiable:
        return MusRefutation(True, witness=decision.witness)
    core = mus_extract(f, policy).subformula
    outcome = dpll_refute(to_cnf(core), policy)
    return MusRefutation(False, outcome.trace, core)


def satisfiable_with(f: Formula, fixed: Dict[int, int]) -> bool:
    """Whether F has a solution extending the partial assignment ``fixed``."""
    if f.t == 2:
        cnf = to_cnf(f)
        units = tuple(Clause.of(literal(v, d == 1)) for v, d in sorted(fixed.items()))
        extended = CnfFormula(cnf.n, cnf.clauses + units)
        return dpll_refute(extended, record_proof=False).satisfiable
    return csp_search(f, fixed) is not None


def entails(f: Formula, clause: Clause) -> bool:
    """F |= clause, i.e. F with every literal of the clause false is unsatisfiable."""
    if clause.is_tautology:
        return True
    return not satisfiable_with(f, {v: 0 if positive else 1 for v, positive in clause.pairs()})
