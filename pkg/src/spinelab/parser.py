"""
Readers and writers for spinelab's text formats.

Instance files (1-indexed variables)::

    c optional comment
    p gcsp <n> <m> <k> <t>
    t <template-id> <satisfying tuples as k base-t digits>...
    e <template-id> <v_1> ... <v_k> [<s_1> ... <s_k>]   s in {+, -}

Graphs use DIMACS ``p edge <n> <m>`` with ``e u v`` lines, CNF formulas use
DIMACS ``p cnf``, and sweep tables use the CSV layout of the renderer.
"""

import csv
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .core import SweepPoint
from .errors import InstanceFormatError
from .model import Constraint, ConstraintTemplate, Formula, Graph, TemplateSet
from .renderer import CSV_HEADER
from .solver import Clause, CnfFormula


def _read(path: Path) -> str:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File does not exist: {path}")
    return path.read_text(encoding="utf-8")


def _content_lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("c ") and line != "c":
            yield number, line.split()


# Instances


def format_instance(f: Formula) -> str:
    """Text form of a formula; only templates used by the template set are listed."""
    ts = f.template_set
    if ts.t > 10:
        raise InstanceFormatError(f"tuples are written as digits, so t must be at most 10 (t={ts.t})")
    lines = [f"p gcsp {f.n} {f.m} {ts.k} {ts.t}"]
    for template in ts:
        tuples = " ".join("".join(str(d) for d in row) for row in template.sat_tuples())
        lines.append(f"t {template.id} {tuples}".rstrip())
    lines += [f"e {c.label()}" for c in f.constraints]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Formula:
    header: Optional[Tuple[int, int, int, int]] = None
    templates: Dict[str, ConstraintTemplate] = {}
    pending: List[Tuple[int, List[str]]] = []
    for number, parts in _content_lines(text):
        tag = parts[0]
        if tag == "p":
            if header is not None:
                raise InstanceFormatError("second problem line", number)
            if len(parts) != 6 or parts[1] != "gcsp":
                raise InstanceFormatError("expected 'p gcsp <n> <m> <k> <t>'", number)
            try:
                n, m, k, t = (int(x) for x in parts[2:])
            except ValueError:
                raise InstanceFormatError("problem line needs integers", number) from None
            if k < 2 or t < 2:
                raise InstanceFormatError(f"need k >= 2 and t >= 2, got k={k} t={t}", number)
            header = (n, m, k, t)
        elif tag == "t":
            if header is None:
                raise InstanceFormatError("template before problem line", number)
            _, _, k, t = header
            if len(parts) < 2:
                raise InstanceFormatError("template line needs an id", number)
            rows = []
            for word in parts[2:]:
                if len(word) != k or any(not ch.isdigit() or int(ch) >= t for ch in word):
                    raise InstanceFormatError(f"bad tuple {word!r} for k={k}, t={t}", number)
                rows.append(tuple(int(ch) for ch in word))
            if parts[1] in templates:
                raise InstanceFormatError(f"template {parts[1]!r} defined twice", number)
            templates[parts[1]] = ConstraintTemplate.from_tuples(parts[1], t, k, rows)
        elif tag == "e":
            pending.append((number, parts[1:]))
        else:
            raise InstanceFormatError(f"unknown line tag {tag!r}", number)

    if header is None:
        raise InstanceFormatError("missing 'p gcsp' problem line")
    n, m, k, t = header
    if not templates:
        raise InstanceFormatError("no templates defined")
    template_set = TemplateSet(t, k, tuple(templates.values()))

    constraints = []
    for number, fields in pending:
        if not fields or fields[0] not in templates:
            raise InstanceFormatError("constraint names an unknown template", number)
        rest = fields[1:]
        if len(rest) not in (k, 2 * k):
            raise InstanceFormatError(f"expected {k} variables and optional {k} signs", number)
        try:
            variables = tuple(int(v) - 1 for v in rest[:k])
        except ValueError:
            raise InstanceFormatError("variables must be integers", number) from None
        if any(not 0 <= v < n for v in variables):
            raise InstanceFormatError(f"variable outside 1..{n}", number)
        signs = None
        if len(rest) == 2 * k:
            if any(s not in ("+", "-") for s in rest[k:]):
                raise InstanceFormatError("signs must be '+' or '-'", number)
            signs = tuple(s == "+" for s in rest[k:])
        try:
            constraints.append(Constraint(templates[fields[0]], variables, signs))
        except ValueError as exc:
            raise InstanceFormatError(str(exc), number) from None
    if len(constraints) != m:
        raise InstanceFormatError(f"header announces {m} constraints, found {len(constraints)}")
    return Formula(n, tuple(constraints), template_set)


def load_instance(path: Path) -> Formula:
    return parse_instance(_read(path))


def save_instance(f: Formula, path: Path) -> None:
    Path(path).write_text(format_instance(f), encoding="utf-8")


# Graphs


def format_graph(g: Graph) -> str:
    lines = [f"p edge {g.n} {g.m}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    n: Optional[int] = None
    m = 0
    edges = []
    for number, parts in _content_lines(text):
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise InstanceFormatError("expected 'p edge <n> <m>'", number)
            n, m = int(parts[2]), int(parts[3])
        elif parts[0] == "e":
            if n is None:
                raise InstanceFormatError("edge before problem line", number)
            if len(parts) != 3:
                raise InstanceFormatError("expected 'e <u> <v>'", number)
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
        else:
            raise InstanceFormatError(f"unknown line tag {parts[0]!r}", number)
    if n is None:
        raise InstanceFormatError("missing 'p edge' problem line")
    if len(edges) != m:
        raise InstanceFormatError(f"header announces {m} edges, found {len(edges)}")
    try:
        return Graph.from_edges(n, edges)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def load_graph(path: Path) -> Graph:
    return parse_graph(_read(path))


def save_graph(g: Graph, path: Path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8")


def is_graph_file(text: str) -> bool:
    """True when the problem line announces a DIMACS graph."""
    for _, parts in _content_lines(text):
        if parts[0] == "p":
            return len(parts) > 1 and parts[1] in ("edge", "col")
    return False


# DIMACS CNF


def parse_dimacs_cnf(text: str) -> CnfFormula:
    """
    Parse DIMACS CNF. Clauses may span lines and end with 0; clause i gets
    origin i.
    """
    n: Optional[int] = None
    declared = 0
    clauses: List[Clause] = []
    current: List[int] = []
    for number, parts in _content_lines(text):
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "cnf":
                raise InstanceFormatError(f"invalid problem line: {' '.join(parts)}", number)
            n, declared = int(parts[2]), int(parts[3])
            continue
        if parts[0] in ("%",):
            break
        if n is None:
            raise InstanceFormatError("clause before problem line", number)
        for word in parts:
            try:
                lit = int(word)
            except ValueError:
                raise InstanceFormatError(f"bad literal {word!r}", number) from None
            if lit == 0:
                clauses.append(Clause(frozenset(current)))
                current = []
            elif abs(lit) > n:
                raise InstanceFormatError(f"literal {lit} outside 1..{n}", number)
            else:
                current.append(lit)
    if n is None:
        raise InstanceFormatError("missing 'p cnf' problem line")
    if current:
        raise InstanceFormatError("last clause is not terminated by 0")
    if len(clauses) != declared:
        raise InstanceFormatError(f"header announces {declared} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(clauses), tuple(range(len(clauses))))


def read_dimacs_cnf(path: Path) -> CnfFormula:
    return parse_dimacs_cnf(_read(path))


def write_dimacs_cnf(cnf: CnfFormula, path: Path) -> None:
    Path(path).write_text(cnf.to_dimacs(), encoding="utf-8")


# Sweep tables


def _optional(value: str) -> Optional[float]:
    return float(value) if value != "" else None


def read_sweep_csv(path: Path) -> List[SweepPoint]:
    """Read a table written by ``emit_csv``; per-sample values are not stored there."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File does not exist: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise InstanceFormatError(f"{path} does not carry the sweep CSV header")
        points = []
        for number, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise InstanceFormatError(f"expected {len(CSV_HEADER)} fields", number)
            record = dict(zip(CSV_HEADER, row))
            points.append(SweepPoint(
                problem=record["problem"],
                n=int(record["n"]),
                c=float(record["c"]),
                samples=int(record["samples"]),
                p_sat=float(record["p_sat"]),
                f_S_mean=_optional(record["f_S_mean"]),
                f_B_mean=_optional(record["f_B_mean"]),
                f_SC_mean=_optional(record["f_SC_mean"]),
                f_BC_mean=_optional(record["f_BC_mean"]),
                dpll_nodes_median=_optional(record["dpll_nodes_median"]),
                width_median=_optional(record["width_median"]),
                mus_varfrac_mean=_optional(record["mus_varfrac_mean"]),
                reason=record["reason"],
            ))
    return points
