"""
Core experiment module.

Runs density sweeps over the (n, c) lattice of a SweepConfig, aggregates the
per-sample measurements into SweepPoints and reads thresholds and spine
discontinuity evidence off the resulting table.
"""

import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from multiprocessing import Pool
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from rich.console import Console
from tqdm import tqdm

from .config import Analyzer, EoConfig, EoProblem, Problem, SpineEstimator, SweepConfig
from .errors import BudgetExceeded, InvalidSpec, ThresholdBracketError
from .generators import (
    GenSpec,
    constraints_for_density,
    edges_for_mean_degree,
    gen_graph,
    generate,
    named_family,
)
from .heuristics import backbone_estimate, col3_backbone_exact, eo_sample
from .model import Formula, Graph, coloring_formula
from .order_params import (
    Pair,
    backbone,
    col3_spine,
    gbp_backbone_exact,
    gbp_decide,
    gbp_spine,
    giant_component_pairs,
    pair_fraction,
    spine,
    spine_lower_bound,
)
from .solver import decide, dpll_refute, to_cnf
from .structure import MusResult, delta_star, c_star, literal_density, mus_extract

# Rich console for consistent output, kept off stdout
console = Console(stderr=True)

Instance = Union[Formula, Graph]

EVIDENCE_LABEL = "finite-size evidence, not a verdict"
SURVEY_LABEL = "sampled MUSes only"

# Field each analyzer fills; left empty when the analyzer is off
_ANALYZER_FIELDS = (
    (Analyzer.SPINE, "f_S"),
    (Analyzer.BACKBONE, "f_B"),
    (Analyzer.DPLL, "dpll_nodes"),
    (Analyzer.MUS, "mus_varfrac"),
)


@dataclass
class SampleMeasurement:
    """What the analyzers found on one sample; None means not measured."""

    satisfiable: bool
    f_S: Optional[float] = None
    f_B: Optional[float] = None
    f_SC: Optional[float] = None
    f_BC: Optional[float] = None
    dpll_nodes: Optional[int] = None
    width: Optional[int] = None
    mus_varfrac: Optional[float] = None
    reasons: List[str] = field(default_factory=list)


@dataclass
class SweepPoint:
    """Aggregate of one (n, c) cell."""

    problem: str
    n: int
    c: float
    samples: int
    p_sat: float
    f_S_mean: Optional[float] = None
    f_B_mean: Optional[float] = None
    f_SC_mean: Optional[float] = None
    f_BC_mean: Optional[float] = None
    dpll_nodes_median: Optional[float] = None
    width_median: Optional[float] = None
    mus_varfrac_mean: Optional[float] = None
    reason: str = ""
    f_S_values: Tuple[float, ...] = ()


def _mean(values: Sequence[float]) -> Optional[float]:
    return statistics.fmean(values) if values else None


def _median(values: Sequence[float]) -> Optional[float]:
    return float(statistics.median(values)) if values else None


def aggregate(
    problem: str, n: int, c: float, measurements: Sequence[SampleMeasurement]
) -> SweepPoint:
    """Fold the samples of one cell into a SweepPoint."""
    if not measurements:
        raise ValueError(f"cell n={n} c={c} has no samples")

    def present(name: str) -> List[float]:
        return [getattr(m, name) for m in measurements if getattr(m, name) is not None]

    reasons = sorted({r for m in measurements for r in m.reasons})
    f_S = present("f_S")
    return SweepPoint(
        problem=problem,
        n=n,
        c=c,
        samples=len(measurements),
        p_sat=sum(m.satisfiable for m in measurements) / len(measurements),
        f_S_mean=_mean(f_S),
        f_B_mean=_mean(present("f_B")),
        f_SC_mean=_mean(present("f_SC")),
        f_BC_mean=_mean(present("f_BC")),
        dpll_nodes_median=_median(present("dpll_nodes")),
        width_median=_median(present("width")),
        mus_varfrac_mean=_mean(present("mus_varfrac")),
        reason=";".join(reasons),
        f_S_values=tuple(f_S),
    )


def _vertex_fraction(pairs: Iterable[Pair], n: int) -> float:
    covered = {v for pair in pairs for v in pair}
    return len(covered) / n if n else 0.0


class ExperimentRunner:
    """
    Main class for running sweeps.

    Every sample of cell number ``i`` (n-major, then density) draws from
    stream ``i * samples + s``, so results do not depend on scheduling.
    """

    def __init__(self, config: Optional[SweepConfig] = None):
        """
        Initialize the runner.

        Args:
            config: Sweep configuration, uses default if None
        """
        self.config = config or SweepConfig()
        if self.config.problem == Problem.GBP and any(n % 2 for n in self.config.n_values):
            raise InvalidSpec("graph bipartition sweeps need even n values")
        self.template_set = (
            None if self.config.problem.is_graph
            else named_family(self.config.problem, self.config.k)
        )

    def tasks(self) -> List[Tuple[int, float, int]]:
        """(n, c, stream) for every sample, in cell order."""
        cfg = self.config
        out = []
        for ordinal, (n, c) in enumerate(
            (n, c) for n in cfg.n_values for c in cfg.densities
        ):
            for s in range(cfg.samples):
                out.append((n, c, ordinal * cfg.samples + s))
        return out

    def draw(self, n: int, c: float, stream: int) -> Instance:
        cfg = self.config
        if cfg.problem.is_graph:
            return gen_graph(n, edges_for_mean_degree(c, n), cfg.seed, stream)
        spec = GenSpec(
            cfg.model, n, constraints_for_density(c, n), self.template_set, cfg.seed, stream
        )
        return generate(spec)

    def measure(self, n: int, c: float, stream: int) -> SampleMeasurement:
        """Draw one sample and run the configured analyzers on it."""
        instance = self.draw(n, c, stream)
        if isinstance(instance, Graph):
            m = self._measure_graph(instance, stream)
        else:
            m = self._measure_formula(instance)
        selected = set(self.config.analyzers)
        for analyzer, name in _ANALYZER_FIELDS:
            if analyzer not in selected and getattr(m, name) is None:
                m.reasons.append(f"{analyzer.value}:not-selected")
        return m

    def _measure_formula(self, f: Formula) -> SampleMeasurement:
        cfg = self.config
        analyzers = set(cfg.analyzers)
        satisfiable = decide(f, cfg.policy).satisfiable
        m = SampleMeasurement(satisfiable)

        if Analyzer.SPINE in analyzers:
            if cfg.spine_estimator == SpineEstimator.EXACT:
                try:
                    report = spine(f, budgets=cfg.budgets)
                    m.f_S, m.f_SC = float(report.f_S), float(report.f_SC)
                except BudgetExceeded:
                    m.reasons.append("spine:budget")
            else:
                m.f_S = float(spine_lower_bound(f, cfg.policy).f_S)
                m.reasons.append("f_S:mus-bound")

        if Analyzer.BACKBONE in analyzers:
            try:
                report_b = backbone(f, budgets=cfg.budgets)
                m.f_B, m.f_BC = float(report_b.f_B), float(report_b.f_BC)
            except BudgetExceeded:
                m.reasons.append("backbone:budget")

        if Analyzer.DPLL in analyzers:
            outcome = dpll_refute(to_cnf(f), cfg.policy, record_proof=not satisfiable)
            m.dpll_nodes = outcome.trace.nodes
            if outcome.trace.proof is not None:
                m.width = outcome.trace.proof.width

        if Analyzer.MUS in analyzers and not satisfiable:
            m.mus_varfrac = float(mus_extract(f, cfg.policy).variable_fraction)

        if Analyzer.EO in analyzers:
            m.reasons.append("eo:graphs-only")
        return m

    def _eo_config(self, stream: int) -> EoConfig:
        cfg = self.config
        seed = int(np.random.SeedSequence((cfg.seed, cfg.eo.seed, stream)).generate_state(1)[0])
        return replace(cfg.eo, problem=EoProblem(cfg.problem.value), seed=seed)

    def _measure_graph(self, g: Graph, stream: int) -> SampleMeasurement:
        cfg = self.config
        analyzers = set(cfg.analyzers)
        budgets = cfg.budgets
        gbp = cfg.problem == Problem.GBP

        if gbp:
            satisfiable = gbp_decide(g)
        else:
            satisfiable = decide(coloring_formula(g, 3), cfg.policy).satisfiable
        m = SampleMeasurement(satisfiable)

        if Analyzer.SPINE in analyzers:
            try:
                pairs = gbp_spine(g, budgets) if gbp else col3_spine(g, budgets)
            except BudgetExceeded:
                if gbp:
                    pairs = giant_component_pairs(g)
                    m.reasons.append("f_S:giant-bound")
                else:
                    pairs = None
                    m.reasons.append("spine:budget")
            if pairs is not None:
                m.f_S = _vertex_fraction(pairs, g.n)
                m.f_SC = float(pair_fraction(pairs, g.n))

        if Analyzer.BACKBONE in analyzers:
            try:
                exact = gbp_backbone_exact(g, budgets) if gbp else col3_backbone_exact(g, budgets)
                m.f_B = _vertex_fraction(exact.pairs, g.n)
                m.f_BC = float(exact.fraction)
            except BudgetExceeded:
                m.reasons.append("backbone:budget")

        if Analyzer.EO in analyzers and m.f_BC is None:
            estimate = backbone_estimate(eo_sample(g, self._eo_config(stream)))
            m.f_B = _vertex_fraction(estimate.pairs, g.n)
            m.f_BC = float(estimate.fraction)
            m.reasons.append("f_BC:eo")

        if Analyzer.DPLL in analyzers:
            m.reasons.append("dpll:boolean-only")

        if Analyzer.MUS in analyzers and not satisfiable:
            if gbp:
                m.reasons.append("mus:csp-only")
            else:
                m.mus_varfrac = float(
                    mus_extract(coloring_formula(g, 3), cfg.policy).variable_fraction
                )
        return m

    def run(self) -> List["SweepPoint"]:
        """
        Run the sweep.

        Returns:
            One SweepPoint per (n, c) cell, n-major
        """
        cfg = self.config
        tasks = self.tasks()
        console.print(
            f"📖 Sweeping {cfg.problem.value}: {len(cfg.n_values)} sizes x "
            f"{len(cfg.densities)} densities x {cfg.samples} samples"
        )
        progress = tqdm(total=len(tasks), disable=not cfg.progress, desc="samples")
        if cfg.workers > 1:
            with Pool(cfg.workers) as pool:
                measurements = []
                for result in pool.imap(_measure_task, [(cfg, *t) for t in tasks]):
                    measurements.append(result)
                    progress.update()
        else:
            measurements = []
            for n, c, stream in tasks:
                measurements.append(self.measure(n, c, stream))
                progress.update()
        progress.close()

        points = []
        for start in range(0, len(tasks), cfg.samples):
            n, c, _ = tasks[start]
            cell = measurements[start : start + cfg.samples]
            points.append(aggregate(cfg.problem.value, n, c, cell))
        console.print(f"✅ Sweep finished: {len(points)} cells")
        return points

    def write_outputs(self, points: Sequence[SweepPoint]) -> None:
        """Write the CSV and SVG files named in the config."""
        from .renderer import PlotSpec, emit_csv, emit_svg

        cfg = self.config
        if cfg.csv_path:
            emit_csv(points, cfg.csv_path)
            console.print(f"📝 Wrote {cfg.csv_path}")
        if cfg.svg_path:
            spec = PlotSpec.for_problem(cfg.problem, cfg.plot_column, cfg.k)
            emit_svg(points, spec, cfg.svg_path)
            console.print(f"📝 Wrote {cfg.svg_path}")

    def collect_muses(self, n: int, c: float, count: int, max_draws: int = 10_000) -> List[MusResult]:
        """Extract MUSes from the first ``count`` unsatisfiable samples at (n, c)."""
        if self.config.problem.is_graph:
            raise InvalidSpec("MUS collection runs on template families")
        muses: List[MusResult] = []
        for stream in range(max_draws):
            f = self.draw(n, c, stream)
            assert isinstance(f, Formula)
            if decide(f, self.config.policy).satisfiable:
                continue
            muses.append(mus_extract(f, self.config.policy))
            if len(muses) == count:
                break
        return muses


def _measure_task(args: Tuple[SweepConfig, int, float, int]) -> SampleMeasurement:
    cfg, n, c, stream = args
    return ExperimentRunner(cfg).measure(n, c, stream)


def sweep(cfg: SweepConfig) -> List[SweepPoint]:
    """Convenience function to run a sweep."""
    return ExperimentRunner(cfg).run()


# Threshold analysis


def continuous_threshold(k: int) -> Fraction:
    """2 / (k(k-1)): below this density the spine of the negation model stays small."""
    if k < 2:
        raise ValueError(f"arity must be at least 2, got {k}")
    return Fraction(2, k * (k - 1))


def _by_n(points: Sequence[SweepPoint]) -> Dict[int, List[SweepPoint]]:
    if not points:
        raise ValueError("sweep table is empty")
    cells: Dict[int, List[SweepPoint]] = {}
    for p in points:
        cells.setdefault(p.n, []).append(p)
    return {n: sorted(cells[n], key=lambda p: p.c) for n in sorted(cells)}


def _crossing(cells: Sequence[SweepPoint], target: float) -> float:
    """First density where p_sat falls to ``target``, linearly interpolated."""
    for i, p in enumerate(cells):
        if p.p_sat <= target:
            if i == 0 or p.p_sat == target:
                return p.c
            prev = cells[i - 1]
            share = (prev.p_sat - target) / (prev.p_sat - p.p_sat)
            return prev.c + share * (p.c - prev.c)
    raise AssertionError("unbracketed crossing")


def _require_bracket(n: int, cells: Sequence[SweepPoint], high: float, low: float) -> None:
    if cells[0].p_sat < high:
        raise ThresholdBracketError(n, "low-density", high)
    if min(p.p_sat for p in cells) > low:
        raise ThresholdBracketError(n, "high-density", low)


@dataclass(frozen=True)
class ThresholdEstimate:
    """Empirical crossings of one size: p_sat = 1-eps, 1/2 and eps."""

    n: int
    eps: float
    c_eps: float
    c_half: float
    c_one_minus_eps: float
    above_continuous: Optional[bool] = None

    @property
    def width(self) -> float:
        return self.c_one_minus_eps - self.c_eps

    @property
    def sharpness(self) -> float:
        """Window width relative to its location."""
        return self.width / self.c_half if self.c_half else float("inf")


def threshold_estimate(
    points: Sequence[SweepPoint], eps: float = 0.1, k: Optional[int] = None
) -> List[ThresholdEstimate]:
    """
    Per n, the densities where p_sat crosses 1-eps, 1/2 and eps.

    p_sat is read as decreasing in c; each crossing is the first grid cell
    at or below the level, interpolated with the cell before it, which keeps
    c_eps <= c_half <= c_one_minus_eps. With ``k`` given, each estimate also
    says whether c_half lies above 2/(k(k-1)).
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    out = []
    for n, cells in _by_n(points).items():
        _require_bracket(n, cells, 1 - eps, eps)
        c_half = _crossing(cells, 0.5)
        above = None if k is None else c_half > float(continuous_threshold(k))
        out.append(ThresholdEstimate(
            n=n,
            eps=eps,
            c_eps=_crossing(cells, 1 - eps),
            c_half=c_half,
            c_one_minus_eps=_crossing(cells, eps),
            above_continuous=above,
        ))
    return out


@dataclass(frozen=True)
class ProbeRow:
    n: int
    c: float
    samples: int
    fractions: Dict[float, float]


@dataclass(frozen=True)
class DiscontinuityReport:
    """Share of samples with f_S >= eta just above each size's threshold."""

    etas: Tuple[float, ...]
    rows: Tuple[ProbeRow, ...]
    trends: Dict[float, str]
    label: str = EVIDENCE_LABEL

    def to_text(self) -> str:
        lines = [f"# {self.label}"]
        for row in self.rows:
            shares = " ".join(f"eta={eta:g}:{row.fractions[eta]:.4f}" for eta in self.etas)
            lines.append(f"n={row.n} c={row.c:g} samples={row.samples} {shares}")
        lines += [f"trend eta={eta:g} {self.trends[eta]}" for eta in self.etas]
        return "\n".join(lines) + "\n"


def _trend(values: Sequence[float]) -> str:
    if len(values) < 2:
        return "single-size"
    steps = [b - a for a, b in zip(values, values[1:])]
    if all(s > 0 for s in steps):
        return "growing"
    if all(s < 0 for s in steps):
        return "shrinking"
    return "mixed"


def discontinuity_probe(
    points: Sequence[SweepPoint],
    etas: Sequence[float] = (0.1, 0.3),
    c: Optional[float] = None,
) -> DiscontinuityReport:
    """
    For every n take the first grid density at or above ``c`` (default: that
    size's empirical c_half) and report the share of samples with f_S >= eta.

    Shares growing with n point to a discontinuous spine, shrinking shares
    to a continuous one.
    """
    if not etas:
        raise ValueError("eta grid is empty")
    rows = []
    for n, cells in _by_n(points).items():
        if c is None:
            _require_bracket(n, cells, 0.5, 0.5)
            level = _crossing(cells, 0.5)
        else:
            level = c
        above = [p for p in cells if p.c >= level]
        if not above:
            raise ThresholdBracketError(n, "high-density", 0.5)
        cell = above[0]
        if not cell.f_S_values:
            raise ValueError(f"no f_S values at n={n} c={cell.c:g}; run the spine analyzer")
        fractions = {
            eta: sum(v >= eta for v in cell.f_S_values) / len(cell.f_S_values)
            for eta in etas
        }
        rows.append(ProbeRow(n, cell.c, len(cell.f_S_values), fractions))
    trends = {eta: _trend([row.fractions[eta] for row in rows]) for eta in etas}
    return DiscontinuityReport(tuple(etas), tuple(rows), trends)


# MUS density survey


@dataclass(frozen=True)
class MusDensityRow:
    size: int
    c_star: Fraction
    delta_star: Fraction
    literal_density: Fraction
    exceeds: bool


@dataclass(frozen=True)
class MusDensitySurvey:
    k: int
    eps: float
    bound: float
    rows: Tuple[MusDensityRow, ...]
    label: str = SURVEY_LABEL

    @property
    def share_exceeding(self) -> float:
        return sum(r.exceeds for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def min_c_star(self) -> Optional[Fraction]:
        return min((r.c_star for r in self.rows), default=None)


def mus_density_survey(muses: Sequence[MusResult], eps: float = 0.1) -> MusDensitySurvey:
    """
    c*, delta*_{2k-3} and literal density of each MUS, and whether c*
    exceeds (1 + eps) / (k - 1).
    """
    if not muses:
        raise ValueError("survey needs at least one MUS")
    k = muses[0].subformula.k
    bound = (1 + eps) / (k - 1)
    rows = []
    for mus in muses:
        f = mus.subformula
        value, _ = c_star(f)
        delta, _ = delta_star(f, 2 * k - 3)
        rows.append(MusDensityRow(mus.size, value, delta, literal_density(f), float(value) > bound))
    return MusDensitySurvey(k, eps, bound, tuple(rows))
