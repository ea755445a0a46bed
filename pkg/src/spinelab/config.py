"""
Configuration and settings for spinelab experiments.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional


class Problem(Enum):
    """Problem families the harness knows how to sample."""
    K_SAT = "k-sat"
    ONE_IN_K_SAT = "1-in-k-sat"
    K_XOR_SAT = "k-xor-sat"
    TWO_SAT = "2-sat"
    COL3 = "3col"
    GBP = "gbp"

    @property
    def is_graph(self) -> bool:
        return self in (Problem.COL3, Problem.GBP)


class GenModel(Enum):
    """Random instance models."""
    CSP_COUNTING = "csp-counting"
    SAT_NEG = "sat-neg"
    GRAPH = "graph"


class BranchingPolicy(Enum):
    """DPLL variable selection."""
    MOMS = "moms"
    LEXICOGRAPHIC = "lex"
    JEROSLOW_WANG = "jw"


class Analyzer(Enum):
    """Per-sample measurements a sweep can run."""
    SAT = "sat"
    SPINE = "spine"
    BACKBONE = "backbone"
    DPLL = "dpll"
    MUS = "mus"
    EO = "eo"


class SpineEstimator(Enum):
    """How sweeps fill the variable spine column."""
    EXACT = "exact"
    MUS_BOUND = "mus-bound"


class EoProblem(Enum):
    """Problems extremal optimization runs on."""
    COL3 = "3col"
    GBP = "gbp"


@dataclass
class Budgets:
    """Size limits for exact computations; larger inputs are refused."""

    budget_n: int = 12
    exhaustive_rows: int = 2 ** 20
    gbp_exact_n: int = 20
    col3_exact_n: int = 15
    gbp_spine_n: int = 16
    mu_m: int = 14
    sparsity_subsets: int = 2_000_000

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Budgets":
        return cls(**{k: int(v) for k, v in data.items()})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "budget_n": self.budget_n,
            "exhaustive_rows": self.exhaustive_rows,
            "gbp_exact_n": self.gbp_exact_n,
            "col3_exact_n": self.col3_exact_n,
            "gbp_spine_n": self.gbp_spine_n,
            "mu_m": self.mu_m,
            "sparsity_subsets": self.sparsity_subsets,
        }


@dataclass
class EoConfig:
    """Extremal optimization schedule."""

    tau: float = 1.4
    restarts: int = 20
    steps: Optional[int] = None  # None means 200 * n
    seed: int = 0
    problem: EoProblem = EoProblem.COL3
    pool_limit: int = 256

    def __post_init__(self) -> None:
        if self.tau <= 1:
            raise ValueError(f"tau must exceed 1, got {self.tau}")
        if self.steps is not None and self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}")

    def steps_for(self, n: int) -> int:
        return self.steps if self.steps is not None else 200 * n

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EoConfig":
        data = dict(data)
        if "problem" in data:
            data["problem"] = EoProblem(data["problem"])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "restarts": self.restarts,
            "steps": self.steps,
            "seed": self.seed,
            "problem": self.problem.value,
            "pool_limit": self.pool_limit,
        }


@dataclass
class SweepConfig:
    """The (n, density) lattice of one experiment and what to measure on it."""

    problem: Problem = Problem.K_SAT
    k: int = 3
    n_values: List[int] = field(default_factory=lambda: [20])
    densities: List[float] = field(default_factory=lambda: [1.0])
    samples: int = 10
    seed: int = 0
    analyzers: List[Analyzer] = field(default_factory=lambda: [Analyzer.SAT])
    budgets: Budgets = field(default_factory=Budgets)
    spine_estimator: SpineEstimator = SpineEstimator.EXACT
    policy: BranchingPolicy = BranchingPolicy.MOMS
    etas: List[float] = field(default_factory=lambda: [0.1, 0.3])
    eo: EoConfig = field(default_factory=EoConfig)
    workers: int = 1
    progress: bool = True

    # Output
    csv_path: Optional[Path] = None
    svg_path: Optional[Path] = None
    plot_column: str = "p_sat"

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples per cell must be at least 1, got {self.samples}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n_values must list positive sizes")
        if not self.densities:
            raise ValueError("density grid is empty")
        if any(b <= a for a, b in zip(self.densities, self.densities[1:])):
            raise ValueError("density grid must be strictly increasing")
        if any(d < 0 for d in self.densities):
            raise ValueError("densities must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.problem == Problem.TWO_SAT:
            self.k = 2

    @property
    def model(self) -> GenModel:
        return GenModel.GRAPH if self.problem.is_graph else GenModel.SAT_NEG

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepConfig":
        """Create config from dictionary."""
        data = dict(data)
        # Handle enum conversions
        if "problem" in data:
            data["problem"] = Problem(data["problem"])
        if "analyzers" in data:
            data["analyzers"] = [Analyzer(a) for a in data["analyzers"]]
        if "spine_estimator" in data:
            data["spine_estimator"] = SpineEstimator(data["spine_estimator"])
        if "policy" in data:
            data["policy"] = BranchingPolicy(data["policy"])

        # Nested sections
        if isinstance(data.get("budgets"), dict):
            data["budgets"] = Budgets.from_dict(data["budgets"])
        if isinstance(data.get("eo"), dict):
            data["eo"] = EoConfig.from_dict(data["eo"])

        # Handle path conversions
        for key in ("csv_path", "svg_path"):
            if data.get(key):
                data[key] = Path(data[key])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to dictionary."""
        data: Dict[str, Any] = {
            "problem": self.problem.value,
            "k": self.k,
            "n_values": list(self.n_values),
            "densities": list(self.densities),
            "samples": self.samples,
            "seed": self.seed,
            "analyzers": [a.value for a in self.analyzers],
            "budgets": self.budgets.to_dict(),
            "spine_estimator": self.spine_estimator.value,
            "policy": self.policy.value,
            "etas": list(self.etas),
            "eo": self.eo.to_dict(),
            "workers": self.workers,
            "progress": self.progress,
            "plot_column": self.plot_column,
        }
        if self.csv_path:
            data["csv_path"] = str(self.csv_path)
        if self.svg_path:
            data["svg_path"] = str(self.svg_path)
        return data


def density_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic grid, rounded to 6 decimals."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 6) for i in range(count)]


_INT_KEYS = {"k", "samples", "seed", "workers"}
_LIST_INT_KEYS = {"n_values"}
_LIST_FLOAT_KEYS = {"densities", "etas"}
_LIST_KEYS = {"analyzers"}
_BOOL_KEYS = {"progress"}


def _parse_floats(text: str) -> List[float]:
    values: List[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            start, stop, step = (float(x) for x in part.split(":"))
            values.extend(density_grid(start, stop, step))
        else:
            values.append(float(part))
    return values


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Parse ``key=value`` lines into a SweepConfig dictionary.

    Lists are comma separated and float lists accept ``start:stop:step``
    ranges. Keys prefixed ``budget_`` or ``eo_`` fill the nested sections.
    """
    data: Dict[str, Any] = {}
    budgets: Dict[str, Any] = {}
    eo: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {number}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in Budgets().to_dict():
            budgets[key] = int(value)
        elif key.startswith("eo_"):
            name = key[3:]
            if name in ("tau",):
                eo[name] = float(value)
            elif name == "problem":
                eo[name] = value
            else:
                eo[name] = int(value)
        elif key in _INT_KEYS:
            data[key] = int(value)
        elif key in _LIST_INT_KEYS:
            data[key] = [int(v) for v in value.split(",") if v.strip()]
        elif key in _LIST_FLOAT_KEYS:
            data[key] = _parse_floats(value)
        elif key in _LIST_KEYS:
            data[key] = [v.strip() for v in value.split(",") if v.strip()]
        elif key in _BOOL_KEYS:
            data[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            data[key] = value
    if budgets:
        data["budgets"] = budgets
    if eo:
        data["eo"] = eo
    return data


def load_config(path: Path) -> SweepConfig:
    """Read a key=value config file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file does not exist: {path}")
    return SweepConfig.from_dict(parse_config_text(path.read_text(encoding="utf-8")))


# Preset sweeps
# The 2-SAT and 3-XOR presets measure f_S through the certified MUS lower
# bound (reason f_S:mus-bound), so discontinuity shares read off them are
# shares of a lower bound on the spine.
TWO_SAT_SWEEP = SweepConfig(
    problem=Problem.TWO_SAT,
    k=2,
    n_values=[20, 40],
    densities=density_grid(0.5, 1.5, 0.1),
    samples=100,
    analyzers=[Analyzer.SAT, Analyzer.SPINE],
    spine_estimator=SpineEstimator.MUS_BOUND,
)

# Resolution cost across the threshold only; f_S stays empty (spine:not-selected)
THREE_SAT_SWEEP = SweepConfig(
    problem=Problem.K_SAT,
    k=3,
    n_values=[50],
    densities=[3.0, 3.5, 4.0, 4.27, 4.5, 5.0, 6.0],
    samples=100,
    analyzers=[Analyzer.SAT, Analyzer.DPLL],
)

THREE_XOR_SWEEP = SweepConfig(
    problem=Problem.K_XOR_SAT,
    k=3,
    n_values=[16, 24, 32],
    densities=density_grid(0.6, 1.2, 0.1),
    samples=100,
    analyzers=[Analyzer.SAT, Analyzer.SPINE],
    spine_estimator=SpineEstimator.MUS_BOUND,
)

THREE_COL_SWEEP = SweepConfig(
    problem=Problem.COL3,
    n_values=[12],
    densities=density_grid(3.5, 6.0, 0.3),
    samples=20,
    analyzers=[Analyzer.SAT, Analyzer.BACKBONE],
)

GBP_SWEEP = SweepConfig(
    problem=Problem.GBP,
    n_values=[64, 128],
    densities=density_grid(1.0, 1.8, 0.1),
    samples=50,
    analyzers=[Analyzer.SAT, Analyzer.SPINE, Analyzer.EO],
)

PRESETS: Dict[str, SweepConfig] = {
    "2-sat": TWO_SAT_SWEEP,
    "3-sat": THREE_SAT_SWEEP,
    "3-xor": THREE_XOR_SWEEP,
    "3col": THREE_COL_SWEEP,
    "gbp": GBP_SWEEP,
}
