"""
Command-line interface for spinelab.

Generates instances, runs the exact analyzers on instance files and drives
density sweeps. Instance data goes to ``--out`` or stdout; status lines go
through rich.
"""

import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import FrozenSet, Optional, Tuple, Union

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .config import (
    PRESETS,
    BranchingPolicy,
    Budgets,
    EoConfig,
    EoProblem,
    GenModel,
    Problem,
    SweepConfig,
    load_config,
)
from .model import Formula, Graph, Hypergraph, coloring_formula

# Create Typer app
app = typer.Typer(
    name="spinelab",
    help="Random CSP generation, exact spine/backbone analysis and threshold sweeps",
    add_completion=False,
)

# Rich console for pretty output
console = Console()
# Summaries that must not mix with CSV on stdout
err_console = Console(stderr=True)

Instance = Union[Formula, Graph]


@dataclass
class State:
    """Global options shared by every command."""

    seed: Optional[int] = None
    budget_n: Optional[int] = None
    config: Optional[SweepConfig] = None
    out: Optional[Path] = None
    verbose: bool = False

    @property
    def budgets(self) -> Budgets:
        budgets = replace(self.config.budgets) if self.config else Budgets()
        if self.budget_n is not None:
            budgets.budget_n = self.budget_n
        return budgets

    @property
    def policy(self) -> BranchingPolicy:
        return self.config.policy if self.config else BranchingPolicy.MOMS

    @property
    def base_seed(self) -> int:
        """--seed, else the config file seed, else 0."""
        if self.seed is not None:
            return self.seed
        return self.config.seed if self.config else 0


def _state(ctx: typer.Context) -> State:
    return ctx.obj if isinstance(ctx.obj, State) else State()


def _fail(state: State, error: Exception) -> None:
    console.print(f"\n❌ [bold red]Error:[/bold red] {error}")
    if state.verbose:
        console.print_exception()
    sys.exit(1)


def _emit(state: State, text: str, out: Optional[Path] = None) -> None:
    """Write data to ``out`` (or the global --out), else to stdout."""
    target = out or state.out
    if target is None:
        typer.echo(text, nl=False)
        return
    target.write_text(text, encoding="utf-8")
    console.print(f"📝 Wrote {target}")


def _load(path: Path) -> Instance:
    from .parser import is_graph_file, parse_graph, parse_instance

    if not path.exists():
        raise typer.BadParameter(f"Instance file does not exist: {path}")
    text = path.read_text(encoding="utf-8")
    return parse_graph(text) if is_graph_file(text) else parse_instance(text)


def _as_formula(instance: Instance) -> Formula:
    return coloring_formula(instance, 3) if isinstance(instance, Graph) else instance


def _pairs_text(name: str, pairs: FrozenSet[Tuple[int, int]], n: int) -> str:
    from .order_params import pair_fraction

    fraction = pair_fraction(pairs, n)
    lines = [f"p {u + 1} {v + 1}" for u, v in sorted(pairs)]
    lines.append(
        f"fraction {name} {fraction.numerator}/{fraction.denominator} {float(fraction):.6f}"
    )
    return "\n".join(lines) + "\n"


@app.callback()
def main_options(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, "--seed", help="Base random seed"),
    budget_n: Optional[int] = typer.Option(
        None, "--budget-n", help="Largest n for exact spine/backbone enumeration"
    ),
    config: Optional[Path] = typer.Option(
        None, "--config", help="key=value configuration file", dir_okay=False
    ),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output file (default stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose output"),
) -> None:
    """Random CSP generation, exact spine/backbone analysis and threshold sweeps."""
    state = State(seed=seed, budget_n=budget_n, out=out, verbose=verbose)
    if config is not None:
        try:
            state.config = load_config(config)
        except Exception as e:
            _fail(state, e)
    ctx.obj = state


@app.command()
def gen(
    ctx: typer.Context,
    problem: Problem = typer.Argument(..., help="Problem family", case_sensitive=False),
    n: int = typer.Option(..., "--n", help="Number of variables or vertices"),
    c: float = typer.Option(..., "--c", help="Constraint density (mean degree for graphs)"),
    k: int = typer.Option(3, "--k", help="Arity for template families"),
    stream: int = typer.Option(0, "--stream", help="Stream index within the seed"),
) -> None:
    """
    Draw one random instance.

    Example:
        spinelab --seed 7 gen k-sat --n 20 --c 4.2 -o inst.gcsp
    """
    state = _state(ctx)
    try:
        from .generators import (
            GenSpec,
            constraints_for_density,
            edges_for_mean_degree,
            gen_graph,
            generate,
            named_family,
        )
        from .parser import format_graph, format_instance

        seed = state.base_seed
        if problem.is_graph:
            g = gen_graph(n, edges_for_mean_degree(c, n), seed, stream)
            _emit(state, format_graph(g))
        else:
            k = 2 if problem == Problem.TWO_SAT else k
            spec = GenSpec(
                GenModel.SAT_NEG, n, constraints_for_density(c, n),
                named_family(problem, k), seed, stream,
            )
            _emit(state, format_instance(generate(spec)))
    except Exception as e:
        _fail(state, e)


@app.command()
def solve(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp, DIMACS graph or DIMACS cnf file"),
    proof: bool = typer.Option(False, "--proof", help="Print the checked resolution refutation"),
    via_mus: bool = typer.Option(False, "--via-mus", help="Refute a minimal core only"),
    cnf_out: Optional[Path] = typer.Option(None, "--cnf-out", help="Write Cl(F) as DIMACS cnf"),
    policy: Optional[BranchingPolicy] = typer.Option(
        None, "--policy", help="DPLL branching policy", case_sensitive=False
    ),
) -> None:
    """Decide satisfiability; boolean inputs report DPLL nodes and proof width."""
    state = _state(ctx)
    try:
        from .parser import parse_dimacs_cnf, write_dimacs_cnf
        from .solver import check_proof, decide, dpll_refute, refute_via_mus, to_cnf

        policy = policy or state.policy
        if not instance.exists():
            raise typer.BadParameter(f"Instance file does not exist: {instance}")
        text = instance.read_text(encoding="utf-8")
        lines = []
        if any(line.startswith("p cnf") for line in text.splitlines()):
            cnf = parse_dimacs_cnf(text)
            formula = None
        else:
            formula = _as_formula(_load(instance))
            cnf = to_cnf(formula) if formula.t == 2 else None
        if cnf_out is not None:
            if cnf is None:
                raise typer.BadParameter("CNF export needs a boolean instance")
            write_dimacs_cnf(cnf, cnf_out)
            console.print(f"📝 Wrote {cnf_out}")

        if cnf is None:
            assert formula is not None
            decision = decide(formula, policy)
            lines.append("s SATISFIABLE" if decision.satisfiable else "s UNSATISFIABLE")
            if decision.witness is not None:
                lines.append(f"v {decision.witness.to_text()}")
            _emit(state, "\n".join(lines) + "\n")
            return

        if via_mus:
            if formula is None:
                raise typer.BadParameter("--via-mus needs a gcsp instance")
            result = refute_via_mus(formula, policy)
            satisfiable, witness, trace = result.satisfiable, result.witness, result.trace
            refuted = cnf if result.mus is None else to_cnf(result.mus)
        else:
            outcome = dpll_refute(cnf, policy)
            satisfiable, witness, trace = outcome.satisfiable, outcome.witness, outcome.trace
            refuted = cnf

        lines.append("s SATISFIABLE" if satisfiable else "s UNSATISFIABLE")
        if witness is not None:
            lines.append(f"v {witness.to_text()}")
        if trace is not None:
            lines.append(f"nodes {trace.nodes} policy {trace.policy.value}")
            if trace.proof is not None:
                check_proof(trace.proof, refuted)
                lines.append(f"proof size {trace.proof.size} width {trace.proof.width}")
                if proof:
                    lines.append(trace.proof.to_text().rstrip("\n"))
        _emit(state, "\n".join(lines) + "\n")
    except Exception as e:
        _fail(state, e)


@app.command()
def opt(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp or DIMACS graph file"),
) -> None:
    """Minimum number of violated constraints and an optimal assignment."""
    state = _state(ctx)
    try:
        from .solver import opt as solve_opt

        result = solve_opt(_as_formula(_load(instance)), state.budgets.exhaustive_rows)
        _emit(state, f"opt {result.value}\nv {result.witness.to_text()}\n")
    except Exception as e:
        _fail(state, e)


@app.command()
def spine(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp or DIMACS graph file"),
    problem: EoProblem = typer.Option(
        EoProblem.COL3, "--problem", help="Graph problem for DIMACS graphs", case_sensitive=False
    ),
    literals: bool = typer.Option(False, "--literals", help="Also list the literal spine"),
) -> None:
    """Exact spine S(F) and S_C(F)."""
    state = _state(ctx)
    try:
        from .order_params import col3_spine, gbp_spine
        from .order_params import spine as exact_spine

        loaded = _load(instance)
        if isinstance(loaded, Graph):
            if problem == EoProblem.GBP:
                pairs = gbp_spine(loaded, state.budgets)
            else:
                pairs = col3_spine(loaded, state.budgets)
            _emit(state, _pairs_text("f_SC", pairs, loaded.n))
        else:
            report = exact_spine(loaded, budgets=state.budgets, with_literals=literals)
            _emit(state, report.to_text())
    except Exception as e:
        _fail(state, e)


@app.command()
def backbone(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp or DIMACS graph file"),
    problem: EoProblem = typer.Option(
        EoProblem.COL3, "--problem", help="Graph problem for DIMACS graphs", case_sensitive=False
    ),
) -> None:
    """Exact backbone B(F) and B_C(F)."""
    state = _state(ctx)
    try:
        from .heuristics import col3_backbone_exact
        from .order_params import backbone as exact_backbone
        from .order_params import gbp_backbone_exact

        loaded = _load(instance)
        if isinstance(loaded, Graph):
            if problem == EoProblem.GBP:
                result = gbp_backbone_exact(loaded, state.budgets)
            else:
                result = col3_backbone_exact(loaded, state.budgets)
            _emit(state, f"opt {result.optimum}\n" + _pairs_text("f_BC", result.pairs, loaded.n))
        else:
            _emit(state, exact_backbone(loaded, budgets=state.budgets).to_text())
    except Exception as e:
        _fail(state, e)


@app.command()
def mus(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp or DIMACS graph file"),
) -> None:
    """Deletion-based minimally unsatisfiable subformula."""
    state = _state(ctx)
    try:
        from .structure import mus_extract

        _emit(state, mus_extract(_as_formula(_load(instance)), state.policy).to_text())
    except Exception as e:
        _fail(state, e)


@app.command()
def analyze(
    ctx: typer.Context,
    instance: Path = typer.Argument(..., help="gcsp file"),
    r: Optional[float] = typer.Option(None, "--r", help="Compute delta*_r as well"),
    x: Optional[float] = typer.Option(None, "--x", help="Sparsity size fraction"),
    y: Optional[float] = typer.Option(None, "--y", help="Sparsity edge ratio"),
) -> None:
    """Density c*, delta*_r, (x, y)-sparsity, implicates and orderings."""
    state = _state(ctx)
    try:
        from .errors import DomainError
        from .structure import (
            density_report,
            free_private_ordering,
            greedy_witness,
            implicate_check,
            is_xy_sparse,
            literal_density,
            private_census,
            x_bound,
        )

        f = _as_formula(_load(instance))
        if (x is None) != (y is None):
            raise typer.BadParameter("--x and --y go together")
        report = density_report(f, r)
        parts = [report.to_text()]
        if f.t == 2:
            density = literal_density(f)
            parts.append(f"literal_density {density.numerator}/{density.denominator}\n")
            for template in f.template_set:
                clauses = " ".join(str(cl) for cl in implicate_check(template, 2))
                parts.append(f"implicates {template.id} {clauses or '-'}\n")
        parts.append(f"private_census {private_census(f)}\n")
        ordering = free_private_ordering(f)
        if ordering.ordering is None:
            parts.append("ordering none\n")
        else:
            parts.append("ordering " + " ".join(str(i + 1) for i in ordering.ordering) + "\n")
            if f.t == 2:
                try:
                    witness = greedy_witness(f, ordering.ordering)
                    parts.append(f"greedy {witness.to_text() if witness else 'failed'}\n")
                except ValueError as exc:
                    parts.append(f"greedy n/a ({exc})\n")
        if x is not None and y is not None:
            verdict = is_xy_sparse(
                Hypergraph.from_formula(f), x, y, state.budgets.sparsity_subsets
            )
            parts.append(verdict.to_text())
            try:
                bound = x_bound(y, float(report.c_star), f.k)
                parts.append(f"x_bound {bound:.12g}\n")
            except DomainError as exc:
                parts.append(f"x_bound n/a ({exc})\n")
        _emit(state, "".join(parts))
    except Exception as e:
        _fail(state, e)


@app.command()
def eo(
    ctx: typer.Context,
    graph: Path = typer.Argument(..., help="DIMACS graph file"),
    problem: EoProblem = typer.Option(EoProblem.COL3, "--problem", case_sensitive=False),
    tau: float = typer.Option(1.4, "--tau", help="Rank power-law exponent"),
    restarts: int = typer.Option(20, "--restarts"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Steps per restart (default 200 n)"),
    exact: bool = typer.Option(False, "--exact", help="Enumerate all optima instead"),
) -> None:
    """Ground-state pool and backbone estimate by extremal optimization."""
    state = _state(ctx)
    try:
        from .heuristics import backbone_estimate, eo_sample, exact_ground_states

        loaded = _load(graph)
        if not isinstance(loaded, Graph):
            raise typer.BadParameter("eo needs a DIMACS graph file")
        if exact:
            pool = exact_ground_states(loaded, problem, state.budgets)
        else:
            cfg = EoConfig(tau=tau, restarts=restarts, steps=steps,
                           seed=state.base_seed, problem=problem)
            pool = eo_sample(loaded, cfg)
        _emit(state, backbone_estimate(pool).to_text() + pool.to_text())
    except Exception as e:
        _fail(state, e)


def _sweep_config(state: State, preset: Optional[str]) -> SweepConfig:
    if state.config is not None:
        cfg = state.config
    elif preset is not None:
        if preset not in PRESETS:
            raise typer.BadParameter(
                f"Unknown preset {preset!r}; choose one of {', '.join(sorted(PRESETS))}"
            )
        cfg = replace(PRESETS[preset])
    else:
        cfg = SweepConfig()
    overrides = {}
    if state.seed is not None:
        overrides["seed"] = state.seed
    if state.budget_n is not None:
        overrides["budgets"] = state.budgets
    return replace(cfg, **overrides) if overrides else cfg


def _summary(points) -> Table:
    table = Table(title="Sweep")
    for name in ("n", "c", "p_sat", "f_S", "f_BC", "nodes", "reason"):
        table.add_column(name)

    def cell(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.3f}"

    for p in points:
        table.add_row(
            str(p.n), f"{p.c:g}", cell(p.p_sat), cell(p.f_S_mean), cell(p.f_BC_mean),
            "-" if p.dpll_nodes_median is None else f"{p.dpll_nodes_median:g}",
            p.reason or "",
        )
    return table


@app.command()
def sweep(
    ctx: typer.Context,
    preset: Optional[str] = typer.Argument(None, help="Preset: 2-sat, 3-sat, 3-xor, 3col, gbp"),
    svg: Optional[Path] = typer.Option(None, "--svg", help="Also plot the sweep as SVG"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Override samples per cell"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker processes"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Report threshold crossings"),
    probe: bool = typer.Option(False, "--probe", help="Report the spine discontinuity probe"),
    no_progress: bool = typer.Option(False, "--no-progress", help="Hide the progress bar"),
) -> None:
    """
    Run a density sweep and write the CSV table.

    Example:
        spinelab --config sweep.cfg --out sweep.csv sweep --svg sweep.svg
    """
    state = _state(ctx)
    try:
        from .core import ExperimentRunner, discontinuity_probe, threshold_estimate
        from .renderer import format_csv

        cfg = _sweep_config(state, preset)
        overrides = {}
        if samples is not None:
            overrides["samples"] = samples
        if workers is not None:
            overrides["workers"] = workers
        if no_progress:
            overrides["progress"] = False
        if state.out is not None:
            overrides["csv_path"] = state.out
        if svg is not None:
            overrides["svg_path"] = svg
        if overrides:
            cfg = replace(cfg, **overrides)

        if state.verbose:
            err_console.print(Panel(
                "\n".join(f"{key}: {value}" for key, value in cfg.to_dict().items()),
                title="📋 Settings",
            ))

        runner = ExperimentRunner(cfg)
        points = runner.run()
        runner.write_outputs(points)
        if cfg.csv_path is None:
            typer.echo(format_csv(points), nl=False)
        else:
            console.print(_summary(points))

        if eps is not None:
            k = None if cfg.problem.is_graph else cfg.k
            for est in threshold_estimate(points, eps, k):
                err_console.print(
                    f"n={est.n} c_eps={est.c_eps:.4f} c_half={est.c_half:.4f} "
                    f"c_1-eps={est.c_one_minus_eps:.4f} sharpness={est.sharpness:.4f}"
                )
        if probe:
            err_console.print(discontinuity_probe(points, cfg.etas).to_text(), markup=False)
    except Exception as e:
        _fail(state, e)


@app.command()
def plot(
    ctx: typer.Context,
    table: Path = typer.Argument(..., help="Sweep CSV"),
    column: str = typer.Option("p_sat", "--column", help="Column to plot against c"),
    svg: Optional[Path] = typer.Option(None, "--svg", help="SVG path (default --out)"),
    k: int = typer.Option(3, "--k", help="Arity, for reference lines"),
) -> None:
    """Plot a stored sweep CSV as SVG."""
    state = _state(ctx)
    try:
        from .parser import read_sweep_csv
        from .renderer import PlotSpec, emit_svg

        target = svg or state.out
        if target is None:
            raise typer.BadParameter("give --svg or --out for the plot")
        points = read_sweep_csv(table)
        if not points:
            raise ValueError(f"{table} holds no rows")
        spec = PlotSpec.for_problem(Problem(points[0].problem), column, k)
        emit_svg(points, spec, target)
        console.print("\n✅ [bold green]Plot written![/bold green]")
        console.print(f"📄 Output: {target}")
    except Exception as e:
        _fail(state, e)


@app.command()
def version() -> None:
    """Show version information."""
    from . import __version__

    console.print(f"📚 [bold]spinelab[/bold] v{__version__}")
    console.print("Random CSP generation, exact spine/backbone analysis and threshold sweeps")


def main():
    """Main entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
