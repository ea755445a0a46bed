"""
Tests for core module.
"""

import math
from fractions import Fraction
from unittest.mock import MagicMock, Mock, patch

import pytest

from spinelab.config import (
    Analyzer,
    Budgets,
    EoConfig,
    EoProblem,
    Problem,
    SpineEstimator,
    SweepConfig,
    density_grid,
)
from spinelab.core import (
    EVIDENCE_LABEL,
    ExperimentRunner,
    SampleMeasurement,
    SweepPoint,
    aggregate,
    continuous_threshold,
    discontinuity_probe,
    mus_density_survey,
    sweep,
    threshold_estimate,
)
from spinelab.errors import InvalidSpec, ThresholdBracketError
from spinelab.model import Formula
from spinelab.solver import decide
from spinelab.structure import mus_extract

from .helpers import graph


def _config(**overrides):
    data = dict(problem=Problem.K_SAT, n_values=[6], densities=[2.0], samples=3,
                seed=1, progress=False)
    data.update(overrides)
    return SweepConfig(**data)


def _point(n, c, p_sat, f_S_values=()):
    return SweepPoint(problem="k-sat", n=n, c=c, samples=10, p_sat=p_sat,
                      f_S_values=tuple(f_S_values))


class TestAggregate:
    """Test folding samples into a cell."""

    def test_aggregate(self):
        """Test means, medians, p_sat and reasons."""
        measurements = [
            SampleMeasurement(True, f_S=0.0, dpll_nodes=3, reasons=["spine:budget"]),
            SampleMeasurement(False, f_S=0.5, dpll_nodes=7, width=2, mus_varfrac=0.5),
            SampleMeasurement(False, dpll_nodes=9, width=4, mus_varfrac=1.0,
                              reasons=["f_S:mus-bound", "spine:budget"]),
        ]
        point = aggregate("k-sat", 10, 4.0, measurements)
        assert point.samples == 3
        assert point.p_sat == pytest.approx(1 / 3)
        assert point.f_S_mean == pytest.approx(0.25)
        assert point.f_B_mean is None
        assert point.dpll_nodes_median == 7
        assert point.width_median == 3
        assert point.mus_varfrac_mean == pytest.approx(0.75)
        assert point.reason == "f_S:mus-bound;spine:budget"
        assert point.f_S_values == (0.0, 0.5)

    def test_empty_cell(self):
        """Test a cell without samples is refused."""
        with pytest.raises(ValueError):
            aggregate("k-sat", 10, 4.0, [])


class TestExperimentRunner:
    """Test ExperimentRunner class."""

    def test_init_default_config(self):
        """Test initialization with default config."""
        runner = ExperimentRunner()
        assert isinstance(runner.config, SweepConfig)
        assert runner.template_set.k == 3

    def test_graph_problem_has_no_template_set(self):
        """Test graph sweeps draw graphs instead of formulas."""
        runner = ExperimentRunner(_config(problem=Problem.COL3))
        assert runner.template_set is None
        g = runner.draw(10, 3.0, 0)
        assert g.m == 15

    def test_gbp_needs_even_n(self):
        """Test odd sizes are refused for bisection sweeps."""
        with pytest.raises(InvalidSpec):
            ExperimentRunner(_config(problem=Problem.GBP, n_values=[6, 7]))

    def test_task_streams(self):
        """Test sample s of cell i draws stream i * samples + s."""
        runner = ExperimentRunner(_config(n_values=[6, 8], densities=[1.0, 2.0]))
        tasks = runner.tasks()
        assert len(tasks) == 12
        assert tasks[0] == (6, 1.0, 0)
        assert tasks[4] == (6, 2.0, 4)
        assert tasks[-1] == (8, 2.0, 11)

    def test_draw_reproducible(self):
        """Test the same stream gives the same formula."""
        runner = ExperimentRunner(_config())
        a = runner.draw(8, 3.0, 5)
        assert isinstance(a, Formula)
        assert a.m == 24
        assert a == runner.draw(8, 3.0, 5)
        assert a != runner.draw(8, 3.0, 6)

    @pytest.mark.parametrize("stream", range(4))
    def test_measure_formula(self, stream):
        """Test spine and backbone agree on satisfiable samples and bound the MUS."""
        analyzers = [Analyzer.SAT, Analyzer.SPINE, Analyzer.BACKBONE, Analyzer.DPLL, Analyzer.MUS]
        runner = ExperimentRunner(_config(densities=[4.0], analyzers=analyzers))
        m = runner.measure(6, 4.0, stream)
        assert 0 <= m.f_S <= 1 and 0 <= m.f_B <= 1
        assert m.dpll_nodes >= 1
        if m.satisfiable:
            assert m.f_S == m.f_B
            assert m.f_SC == m.f_BC
            assert m.mus_varfrac is None
            assert m.width is None
        else:
            assert m.mus_varfrac <= m.f_S
            assert m.width >= 1
        assert m.reasons == []

    def test_measure_formula_budget(self):
        """Test refused exact analyzers leave reason codes."""
        cfg = _config(analyzers=[Analyzer.SPINE, Analyzer.BACKBONE, Analyzer.EO],
                      budgets=Budgets(budget_n=4))
        m = ExperimentRunner(cfg).measure(6, 2.0, 0)
        assert m.f_S is None and m.f_B is None
        assert m.reasons == ["spine:budget", "backbone:budget", "eo:graphs-only",
                             "dpll:not-selected", "mus:not-selected"]

    def test_measure_mus_bound(self):
        """Test the MUS-bound estimator labels its value."""
        cfg = _config(analyzers=[Analyzer.SPINE], spine_estimator=SpineEstimator.MUS_BOUND)
        m = ExperimentRunner(cfg).measure(6, 2.0, 0)
        assert m.f_S is not None
        assert m.f_SC is None
        assert m.reasons == ["f_S:mus-bound", "backbone:not-selected",
                             "dpll:not-selected", "mus:not-selected"]

    def test_measure_col3(self):
        """Test 3-coloring samples use the exact pair analyzers."""
        cfg = _config(problem=Problem.COL3,
                      analyzers=[Analyzer.SPINE, Analyzer.BACKBONE, Analyzer.EO, Analyzer.DPLL])
        runner = ExperimentRunner(cfg)
        with patch.object(runner, "draw", return_value=graph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])):
            m = runner.measure(4, 2.5, 0)
        assert m.satisfiable
        assert m.f_BC == pytest.approx(1 / 6)
        assert m.f_B == pytest.approx(0.5)
        assert m.reasons == ["dpll:boolean-only", "mus:not-selected"]

    def test_measure_col3_eo_fallback(self):
        """Test EO fills the backbone when exact enumeration is refused."""
        cfg = _config(problem=Problem.COL3, analyzers=[Analyzer.BACKBONE, Analyzer.EO],
                      budgets=Budgets(col3_exact_n=3), eo=EoConfig(restarts=2, steps=60))
        runner = ExperimentRunner(cfg)
        with patch.object(runner, "draw", return_value=graph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])):
            m = runner.measure(4, 2.5, 0)
        assert m.reasons == ["backbone:budget", "f_BC:eo", "spine:not-selected",
                             "dpll:not-selected", "mus:not-selected"]
        assert m.f_BC is not None

    def test_measure_gbp(self):
        """Test bisection reasons for refused spine and MUS analyzers."""
        cfg = _config(problem=Problem.GBP, analyzers=[Analyzer.SPINE, Analyzer.MUS],
                      budgets=Budgets(gbp_spine_n=4))
        runner = ExperimentRunner(cfg)
        path = graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
        with patch.object(runner, "draw", return_value=path):
            m = runner.measure(6, 1.6, 0)
        assert not m.satisfiable
        assert m.f_S == 1.0
        assert m.reasons == ["f_S:giant-bound", "mus:csp-only",
                             "backbone:not-selected", "dpll:not-selected"]

    def test_unselected_analyzers_leave_reasons(self):
        """Test every empty column of a sat-only sweep is explained."""
        m = ExperimentRunner(_config(analyzers=[Analyzer.SAT])).measure(6, 2.0, 0)
        assert m.f_S is None and m.f_B is None and m.dpll_nodes is None
        assert m.reasons == ["spine:not-selected", "backbone:not-selected",
                             "dpll:not-selected", "mus:not-selected"]

    def test_eo_backbone_needs_no_backbone_reason(self):
        """Test an EO estimate fills the backbone columns without a not-selected code."""
        cfg = _config(problem=Problem.COL3, analyzers=[Analyzer.EO],
                      eo=EoConfig(restarts=2, steps=60))
        runner = ExperimentRunner(cfg)
        with patch.object(runner, "draw", return_value=graph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])):
            m = runner.measure(4, 2.5, 0)
        assert m.f_B is not None
        assert "backbone:not-selected" not in m.reasons
        assert "f_BC:eo" in m.reasons

    def test_run_reason_column(self):
        """Test the aggregated reason lists the not-selected analyzers sorted."""
        cfg = _config(analyzers=[Analyzer.SAT, Analyzer.SPINE, Analyzer.DPLL])
        point = ExperimentRunner(cfg).run()[0]
        assert point.f_B_mean is None
        assert point.reason == "backbone:not-selected;mus:not-selected"

    def test_eo_config_per_stream(self):
        """Test each sample gets its own EO seed and the sweep's problem."""
        runner = ExperimentRunner(_config(problem=Problem.GBP))
        a, b = runner._eo_config(0), runner._eo_config(1)
        assert a.problem == EoProblem.GBP
        assert a.seed != b.seed
        assert a.seed == runner._eo_config(0).seed

    def test_run(self):
        """Test one point per cell, n-major."""
        cfg = _config(problem=Problem.TWO_SAT, n_values=[6, 8], densities=[0.5, 1.5])
        points = ExperimentRunner(cfg).run()
        assert [(p.n, p.c) for p in points] == [(6, 0.5), (6, 1.5), (8, 0.5), (8, 1.5)]
        assert all(p.samples == 3 and 0 <= p.p_sat <= 1 for p in points)

    def test_run_reproducible(self):
        """Test two runs of the same config give the same table."""
        cfg = _config(analyzers=[Analyzer.SAT, Analyzer.SPINE])
        assert ExperimentRunner(cfg).run() == ExperimentRunner(cfg).run()

    @patch("spinelab.core.Pool")
    def test_run_with_workers(self, mock_pool_class):
        """Test worker runs map the tasks through a process pool."""
        cfg = _config(workers=2)
        pool = MagicMock()
        mock_pool_class.return_value.__enter__.return_value = pool
        pool.imap.return_value = [SampleMeasurement(True), SampleMeasurement(False),
                                  SampleMeasurement(True)]
        points = ExperimentRunner(cfg).run()
        mock_pool_class.assert_called_once_with(2)
        args = pool.imap.call_args[0][1]
        assert [a[1:] for a in args] == [(6, 2.0, 0), (6, 2.0, 1), (6, 2.0, 2)]
        assert points[0].p_sat == pytest.approx(2 / 3)

    @pytest.mark.slow
    def test_workers_match_serial(self):
        """Test a real process pool reproduces the serial table."""
        cfg = _config(n_values=[6, 8], densities=[2.0, 5.0], analyzers=[Analyzer.SAT, Analyzer.DPLL])
        serial = ExperimentRunner(cfg).run()
        parallel = ExperimentRunner(_config(n_values=[6, 8], densities=[2.0, 5.0],
                                            analyzers=[Analyzer.SAT, Analyzer.DPLL],
                                            workers=2)).run()
        assert serial == parallel

    def test_write_outputs(self, tmp_path):
        """Test CSV and SVG files are written where the config says."""
        cfg = _config(csv_path=tmp_path / "sweep.csv", svg_path=tmp_path / "sweep.svg")
        runner = ExperimentRunner(cfg)
        runner.write_outputs([_point(6, 1.0, 1.0), _point(6, 2.0, 0.5)])
        assert (tmp_path / "sweep.csv").read_text().startswith("problem,n,c,samples,p_sat")
        assert "<svg" in (tmp_path / "sweep.svg").read_text()

    def test_collect_muses(self):
        """Test MUSes come from unsatisfiable draws only."""
        runner = ExperimentRunner(_config())
        muses = runner.collect_muses(6, 6.0, 2)
        assert len(muses) == 2
        for mus in muses:
            assert not decide(mus.subformula)

    def test_collect_muses_graph(self):
        """Test MUS collection is limited to template families."""
        with pytest.raises(InvalidSpec):
            ExperimentRunner(_config(problem=Problem.COL3)).collect_muses(6, 3.0, 1)


class TestSweep:
    """Test sweep convenience function."""

    @patch("spinelab.core.ExperimentRunner")
    def test_sweep(self, mock_runner_class):
        """Test sweep builds a runner and runs it."""
        mock_runner = Mock()
        mock_runner.run.return_value = ["point"]
        mock_runner_class.return_value = mock_runner
        cfg = _config()
        assert sweep(cfg) == ["point"]
        mock_runner_class.assert_called_once_with(cfg)


class TestThresholdEstimate:
    """Test threshold crossings."""

    def _cells(self, n=10):
        return [_point(n, 1.0, 1.0), _point(n, 2.0, 0.8), _point(n, 3.0, 0.3), _point(n, 4.0, 0.0)]

    def test_continuous_threshold(self):
        """Test 2 / (k(k-1))."""
        assert continuous_threshold(3) == Fraction(1, 3)
        assert continuous_threshold(2) == 1
        with pytest.raises(ValueError):
            continuous_threshold(1)

    def test_crossings(self):
        """Test interpolated crossings at 1-eps, 1/2 and eps."""
        (estimate,) = threshold_estimate(self._cells(), eps=0.1, k=3)
        assert estimate.c_eps == pytest.approx(1.5)
        assert estimate.c_half == pytest.approx(2.6)
        assert estimate.c_one_minus_eps == pytest.approx(3 + 2 / 3)
        assert estimate.width == pytest.approx(2 + 1 / 6)
        assert estimate.sharpness == pytest.approx((2 + 1 / 6) / 2.6)
        assert estimate.above_continuous is True

    def test_one_estimate_per_n(self):
        """Test sizes are reported in increasing order."""
        estimates = threshold_estimate(self._cells(20) + self._cells(10))
        assert [e.n for e in estimates] == [10, 20]
        assert estimates[0].above_continuous is None

    def test_low_side_not_bracketed(self):
        """Test a grid starting below 1-eps names the low-density side."""
        cells = [_point(10, 2.0, 0.8), _point(10, 3.0, 0.0)]
        with pytest.raises(ThresholdBracketError) as info:
            threshold_estimate(cells)
        assert info.value.side == "low-density"

    def test_high_side_not_bracketed(self):
        """Test a grid never reaching eps names the high-density side."""
        cells = [_point(10, 1.0, 1.0), _point(10, 2.0, 0.4)]
        with pytest.raises(ThresholdBracketError) as info:
            threshold_estimate(cells)
        assert info.value.side == "high-density"

    def test_bad_eps(self):
        """Test eps must lie in (0, 1/2)."""
        with pytest.raises(ValueError):
            threshold_estimate(self._cells(), eps=0.5)

    def test_empty(self):
        """Test an empty table is refused."""
        with pytest.raises(ValueError):
            threshold_estimate([])


class TestDiscontinuityProbe:
    """Test discontinuity_probe."""

    def _points(self):
        return [
            _point(10, 1.0, 1.0, [0.0] * 4),
            _point(10, 2.0, 0.0, [0.0, 0.5, 0.6, 0.05]),
            _point(20, 1.0, 1.0, [0.0] * 4),
            _point(20, 2.0, 0.0, [0.4, 0.5, 0.6, 0.0]),
        ]

    def test_growing_shares(self):
        """Test shares above the threshold growing with n."""
        report = discontinuity_probe(self._points())
        assert [row.c for row in report.rows] == [2.0, 2.0]
        assert report.rows[0].fractions == {0.1: 0.5, 0.3: 0.5}
        assert report.rows[1].fractions == {0.1: 0.75, 0.3: 0.75}
        assert report.trends == {0.1: "growing", 0.3: "growing"}
        assert report.label == EVIDENCE_LABEL

    def test_to_text(self):
        """Test the report text carries the evidence label."""
        text = discontinuity_probe(self._points(), etas=(0.3,)).to_text()
        assert text.splitlines()[0] == f"# {EVIDENCE_LABEL}"
        assert "n=20 c=2 samples=4 eta=0.3:0.7500" in text
        assert text.rstrip().endswith("trend eta=0.3 growing")

    def test_single_size(self):
        """Test one size gives no trend."""
        report = discontinuity_probe(self._points()[:2])
        assert report.trends[0.1] == "single-size"

    def test_explicit_density_beyond_grid(self):
        """Test a density above the grid is refused."""
        with pytest.raises(ThresholdBracketError):
            discontinuity_probe(self._points(), c=5.0)

    def test_needs_spine_values(self):
        """Test cells without f_S values are refused."""
        points = [_point(10, 1.0, 1.0), _point(10, 2.0, 0.0)]
        with pytest.raises(ValueError, match="spine"):
            discontinuity_probe(points)

    def test_empty_eta_grid(self):
        """Test an empty eta grid is refused."""
        with pytest.raises(ValueError):
            discontinuity_probe(self._points(), etas=())


class TestMusDensitySurvey:
    """Test the MUS density survey."""

    def test_unsat_core(self, unsat_2sat):
        """Test the four 2-clauses on two variables."""
        survey = mus_density_survey([mus_extract(unsat_2sat)])
        (row,) = survey.rows
        assert row.size == 4
        assert row.c_star == 2
        assert row.delta_star == 0
        assert row.literal_density == 1
        assert row.exceeds
        assert survey.bound == pytest.approx(1.1)
        assert survey.share_exceeding == 1.0
        assert survey.min_c_star == 2

    def test_empty(self):
        """Test the survey needs at least one MUS."""
        with pytest.raises(ValueError):
            mus_density_survey([])


def _sweep_config(problem, n_values, densities, samples, **overrides):
    return SweepConfig(problem=problem, n_values=n_values, densities=densities,
                       samples=samples, seed=2027, progress=False, **overrides)


@pytest.mark.slow
class TestSweepSignatures:
    """Reduced-size sweeps reproducing the known threshold signatures."""

    def test_two_sat_threshold(self):
        """Test the 2-SAT half crossing lies within 15% of c = 1."""
        cfg = _sweep_config(Problem.TWO_SAT, [300], density_grid(0.6, 2.0, 0.1), 80)
        (estimate,) = threshold_estimate(sweep(cfg), eps=0.25, k=2)
        assert estimate.c_half == pytest.approx(1.0, rel=0.15)

    def test_gbp_threshold(self):
        """Test the bisection half crossing lies within 15% of mean degree 2 ln 2."""
        cfg = _sweep_config(Problem.GBP, [256], density_grid(1.0, 1.8, 0.1), 50)
        (estimate,) = threshold_estimate(sweep(cfg), eps=0.1)
        assert estimate.c_half == pytest.approx(2 * math.log(2), rel=0.15)
        assert estimate.c_eps <= estimate.c_half <= estimate.c_one_minus_eps

    @pytest.mark.parametrize("problem,densities", [
        (Problem.K_SAT, [3.5, 4.5, 5.5, 6.5]),
        (Problem.K_XOR_SAT, [0.6, 0.9, 1.2, 1.5]),
    ])
    def test_unsat_samples_clear_eta(self, problem, densities):
        """Test every unsatisfiable sample above c_half has f_S >= 0.1 at n = 16 and 24."""
        cfg = _sweep_config(problem, [16, 24], densities, 10,
                            analyzers=[Analyzer.SAT, Analyzer.SPINE],
                            spine_estimator=SpineEstimator.MUS_BOUND)
        points = sweep(cfg)
        report = discontinuity_probe(points, etas=(0.1,))
        assert [row.n for row in report.rows] == [16, 24]
        assert report.label == EVIDENCE_LABEL
        for row in report.rows:
            cell = next(p for p in points if p.n == row.n and p.c == row.c)
            assert cell.p_sat <= 0.5
            assert row.fractions[0.1] >= 1 - cell.p_sat - 1e-9

    def test_two_sat_cores_shrink_with_n(self):
        """Test the mean MUS variable fraction of 2-SAT at c = 1.5 falls from n = 20 to 100."""
        cfg = _sweep_config(Problem.TWO_SAT, [20, 100], [1.5], 30,
                            analyzers=[Analyzer.SAT, Analyzer.MUS])
        small, large = sweep(cfg)
        assert small.mus_varfrac_mean is not None
        assert large.mus_varfrac_mean is not None
        assert large.mus_varfrac_mean < small.mus_varfrac_mean

    def test_dpll_cost_peaks_at_threshold(self):
        """Test the 3-SAT median DPLL node count at c = 4.3 beats c = 3.0 and c = 6.0."""
        cfg = _sweep_config(Problem.K_SAT, [50], [3.0, 4.3, 6.0], 40,
                            analyzers=[Analyzer.SAT, Analyzer.DPLL])
        easy_sat, hard, easy_unsat = sweep(cfg)
        assert hard.dpll_nodes_median > easy_sat.dpll_nodes_median
        assert hard.dpll_nodes_median > easy_unsat.dpll_nodes_median

    def test_gbp_backbone_stays_below_spine(self):
        """Test a near-empty EO backbone below threshold and a giant spine above it."""
        cfg = _sweep_config(Problem.GBP, [64], [1.0, 2.4], 6,
                            analyzers=[Analyzer.SAT, Analyzer.SPINE, Analyzer.EO],
                            eo=EoConfig(restarts=8, steps=2000))
        below, above = sweep(cfg)
        assert below.f_BC_mean <= 0.05
        assert below.f_S_mean == 0
        assert "f_S:giant-bound" in above.reason.split(";")
        assert above.f_S_mean > 0.5
        assert above.f_SC_mean > above.f_BC_mean
