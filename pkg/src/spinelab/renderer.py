"""
CSV and SVG output for sweep tables.

The CSV layout is fixed; the plot is drawn with reportlab's graphics
package and written through its SVG backend.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from reportlab.graphics import renderSVG
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.shapes import Drawing, Line, String
from reportlab.lib import colors

from .config import Problem
from .core import SweepPoint, continuous_threshold

CSV_HEADER = (
    "problem",
    "n",
    "c",
    "samples",
    "p_sat",
    "f_S_mean",
    "f_B_mean",
    "f_SC_mean",
    "f_BC_mean",
    "dpll_nodes_median",
    "width_median",
    "mus_varfrac_mean",
    "reason",
)

PLOT_COLUMNS = CSV_HEADER[4:12]

# Known threshold locations per problem (k-SAT entry is for k = 3)
REFERENCE_LINES: Dict[Problem, Tuple[Tuple[float, str], ...]] = {
    Problem.TWO_SAT: ((1.0, "c = 1"),),
    Problem.K_SAT: ((4.27, "c = 4.27"),),
    Problem.COL3: ((4.70, "c = 4.70"),),
    Problem.GBP: ((2 * math.log(2), "c = 2 ln 2"),),
}

SERIES_COLORS = (
    colors.HexColor("#1f77b4"),
    colors.HexColor("#d62728"),
    colors.HexColor("#2ca02c"),
    colors.HexColor("#9467bd"),
    colors.HexColor("#ff7f0e"),
    colors.HexColor("#8c564b"),
)


def _fixed(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def _number(value: Optional[float]) -> str:
    return "" if value is None else f"{value:g}"


def csv_row(point: SweepPoint) -> List[str]:
    return [
        point.problem,
        str(point.n),
        f"{point.c:g}",
        str(point.samples),
        _fixed(point.p_sat),
        _fixed(point.f_S_mean),
        _fixed(point.f_B_mean),
        _fixed(point.f_SC_mean),
        _fixed(point.f_BC_mean),
        _number(point.dpll_nodes_median),
        _number(point.width_median),
        _fixed(point.mus_varfrac_mean),
        point.reason,
    ]


def format_csv(points: Sequence[SweepPoint]) -> str:
    """The sweep table as CSV text; absent measurements stay empty fields."""
    if not points:
        raise ValueError("sweep table is empty, nothing to write")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for point in points:
        writer.writerow(csv_row(point))
    return buffer.getvalue()


def emit_csv(points: Sequence[SweepPoint], path: Path) -> None:
    text = format_csv(points)
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise OSError(f"Cannot write CSV to {path}: {exc.strerror or exc}") from exc


@dataclass
class PlotSpec:
    """What to draw: one column against c, one series per n."""

    column: str = "p_sat"
    title: str = ""
    verticals: Tuple[Tuple[float, str], ...] = ()
    width: int = 480
    height: int = 320

    def __post_init__(self) -> None:
        if self.column not in PLOT_COLUMNS:
            raise ValueError(
                f"cannot plot column {self.column!r}; choose one of {', '.join(PLOT_COLUMNS)}"
            )

    @classmethod
    def for_problem(cls, problem: Problem, column: str = "p_sat", k: int = 3) -> "PlotSpec":
        """Default title and reference verticals for a problem family."""
        verticals = list(REFERENCE_LINES.get(problem, ()))
        if problem == Problem.K_SAT and k != 3:
            verticals = []
        if not problem.is_graph and problem != Problem.TWO_SAT:
            ref = float(continuous_threshold(k))
            verticals.append((ref, f"2/(k(k-1)) = {ref:.3g}"))
        return cls(column=column, title=f"{problem.value}: {column}", verticals=tuple(verticals))


class SweepRenderer:
    """Draws a sweep table as a line plot."""

    def __init__(self, spec: PlotSpec):
        self.spec = spec

    def series(self, points: Sequence[SweepPoint]) -> Dict[int, List[Tuple[float, float]]]:
        out: Dict[int, List[Tuple[float, float]]] = {}
        for point in sorted(points, key=lambda p: (p.n, p.c)):
            value = getattr(point, self.spec.column)
            if value is not None:
                out.setdefault(point.n, []).append((point.c, float(value)))
        return out

    def drawing(self, points: Sequence[SweepPoint]) -> Drawing:
        spec = self.spec
        series = self.series(points)
        if not series:
            raise ValueError(f"column {spec.column} has no values to plot")

        xs = [x for data in series.values() for x, _ in data]
        ys = [y for data in series.values() for _, y in data]
        x_min, x_max = min(xs), max(xs)
        if x_min == x_max:
            x_min, x_max = x_min - 0.5, x_max + 0.5
        y_max = max(1.0, max(ys)) if spec.column.startswith(("p_", "f_", "mus_")) else max(ys)
        y_max = y_max * 1.05 if y_max > 0 else 1.0

        drawing = Drawing(spec.width, spec.height)
        plot = LinePlot()
        plot.x, plot.y = 50, 40
        plot.width, plot.height = spec.width - 140, spec.height - 80
        ns = sorted(series)
        plot.data = [series[n] for n in ns]
        plot.xValueAxis.valueMin, plot.xValueAxis.valueMax = x_min, x_max
        plot.yValueAxis.valueMin, plot.yValueAxis.valueMax = 0, y_max
        for i, _ in enumerate(ns):
            plot.lines[i].strokeColor = SERIES_COLORS[i % len(SERIES_COLORS)]
            plot.lines[i].strokeWidth = 1.5
        drawing.add(plot)

        for value, label in spec.verticals:
            if not x_min <= value <= x_max:
                continue
            x = plot.x + (value - x_min) / (x_max - x_min) * plot.width
            line = Line(x, plot.y, x, plot.y + plot.height)
            line.strokeColor = colors.grey
            line.strokeDashArray = [3, 3]
            drawing.add(line)
            drawing.add(String(x + 2, plot.y + plot.height - 10, label, fontSize=7))

        # legend
        for i, n in enumerate(ns):
            y = plot.y + plot.height - 14 * i
            drawing.add(String(plot.x + plot.width + 10, y, f"n = {n}", fontSize=9,
                               fillColor=SERIES_COLORS[i % len(SERIES_COLORS)]))
        if spec.title:
            drawing.add(String(plot.x, spec.height - 20, spec.title, fontSize=11))
        drawing.add(String(plot.x + plot.width / 2, 10, "c", fontSize=9))
        return drawing


def emit_svg(points: Sequence[SweepPoint], spec: PlotSpec, path: Path) -> None:
    """Render ``spec.column`` against c as an SVG file."""
    if not points:
        raise ValueError("sweep table is empty, nothing to plot")
    path = Path(path)
    drawing = SweepRenderer(spec).drawing(points)
    try:
        renderSVG.drawToFile(drawing, str(path))
    except OSError as exc:
        raise OSError(f"Cannot write SVG to {path}: {exc.strerror or exc}") from exc
