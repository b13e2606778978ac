"""
SVG figures drawn with reportlab graphics.

Every plot kind reads a column table with a fixed set of columns; the
output is a standalone SVG document that depends only on the table.
"""
import numpy as np
from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Circle, Drawing, Group, Line, PolyLine, Rect, String
from reportlab.lib import colors

from core.exceptions import PlotColumnError, PreconditionError

WIDTH, HEIGHT = 480, 360
LEFT, RIGHT, BOTTOM, TOP = 68, 16, 48, 36
FONT = 'Helvetica'
TICKS = 5

PALETTE = tuple(colors.HexColor(code) for code in (
    '#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e',
    '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf',
))

PLOT_COLUMNS = {
    'ecdf': ('value', 'probability'),
    'histogram+fit': ('bin_left', 'bin_right', 'density', 'fit'),
    'acf': ('lag', 'value', 'band'),
    'scatter': ('x', 'y'),
    'series-overlay': ('index', 'measured', 'predicted'),
    'roc': ('fpr', 'tpr'),
}

DEFAULT_LABELS = {
    'ecdf': ('value', 'cumulative probability'),
    'histogram+fit': ('value', 'density'),
    'acf': ('lag (samples)', 'correlation'),
    'scatter': ('x', 'y'),
    'series-overlay': ('sample index', 'value'),
    'roc': ('false positive rate', 'true positive rate'),
}


def _span(values, floor=None, ceiling=None):
    finite = [v for v in values if np.isfinite(v)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    if floor is not None:
        lo = min(lo, floor)
    if ceiling is not None:
        hi = max(hi, ceiling)
    if hi == lo:
        pad = abs(lo) * 0.5 or 0.5
        lo, hi = lo - pad, hi + pad
    return float(lo), float(hi)


class Frame:
    """Maps data coordinates onto the plotting area."""

    def __init__(self, x_span, y_span):
        self.x_lo, self.x_hi = x_span
        self.y_lo, self.y_hi = y_span
        self.left, self.bottom = LEFT, BOTTOM
        self.right, self.top = WIDTH - RIGHT, HEIGHT - TOP

    def x(self, value):
        return self.left + (value - self.x_lo) / (self.x_hi - self.x_lo) * (self.right - self.left)

    def y(self, value):
        return self.bottom + (value - self.y_lo) / (self.y_hi - self.y_lo) * (self.top - self.bottom)

    def point(self, x, y):
        return self.x(x), self.y(y)


def _axes(drawing, frame, title, x_label, y_label):
    axis = dict(strokeColor=colors.black, strokeWidth=1)
    drawing.add(Line(frame.left, frame.bottom, frame.right, frame.bottom, **axis))
    drawing.add(Line(frame.left, frame.bottom, frame.left, frame.top, **axis))

    for value in np.linspace(frame.x_lo, frame.x_hi, TICKS):
        x = frame.x(value)
        drawing.add(Line(x, frame.bottom, x, frame.bottom - 4, **axis))
        drawing.add(String(x, frame.bottom - 15, f"{value:.3g}", fontName=FONT, fontSize=8, textAnchor='middle'))
    for value in np.linspace(frame.y_lo, frame.y_hi, TICKS):
        y = frame.y(value)
        drawing.add(Line(frame.left, y, frame.left - 4, y, **axis))
        drawing.add(String(frame.left - 6, y - 3, f"{value:.3g}", fontName=FONT, fontSize=8, textAnchor='end'))

    drawing.add(String((frame.left + frame.right) / 2, 10, x_label, fontName=FONT, fontSize=10, textAnchor='middle'))
    y_title = Group(String(0, 0, y_label, fontName=FONT, fontSize=10, textAnchor='middle'))
    y_title.transform = (0, 1, -1, 0, 16, (frame.bottom + frame.top) / 2)
    drawing.add(y_title)
    if title:
        drawing.add(String(WIDTH / 2, HEIGHT - 20, title, fontName=FONT, fontSize=12, textAnchor='middle'))


def _legend(drawing, frame, entries):
    for row, (label, color) in enumerate(entries):
        y = frame.top - 12 - 14 * row
        drawing.add(Line(frame.right - 110, y + 3, frame.right - 92, y + 3, strokeColor=color, strokeWidth=2))
        drawing.add(String(frame.right - 88, y, str(label), fontName=FONT, fontSize=9))


def _polyline(frame, xs, ys, color, width=1.5):
    points = []
    for x, y in zip(xs, ys):
        if np.isfinite(x) and np.isfinite(y):
            points.extend(frame.point(x, y))
    return PolyLine(points, strokeColor=color, strokeWidth=width)


def _draw_ecdf(drawing, table, labels, title):
    values = [float(v) for v in table['value']]
    probabilities = [float(p) for p in table['probability']]
    frame = Frame(_span(values), (0.0, 1.0))
    _axes(drawing, frame, title, *labels)
    xs, ys = [frame.x_lo], [0.0]
    previous = 0.0
    for value, probability in zip(values, probabilities):
        xs += [value, value]
        ys += [previous, probability]
        previous = probability
    xs.append(frame.x_hi)
    ys.append(previous)
    drawing.add(_polyline(frame, xs, ys, PALETTE[0]))


def _draw_histogram(drawing, table, labels, title):
    lefts = [float(v) for v in table['bin_left']]
    rights = [float(v) for v in table['bin_right']]
    density = [float(v) for v in table['density']]
    fit = [float(v) for v in table['fit']]
    frame = Frame(_span(lefts + rights), _span(density + fit, floor=0.0))
    _axes(drawing, frame, title, *labels)
    for left, right, height in zip(lefts, rights, density):
        drawing.add(Rect(
            frame.x(left), frame.y(0), frame.x(right) - frame.x(left), frame.y(height) - frame.y(0),
            fillColor=colors.HexColor('#aec7e8'), strokeColor=colors.white, strokeWidth=0.5,
        ))
    centres = [(left + right) / 2 for left, right in zip(lefts, rights)]
    drawing.add(_polyline(frame, centres, fit, PALETTE[1], width=2))
    _legend(drawing, frame, [('observed', colors.HexColor('#aec7e8')), ('fitted', PALETTE[1])])


def _draw_acf(drawing, table, labels, title):
    lags = [float(v) for v in table['lag']]
    values = [float(v) for v in table['value']]
    band = float(table['band'][0]) if len(table['band']) else 0.0
    frame = Frame(_span(lags, floor=0.0), (-1.0, 1.0))
    _axes(drawing, frame, title, *labels)
    drawing.add(Line(frame.left, frame.y(0), frame.right, frame.y(0), strokeColor=colors.grey, strokeWidth=0.5))
    for bound in (band, -band):
        drawing.add(Line(
            frame.left, frame.y(bound), frame.right, frame.y(bound),
            strokeColor=PALETTE[1], strokeWidth=0.8, strokeDashArray=[4, 3],
        ))
    for lag, value in zip(lags, values):
        drawing.add(Line(frame.x(lag), frame.y(0), frame.x(lag), frame.y(value), strokeColor=PALETTE[0], strokeWidth=2))


def _draw_scatter(drawing, table, labels, title):
    xs = [float(v) for v in table['x']]
    ys = [float(v) for v in table['y']]
    groups = [str(v) for v in table['label']] if 'label' in table else [''] * len(xs)
    names = sorted(set(groups))
    colour_of = {name: PALETTE[i % len(PALETTE)] for i, name in enumerate(names)}
    frame = Frame(_span(xs), _span(ys))
    _axes(drawing, frame, title, *labels)
    for x, y, group in zip(xs, ys, groups):
        if np.isfinite(x) and np.isfinite(y):
            drawing.add(Circle(
                frame.x(x), frame.y(y), 1.8,
                fillColor=colour_of[group], strokeColor=None,
            ))
    if len(names) > 1:
        _legend(drawing, frame, [(name, colour_of[name]) for name in names])


def _draw_overlay(drawing, table, labels, title):
    index = [float(v) for v in table['index']]
    measured = [float(v) for v in table['measured']]
    predicted = [float(v) for v in table['predicted']]
    frame = Frame(_span(index), _span(measured + predicted))
    _axes(drawing, frame, title, *labels)
    drawing.add(_polyline(frame, index, measured, PALETTE[0], width=1))
    drawing.add(_polyline(frame, index, predicted, PALETTE[1], width=1))
    _legend(drawing, frame, [('measured', PALETTE[0]), ('predicted', PALETTE[1])])


def _draw_roc(drawing, table, labels, title):
    fpr = [float(v) for v in table['fpr']]
    tpr = [float(v) for v in table['tpr']]
    frame = Frame((0.0, 1.0), (0.0, 1.0))
    _axes(drawing, frame, title, *labels)
    drawing.add(Line(
        frame.x(0), frame.y(0), frame.x(1), frame.y(1),
        strokeColor=colors.grey, strokeWidth=0.5, strokeDashArray=[4, 3],
    ))
    drawing.add(_polyline(frame, fpr, tpr, PALETTE[0], width=2))
    area = sum((fpr[i + 1] - fpr[i]) * (tpr[i + 1] + tpr[i]) / 2 for i in range(len(fpr) - 1))
    drawing.add(String(frame.x(0.6), frame.y(0.1), f"AUC = {area:.3f}", fontName=FONT, fontSize=10))


DRAWERS = {
    'ecdf': _draw_ecdf,
    'histogram+fit': _draw_histogram,
    'acf': _draw_acf,
    'scatter': _draw_scatter,
    'series-overlay': _draw_overlay,
    'roc': _draw_roc,
}


def render_plot(table, kind, title='', x_label=None, y_label=None) -> str:
    """
    Standalone SVG for a column table. Raises ``PlotColumnError`` when the
    table lacks a column the kind needs.
    """
    if kind not in DRAWERS:
        raise PreconditionError(f"unknown plot kind {kind!r}; expected one of {', '.join(DRAWERS)}")
    required = PLOT_COLUMNS[kind]
    missing = [name for name in required if name not in table]
    if missing:
        raise PlotColumnError(
            f"{kind} plots need columns {', '.join(required)}; missing {', '.join(missing)}"
        )
    lengths = {len(table[name]) for name in required}
    if len(lengths) > 1:
        raise PlotColumnError(f"{kind} plot columns differ in length")
    if lengths == {0}:
        raise PlotColumnError(f"{kind} plot of an empty table")

    default_x, default_y = DEFAULT_LABELS[kind]
    labels = (x_label or default_x, y_label or default_y)
    drawing = Drawing(WIDTH, HEIGHT)
    drawing.add(Rect(0, 0, WIDTH, HEIGHT, fillColor=colors.white, strokeColor=None))
    DRAWERS[kind](drawing, table, labels, title)
    return renderSVG.drawToString(drawing)
