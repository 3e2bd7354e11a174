"""Shared chart renderer.

Turns a ChartModel into a flat list of device-independent drawing commands
(rect, line, text) in a top-left origin viewport.  The PDF writer translates
them to content-stream operators, the PPTX writer to shape XML, so both
outputs plot identical geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import ChartModel, ValidationError
from .fonts import string_width

AXIS_GRAY = (0.25, 0.25, 0.25)
BAR_FILL = (0.22, 0.42, 0.69)
BOX_FILL = (0.62, 0.76, 0.89)
STEP_STROKE = (0.75, 0.22, 0.17)

LABEL_SIZE = 8.0
TITLE_SIZE = 9.0

MARGIN_LEFT = 56.0
MARGIN_BOTTOM = 34.0
MARGIN_TOP = 8.0
MARGIN_RIGHT = 10.0


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float
    fill: tuple[float, float, float] | None = None
    stroke: bool = False


@dataclass(frozen=True)
class Line:
    x1: float
    y1: float
    x2: float
    y2: float
    color: tuple[float, float, float] = AXIS_GRAY
    width: float = 1.0


@dataclass(frozen=True)
class Text:
    x: float
    y: float  # baseline
    size: float
    text: str
    anchor: str = "start"  # start | middle | end
    color: tuple[float, float, float] = (0.0, 0.0, 0.0)


Command = Rect | Line | Text


def render_chart(model: ChartModel, width: float = 460.0, height: float = 240.0) -> list[Command]:
    if width <= 0 or height <= 0:
        raise ValidationError("viewport must be positive")
    plot_x = MARGIN_LEFT
    plot_y = MARGIN_TOP
    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM

    commands: list[Command] = []
    # axes
    commands.append(Line(plot_x, plot_y, plot_x, plot_y + plot_h))
    commands.append(Line(plot_x, plot_y + plot_h, plot_x + plot_w, plot_y + plot_h))

    if model.kind == "bar":
        commands.extend(_bars(model, plot_x, plot_y, plot_w, plot_h))
    elif model.kind == "step":
        commands.extend(_steps(model, plot_x, plot_y, plot_w, plot_h))
    else:
        commands.extend(_boxes(model, plot_x, plot_y, plot_w, plot_h))

    if model.y_title:
        commands.append(Text(2.0, plot_y + 8.0, TITLE_SIZE, model.y_title))
    if model.x_title:
        commands.append(
            Text(plot_x + plot_w / 2.0, height - 4.0, TITLE_SIZE, model.x_title, anchor="middle")
        )
    return commands


def _value_scale(values, plot_h):
    vmax = max(values) if values and max(values) > 0 else 1.0
    return lambda v: v / vmax * plot_h, vmax


def _axis_ticks(plot_x, plot_y, plot_h, vmax):
    out = []
    for frac in (0.0, 0.5, 1.0):
        y = plot_y + plot_h - frac * plot_h
        out.append(Line(plot_x - 3.0, y, plot_x, y))
        out.append(Text(plot_x - 5.0, y + 3.0, LABEL_SIZE, _fmt(vmax * frac), anchor="end"))
    return out


def _fmt(v: float) -> str:
    if v == int(v):
        return str(int(v))
    if abs(v) < 0.01:
        return f"{v:.2e}"
    return f"{v:.2f}"


def _bars(model, plot_x, plot_y, plot_w, plot_h):
    n = len(model.values)
    commands = []
    if n == 0:
        return commands
    scale, vmax = _value_scale(model.values, plot_h)
    slot = plot_w / n
    bar_w = slot * 0.7
    for i, (label, value) in enumerate(zip(model.labels, model.values)):
        h = scale(value)
        x = plot_x + i * slot + (slot - bar_w) / 2.0
        y = plot_y + plot_h - h
        commands.append(Rect(x, y, bar_w, h, fill=BAR_FILL))
        commands.append(
            Text(x + bar_w / 2.0, plot_y + plot_h + 10.0, LABEL_SIZE, _shorten(label, bar_w + slot * 0.2), anchor="middle")
        )
    commands.extend(_axis_ticks(plot_x, plot_y, plot_h, vmax))
    return commands


def _steps(model, plot_x, plot_y, plot_w, plot_h):
    # labels hold the numeric x positions (event times) as strings
    times = [float(lbl) for lbl in model.labels]
    commands = []
    if not times:
        return commands
    tmax = max(times) if max(times) > 0 else 1.0
    to_x = lambda t: plot_x + t / tmax * plot_w
    to_y = lambda s: plot_y + plot_h - s * plot_h
    prev_x, prev_y = to_x(times[0]), to_y(model.values[0])
    for t, s in list(zip(times, model.values))[1:]:
        x, y = to_x(t), to_y(s)
        commands.append(Line(prev_x, prev_y, x, prev_y, color=STEP_STROKE, width=1.5))
        commands.append(Line(x, prev_y, x, y, color=STEP_STROKE, width=1.5))
        prev_x, prev_y = x, y
    commands.append(Line(plot_x - 3.0, to_y(1.0), plot_x, to_y(1.0)))
    commands.append(Text(plot_x - 5.0, to_y(1.0) + 3.0, LABEL_SIZE, "1.0", anchor="end"))
    commands.append(Line(plot_x - 3.0, to_y(0.0), plot_x, to_y(0.0)))
    commands.append(Text(plot_x - 5.0, to_y(0.0) + 3.0, LABEL_SIZE, "0.0", anchor="end"))
    for t in times:
        commands.append(Text(to_x(t), plot_y + plot_h + 10.0, LABEL_SIZE, _fmt(t), anchor="middle"))
    return commands


def _boxes(model, plot_x, plot_y, plot_w, plot_h):
    commands = []
    n = len(model.values)
    if n == 0:
        return commands
    highs = [hi for _, hi in model.spans] + list(model.values)
    scale, vmax = _value_scale(highs, plot_h)
    slot = plot_w / n
    box_w = slot * 0.5
    for i, (label, median, (q1, q3)) in enumerate(zip(model.labels, model.values, model.spans)):
        x = plot_x + i * slot + (slot - box_w) / 2.0
        y_top = plot_y + plot_h - scale(q3)
        y_med = plot_y + plot_h - scale(median)
        y_bot = plot_y + plot_h - scale(q1)
        commands.append(Rect(x, y_top, box_w, max(y_bot - y_top, 0.5), fill=BOX_FILL, stroke=True))
        commands.append(Line(x, y_med, x + box_w, y_med, color=STEP_STROKE, width=1.5))
        commands.append(
            Text(x + box_w / 2.0, plot_y + plot_h + 10.0, LABEL_SIZE, _shorten(label, slot), anchor="middle")
        )
    commands.extend(_axis_ticks(plot_x, plot_y, plot_h, vmax))
    return commands


def _shorten(label: str, max_width: float, size: float = LABEL_SIZE) -> str:
    if string_width(label, size) <= max_width:
        return label
    out = label
    while out and string_width(out + "...", size) > max_width:
        out = out[:-1]
    return out + "..." if out else label[:1]
