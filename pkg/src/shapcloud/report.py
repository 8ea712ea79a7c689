"""Dependency-free SVG renderings of the pooled importance summaries.

Everything is hand-emitted SVG 1.1 with fixed-precision coordinates, so the
output bytes are fully determined by the input values. Each plot has a CSV
side-car writer for its underlying data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .pooling import PooledImportance
from .util import fmt_float

# Fixed two-stop loss color scale: dark blue (low loss) -> light yellow (high).
LOSS_COLOR_LOW = (8, 48, 107)
LOSS_COLOR_HIGH = (255, 255, 204)
BAR_COLOR = "#2166ac"
BAR_COLOR_GREY = "#999999"
DOT_COLOR_LOW = (59, 76, 192)
DOT_COLOR_HIGH = (180, 4, 38)


@dataclass(frozen=True)
class ViolinSlice:
    lo: float
    hi: float
    proportion: float
    mean_loss: float
    model_count: int


@dataclass(frozen=True)
class ViolinSummary:
    variable: str
    slices: tuple[ViolinSlice, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if abs(sum(s.proportion for s in self.slices) - 1.0) > 1e-12:
            raise DataError("violin slice proportions must sum to 1")
        if any(s.model_count < 1 for s in self.slices):
            raise DataError("every merged slice must contain at least one model")


@dataclass(frozen=True)
class BarDatum:
    variable: str
    pooled_mean: float
    pi_low: float
    pi_high: float
    significant: bool


def bars_from_pooled(pooled: list[PooledImportance]) -> list[BarDatum]:
    return [
        BarDatum(p.variable, p.pooled_mean, p.pi_low, p.pi_high, p.significant)
        for p in pooled
    ]


def build_violin(values, losses, n_slices: int = 20, variable: str = "") -> ViolinSummary:
    """Equal-width binning of reliance values; empty slices merge toward center.

    An empty slice joins the neighbor nearer the range midpoint; a slice
    centered exactly on the midpoint merges rightward when it sits in the
    left half of the slice list, leftward otherwise.
    """
    values = np.asarray(values, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    if values.size == 0:
        raise DataError("cannot build a violin from zero models")
    if values.shape != losses.shape:
        raise DataError("values and losses must have equal length")
    if n_slices < 1:
        raise DataError("n_slices must be at least 1")
    m = values.size
    vmin = float(values.min())
    vmax = float(values.max())
    if vmin == vmax:
        return ViolinSummary(
            variable,
            (ViolinSlice(vmin, vmax, 1.0, float(losses.mean()), m),),
        )

    width = (vmax - vmin) / n_slices
    idx = np.minimum(np.floor((values - vmin) / width).astype(int), n_slices - 1)
    bins = []
    for b in range(n_slices):
        members = idx == b
        bins.append(
            {
                "lo": vmin + b * width,
                "hi": vmin + (b + 1) * width,
                "count": int(members.sum()),
                "loss_sum": float(losses[members].sum()),
            }
        )
    bins[-1]["hi"] = vmax

    mid = 0.5 * (vmin + vmax)
    while len(bins) > 1 and any(b["count"] == 0 for b in bins):
        i = next(k for k, b in enumerate(bins) if b["count"] == 0)
        center = 0.5 * (bins[i]["lo"] + bins[i]["hi"])
        if center < mid:
            merge_right = True
        elif center > mid:
            merge_right = False
        else:
            merge_right = i < len(bins) / 2
        if i == len(bins) - 1:
            merge_right = False
        elif i == 0:
            merge_right = True
        j = i + 1 if merge_right else i - 1
        lo = min(bins[i]["lo"], bins[j]["lo"])
        hi = max(bins[i]["hi"], bins[j]["hi"])
        merged = {
            "lo": lo,
            "hi": hi,
            "count": bins[i]["count"] + bins[j]["count"],
            "loss_sum": bins[i]["loss_sum"] + bins[j]["loss_sum"],
        }
        lo_idx = min(i, j)
        bins[lo_idx : lo_idx + 2] = [merged]

    slices = tuple(
        ViolinSlice(
            lo=b["lo"],
            hi=b["hi"],
            proportion=b["count"] / m,
            mean_loss=b["loss_sum"] / b["count"],
            model_count=b["count"],
        )
        for b in bins
    )
    return ViolinSummary(variable, slices)


def _f(x: float) -> str:
    return f"{x:.2f}"


def _loss_color(loss: float, lo: float, hi: float) -> str:
    t = 0.0 if hi <= lo else min(1.0, max(0.0, (loss - lo) / (hi - lo)))
    rgb = tuple(
        round(a + t * (b - a)) for a, b in zip(LOSS_COLOR_LOW, LOSS_COLOR_HIGH)
    )
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _dot_color(t: float) -> str:
    t = min(1.0, max(0.0, t))
    rgb = tuple(round(a + t * (b - a)) for a, b in zip(DOT_COLOR_LOW, DOT_COLOR_HIGH))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _svg_document(width: int, height: int, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """A few round tick positions covering [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


class _Scale:
    def __init__(self, lo: float, hi: float, x0: float, x1: float):
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        self.lo = lo - pad
        self.hi = hi + pad
        self.x0 = x0
        self.x1 = x1

    def __call__(self, v: float) -> float:
        return self.x0 + (v - self.lo) / (self.hi - self.lo) * (self.x1 - self.x0)


def render_bar_svg(bars: list[BarDatum], path) -> None:
    """Horizontal bars of pooled means with prediction-interval whiskers.

    Bars are sorted by pooled mean descending (ties by name); non-significant
    bars are grey per the zero-containing-interval convention.
    """
    if not bars:
        raise DataError("no bars to render")
    bars = sorted(bars, key=lambda b: (-b.pooled_mean, b.variable))
    left, right, top, bottom = 180, 30, 20, 40
    row_h = 28
    width = 760
    height = top + row_h * len(bars) + bottom
    lo = min(0.0, min(b.pi_low for b in bars))
    hi = max(0.0, max(b.pi_high for b in bars))
    scale = _Scale(lo, hi, left, width - right)

    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    x_zero = scale(0.0)
    plot_bottom = top + row_h * len(bars)
    for tick in _ticks(scale.lo, scale.hi):
        xt = scale(tick)
        body.append(
            f'<line x1="{_f(xt)}" y1="{top}" x2="{_f(xt)}" y2="{plot_bottom}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{_f(xt)}" y="{plot_bottom + 16}" font-size="11" '
            f'text-anchor="middle" fill="#333333">{tick:.3g}</text>'
        )
    body.append(
        f'<line x1="{_f(x_zero)}" y1="{top}" x2="{_f(x_zero)}" y2="{plot_bottom}" '
        'stroke="#555555" stroke-width="1"/>'
    )
    for i, bar in enumerate(bars):
        yc = top + row_h * i + row_h / 2
        color = BAR_COLOR if bar.significant else BAR_COLOR_GREY
        x_mean = scale(bar.pooled_mean)
        bx = min(x_zero, x_mean)
        bw = abs(x_mean - x_zero)
        body.append(
            f'<rect x="{_f(bx)}" y="{_f(yc - 8)}" width="{_f(bw)}" height="16" '
            f'fill="{color}"/>'
        )
        x_lo, x_hi = scale(bar.pi_low), scale(bar.pi_high)
        body.append(
            f'<line x1="{_f(x_lo)}" y1="{_f(yc)}" x2="{_f(x_hi)}" y2="{_f(yc)}" '
            'stroke="#222222" stroke-width="1.5"/>'
        )
        for xw in (x_lo, x_hi):
            body.append(
                f'<line x1="{_f(xw)}" y1="{_f(yc - 5)}" x2="{_f(xw)}" y2="{_f(yc + 5)}" '
                'stroke="#222222" stroke-width="1.5"/>'
            )
        body.append(
            f'<text x="{left - 8}" y="{_f(yc + 4)}" font-size="12" '
            f'text-anchor="end" fill="#000000">{_escape(bar.variable)}</text>'
        )
    _write(path, _svg_document(width, height, body))


def render_violin_svg(
    summaries: list[ViolinSummary], global_loss_range: tuple[float, float], path
) -> None:
    """One binned violin per variable; slice fill encodes mean loss on the
    shared global loss scale (dark blue = low loss)."""
    if not summaries:
        raise DataError("no violins to render")
    g_lo, g_hi = float(global_loss_range[0]), float(global_loss_range[1])
    left, right, top, bottom = 180, 30, 20, 70
    row_h = 52
    width = 760
    height = top + row_h * len(summaries) + bottom
    lo = min(0.0, min(s.lo for summ in summaries for s in summ.slices))
    hi = max(0.0, max(s.hi for summ in summaries for s in summ.slices))
    scale = _Scale(lo, hi, left, width - right)
    max_half = row_h / 2 - 4

    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    plot_bottom = top + row_h * len(summaries)
    x_zero = scale(0.0)
    for tick in _ticks(scale.lo, scale.hi):
        xt = scale(tick)
        body.append(
            f'<line x1="{_f(xt)}" y1="{top}" x2="{_f(xt)}" y2="{plot_bottom}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{_f(xt)}" y="{plot_bottom + 16}" font-size="11" '
            f'text-anchor="middle" fill="#333333">{tick:.3g}</text>'
        )
    body.append(
        f'<line x1="{_f(x_zero)}" y1="{top}" x2="{_f(x_zero)}" y2="{plot_bottom}" '
        'stroke="#555555" stroke-width="1"/>'
    )
    for i, summ in enumerate(summaries):
        yc = top + row_h * i + row_h / 2
        max_prop = max(s.proportion for s in summ.slices)
        for sl in summ.slices:
            half = max_half * (sl.proportion / max_prop if max_prop > 0 else 0.0)
            x_lo, x_hi = scale(sl.lo), scale(sl.hi)
            w = max(x_hi - x_lo, 1.0)
            body.append(
                f'<rect x="{_f(x_lo)}" y="{_f(yc - half)}" width="{_f(w)}" '
                f'height="{_f(2 * half)}" fill="{_loss_color(sl.mean_loss, g_lo, g_hi)}"/>'
            )
        body.append(
            f'<text x="{left - 8}" y="{_f(yc + 4)}" font-size="12" '
            f'text-anchor="end" fill="#000000">{_escape(summ.variable)}</text>'
        )
    # Loss color legend along the bottom.
    legend_x, legend_y, legend_w, legend_h = left, plot_bottom + 30, 200, 12
    steps = 20
    for k in range(steps):
        frac = k / (steps - 1)
        body.append(
            f'<rect x="{_f(legend_x + k * legend_w / steps)}" y="{legend_y}" '
            f'width="{_f(legend_w / steps + 0.5)}" height="{legend_h}" '
            f'fill="{_loss_color(g_lo + frac * (g_hi - g_lo), g_lo, g_hi)}"/>'
        )
    body.append(
        f'<text x="{legend_x}" y="{legend_y + legend_h + 14}" font-size="11" '
        f'fill="#333333">loss {g_lo:.4g}</text>'
    )
    body.append(
        f'<text x="{legend_x + legend_w}" y="{legend_y + legend_h + 14}" '
        f'font-size="11" text-anchor="end" fill="#333333">{g_hi:.4g}</text>'
    )
    _write(path, _svg_document(width, height, body))


def export_shap_summary(
    matrix, feature_values, variable_names, csv_path, svg_path, instance_ids=None
) -> None:
    """Long-format CSV plus a strip plot of per-instance SHAP values.

    Rows (variables) are ordered by mean |SHAP| descending; dot fill encodes
    the within-variable rank of the feature value (blue low, red high).
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    feats = np.asarray(feature_values, dtype=np.float64)
    if matrix.shape != feats.shape:
        raise DataError(
            f"SHAP matrix shape {matrix.shape} does not match feature values "
            f"shape {feats.shape}"
        )
    if matrix.ndim != 2 or matrix.shape[1] != len(variable_names):
        raise DataError("SHAP matrix must be n x d with d = len(variable_names)")
    n, d = matrix.shape
    if instance_ids is None:
        instance_ids = np.arange(n)
    order = sorted(range(d), key=lambda j: (-float(np.mean(np.abs(matrix[:, j]))), j))

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "variable", "shap_value", "feature_value"])
        for j in order:
            for i in range(n):
                writer.writerow(
                    [
                        str(int(instance_ids[i])),
                        variable_names[j],
                        fmt_float(matrix[i, j]),
                        fmt_float(feats[i, j]),
                    ]
                )

    left, right, top, bottom = 180, 30, 20, 40
    row_h = 30
    width = 760
    height = top + row_h * d + bottom
    lo = min(0.0, float(matrix.min()))
    hi = max(0.0, float(matrix.max()))
    scale = _Scale(lo, hi, left, width - right)
    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    plot_bottom = top + row_h * d
    x_zero = scale(0.0)
    for tick in _ticks(scale.lo, scale.hi):
        xt = scale(tick)
        body.append(
            f'<line x1="{_f(xt)}" y1="{top}" x2="{_f(xt)}" y2="{plot_bottom}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{_f(xt)}" y="{plot_bottom + 16}" font-size="11" '
            f'text-anchor="middle" fill="#333333">{tick:.3g}</text>'
        )
    body.append(
        f'<line x1="{_f(x_zero)}" y1="{top}" x2="{_f(x_zero)}" y2="{plot_bottom}" '
        'stroke="#555555" stroke-width="1"/>'
    )
    for row, j in enumerate(order):
        yc = top + row_h * row + row_h / 2
        col = feats[:, j]
        ranks = np.argsort(np.argsort(col, kind="stable"), kind="stable")
        denom = max(n - 1, 1)
        for i in range(n):
            # Deterministic pseudo-jitter keyed by the instance id.
            jitter = (((int(instance_ids[i]) * 2654435761) % 1000) / 999.0 - 0.5) * (
                row_h - 10
            )
            body.append(
                f'<circle cx="{_f(scale(matrix[i, j]))}" cy="{_f(yc + jitter)}" '
                f'r="2" fill="{_dot_color(ranks[i] / denom)}" fill-opacity="0.8"/>'
            )
        body.append(
            f'<text x="{left - 8}" y="{_f(yc + 4)}" font-size="12" '
            f'text-anchor="end" fill="#000000">{_escape(variable_names[j])}</text>'
        )
    _write(svg_path, _svg_document(width, height, body))


def write_bar_csv(bars: list[BarDatum], path) -> None:
    bars = sorted(bars, key=lambda b: (-b.pooled_mean, b.variable))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "pooled_mean", "pi_low", "pi_high", "significant"])
        for b in bars:
            writer.writerow(
                [
                    b.variable,
                    fmt_float(b.pooled_mean),
                    fmt_float(b.pi_low),
                    fmt_float(b.pi_high),
                    str(b.significant).lower(),
                ]
            )


def write_violin_csv(summaries: list[ViolinSummary], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["variable", "slice_lo", "slice_hi", "proportion", "mean_loss", "model_count"]
        )
        for summ in summaries:
            for sl in summ.slices:
                writer.writerow(
                    [
                        summ.variable,
                        fmt_float(sl.lo),
                        fmt_float(sl.hi),
                        fmt_float(sl.proportion),
                        fmt_float(sl.mean_loss),
                        str(sl.model_count),
                    ]
                )


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _write(path, content: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
