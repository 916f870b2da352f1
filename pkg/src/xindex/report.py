"""Deterministic CSV tables and SVG line charts for analysis series.

CSV layout: key column(s), then ``n_total,n_infield,value,paper_mean_aux``.
``value`` is the pooled X-index (empty when no citations were pooled);
``paper_mean_aux`` is the unweighted mean of per-paper X-indices, an
auxiliary column that is *not* the X-index.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union
from xml.sax.saxutils import escape, quoteattr

from .engine import CohortSeries, RollingSeries, TrajectorySeries, XIndexResult

COUNT_COLUMNS = ("n_total", "n_infield", "value", "paper_mean_aux")

Series = Union[CohortSeries, RollingSeries, TrajectorySeries]


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _as_list(series) -> list:
    if isinstance(series, (CohortSeries, RollingSeries, TrajectorySeries)):
        return [series]
    return list(series)


def write_atomic(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def series_to_csv(series: Union[Series, Iterable[Series]]) -> str:
    """CSV text for one series or several of the same kind (e.g. trajectories).

    Rows come out in ascending key order; an empty input gives a header-only
    table (cohort layout when the kind cannot be inferred).
    """
    items = _as_list(series)
    key_cols = items[0].key_columns if items else CohortSeries.key_columns
    if any(s.key_columns != key_cols for s in items):
        raise ValueError("cannot mix series kinds in one table")
    rows = sorted((keys, res, mean) for s in items for keys, res, mean in s.rows())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow([*key_cols, *COUNT_COLUMNS])
    for keys, res, mean in rows:
        w.writerow([*keys, res.n_total, res.n_infield, _fmt(res.value), _fmt(mean)])
    return buf.getvalue()


def emit_csv(series, path: Union[str, Path]) -> Path:
    return write_atomic(path, series_to_csv(series))


def parse_series_csv(text: str) -> tuple[tuple[str, ...], list[tuple[tuple[int, ...], XIndexResult, Optional[float]]]]:
    """Parse an emitted table back into (key columns, rows)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n_keys = len(header) - len(COUNT_COLUMNS)
    if n_keys < 1 or tuple(header[n_keys:]) != COUNT_COLUMNS:
        raise ValueError(f"not an X-index table: header {header}")
    rows = []
    for row in reader:
        keys = tuple(int(k) for k in row[:n_keys])
        n_total, n_in, value, mean = row[n_keys:]
        res = XIndexResult(int(n_total), int(n_in))
        if (value == "") != (res.value is None):
            raise ValueError(f"row {row}: value does not match counts")
        rows.append((keys, res, float(mean) if mean else None))
    return tuple(header[:n_keys]), rows


def read_series_csv(path: Union[str, Path]):
    return parse_series_csv(Path(path).read_text(encoding="utf-8"))


def series_from_csv(text: str, venue: str = "") -> list[Series]:
    """Rebuild series objects from the text of a table written by :func:`emit_csv`."""
    key_cols, rows = parse_series_csv(text)
    if key_cols == TrajectorySeries.key_columns:
        by_pub: dict[int, TrajectorySeries] = {}
        for (pub, cit), res, mean in rows:
            s = by_pub.setdefault(pub, TrajectorySeries(venue=venue, pub_year=pub, points={}))
            s.points[cit] = res
            s.paper_means[cit] = mean
        return [by_pub[k] for k in sorted(by_pub)]
    if key_cols == RollingSeries.key_columns:
        s = RollingSeries(venue=venue, points={})
    elif key_cols == CohortSeries.key_columns:
        s = CohortSeries(venue=venue, mode="", points={})
    else:
        raise ValueError(f"unknown key columns {key_cols}")
    for (k,), res, mean in rows:
        s.points[k] = res
        s.paper_means[k] = mean
    return [s]


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 720, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64, 110, 48, 52
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _lines(series) -> list[tuple[str, list[tuple[int, Optional[float]]]]]:
    out = []
    for s in _as_list(series):
        label = str(s.pub_year) if isinstance(s, TrajectorySeries) else s.venue
        pts = [(keys[-1], res.value) for keys, res, _ in s.rows()]
        out.append((label, pts))
    return out


def _segments(points: Sequence[tuple[int, Optional[float]]]) -> list[list[tuple[int, float]]]:
    segs: list[list[tuple[int, float]]] = [[]]
    for x, v in points:
        if v is None:
            if segs[-1]:
                segs.append([])
        else:
            segs[-1].append((x, v))
    return [s for s in segs if s]


def _num(x: float) -> str:
    return f"{x:.2f}"


def render_chart(series, title: str, x_label: str = "year") -> str:
    """SVG line chart: key year on x, X-index in [0, 1] on y, gaps for absent values."""
    lines = _lines(series)
    xs = [x for _, pts in lines for x, _ in pts]
    if not xs:
        raise ValueError("refusing to chart an empty series")
    x_min, x_max = min(xs), max(xs)
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: int) -> float:
        if x_max == x_min:
            return MARGIN_LEFT + pw / 2
        return MARGIN_LEFT + (x - x_min) / (x_max - x_min) * pw

    def sy(v: float) -> float:
        v = min(1.0, max(0.0, v))
        return MARGIN_TOP + (1.0 - v) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text class="title" x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
        '<g class="axes" stroke="#000000" stroke-width="1">',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + ph}" x2="{MARGIN_LEFT + pw}" y2="{MARGIN_TOP + ph}"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + ph}"/>',
        "</g>",
        '<g class="y-ticks">',
    ]
    for i in range(6):
        v = i / 5
        y = sy(v)
        out.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_num(y)}" x2="{MARGIN_LEFT + pw}" y2="{_num(y)}" stroke="#dddddd"/>'
            f'<text x="{MARGIN_LEFT - 6}" y="{_num(y + 4)}" text-anchor="end">{v:.1f}</text>'
        )
    out.append("</g>")
    step = max(1, -(-(x_max - x_min + 1) // 12))
    out.append('<g class="x-ticks">')
    for x in range(x_min, x_max + 1, step):
        px = sx(x)
        out.append(
            f'<line x1="{_num(px)}" y1="{MARGIN_TOP + ph}" x2="{_num(px)}" y2="{MARGIN_TOP + ph + 4}" stroke="#000000"/>'
            f'<text x="{_num(px)}" y="{MARGIN_TOP + ph + 18}" text-anchor="middle">{x}</text>'
        )
    out.append("</g>")
    out.append(
        f'<text x="{MARGIN_LEFT + pw / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_TOP + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_TOP + ph / 2:.0f})">X-index</text>'
    )
    for i, (label, pts) in enumerate(lines):
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<g class="series" data-label={quoteattr(label)} stroke="{color}" fill="{color}">')
        for seg in _segments(pts):
            if len(seg) > 1:
                coords = " ".join(f"{_num(sx(x))},{_num(sy(v))}" for x, v in seg)
                out.append(f'<polyline class="segment" fill="none" stroke-width="2" points="{coords}"/>')
            for x, v in seg:
                out.append(f'<circle class="marker" cx="{_num(sx(x))}" cy="{_num(sy(v))}" r="3"/>')
        ly = MARGIN_TOP + 14 * i
        lx = WIDTH - MARGIN_RIGHT + 12
        out.append(
            f'<rect class="legend" x="{lx}" y="{ly}" width="10" height="10" stroke="none"/>'
            f'<text x="{lx + 14}" y="{ly + 9}" stroke="none" fill="#000000">{escape(label)}</text>'
        )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(series, title: str, path: Union[str, Path], x_label: str = "year") -> Path:
    return write_atomic(path, render_chart(series, title, x_label))
