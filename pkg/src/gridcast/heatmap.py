"""Hour-by-day heatmaps of temperature or power, as HTML with a CSV twin.

Rows are 24 hour-ending slots ("1:00 AM" covers 00:00-01:00, "12:00 AM" the
last hour of the day); columns are days labelled ``dd/mm``. Cell colours are
a linear RGB blend between the palette's low and high endpoints, with the
grid minimum at the low end and the maximum at the high end.
"""

from __future__ import annotations

import csv
import html
import io
from collections.abc import Sequence
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import BadLength

SLOTS = 24

# (low, high) RGB endpoints
PALETTES = {
    "Temperature": ((33, 102, 255), (255, 51, 102)),
    "Power": ((0, 204, 230), (230, 25, 115)),
}


@dataclass(frozen=True)
class HeatmapDay:
    date: int  # any epoch second inside the day, UTC
    values: Sequence[float]


@dataclass(frozen=True)
class HeatmapDoc:
    html: str
    csv: str
    labels: tuple[str, ...]
    dates: tuple[str, ...]
    colors: tuple[tuple[str, ...], ...]  # [slot][day] as #rrggbb


def slot_label(slot: int) -> str:
    h = (slot + 1) % 24
    suffix = "AM" if h < 12 else "PM"
    return f"{(h % 12) or 12}:00 {suffix}"


def day_label(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), timezone.utc).strftime("%d/%m")


def blend(t: float, palette: str) -> tuple[int, int, int]:
    lo, hi = PALETTES[palette]
    return tuple(int(a + t * (b - a) + 0.5) for a, b in zip(lo, hi))  # round half up


def color_grid(grid: np.ndarray, palette: str) -> list[list[str]]:
    lo, hi = float(np.min(grid)), float(np.max(grid))
    span = hi - lo
    out = []
    for row in grid:
        cells = []
        for v in row:
            t = 0.5 if span == 0 else (float(v) - lo) / span
            cells.append("#%02x%02x%02x" % blend(t, palette))
        out.append(cells)
    return out


def emit_heatmap(days: Sequence[HeatmapDay], palette: str, out: str | Path | None = None) -> HeatmapDoc:
    """Render the grid; with ``out`` also write ``<out>.html`` and ``<out>.csv``."""
    if palette not in PALETTES:
        raise ValueError(f"palette must be one of {sorted(PALETTES)}")
    if not days:
        raise BadLength("no days to plot")
    for d in days:
        if len(d.values) != SLOTS:
            raise BadLength(f"day {day_label(d.date)} has {len(d.values)} values, expected {SLOTS}")
    grid = np.array([np.asarray(d.values, dtype=np.float64) for d in days]).T  # (24, n_days)
    if not np.all(np.isfinite(grid)):
        raise ValueError("heatmap values must be finite")
    labels = tuple(slot_label(k) for k in range(SLOTS))
    dates = tuple(day_label(d.date) for d in days)
    colors = color_grid(grid, palette)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", *dates])
    for label, row in zip(labels, grid):
        w.writerow([label, *(repr(float(v)) for v in row)])
    table_csv = buf.getvalue()

    unit = "°C" if palette == "Temperature" else "W"
    parts = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8">',
        f"<title>{palette} heatmap</title>",
        "<style>table{border-collapse:collapse;font:12px sans-serif}"
        "td,th{padding:2px 6px;text-align:right}</style>",
        "</head><body>",
        f"<table><caption>{palette} ({html.escape(unit)})</caption>",
        "<tr><th></th>" + "".join(f"<th>{d}</th>" for d in dates) + "</tr>",
    ]
    for label, row, cells in zip(labels, grid, colors):
        tds = "".join(f'<td style="background:{c}">{v:.1f}</td>' for v, c in zip(row, cells))
        parts.append(f"<tr><th>{label}</th>{tds}</tr>")
    parts.append("</table></body></html>")
    doc = HeatmapDoc("\n".join(parts) + "\n", table_csv, labels, dates, tuple(map(tuple, colors)))

    if out is not None:
        out = Path(out)
        out.with_suffix(".html").write_text(doc.html, encoding="utf-8")
        out.with_suffix(".csv").write_text(doc.csv, encoding="utf-8")
    return doc
