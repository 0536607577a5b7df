"""CSV, JSON and SVG output.

CSV: comma separated, one header row, LF line endings, floats written with
17 significant digits so that re-parsing recovers the exact binary values.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np


class CsvParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_float(v: float) -> str:
    return f"{float(v):.17g}"


def csv_text(columns: Sequence[str], rows) -> str:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != len(columns):
        raise ValueError("row width does not match the header")
    lines = [",".join(columns)]
    lines.extend(",".join(format_float(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows) -> None:
    Path(path).write_bytes(csv_text(columns, rows).encode("ascii"))


def parse_csv(text: str) -> tuple[list[str], np.ndarray]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].strip():
        raise CsvParseError(1, "missing header")
    header = [h.strip() for h in lines[0].split(",")]
    if any(not h for h in header):
        raise CsvParseError(1, "empty column name")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(header):
            raise CsvParseError(lineno, f"expected {len(header)} fields, found {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise CsvParseError(lineno, str(exc)) from None
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def read_csv(path) -> tuple[list[str], np.ndarray]:
    return parse_csv(Path(path).read_bytes().decode("ascii", errors="replace"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def write_json(path, payload) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


# -- SVG -------------------------------------------------------------------

PANEL_W, PANEL_H = 300, 200
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 15, 25, 40
MAX_POINTS = 2000


def _nice(v: float) -> str:
    return f"{v:.4g}"


def _panel(t, y, name, ox, oy) -> list[str]:
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B
    x0, y0 = ox + MARGIN_L, oy + MARGIN_T
    stride = max(1, int(math.ceil(len(t) / MAX_POINTS)))
    keep = np.arange(0, len(t), stride)
    if keep[-1] != len(t) - 1:
        keep = np.append(keep, len(t) - 1)
    ts, ys = t[keep], y[keep]
    tmin, tmax = float(ts.min()), float(ts.max())
    finite = ys[np.isfinite(ys)]
    ymin, ymax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if tmax == tmin:
        tmax = tmin + 1.0
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    px = x0 + (ts - tmin) / (tmax - tmin) * w
    py = y0 + h - (ys - ymin) / (ymax - ymin) * h
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py) if math.isfinite(b))
    return [
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#000"/>',
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{pts}"/>',
        f'<text x="{x0 + w / 2:.1f}" y="{oy + PANEL_H - 8}" text-anchor="middle">t</text>',
        f'<text x="{ox + 12}" y="{y0 + h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 {ox + 12} {y0 + h / 2:.1f})">{name}</text>',
        f'<text x="{x0 - 4}" y="{y0 + 4}" text-anchor="end">{_nice(ymax)}</text>',
        f'<text x="{x0 - 4}" y="{y0 + h}" text-anchor="end">{_nice(ymin)}</text>',
        f'<text x="{x0}" y="{y0 + h + 14}" text-anchor="start">{_nice(tmin)}</text>',
        f'<text x="{x0 + w}" y="{y0 + h + 14}" text-anchor="end">{_nice(tmax)}</text>',
    ]


def svg_panels(header: Sequence[str], data, panel_rows: Sequence[Sequence[str]],
               time_column: str = "t") -> str:
    """Line plots of selected columns against ``t``, one row of panels per entry."""
    header = list(header)
    data = np.asarray(data, dtype=float)
    if time_column not in header:
        raise ValueError(f"no {time_column!r} column")
    t = data[:, header.index(time_column)]
    ncols = max(len(r) for r in panel_rows)
    width, height = ncols * PANEL_W, len(panel_rows) * PANEL_H
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="#fff"/>',
    ]
    for r, row in enumerate(panel_rows):
        for c, name in enumerate(row):
            if name not in header:
                raise ValueError(f"unknown column {name!r}")
            parts.extend(_panel(t, data[:, header.index(name)], name, c * PANEL_W, r * PANEL_H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, header, data, panel_rows, time_column: str = "t") -> None:
    Path(path).write_bytes(svg_panels(header, data, panel_rows, time_column).encode("utf-8"))


def default_panel_rows(state_names: Sequence[str]) -> list[list[str]]:
    """Group state columns by symbol (omega, Omega, nu) into panel rows."""
    rows: dict[str, list[str]] = {}
    for name in state_names:
        rows.setdefault(name.rstrip("0123456789"), []).append(name)
    return list(rows.values())
