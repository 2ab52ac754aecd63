"""Deterministic writers: CSV records, JSON documents, PGM field maps, SVG charts.

Floats are always written with 17 significant digits so they read back
exactly; nothing time- or host-dependent is written.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

BASE_COLUMNS = ("experiment", "algorithm", "seed", "run", "episode", "steps", "return")
PGM_MAX = 65535
PGM_MID = 32768


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def records_csv(records: list[dict], metric_columns) -> str:
    columns = list(BASE_COLUMNS) + [c for c in metric_columns if c not in BASE_COLUMNS]
    lines = [",".join(columns)]
    for row in records:
        lines.append(",".join(_csv_cell(format_value(row.get(c))) for c in columns))
    return "\n".join(lines) + "\n"


def to_json(value, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats and non-finite floats as null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        seq = value.tolist() if isinstance(value, np.ndarray) else list(value)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return format(x, ".17g") if math.isfinite(x) else "null"
    return json.dumps(str(value))


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def pgm_levels(grid) -> np.ndarray:
    """16-bit grey levels: min-max scaled, constant grids at mid-grey."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2 or g.size == 0:
        raise ValueError(f"field map must be a non-empty 2-D grid, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("field map has non-finite values")
    lo, hi = float(g.min()), float(g.max())
    if hi == lo:
        return np.full(g.shape, PGM_MID, dtype=np.uint16)
    return np.rint((g - lo) / (hi - lo) * PGM_MAX).astype(np.uint16)


def write_field_map(grid, path) -> None:
    """Binary 16-bit PGM at ``path`` plus a ``.txt`` sidecar of raw values."""
    path = Path(path)
    g = np.asarray(grid, dtype=float)
    levels = pgm_levels(g)
    height, width = levels.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{PGM_MAX}\n".encode("ascii"))
        fh.write(levels.astype(">u2").tobytes())
    rows = [" ".join(format_value(v) for v in row) for row in g]
    write_text(path.with_suffix(".txt"), "\n".join(rows) + "\n")


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    width, height = (int(x) for x in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype).reshape(height, width).astype(np.int64)


def points_csv(points: np.ndarray) -> str:
    cols = ["label"] + [f"dim{i + 1}" for i in range(points.shape[1] - 1)]
    lines = [",".join(cols)]
    for row in points:
        lines.append(",".join([format_value(int(row[0]))] + [format_value(v) for v in row[1:]]))
    return "\n".join(lines) + "\n"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
            "#7f7f7f", "#17becf")


def line_chart_svg(series: dict[str, list[float]], title: str, x_label: str, y_label: str,
                   marker_x: int | None = None, width: int = 640, height: int = 400) -> str:
    """Static SVG line chart of ``series`` plotted against 1, 2, ..."""
    left, right, top, bottom = 60, 150, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    n = max((len(v) for v in series.values()), default=1)
    y_max = max((max(v) for v in series.values() if len(v)), default=1.0)
    y_max = y_max if y_max > 0 else 1.0

    def px(i: float) -> float:
        return left + (i - 1) / max(n - 1, 1) * plot_w

    def py(y: float) -> float:
        return top + plot_h - y / y_max * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for k in range(5):
        y = y_max * k / 4
        out.append(f'<text x="{left - 6}" y="{py(y) + 4:.2f}" text-anchor="end">{y:.0f}</text>')
    for k in range(5):
        i = 1 + (n - 1) * k / 4
        out.append(f'<text x="{px(i):.2f}" y="{top + plot_h + 16}" text-anchor="middle">{i:.0f}</text>')
    out.append(f'<text x="{left + plot_w / 2:.2f}" y="{height - 10}" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="15" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + plot_h / 2:.2f})">{y_label}</text>')
    if marker_x is not None:
        out.append(f'<line x1="{px(marker_x):.2f}" y1="{top}" x2="{px(marker_x):.2f}" '
                   f'y2="{top + plot_h}" stroke="grey" stroke-dasharray="4 3"/>')
    for idx, (name, values) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(values, start=1))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * idx
        out.append(f'<line x1="{left + plot_w + 12}" y1="{ly - 4}" x2="{left + plot_w + 32}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + plot_w + 38}" y="{ly}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def snapshot_document(tables: dict[str, np.ndarray]) -> dict:
    """Agent tables as nested lists with their shapes."""
    return {name: {"shape": list(arr.shape), "values": np.asarray(arr, dtype=float).ravel().tolist()}
            for name, arr in tables.items()}
