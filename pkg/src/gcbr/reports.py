"""CSV and SVG emission.

All CSVs are written with a canonical cell format (repr for floats, so files
round-trip exactly and identical runs are byte-identical) and LF newlines.
The SVG renderer is a small native line-plot writer; it consumes only data
handed to it, which the CLI reads back from the CSVs it just wrote.
"""

from __future__ import annotations

from pathlib import Path

METRICS_HEADER = ("method", "seed", "micro_f1", "macro_f1", "imbalance_ratio")


def fmt_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))  # shortest exact round-trip, numpy-proof
    if isinstance(value, int):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(fmt_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def metrics_rows(method: str, records, summary, num_classes: int):
    """Per-seed rows plus labeled mean/std summary rows.

    The per-class selection histogram is appended as class_0..class_{m-1}.
    """
    header = METRICS_HEADER + tuple(f"class_{c}" for c in range(num_classes))
    rows = []
    for r in records:
        rows.append((method, r.seed, r.micro_f1, r.macro_f1,
                     r.imbalance_ratio) + r.class_histogram)
    hist = [r.class_histogram for r in records]
    mean_hist = tuple(sum(h[c] for h in hist) / len(hist)
                      for c in range(num_classes))
    n = len(records)
    std_hist = tuple(
        (sum((h[c] - mean_hist[c]) ** 2 for h in hist) / (n - 1)) ** 0.5
        if n > 1 else 0.0
        for c in range(num_classes))
    rows.append((method, "mean", summary.micro_f1_mean, summary.macro_f1_mean,
                 summary.imbalance_ratio_mean) + mean_hist)
    rows.append((method, "std", summary.micro_f1_std, summary.macro_f1_std,
                 summary.imbalance_ratio_std) + std_hist)
    return header, rows


def trace_rows(records):
    """Flatten per-seed step traces, seed column first."""
    rows = []
    for r in records:
        for row in r.trace:
            rows.append((r.seed,) + row)
    return rows


def _ticks(lo: float, hi: float, n: int = 5):
    if hi == lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def svg_line_chart(path, title: str, xlabel: str, ylabel: str,
                   series: dict) -> None:
    """Minimal multi-series line chart.

    series maps a name to (xs, ys) sequences; points are drawn in the given
    order with per-series colors and a legend.
    """
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b", "#e377c2")

    all_x = [x for xs, _ in series.values() for x in xs]
    all_y = [y for _, ys in series.values() for y in ys]
    if not all_x:
        raise ValueError("no data to plot")
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
        f'font-size="15" font-family="sans-serif">{title}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{xlabel}</text>',
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#444"/>',
    ]
    for xt in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(xt):.1f}" y1="{mt + ph}" '
                     f'x2="{sx(xt):.1f}" y2="{mt + ph + 5}" stroke="#444"/>')
        parts.append(f'<text x="{sx(xt):.1f}" y="{mt + ph + 18}" '
                     f'text-anchor="middle" font-size="10" '
                     f'font-family="sans-serif">{xt:.3g}</text>')
    for yt in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{ml - 5}" y1="{sy(yt):.1f}" x2="{ml}" '
                     f'y2="{sy(yt):.1f}" stroke="#444"/>')
        parts.append(f'<text x="{ml - 8}" y="{sy(yt) + 3:.1f}" '
                     f'text-anchor="end" font-size="10" '
                     f'font-family="sans-serif">{yt:.3g}</text>')
    for s, (name, (xs, ys)) in enumerate(sorted(series.items())):
        color = colors[s % len(colors)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" '
                         f'fill="{color}"/>')
        ly = mt + 14 + 14 * s
        parts.append(f'<line x1="{ml + pw - 110}" y1="{ly - 4}" '
                     f'x2="{ml + pw - 90}" y2="{ly - 4}" stroke="{color}" '
                     f'stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw - 85}" y="{ly}" font-size="11" '
                     f'font-family="sans-serif">{name}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
