"""Read the metrics CSV and render a standalone SVG training chart."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .errors import DataError
from .model import METRICS_HEADER, EpochMetrics

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=70, top=40, bottom=50)


def read_metrics(path) -> list[EpochMetrics]:
    """Parse a metrics CSV; malformed input raises DataError naming the line."""
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != METRICS_HEADER:
        raise DataError(f"{path}: line 1: expected header {METRICS_HEADER!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            if len(fields) != 5:
                raise ValueError(f"expected 5 fields, got {len(fields)}")
            m = EpochMetrics(int(fields[0]), *(float(f) for f in fields[1:]))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from exc
        if not (0.0 <= m.train_acc <= 1.0 and 0.0 <= m.test_acc <= 1.0):
            raise DataError(f"{path}: line {lineno}: accuracy outside [0, 1]")
        rows.append(m)
    if not rows:
        raise DataError(f"{path}: no metric rows after the header")
    return rows


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(metrics: list[EpochMetrics], title="Training curves") -> str:
    """Train loss on the left axis, test accuracy on the right, epochs along x."""
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    epochs = [m.epoch for m in metrics]
    e_lo, e_hi = min(epochs), max(epochs)
    loss_hi = max(max(m.train_loss for m in metrics), 1e-12)

    def sx(e):
        return x0 + (x1 - x0) * ((e - e_lo) / (e_hi - e_lo) if e_hi > e_lo else 0.5)

    def sy(v, hi):
        return y0 - (y0 - y1) * (v / hi)

    loss_pts = " ".join(f"{sx(m.epoch):.2f},{sy(m.train_loss, loss_hi):.2f}" for m in metrics)
    acc_pts = " ".join(f"{sx(m.epoch):.2f},{sy(m.test_acc, 1.0):.2f}" for m in metrics)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#1f77b4"/>',
        f'<line x1="{x1}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#d62728"/>',
    ]
    for v in _ticks(0.0, loss_hi):
        y = sy(v, loss_hi)
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end" fill="#1f77b4">{v:.3g}</text>')
    for v in _ticks(0.0, 1.0):
        y = sy(v, 1.0)
        out.append(f'<text x="{x1 + 6}" y="{y + 4:.2f}" fill="#d62728">{v:.2f}</text>')
    for e in sorted({int(round(t)) for t in _ticks(e_lo, e_hi)}):
        out.append(f'<text x="{sx(e):.2f}" y="{y0 + 18}" text-anchor="middle">{e}</text>')
    out += [
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 10}" text-anchor="middle">epoch</text>',
        f'<text x="16" y="{(y0 + y1) / 2}" fill="#1f77b4" transform="rotate(-90 16 {(y0 + y1) / 2})" '
        'text-anchor="middle">train loss</text>',
        f'<text x="{WIDTH - 12}" y="{(y0 + y1) / 2}" fill="#d62728" '
        f'transform="rotate(90 {WIDTH - 12} {(y0 + y1) / 2})" text-anchor="middle">test accuracy</text>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{loss_pts}"/>',
        f'<polyline fill="none" stroke="#d62728" stroke-width="1.5" points="{acc_pts}"/>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"
