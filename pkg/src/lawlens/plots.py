"""Static SVG violin-style density strips from aggregate() summaries."""

from __future__ import annotations

_WIDTH_PER_METRIC = 140
_HEIGHT = 320
_MARGIN = 40


def violin_svg(summary: dict) -> str:
    """Render one density strip per metric from a plot-ready summary."""
    metrics = summary.get("metrics", {})
    names = list(metrics)
    width = _MARGIN * 2 + _WIDTH_PER_METRIC * max(len(names), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{_HEIGHT}" viewBox="0 0 {width} {_HEIGHT}">',
        f'<rect width="{width}" height="{_HEIGHT}" fill="white"/>',
    ]
    plot_h = _HEIGHT - 2 * _MARGIN

    def y_of(value: float) -> float:
        return _MARGIN + (1.0 - value) * plot_h

    # y axis with 0/0.5/1 guides
    for v in (0.0, 0.5, 1.0):
        y = y_of(v)
        parts.append(
            f'<line x1="{_MARGIN}" y1="{y:.1f}" x2="{width - _MARGIN}" '
            f'y2="{y:.1f}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="4" y="{y + 4:.1f}" font-size="10" fill="#666">{v:g}</text>'
        )

    for i, name in enumerate(names):
        m = metrics[name]
        cx = _MARGIN + _WIDTH_PER_METRIC * (i + 0.5)
        hist = m["histogram"]
        counts = hist["counts"]
        peak = max(counts) or 1
        half_max = _WIDTH_PER_METRIC * 0.35
        n = len(counts)
        right = []
        left = []
        for k, c in enumerate(counts):
            v = (k + 0.5) / n
            y = y_of(v)
            half = half_max * c / peak
            right.append((cx + half, y))
            left.append((cx - half, y))
        pts = right + list(reversed(left))
        path = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
        parts.append(
            f'<polygon points="{path}" fill="#7aa6c2" fill-opacity="0.7" '
            'stroke="#33607f" stroke-width="1"/>'
        )
        for stat, color in (("median", "#c0392b"), ("mean", "#2c3e50")):
            y = y_of(m[stat])
            parts.append(
                f'<line x1="{cx - half_max:.1f}" y1="{y:.1f}" '
                f'x2="{cx + half_max:.1f}" y2="{y:.1f}" stroke="{color}" '
                'stroke-width="1.5"/>'
            )
        parts.append(
            f'<text x="{cx:.1f}" y="{_HEIGHT - 12}" font-size="11" '
            f'text-anchor="middle" fill="#333">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
