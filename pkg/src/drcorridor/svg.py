"""Dependency-free SVG output: corridor overlays and violation histograms."""

from __future__ import annotations

import numpy as np


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Canvas:
    """World-to-pixel mapping with a flipped y axis."""

    def __init__(self, xmin, xmax, ymin, ymax, width=720, pad=40):
        self.xmin, self.xmax, self.ymin, self.ymax = xmin, xmax, ymin, ymax
        span_x = max(xmax - xmin, 1e-9)
        span_y = max(ymax - ymin, 1e-9)
        self.scale = (width - 2 * pad) / span_x
        self.pad = pad
        self.width = width
        self.height = int(span_y * self.scale + 2 * pad)

    def pt(self, x, y):
        px = self.pad + (x - self.xmin) * self.scale
        py = self.height - self.pad - (y - self.ymin) * self.scale
        return px, py

    def rect(self, lo, hi, style):
        x0, y1 = self.pt(lo[0], lo[1])
        x1, y0 = self.pt(hi[0], hi[1])
        return (
            f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
            f'height="{y1 - y0:.2f}" {style}/>'
        )


def plan_overlay(corridor, tightened, path, trajectory, samples_per_segment=120) -> str:
    """Nominal boxes, tightened boxes, waypoints and the planned curve (x-y)."""
    lowers, uppers = corridor.lowers, corridor.uppers
    canvas = _Canvas(
        lowers[:, 0].min(), uppers[:, 0].max(), lowers[:, 1].min(), uppers[:, 1].max()
    )
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{canvas.width}" height="{canvas.height}" '
        f'viewBox="0 0 {canvas.width} {canvas.height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for lo, hi in zip(lowers, uppers):
        parts.append(canvas.rect(lo, hi, 'fill="#eef3f8" stroke="#7a8796" stroke-width="1.5"'))
    if tightened is not None:
        for lo, hi in zip(tightened.effective_lower, tightened.effective_upper):
            parts.append(
                canvas.rect(
                    lo, hi,
                    'fill="none" stroke="#2b6cb0" stroke-width="1.5" stroke-dasharray="6,4"',
                )
            )
    if trajectory is not None:
        from .bezier import sample

        _, pts = sample(trajectory, samples_per_segment)
        coords = " ".join(
            "{:.2f},{:.2f}".format(*canvas.pt(p[0], p[1])) for p in pts
        )
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="#c53030" stroke-width="2"/>'
        )
    if path is not None:
        for wp in path.waypoints:
            x, y = canvas.pt(wp[0], wp[1])
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#2f855a"/>')
    legend = "nominal boxes (grey), tightened (dashed blue), waypoints (green), trajectory (red)"
    parts.append(
        f'<text x="{canvas.pad}" y="18" font-family="sans-serif" font-size="12">{_esc(legend)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def violation_histogram(alphas, counts, total_per_alpha, title) -> str:
    """Bar chart of violation counts per mixture weight alpha."""
    counts = np.asarray(counts, dtype=int)
    width, height, pad = 480, 300, 48
    n = len(alphas)
    bar_w = (width - 2 * pad) / max(n, 1) * 0.7
    gap = (width - 2 * pad) / max(n, 1)
    top = max(int(counts.max(initial=0)), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{pad}" y="20" font-family="sans-serif" font-size="13">{_esc(title)}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        'stroke="black" stroke-width="1"/>',
    ]
    for i, (alpha, count) in enumerate(zip(alphas, counts)):
        h = (height - 2 * pad) * count / top
        x = pad + i * gap + (gap - bar_w) / 2
        y = height - pad - h
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" fill="#4a7ebb"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{height - pad + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">a={alpha:g}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{count}</text>'
        )
    parts.append(
        f'<text x="{pad}" y="{height - 8}" font-family="sans-serif" font-size="11">'
        f"violating instances out of {total_per_alpha} per bar</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)
