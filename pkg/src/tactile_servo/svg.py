"""Minimal SVG rendering of a trajectory over its ideal contour.

Only ``path``, ``polyline`` and ``circle`` elements are emitted.  World y is
flipped so that counterclockwise traversal looks counterclockwise.
"""

from __future__ import annotations

import numpy as np


def _coords(pts):
    return " ".join(f"{x:.4f},{-y:.4f}" for x, y in pts)


def render_svg(traj_points, shape, title=None, width=600):
    contour = shape.polygon(720)
    pts = np.asarray(traj_points, dtype=float).reshape(-1, 2)
    both = np.vstack([contour, pts]) if pts.size else contour
    lo, hi = both.min(axis=0), both.max(axis=0)
    pad = 0.05 * float(max(hi - lo)) + 1.0
    x0, y0 = lo[0] - pad, -hi[1] - pad
    w, h = hi[0] - lo[0] + 2 * pad, hi[1] - lo[1] + 2 * pad
    stroke = max(w, h) / 500.0
    d = "M " + " L ".join(f"{x:.4f},{-y:.4f}" for x, y in contour) + " Z"
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{width * h / w:.0f}" viewBox="{x0:.4f} {y0:.4f} {w:.4f} {h:.4f}">',
    ]
    if title:
        out.append(f"<!-- {title.replace('--', '- -')} -->")
    out.append(f'<path d="{d}" fill="none" stroke="#888888" stroke-width="{2 * stroke:.4f}"/>')
    if pts.shape[0]:
        out.append(f'<polyline points="{_coords(pts)}" fill="none" stroke="#c0392b" '
                   f'stroke-width="{stroke:.4f}"/>')
        out.append(f'<circle cx="{pts[0, 0]:.4f}" cy="{-pts[0, 1]:.4f}" r="{3 * stroke:.4f}" fill="#2c3e50"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, traj_points, shape, title=None):
    with open(path, "w") as fh:
        fh.write(render_svg(traj_points, shape, title))
