"""Tiny deterministic SVG writer for scatter, line and histogram plots.

Output depends only on the data, so repeated runs give identical files.
"""

from __future__ import annotations

import numpy as np

W, H, PAD = 480, 360, 48


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


class Figure:
    def __init__(self, xlim, ylim, title="", xlabel="", ylabel="", equal=False):
        x0, x1 = map(float, xlim)
        y0, y1 = map(float, ylim)
        if x1 <= x0:
            x1 = x0 + 1.0
        if y1 <= y0:
            y1 = y0 + 1.0
        if equal:
            span = max(x1 - x0, y1 - y0)
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            x0, x1, y0, y1 = cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2
        self.xlim, self.ylim = (x0, x1), (y0, y1)
        self.items: list[str] = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def _x(self, x):
        x0, x1 = self.xlim
        return PAD + (np.asarray(x, dtype=float) - x0) / (x1 - x0) * (W - 2 * PAD)

    def _y(self, y):
        y0, y1 = self.ylim
        return H - PAD - (np.asarray(y, dtype=float) - y0) / (y1 - y0) * (H - 2 * PAD)

    def scatter(self, x, y, r=2.0, color="black"):
        for px, py in zip(self._x(x), self._y(y)):
            self.items.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{r}" fill="{color}"/>')

    def line(self, x, y, color="black", width=1.0, dash=None):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self._x(x), self._y(y)))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def circle(self, cx, cy, radius, color="gray", fill="none"):
        sx = (W - 2 * PAD) / (self.xlim[1] - self.xlim[0])
        self.items.append(f'<ellipse cx="{_fmt(self._x(cx))}" cy="{_fmt(self._y(cy))}" '
                          f'rx="{_fmt(radius * sx)}" ry="{_fmt(radius * sx)}" '
                          f'stroke="{color}" fill="{fill}" fill-opacity="0.2"/>')

    def bars(self, edges, counts, color="gray"):
        base = self._y(0.0)
        for a, b, c in zip(edges[:-1], edges[1:], counts):
            xa, xb, top = self._x(a), self._x(b), self._y(c)
            self.items.append(f'<rect x="{_fmt(xa)}" y="{_fmt(top)}" width="{_fmt(xb - xa)}" '
                              f'height="{_fmt(base - top)}" fill="{color}" fill-opacity="0.6"/>')

    def vline(self, x, color="gray"):
        px = _fmt(self._x(x))
        self.items.append(f'<line x1="{px}" y1="{PAD}" x2="{px}" y2="{H - PAD}" '
                          f'stroke="{color}" stroke-dasharray="4,3"/>')

    def render(self) -> str:
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        axes = [
            f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
            f'fill="none" stroke="black"/>',
            f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="13">{self.title}</text>',
            f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="11">{self.xlabel}</text>',
            f'<text x="12" y="{H / 2}" font-size="11" transform="rotate(-90 12 {H / 2})" '
            f'text-anchor="middle">{self.ylabel}</text>',
            f'<text x="{PAD}" y="{H - PAD + 14}" font-size="9">{x0:.4g}</text>',
            f'<text x="{W - PAD}" y="{H - PAD + 14}" font-size="9" text-anchor="end">{x1:.4g}</text>',
            f'<text x="{PAD - 4}" y="{H - PAD}" font-size="9" text-anchor="end">{y0:.4g}</text>',
            f'<text x="{PAD - 4}" y="{PAD + 8}" font-size="9" text-anchor="end">{y1:.4g}</text>',
        ]
        body = "\n".join(axes + self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
                f'viewBox="0 0 {W} {H}">\n{body}\n</svg>\n')

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())
