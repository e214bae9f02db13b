"""Minimal static SVG figures: axes, heatmap rasters, polylines, markers."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

# a few anchors of a perceptually ordered dark-blue -> yellow ramp
_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)
MISSING = "#bbbbbb"
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def color_for(v: float, lo: float, hi: float) -> str:
    if not np.isfinite(v) or v < 0:
        return MISSING
    t = 0.0 if hi <= lo else float(np.clip((v - lo) / (hi - lo), 0.0, 1.0))
    k = t * (len(_RAMP) - 1)
    i = min(int(k), len(_RAMP) - 2)
    c = _RAMP[i] + (k - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(x)) for x in c)


@dataclass
class Figure:
    xlim: tuple[float, float] = (0.0, 24.0)
    ylim: tuple[float, float] = (0.0, 24.0)
    title: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    width: int = 520
    height: int = 480
    margin: tuple[int, int, int, int] = (40, 50, 50, 60)  # top, right, bottom, left
    items: list[str] = field(default_factory=list)
    decor: list[str] = field(default_factory=list)  # drawn outside the clipped plot area

    @property
    def _plot_box(self):
        t, r, b, l = self.margin
        return l, t, self.width - l - r, self.height - t - b

    def sx(self, x):
        l, _, w, _ = self._plot_box
        return l + (np.asarray(x) - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * w

    def sy(self, y):
        _, t, _, h = self._plot_box
        return t + h - (np.asarray(y) - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * h

    def raster(self, values: np.ndarray, xs: np.ndarray, ys: np.ndarray,
               vmin: float | None = None, vmax: float | None = None) -> Figure:
        """Cell-centred raster; ``values[iy, ix]``, negatives drawn as missing."""
        finite = values[np.isfinite(values) & (values >= 0)]
        lo = float(finite.min()) if vmin is None and finite.size else (vmin or 0.0)
        hi = float(finite.max()) if vmax is None and finite.size else (vmax or 1.0)
        hx = (xs[1] - xs[0]) if len(xs) > 1 else 1.0
        hy = (ys[1] - ys[0]) if len(ys) > 1 else 1.0
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                x0, x1 = self.sx(x - hx / 2), self.sx(x + hx / 2)
                y0, y1 = self.sy(y + hy / 2), self.sy(y - hy / 2)
                self.items.append(
                    f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0 + 0.3:.2f}" '
                    f'height="{y1 - y0 + 0.3:.2f}" fill="{color_for(values[iy, ix], lo, hi)}"/>'
                )
        self._colorbar(lo, hi)
        return self

    def _colorbar(self, lo: float, hi: float) -> None:
        l, t, w, h = self._plot_box
        x = l + w + 8
        n = 40
        for k in range(n):
            v = lo + (hi - lo) * k / (n - 1)
            yy = t + h - (k + 1) * h / n
            self.decor.append(f'<rect x="{x}" y="{yy:.2f}" width="10" height="{h / n + 0.3:.2f}" '
                              f'fill="{color_for(v, lo, hi)}"/>')
        for yy, v in ((t + 8, hi), (t + h, lo)):
            self.decor.append(f'<text x="{x + 12}" y="{yy}" font-size="9" font-family="sans-serif">{v:.0f}</text>')

    def polyline(self, pts, color: str = "#000000", width: float = 1.5, dash: str | None = None) -> Figure:
        pts = np.asarray(pts, dtype=float)
        if len(pts) < 2:
            return self
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.sx(pts[:, 0]), self.sy(pts[:, 1])))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>')
        return self

    def points(self, pts, color: str = "#000000", r: float = 3.0, filled: bool = True,
               labels: list[str] | None = None) -> Figure:
        for k, (a, b) in enumerate(np.asarray(pts, dtype=float).reshape(-1, 2)):
            fill = color if filled else "none"
            self.items.append(f'<circle cx="{self.sx(a):.2f}" cy="{self.sy(b):.2f}" r="{r}" '
                              f'fill="{fill}" stroke="{color}" stroke-width="1.2"/>')
            if labels:
                self.text(self.sx(a) + 5, self.sy(b) - 5, labels[k], size=11, anchor="start", raw=True)
        return self

    def arrows(self, starts, ends, color: str = "#333333") -> Figure:
        for (a, b), (c, d) in zip(np.asarray(starts), np.asarray(ends)):
            if not np.all(np.isfinite([a, b, c, d])):
                continue
            x0, y0, x1, y1 = self.sx(a), self.sy(b), self.sx(c), self.sy(d)
            self.items.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                              f'stroke="{color}" stroke-width="0.8"/>')
            ang = np.arctan2(y1 - y0, x1 - x0)
            for s in (0.45, -0.45):
                hx, hy = x1 - 4 * np.cos(ang + s), y1 - 4 * np.sin(ang + s)
                self.items.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" '
                                  f'stroke="{color}" stroke-width="0.8"/>')
        return self

    def text(self, x, y, s: str, size: int = 12, anchor: str = "middle", raw: bool = False) -> Figure:
        if not raw:
            x, y = self.sx(x), self.sy(y)
        self.items.append(f'<text x="{float(x):.2f}" y="{float(y):.2f}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{escape(s)}</text>')
        return self

    def _axes(self) -> list[str]:
        l, t, w, h = self._plot_box
        out = [f'<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="#000"/>']
        for v in np.linspace(*self.xlim, 5):
            x = self.sx(v)
            out.append(f'<line x1="{x:.2f}" y1="{t + h}" x2="{x:.2f}" y2="{t + h + 4}" stroke="#000"/>')
            out.append(f'<text x="{x:.2f}" y="{t + h + 16}" font-size="10" font-family="sans-serif" '
                       f'text-anchor="middle">{v:g}</text>')
        for v in np.linspace(*self.ylim, 5):
            y = self.sy(v)
            out.append(f'<line x1="{l - 4}" y1="{y:.2f}" x2="{l}" y2="{y:.2f}" stroke="#000"/>')
            out.append(f'<text x="{l - 6}" y="{y + 3:.2f}" font-size="10" font-family="sans-serif" '
                       f'text-anchor="end">{v:.3g}</text>')
        out.append(f'<text x="{l + w / 2}" y="{self.height - 12}" font-size="12" font-family="sans-serif" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{t + h / 2}" font-size="12" font-family="sans-serif" text-anchor="middle" '
                   f'transform="rotate(-90 14 {t + h / 2})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{self.width / 2}" y="22" font-size="14" font-family="sans-serif" '
                       f'text-anchor="middle">{escape(self.title)}</text>')
        return out

    def to_string(self) -> str:
        l, t, w, h = self._plot_box
        body = "\n".join(
            [f'<defs><clipPath id="plot"><rect x="{l}" y="{t}" width="{w}" height="{h}"/></clipPath></defs>',
             '<g clip-path="url(#plot)">'] + self.items + ["</g>"] + self.decor + self._axes()
        )
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_string())
        return path
