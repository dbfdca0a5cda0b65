"""Procedural line-art renditions of the six evaluation logos.

Every logo is drawn as thin strokes (about 3 px) on a canvas whose tight
bounding box is exactly ``CANONICAL_WIDTH`` pixels wide. Thin strokes matter:
the blind detector estimates the background with a 9x9 median, which only
ignores structures covering fewer than half of the window, i.e. strokes
under ~4 px across axis-aligned and under ~3 px on diagonals.

Axis-aligned centrelines sit on integer coordinates; with a 1.3 px
half-width that gives exactly 3 px, where a half-integer line would give 2.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from .imaging import PayloadMask, scale_mask

CANONICAL_WIDTH = 256
STROKE_HALF_WIDTH = 1.3   # centreline strokes: |distance| <= this
OUTLINE_WIDTH = 3.0       # inner band kept from filled regions

LOGO_IDS = ("apple", "benz", "chanel", "mcdonalds", "flower", "fuji")


class _Canvas:
    # Drawing coordinates start at -PAD so shapes touching the nominal frame
    # still get a closed outline; the final mask is cropped to its bbox.
    PAD = 8

    def __init__(self, width: int, height: int):
        self.h, self.w = height + 2 * self.PAD, width + 2 * self.PAD
        yy, xx = np.mgrid[0:self.h, 0:self.w]
        self.x = xx.astype(np.float64) - self.PAD
        self.y = yy.astype(np.float64) - self.PAD
        self.bits = np.zeros((self.h, self.w), dtype=bool)

    # filled primitives --------------------------------------------------
    def disk(self, cx, cy, r):
        return (self.x - cx) ** 2 + (self.y - cy) ** 2 <= r * r

    def ellipse(self, cx, cy, a, b, angle=0.0):
        c, s = math.cos(angle), math.sin(angle)
        u = (self.x - cx) * c + (self.y - cy) * s
        v = -(self.x - cx) * s + (self.y - cy) * c
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0

    def polygon(self, points):
        img = Image.new("1", (self.w, self.h), 0)
        pts = [(px + self.PAD, py + self.PAD) for px, py in points]
        ImageDraw.Draw(img).polygon(pts, fill=1)
        return np.asarray(img, dtype=bool)

    # strokes ------------------------------------------------------------
    def outline(self, region):
        """Keep the inner band of a filled region."""
        depth = ndimage.distance_transform_edt(region)
        self.bits |= region & (depth <= OUTLINE_WIDTH)

    def segment(self, x0, y0, x1, y1, half=STROKE_HALF_WIDTH):
        dx, dy = x1 - x0, y1 - y0
        t = ((self.x - x0) * dx + (self.y - y0) * dy) / (dx * dx + dy * dy)
        t = np.clip(t, 0.0, 1.0)
        d = np.hypot(self.x - (x0 + t * dx), self.y - (y0 + t * dy))
        self.bits |= d <= half

    def polyline(self, points, half=STROKE_HALF_WIDTH):
        for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
            self.segment(x0, y0, x1, y1, half)

    def arc(self, cx, cy, r, start, stop, half=STROKE_HALF_WIDTH):
        """Circular arc between angles ``start`` and ``stop`` (radians, y down)."""
        d = np.abs(np.hypot(self.x - cx, self.y - cy) - r)
        ang = np.arctan2(self.y - cy, self.x - cx)
        span = (stop - start) % (2 * math.pi)
        inside = ((ang - start) % (2 * math.pi)) <= span
        self.bits |= (d <= half) & inside


def _apple(c: _Canvas):
    body = c.disk(84, 170, 82) | c.disk(172, 170, 82) | c.ellipse(128, 200, 100, 70)
    body &= ~c.disk(128, 78, 26)          # top notch where the stem sits
    body &= ~c.disk(258, 150, 44)         # the bite
    c.outline(body)
    c.outline(c.ellipse(146, 44, 34, 16, angle=-0.9))   # leaf


def _benz(c: _Canvas):
    c.outline(c.disk(127.5, 127.5, 127.5))
    cx, cy, r = 127.0, 128.0, 124.0
    for deg in (-90.0, 30.0, 150.0):
        a = math.radians(deg)
        c.segment(cx, cy, cx + r * math.cos(a), cy + r * math.sin(a))


def _chanel(c: _Canvas):
    cy, r = 100.0, 86.0
    gap = math.radians(50)
    # left C opens to the left, right C (mirrored) opens to the right
    c.arc(87.5, cy, r - 1.5, math.pi + gap, math.pi - gap)
    c.arc(168.5, cy, r - 1.5, gap, -gap)


def _mcdonalds(c: _Canvas):
    top, base, waist = 66.0, 220.0, 150.0
    r = 63.5
    left, right = 1.0 + r, 254.0 - r
    c.arc(left, top, r, math.pi, 0.0)
    c.arc(right, top, r, math.pi, 0.0)
    c.segment(1.0, top, 1.0, base)
    c.segment(254.0, top, 254.0, base)
    # the two inner legs meet at the waist of the M
    c.segment(left + r, top, 128.0, waist)
    c.segment(right - r, top, 128.0, waist)


def _flower(c: _Canvas):
    cx = cy = 127.5
    for k in range(6):
        a = k * math.pi / 3
        px, py = cx + 70 * math.cos(a), cy + 70 * math.sin(a)
        c.outline(c.ellipse(px, py, 56, 28, angle=a) & ~c.disk(cx, cy, 30))
    c.outline(c.disk(cx, cy, 26))


def _fuji(c: _Canvas):
    c.outline(c.polygon([(0, 200), (92, 40), (164, 40), (255, 200)]))
    c.polyline([(62, 92), (86, 110), (108, 88), (128, 112), (148, 88), (170, 110), (194, 92)])
    c.segment(40, 228, 216, 228)


_DRAWERS = {
    "apple": (_apple, 256, 280),
    "benz": (_benz, 256, 256),
    "chanel": (_chanel, 256, 200),
    "mcdonalds": (_mcdonalds, 256, 232),
    "flower": (_flower, 256, 256),
    "fuji": (_fuji, 256, 240),
}


@lru_cache(maxsize=None)
def render_logo(payload_id: str, width: int = CANONICAL_WIDTH) -> PayloadMask:
    """Canonical mask for ``payload_id`` cropped to its bbox, ``width`` wide."""
    if payload_id not in _DRAWERS:
        raise KeyError(f"unknown logo {payload_id!r}; known: {', '.join(LOGO_IDS)}")
    draw, w, h = _DRAWERS[payload_id]
    canvas = _Canvas(w, h)
    draw(canvas)
    mask = PayloadMask(canvas.bits, payload_id).cropped()
    return scale_mask(mask, width)
