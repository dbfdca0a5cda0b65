"""Shannon entropy of luma histograms: global, tiled, and for choosing where
a payload goes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import PlacementError
from .imaging import GrayBuffer

DEFAULT_ENTROPY_THRESHOLD = 3.0
DEFAULT_TILE_SIZE = 32
MIN_TILE_SIZE = 8
MAX_BITS = 8.0

# Windows whose entropies differ by less than this are treated as tied.
_TIE_EPS = 1e-12


def entropy_from_counts(counts: np.ndarray) -> float:
    """Entropy in bits of a histogram given as raw counts.

    Counts are sorted before summation, so two histograms that are
    permutations of each other give bit-identical results.
    """
    nz = np.sort(counts[counts > 0]).astype(np.float64)
    if nz.size <= 1:
        return 0.0
    total = nz.sum()
    p = nz / total
    h = float(-(p * np.log2(p)).sum())
    return min(max(h, 0.0), MAX_BITS)


def _histogram(values: np.ndarray) -> np.ndarray:
    return np.bincount(values.ravel(), minlength=256)


def shannon_entropy(gray: GrayBuffer) -> float:
    return entropy_from_counts(_histogram(gray.pixels))


@dataclass(frozen=True)
class EntropyMap:
    tile_size: int
    cols: int
    rows: int
    values: tuple[tuple[float, ...], ...]  # values[row][col], bits

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64).reshape(self.rows, self.cols)

    def to_dict(self) -> dict:
        return {
            "tile_size": self.tile_size,
            "cols": self.cols,
            "rows": self.rows,
            "values": [list(row) for row in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def entropy_map(gray: GrayBuffer, tile_size: int = DEFAULT_TILE_SIZE) -> EntropyMap:
    """Per-tile entropy. Tiles on the right/bottom edge are truncated to the image."""
    if tile_size < MIN_TILE_SIZE:
        raise ValueError(f"tile_size must be >= {MIN_TILE_SIZE}, got {tile_size}")
    px = gray.pixels
    h, w = px.shape
    cols = math.ceil(w / tile_size)
    rows = math.ceil(h / tile_size)
    values = tuple(
        tuple(
            entropy_from_counts(
                _histogram(px[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size])
            )
            for c in range(cols)
        )
        for r in range(rows)
    )
    return EntropyMap(tile_size, cols, rows, values)


@dataclass(frozen=True)
class PlacementDecision:
    origin: tuple[int, int]
    window_entropy: float
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin),
            "window_entropy": self.window_entropy,
            "feasible": self.feasible,
        }


def window_entropies(gray: GrayBuffer, payload_bbox: tuple[int, int], tile_size: int) -> np.ndarray:
    """Entropy of every candidate window, indexed [row_step, col_step].

    Candidate origins run over multiples of ``tile_size`` for which the
    window still fits inside the image.
    """
    w, h = payload_bbox
    px = gray.pixels
    H, W = px.shape
    ys = np.arange(0, H - h + 1, tile_size)
    xs = np.arange(0, W - w + 1, tile_size)
    out = np.empty((len(ys), len(xs)), dtype=np.float64)
    if out.size == 0:
        return out
    # Cut the image along every window edge, histogram each grid cell in one
    # pass, then read window histograms off a 2-D prefix sum. Counts are
    # exact integers, so the result matches a per-window bincount bit for bit.
    ycuts = np.unique(np.concatenate([ys, ys + h, [0, H]]))
    xcuts = np.unique(np.concatenate([xs, xs + w, [0, W]]))
    ny, nx = len(ycuts) - 1, len(xcuts) - 1
    row_cell = np.searchsorted(ycuts, np.arange(H), side="right") - 1
    col_cell = np.searchsorted(xcuts, np.arange(W), side="right") - 1
    key = (row_cell[:, None] * nx + col_cell[None, :]) * 256 + px
    counts = np.bincount(key.ravel(), minlength=ny * nx * 256).reshape(ny, nx, 256)
    integral = np.zeros((ny + 1, nx + 1, 256), dtype=np.int64)
    integral[1:, 1:] = counts.cumsum(axis=0).cumsum(axis=1)

    y0, y1 = np.searchsorted(ycuts, ys), np.searchsorted(ycuts, ys + h)
    x0, x1 = np.searchsorted(xcuts, xs), np.searchsorted(xcuts, xs + w)
    for i in range(len(ys)):
        for j in range(len(xs)):
            hist = (integral[y1[i], x1[j]] - integral[y0[i], x1[j]]
                    - integral[y1[i], x0[j]] + integral[y0[i], x0[j]])
            out[i, j] = entropy_from_counts(hist)
    return out


def select_placement(
    gray: GrayBuffer,
    payload_bbox: tuple[int, int],
    tile_size: int = DEFAULT_TILE_SIZE,
    entropy_threshold: float = DEFAULT_ENTROPY_THRESHOLD,
) -> PlacementDecision:
    """Lowest-entropy window for a ``(w, h)`` payload, scanned at ``tile_size`` stride.

    Ties go to the smallest y, then the smallest x.
    """
    if tile_size < 1:
        raise ValueError(f"tile_size must be positive, got {tile_size}")
    w, h = payload_bbox
    if w < 1 or h < 1:
        raise PlacementError(f"payload bbox must be non-empty, got {payload_bbox}")
    if w > gray.width or h > gray.height:
        raise PlacementError(
            f"payload bbox {w}x{h} is larger than the {gray.width}x{gray.height} image"
        )
    ent = window_entropies(gray, payload_bbox, tile_size)
    best = ent.min()
    # row-major flat order is exactly (smallest y, then smallest x)
    idx = int(np.flatnonzero(ent <= best + _TIE_EPS)[0])
    i, j = divmod(idx, ent.shape[1])
    h_win = float(ent[i, j])
    return PlacementDecision((j * tile_size, i * tile_size), h_win, h_win <= entropy_threshold)
