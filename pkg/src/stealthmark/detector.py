"""Machine-side payload recovery and identification.

Two recovery routes: ``detect_paired`` diffs against the clean reference,
``detect_blind`` works from the suspect image alone by subtracting a median
background estimate and keeping the faint residual band.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .embedder import residual_of
from .imaging import (
    GrayBuffer,
    ImageBuffer,
    PayloadMask,
    median_filter,
    resample_nearest,
    to_luma,
)
from .logos import LOGO_IDS, render_logo

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _opening_element(size: int) -> np.ndarray:
    # Cross (plus) shape: a full square would erase every stroke thin enough
    # to slip past the median background estimate on diagonals.
    se = np.zeros((size, size), dtype=bool)
    se[size // 2, :] = True
    se[:, size // 2] = True
    return se


@dataclass(frozen=True)
class DetectorConfig:
    min_area: int = 64
    median_radius: int = 4
    band_low: int = 1
    band_high: int = 12
    opening_size: int = 3
    iou_threshold: float = 0.5
    # Ignore residuals whose median window spans more than this many luma
    # levels; None disables the gate.
    max_local_range: int | None = 12

    def __post_init__(self):
        if not 0 < self.band_low <= self.band_high:
            raise ValueError("need 0 < band_low <= band_high")
        if self.median_radius < 1 or self.opening_size < 1 or self.min_area < 1:
            raise ValueError("median_radius, opening_size and min_area must be >= 1")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must lie in [0, 1], got {self.iou_threshold}")


DEFAULT_DETECTOR = DetectorConfig()


class PayloadLibrary:
    """Ordered, id-unique collection of canonical payload masks."""

    def __init__(self, entries):
        entries = [(pid, mask.cropped()) for pid, mask in entries]
        ids = [pid for pid, _ in entries]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate payload ids in library: {ids}")
        for pid, mask in entries:
            if mask.is_empty:
                raise ValueError(f"library mask {pid!r} is empty")
        self.entries: tuple[tuple[str, PayloadMask], ...] = tuple(entries)

    @classmethod
    def default(cls, width: int | None = None) -> "PayloadLibrary":
        if width is None:
            return cls((pid, render_logo(pid)) for pid in LOGO_IDS)
        return cls((pid, render_logo(pid, width)) for pid in LOGO_IDS)

    def __getitem__(self, payload_id: str) -> PayloadMask:
        for pid, mask in self.entries:
            if pid == payload_id:
                return mask
        raise KeyError(payload_id)

    def __contains__(self, payload_id) -> bool:
        return any(pid == payload_id for pid, _ in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.entries)


class Method(str, enum.Enum):
    PAIRED = "paired"
    BLIND = "blind"


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    recovered: PayloadMask
    best_match: str | None
    match_score: float | None
    method: Method

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "best_match": self.best_match,
            "match_score": self.match_score,
            "method": self.method.value,
            "recovered_pixels": self.recovered.count,
            "recovered_bbox": list(self.recovered.bbox),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def match_scores(recovered: PayloadMask, library: PayloadLibrary) -> list[tuple[str, float]]:
    """IoU of the recovered shape against every library entry, each entry
    resampled onto the recovered bounding box."""
    if recovered.is_empty:
        raise ValueError("cannot match an empty recovered mask")
    crop = recovered.cropped().bits
    h, w = crop.shape
    return [(pid, iou(crop, resample_nearest(mask.bits, w, h))) for pid, mask in library]


def match_payload(
    recovered: PayloadMask,
    library: PayloadLibrary,
    iou_threshold: float = DEFAULT_DETECTOR.iou_threshold,
) -> tuple[str | None, float]:
    """Best-matching library id and its IoU; id is None below the threshold.

    Ties go to the entry that comes first in the library.
    """
    scores = match_scores(recovered, library)
    best_id, best = scores[0]
    for pid, score in scores[1:]:
        if score > best:
            best_id, best = pid, score
    if best < iou_threshold:
        return None, best
    return best_id, best


def _report(recovered, detected, library, cfg, method) -> DetectionReport:
    best_id = score = None
    if detected:
        best_id, s = match_payload(recovered, library, cfg.iou_threshold)
        if best_id is not None:
            score = s
    return DetectionReport(detected, recovered, best_id, score, method)


def detect_paired(
    clean: ImageBuffer,
    suspect: ImageBuffer,
    library: PayloadLibrary,
    cfg: DetectorConfig = DEFAULT_DETECTOR,
) -> DetectionReport:
    recovered = residual_of(clean, suspect)
    detected = recovered.count >= cfg.min_area
    return _report(recovered, detected, library, cfg, Method.PAIRED)


def blind_residual(gray: GrayBuffer, cfg: DetectorConfig = DEFAULT_DETECTOR) -> np.ndarray:
    """Faint-residual mask after background subtraction and opening, before
    the component-area gate.

    Near a strong edge the median sits at a skewed rank of the background
    values, so any +-1 grain there turns into a strip of residual; the
    local-range gate keeps the search to windows that are smooth as a whole.
    """
    luma = gray.pixels.astype(np.int16)
    background = median_filter(gray, cfg.median_radius).pixels.astype(np.int16)
    diff = np.abs(luma - background)
    band = (diff >= cfg.band_low) & (diff <= cfg.band_high)
    if cfg.max_local_range is not None:
        size = 2 * cfg.median_radius + 1
        hi = ndimage.maximum_filter(gray.pixels, size=size, mode="nearest").astype(np.int16)
        lo = ndimage.minimum_filter(gray.pixels, size=size, mode="nearest").astype(np.int16)
        band &= (hi - lo) <= cfg.max_local_range
    return ndimage.binary_opening(band, structure=_opening_element(cfg.opening_size))


def surviving_components(bits: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components smaller than ``min_area`` pixels."""
    labels, n = ndimage.label(bits, structure=_EIGHT_CONNECTED)
    if n == 0:
        return np.zeros_like(bits, dtype=bool)
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def detect_blind(
    suspect: ImageBuffer,
    library: PayloadLibrary,
    cfg: DetectorConfig = DEFAULT_DETECTOR,
) -> DetectionReport:
    residual = blind_residual(to_luma(suspect), cfg)
    kept = surviving_components(residual, cfg.min_area)
    recovered = PayloadMask(kept)
    return _report(recovered, not recovered.is_empty, library, cfg, Method.BLIND)
