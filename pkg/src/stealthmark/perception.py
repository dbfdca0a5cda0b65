"""Human-visibility model for injected payloads.

Spatial-domain JND in the Chou & Li style: each pixel's visibility threshold
is the larger of a luminance-adaptation term (driven by the 5x5 mean luma)
and a texture-masking term (proportional to the strongest directional
gradient in a 5x5 neighbourhood).
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .embedder import InjectionSpec, embed_payload
from .errors import DimensionError
from .imaging import GrayBuffer, ImageBuffer, PayloadMask, luma_array, to_luma


@dataclass(frozen=True)
class JndConfig:
    t_dark: float = 17.0        # threshold at mean luma 0
    t_mid: float = 3.0          # floor, reached at mean luma == mid_luma
    mid_luma: float = 128.0
    bright_slope: float = 3.0 / 128.0
    masking_slope: float = 0.12
    window_radius: int = 2
    invisible_cutoff: float = 0.95
    visible_cutoff: float = 0.50

    def __post_init__(self):
        if self.t_dark < 0 or self.t_mid < 0 or self.bright_slope < 0 or self.masking_slope < 0:
            raise ValueError("JND parameters must be non-negative")
        if not 0.0 <= self.visible_cutoff < self.invisible_cutoff <= 1.0:
            raise ValueError("need 0 <= visible_cutoff < invisible_cutoff <= 1")


DEFAULT_JND = JndConfig()

# Directional high-pass operators of Chou & Li (1995), normalised by 1/16.
_GRADIENT_KERNELS = tuple(
    np.array(k, dtype=np.float64) / 16.0
    for k in (
        [[0, 0, 0, 0, 0], [1, 3, 8, 3, 1], [0, 0, 0, 0, 0], [-1, -3, -8, -3, -1], [0, 0, 0, 0, 0]],
        [[0, 0, 1, 0, 0], [0, 8, 3, 0, 0], [1, 3, 0, -3, -1], [0, 0, -3, -8, 0], [0, 0, -1, 0, 0]],
        [[0, 0, 1, 0, 0], [0, 0, 3, 8, 0], [-1, -3, 0, 3, 1], [0, -8, -3, 0, 0], [0, 0, -1, 0, 0]],
        [[0, 1, 0, -1, 0], [0, 3, 0, -3, 0], [0, 8, 0, -8, 0], [0, 3, 0, -3, 0], [0, 1, 0, -1, 0]],
    )
)


def luminance_threshold(mean_luma, cfg: JndConfig = DEFAULT_JND):
    """Luminance-adaptation threshold as a function of local mean luma."""
    bg = np.asarray(mean_luma, dtype=np.float64)
    dark = (cfg.t_dark - cfg.t_mid) * (1.0 - np.sqrt(np.clip(bg, 0, None) / cfg.mid_luma)) + cfg.t_mid
    bright = cfg.bright_slope * (bg - cfg.mid_luma) + cfg.t_mid
    return np.where(bg <= cfg.mid_luma, dark, bright)


def max_gradient(luma: np.ndarray) -> np.ndarray:
    f = luma.astype(np.float64)
    grads = [np.abs(ndimage.correlate(f, k, mode="nearest")) for k in _GRADIENT_KERNELS]
    return np.maximum.reduce(grads)


@dataclass(frozen=True, eq=False)
class JndMap:
    thresholds: np.ndarray  # (height, width) float64, >= 0

    @property
    def width(self) -> int:
        return self.thresholds.shape[1]

    @property
    def height(self) -> int:
        return self.thresholds.shape[0]


def jnd_map(gray: GrayBuffer, cfg: JndConfig = DEFAULT_JND) -> JndMap:
    luma = gray.pixels.astype(np.float64)
    size = 2 * cfg.window_radius + 1
    mean = ndimage.uniform_filter(luma, size=size, mode="nearest")
    lum = luminance_threshold(mean, cfg)
    masking = cfg.masking_slope * max_gradient(gray.pixels)
    thr = np.maximum(np.maximum(lum, masking), 0.0)
    thr.flags.writeable = False
    return JndMap(thr)


class Verdict(str, enum.Enum):
    INVISIBLE = "invisible"
    BORDERLINE = "borderline"
    VISIBLE = "visible"


def verdict_for(ratio: float, cfg: JndConfig = DEFAULT_JND) -> Verdict:
    if ratio >= cfg.invisible_cutoff:
        return Verdict.INVISIBLE
    if ratio <= cfg.visible_cutoff:
        return Verdict.VISIBLE
    return Verdict.BORDERLINE


@dataclass(frozen=True)
class VisibilityReport:
    jnd_ratio: float
    verdict: Verdict
    pixels_evaluated: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def jnd_ratio(
    clean: ImageBuffer,
    injected: ImageBuffer,
    mask: PayloadMask,
    cfg: JndConfig = DEFAULT_JND,
    jnd: JndMap | None = None,
) -> VisibilityReport:
    """Fraction of payload pixels whose luma change stays below the clean
    image's JND threshold.

    ``mask`` must be image-sized (a placed payload). ``jnd`` may be passed
    to reuse a threshold map already computed for ``clean``.
    """
    if (clean.width, clean.height) != (injected.width, injected.height):
        raise DimensionError("clean and injected images differ in size")
    if (mask.width, mask.height) != (clean.width, clean.height):
        raise DimensionError(
            f"mask is {mask.width}x{mask.height}, image is {clean.width}x{clean.height}"
        )
    n = mask.count
    if n == 0:
        raise ValueError("JND ratio is undefined for an empty mask")
    if jnd is None:
        jnd = jnd_map(to_luma(clean), cfg)
    x, y, w, h = mask.bbox
    box = (slice(y, y + h), slice(x, x + w))
    sel = mask.bits[box]
    delta = np.abs(
        luma_array(injected.pixels[box][sel]).astype(np.int16)
        - luma_array(clean.pixels[box][sel]).astype(np.int16)
    )
    below = int(np.count_nonzero(delta < jnd.thresholds[box][sel]))
    ratio = below / n
    return VisibilityReport(ratio, verdict_for(ratio, cfg), n)


def classify_strength_sweep(
    clean: ImageBuffer,
    mask: PayloadMask,
    strengths,
    cfg: JndConfig = DEFAULT_JND,
    sign: int = 1,
) -> list[VisibilityReport]:
    """Embed ``mask`` (image-sized, already placed) at each strength and
    report its visibility."""
    strengths = list(strengths)
    if not strengths:
        raise ValueError("strengths must be non-empty")
    if any(s < 0 for s in strengths):
        raise ValueError("strengths must be >= 0")
    jnd = jnd_map(to_luma(clean), cfg)
    x, y, _, _ = mask.bbox
    reports = []
    for s in strengths:
        injected, _ = embed_payload(clean, InjectionSpec(mask, (x, y), strength=s, sign=sign))
        reports.append(jnd_ratio(clean, injected, mask, cfg, jnd=jnd))
    return reports
