"""Attacker side: stamp a logo-shaped constant RGB offset into an image, and
steer a text prompt toward sparse, flat-background compositions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .entropy import PlacementDecision
from .errors import DimensionError, PlacementError
from .imaging import ImageBuffer, PayloadMask

DEFAULT_STRENGTH = 2
STUDIED_STRENGTHS = (1, 2, 3, 4, 5, 10)

AUGMENTATION_SUFFIX = (
    "minimalist composition, objects in the corner of the image, "
    "vast empty space, no clutter in the middle, solid background"
)


@dataclass(frozen=True)
class InjectionSpec:
    """How to inject a payload.

    ``placement`` is either a :class:`PlacementDecision` (usually from
    ``select_placement``) or an explicit ``(x, y)`` origin for the payload's
    bounding box. ``mask`` is the already-scaled payload; only its bounding
    box contents are used.
    """

    mask: PayloadMask
    placement: PlacementDecision | tuple[int, int]
    strength: int = DEFAULT_STRENGTH
    sign: int = 1
    require_feasible: bool = False

    def __post_init__(self):
        if int(self.strength) != self.strength or self.strength < 0:
            raise ValueError(f"strength must be a non-negative integer, got {self.strength}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if self.mask.is_empty:
            raise ValueError("injection mask is empty")

    @property
    def origin(self) -> tuple[int, int]:
        if isinstance(self.placement, PlacementDecision):
            return self.placement.origin
        x, y = self.placement
        return int(x), int(y)


@dataclass(frozen=True)
class InjectionRecord:
    spec: InjectionSpec
    clipped_pixels: int
    origin: tuple[int, int]
    payload_id: str | None

    def to_dict(self) -> dict:
        x, y, w, h = self.spec.mask.bbox
        return {
            "payload_id": self.payload_id,
            "origin": list(self.origin),
            "strength": int(self.spec.strength),
            "sign": int(self.spec.sign),
            "clipped_pixels": int(self.clipped_pixels),
            "bbox_size": [w, h],
        }

    def write_sidecar(self, png_path) -> Path:
        """Write the record as ``<name>.json`` next to ``png_path``."""
        path = Path(png_path).with_suffix(".json")
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def place(spec: InjectionSpec, width: int, height: int) -> PayloadMask:
    """The injection mask positioned on a ``width`` x ``height`` canvas."""
    try:
        return spec.mask.placed(spec.origin, width, height)
    except DimensionError as exc:
        raise PlacementError(str(exc)) from exc


def embed_payload(image: ImageBuffer, spec: InjectionSpec) -> tuple[ImageBuffer, InjectionRecord]:
    """Add ``sign * strength`` to every channel of every payload pixel,
    saturating at 0 and 255. Pixels off the mask are left untouched."""
    if spec.require_feasible:
        if not isinstance(spec.placement, PlacementDecision):
            raise PlacementError("feasibility required but placement is an explicit origin")
        if not spec.placement.feasible:
            raise PlacementError(
                f"placement at {spec.placement.origin} has window entropy "
                f"{spec.placement.window_entropy:.3f} bits, above the feasibility threshold"
            )
    placed = place(spec, image.width, image.height)
    x, y, w, h = placed.bbox
    sel = placed.bits[y:y + h, x:x + w]

    out_px = image.pixels.copy()
    window = out_px[y:y + h, x:x + w]
    shifted = window[sel].astype(np.int16) + spec.sign * int(spec.strength)
    clipped = np.clip(shifted, 0, 255)
    clipped_pixels = int(np.count_nonzero((shifted != clipped).any(axis=1)))
    window[sel] = clipped.astype(np.uint8)
    out = ImageBuffer(out_px)
    return out, InjectionRecord(spec, clipped_pixels, spec.origin, spec.mask.payload_id)


def augment_prompt(prompt: str) -> str:
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")
    if prompt.rstrip().endswith(AUGMENTATION_SUFFIX):
        return prompt
    return f"{prompt}, {AUGMENTATION_SUFFIX}"


def residual_of(clean: ImageBuffer, injected: ImageBuffer) -> PayloadMask:
    """Mask of pixels where any channel differs between the two images."""
    if (clean.width, clean.height) != (injected.width, injected.height):
        raise DimensionError(
            f"size mismatch: {clean.width}x{clean.height} vs {injected.width}x{injected.height}"
        )
    return PayloadMask((clean.pixels != injected.pixels).any(axis=2))
