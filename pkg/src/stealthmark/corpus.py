"""Seeded synthetic image corpora with ground-truth foreground alpha.

Each image is a background (flat colour, axis-aligned linear ramp, or
per-pixel uniform noise) with a few hard-edged disks/rectangles on top.
Every image draws from its own generator seeded by ``(seed, index)``, so
image *k* does not depend on how many images precede it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .entropy import shannon_entropy
from .imaging import ImageBuffer, PayloadMask, load_mask, load_png, luma_array, save_mask, save_png, to_luma

BACKGROUNDS = ("flat", "gradient", "noise")
MANIFEST = "manifest.json"

# Flat/gradient backgrounds stay inside this luma band so that offsets of up
# to 10 neither clip nor fall below the JND floor's visibility boundary.
_BASE_RANGE = (96, 200)
_RAMP_BASE_RANGE = (64, 150)
_RAMP_SPAN_RANGE = (1, 60)
_MIN_SHAPE_CONTRAST = 48
_BORDER_GAP = 16


@dataclass(frozen=True)
class CorpusSpec:
    count: int
    size: int = 768
    background: str = "flat"          # flat | gradient | noise | mixed
    shapes: tuple[int, int] = (1, 3)  # inclusive range of shapes per image
    shape_radius: tuple[int, int] = (40, 90)
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("corpus count must be >= 1")
        if self.background not in BACKGROUNDS + ("mixed",):
            raise ValueError(f"unknown background {self.background!r}")
        lo, hi = self.shape_radius
        if self.size < 2 * (hi + _BORDER_GAP) + 1 and self.shapes[1] > 0:
            raise ValueError(f"size {self.size} too small for shapes of radius up to {hi}")

    def background_for(self, index: int) -> str:
        if self.background == "mixed":
            return BACKGROUNDS[index % len(BACKGROUNDS)]
        return self.background


@dataclass(frozen=True, eq=False)
class CorpusImage:
    image_id: str
    image: ImageBuffer
    alpha: np.ndarray          # True where a foreground shape was drawn
    background: str
    entropy: float
    meta: dict = field(default_factory=dict)


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, index])


def _background(kind: str, size: int, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
    if kind == "flat":
        base = rng.integers(_BASE_RANGE[0], _BASE_RANGE[1] + 1, size=3)
        px = np.empty((size, size, 3), dtype=np.uint8)
        px[...] = base.astype(np.uint8)
        return px, {"base_rgb": base.tolist()}
    if kind == "gradient":
        base = rng.integers(_RAMP_BASE_RANGE[0], _RAMP_BASE_RANGE[1] + 1, size=3)
        span = int(rng.integers(_RAMP_SPAN_RANGE[0], _RAMP_SPAN_RANGE[1] + 1))
        vertical = bool(rng.integers(0, 2))
        # axis-aligned ramps keep the 9x9 median exact on the clean image
        ramp = np.floor(np.arange(size) * (span + 1) / size).astype(np.int32)
        grid = ramp[:, None] if vertical else ramp[None, :]
        grid = np.broadcast_to(grid, (size, size))
        px = (base[None, None, :] + grid[:, :, None]).clip(0, 255).astype(np.uint8)
        return px, {"base_rgb": base.tolist(), "span": span, "vertical": vertical}
    if kind == "noise":
        return rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8), {}
    raise ValueError(f"unknown background {kind!r}")


def _shape_colour(bg_luma: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        rgb = rng.integers(0, 256, size=3)
        if abs(int(luma_array(rgb.astype(np.uint8)[None, :])[0]) - bg_luma) >= _MIN_SHAPE_CONTRAST:
            return rgb.astype(np.uint8)


def generate_image(spec: CorpusSpec, index: int) -> CorpusImage:
    rng = _rng(spec.seed, index)
    kind = spec.background_for(index)
    px, meta = _background(kind, spec.size, rng)
    alpha = np.zeros((spec.size, spec.size), dtype=bool)
    yy, xx = np.mgrid[0:spec.size, 0:spec.size]
    bg_luma = int(np.median(luma_array(px)))

    shapes = []
    n_shapes = int(rng.integers(spec.shapes[0], spec.shapes[1] + 1))
    for _ in range(n_shapes):
        r = int(rng.integers(spec.shape_radius[0], spec.shape_radius[1] + 1))
        lo, hi = r + _BORDER_GAP, spec.size - r - _BORDER_GAP
        cx, cy = (int(v) for v in rng.integers(lo, hi, size=2))
        colour = _shape_colour(bg_luma, rng)
        if rng.integers(0, 2):
            region = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
            shapes.append({"kind": "disk", "center": [cx, cy], "radius": r})
        else:
            hw = int(rng.integers(r // 2, r + 1))
            region = (np.abs(xx - cx) <= r) & (np.abs(yy - cy) <= hw)
            shapes.append({"kind": "rect", "center": [cx, cy], "half_size": [r, hw]})
        shapes[-1]["rgb"] = colour.tolist()
        px[region] = colour
        alpha |= region

    image = ImageBuffer(px)
    meta = {"background": kind, **meta, "shapes": shapes}
    return CorpusImage(
        image_id=f"img{index:05d}",
        image=image,
        alpha=alpha,
        background=kind,
        entropy=shannon_entropy(to_luma(image)),
        meta=meta,
    )


def iter_corpus(spec: CorpusSpec):
    for i in range(spec.count):
        yield generate_image(spec, i)


def generate_corpus(spec: CorpusSpec) -> list[CorpusImage]:
    return list(iter_corpus(spec))


def synth_corpus(spec: CorpusSpec, out_dir) -> Path:
    """Write ``<id>.png``, ``<id>_alpha.png`` and ``manifest.json`` to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for item in iter_corpus(spec):
        save_png(item.image, out / f"{item.image_id}.png")
        save_mask(PayloadMask(item.alpha), out / f"{item.image_id}_alpha.png")
        entries.append({
            "image_id": item.image_id,
            "file": f"{item.image_id}.png",
            "alpha": f"{item.image_id}_alpha.png",
            "entropy": round(item.entropy, 9),
            **item.meta,
        })
    manifest = {"spec": _spec_dict(spec), "images": entries}
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def _spec_dict(spec: CorpusSpec) -> dict:
    d = asdict(spec)
    d["shapes"] = list(spec.shapes)
    d["shape_radius"] = list(spec.shape_radius)
    return d


def load_corpus(corpus_dir) -> list[CorpusImage]:
    """Read a corpus written by :func:`synth_corpus`."""
    root = Path(corpus_dir)
    manifest_path = root / MANIFEST
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{root} has no {MANIFEST}")
    manifest = json.loads(manifest_path.read_text())
    items = []
    for entry in manifest["images"]:
        image = load_png(root / entry["file"])
        alpha = load_mask(root / entry["alpha"]).bits
        meta = {k: v for k, v in entry.items() if k not in ("image_id", "file", "alpha", "entropy")}
        items.append(CorpusImage(
            image_id=entry["image_id"],
            image=image,
            alpha=np.array(alpha),
            background=entry["background"],
            entropy=shannon_entropy(to_luma(image)),
            meta=meta,
        ))
    return items


def manifest_ids(corpus_dir) -> set[str]:
    manifest = json.loads((Path(corpus_dir) / MANIFEST).read_text())
    return {e["image_id"] for e in manifest["images"]}
