"""Raster and mask types, PNG I/O and the deterministic filters shared by
every other module.

All rasters are numpy arrays in row-major ``(height, width[, 3])`` order.
Buffers are immutable once constructed: the wrapped array is flagged
read-only, so values can be shared between threads freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DimensionError, ImageFormatError

BBox = tuple[int, int, int, int]  # x, y, width, height
EMPTY_BBOX: BBox = (0, 0, 0, 0)

MASK_THRESHOLD = 127
MIN_PAYLOAD_WIDTH = 8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """8-bit RGB raster. ``pixels`` has shape (height, width, 3), dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise DimensionError(f"ImageBuffer needs uint8 samples, got {px.dtype}")
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionError(f"ImageBuffer needs shape (h, w, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionError("ImageBuffer must be at least 1x1")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "ImageBuffer":
        if len(data) != width * height * 3:
            raise DimensionError(
                f"expected {width * height * 3} bytes for {width}x{height} RGB, got {len(data)}"
            )
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy())

    @classmethod
    def filled(cls, width: int, height: int, rgb) -> "ImageBuffer":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[...] = np.asarray(rgb, dtype=np.uint8)
        return cls(px)

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None

    def __repr__(self):
        return f"ImageBuffer({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class GrayBuffer:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8 or px.ndim != 2:
            raise DimensionError(f"GrayBuffer needs a 2-D uint8 array, got {px.dtype} {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionError("GrayBuffer must be at least 1x1")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, GrayBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None

    def __repr__(self):
        return f"GrayBuffer({self.width}x{self.height})"


def tight_bbox(bits: np.ndarray) -> BBox:
    """Smallest (x, y, w, h) rectangle containing every true pixel."""
    rows = np.flatnonzero(bits.any(axis=1))
    if rows.size == 0:
        return EMPTY_BBOX
    cols = np.flatnonzero(bits.any(axis=0))
    return (int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


@dataclass(frozen=True, eq=False)
class PayloadMask:
    """Binary payload raster. ``bbox`` is derived from ``bits`` and always tight."""

    bits: np.ndarray
    payload_id: str | None = None
    bbox: BBox = field(init=False)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise DimensionError(f"PayloadMask needs a non-empty 2-D array, got {bits.shape}")
        bits = _frozen(bits.astype(bool, copy=False))
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "bbox", tight_bbox(bits))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def is_empty(self) -> bool:
        return self.bbox == EMPTY_BBOX

    def cropped(self) -> "PayloadMask":
        """The mask cut down to its bounding box."""
        if self.is_empty:
            return self
        x, y, w, h = self.bbox
        return PayloadMask(self.bits[y:y + h, x:x + w], self.payload_id)

    def placed(self, origin: tuple[int, int], width: int, height: int) -> "PayloadMask":
        """Paste the cropped payload onto an empty ``width`` x ``height`` canvas
        with its bounding box's top-left corner at ``origin``."""
        crop = self.cropped()
        ox, oy = origin
        ch, cw = crop.bits.shape
        if ox < 0 or oy < 0 or ox + cw > width or oy + ch > height:
            raise DimensionError(
                f"payload bbox {cw}x{ch} at {origin} does not fit in {width}x{height}"
            )
        canvas = np.zeros((height, width), dtype=bool)
        canvas[oy:oy + ch, ox:ox + cw] = crop.bits
        return PayloadMask(canvas, self.payload_id)

    def __eq__(self, other):
        if not isinstance(other, PayloadMask):
            return NotImplemented
        return self.payload_id == other.payload_id and np.array_equal(self.bits, other.bits)

    __hash__ = None

    def __repr__(self):
        return f"PayloadMask({self.width}x{self.height}, id={self.payload_id!r}, bbox={self.bbox})"


# --------------------------------------------------------------------------- I/O


def _open_png(path) -> Image.Image:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        img = Image.open(path)
        img.load()
    except (OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    if img.format != "PNG":
        raise ImageFormatError(f"{path} is {img.format}, only PNG is supported")
    return img


_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _check_depth(img: Image.Image, path) -> None:
    # Pillow silently widens 1/2/4-bit gray to "L", so read IHDR directly:
    # signature (8) + chunk length (4) + b"IHDR" (4) + width, height (8) -> depth
    with open(path, "rb") as fh:
        head = fh.read(25)
    if len(head) < 25 or not head.startswith(_PNG_SIGNATURE) or head[12:16] != b"IHDR":
        raise ImageFormatError(f"{path}: missing PNG header")
    if head[24] != 8:
        raise ImageFormatError(f"{path}: bit depth {head[24]} is not supported (need 8)")
    if img.mode not in ("L", "LA", "RGB", "RGBA", "P", "PA"):
        raise ImageFormatError(f"{path}: unsupported PNG mode {img.mode!r}")


def load_png(path) -> ImageBuffer:
    """Decode an 8-bit PNG into an RGB buffer.

    Gray is replicated to three channels and alpha is dropped without
    compositing, so the stored sample values come through bit-exact.
    """
    img = _open_png(path)
    _check_depth(img, path)
    if img.mode in ("L", "LA"):
        gray = np.asarray(img.getchannel(0), dtype=np.uint8)
        return ImageBuffer(np.repeat(gray[:, :, None], 3, axis=2))
    if img.mode in ("P", "PA"):
        img = img.convert("RGBA")
    rgb = np.asarray(img, dtype=np.uint8)[:, :, :3]
    return ImageBuffer(rgb.copy())


def save_png(image: ImageBuffer, path) -> None:
    path = Path(path)
    try:
        Image.fromarray(np.asarray(image.pixels), mode="RGB").save(path, format="PNG")
    except OSError:
        raise
    except ValueError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def load_mask(path, payload_id: str | None = None) -> PayloadMask:
    """Read a grayscale PNG as a payload mask (value > 127 is payload)."""
    img = _open_png(path)
    _check_depth(img, path)
    if img.mode not in ("L", "LA"):
        raise ImageFormatError(f"{path}: mask must be 8-bit grayscale, got mode {img.mode!r}")
    gray = np.asarray(img.getchannel(0), dtype=np.uint8)
    if payload_id is None:
        payload_id = Path(path).stem
    return PayloadMask(gray > MASK_THRESHOLD, payload_id)


def save_mask(mask: PayloadMask, path) -> None:
    data = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path), format="PNG")


def save_gray(gray: GrayBuffer, path) -> None:
    Image.fromarray(np.asarray(gray.pixels), mode="L").save(Path(path), format="PNG")


# ----------------------------------------------------------------------- filters


def luma_array(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma with round-half-up, computed in exact integer arithmetic."""
    r = rgb[..., 0].astype(np.int32)
    g = rgb[..., 1].astype(np.int32)
    b = rgb[..., 2].astype(np.int32)
    y = (299 * r + 587 * g + 114 * b + 500) // 1000
    return np.clip(y, 0, 255).astype(np.uint8)


def to_luma(image: ImageBuffer) -> GrayBuffer:
    return GrayBuffer(luma_array(image.pixels))


def median_filter(gray: GrayBuffer, radius: int) -> GrayBuffer:
    """Median over a (2r+1)^2 window with clamp-to-edge borders.

    OpenCV's medianBlur replicates border pixels, which is exactly the
    clamped window; it only accepts odd kernels up to 255 on uint8 input.
    """
    if radius < 1:
        raise ValueError(f"median radius must be >= 1, got {radius}")
    k = 2 * radius + 1
    src = np.asarray(gray.pixels)
    if k <= 255:
        return GrayBuffer(cv2.medianBlur(src, k))
    return GrayBuffer(ndimage.median_filter(src, size=k, mode="nearest"))


def _nearest_indices(n_src: int, n_dst: int) -> np.ndarray:
    # Endpoint-aligned nearest neighbour: first and last source samples are
    # always kept, so a tight bbox stays tight after resampling.
    if n_dst == 1:
        return np.zeros(1, dtype=np.intp)
    pos = np.arange(n_dst) * (n_src - 1) / (n_dst - 1)
    return np.floor(pos + 0.5).astype(np.intp)


def resample_nearest(bits: np.ndarray, width: int, height: int) -> np.ndarray:
    rows = _nearest_indices(bits.shape[0], height)
    cols = _nearest_indices(bits.shape[1], width)
    return bits[np.ix_(rows, cols)]


def scale_mask(mask: PayloadMask, target_bbox_width: int) -> PayloadMask:
    """Rescale a payload so its bounding box is ``target_bbox_width`` wide.

    The result is cropped to the payload's bounding box; height follows the
    original aspect ratio.
    """
    if target_bbox_width < MIN_PAYLOAD_WIDTH:
        raise ValueError(
            f"target width {target_bbox_width} is below the {MIN_PAYLOAD_WIDTH}px minimum payload width"
        )
    if mask.is_empty:
        raise ValueError("cannot scale an empty mask")
    crop = mask.cropped()
    _, _, w, h = crop.bbox
    if w == target_bbox_width:
        return crop
    new_h = max(1, int(np.floor(h * target_bbox_width / w + 0.5)))
    return PayloadMask(resample_nearest(crop.bits, target_bbox_width, new_h), mask.payload_id)

