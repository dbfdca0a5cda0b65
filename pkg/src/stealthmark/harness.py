"""Corpus-scale experiments: strength, entropy, size and mitigation sweeps.

Each sweep evaluates independent (image, payload, strength, width) cells
and aggregates them into rate tables. Aggregation is keyed and sorted, so
output is byte-identical for any evaluation order or worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .corpus import CorpusImage
from .detector import DEFAULT_DETECTOR, DetectorConfig, PayloadLibrary, detect_blind, detect_paired, iou
from .embedder import InjectionSpec, embed_payload, place
from .entropy import DEFAULT_ENTROPY_THRESHOLD, DEFAULT_TILE_SIZE, select_placement
from .imaging import PayloadMask, scale_mask, to_luma
from .mitigation import DEFAULT_SCRUB, ScrubConfig, scrub
from .perception import DEFAULT_JND, JndConfig, Verdict, jnd_map, jnd_ratio

DEFAULT_STRENGTHS = (1, 2, 5, 10)
DEFAULT_WIDTHS = (256, 128, 64, 32)
PLACEMENT_MARGIN = 32
ENTROPY_BUCKETS = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 8))

STRENGTH_COLUMNS = ["payload_id", "strength", "cells", "invisible_fraction", "blind_detection_rate"]
ENTROPY_COLUMNS = ["bucket_low", "bucket_high", "cells", "blind_detection_rate"]
SIZE_COLUMNS = ["payload_id", "width", "cells", "blind_detection_rate"]
MITIGATION_COLUMNS = [
    "payload_id", "strength", "cells", "mitigation_rate", "mean_foreground_mad", "mean_background_iou",
]
RECORD_COLUMNS = [
    "image_id", "payload_id", "strength", "width", "background_entropy", "jnd_ratio",
    "verdict", "blind_detected", "paired_score", "scrubbed_detected", "foreground_mad", "background_iou",
]


@dataclass(frozen=True)
class HarnessConfig:
    tile_size: int = DEFAULT_TILE_SIZE
    entropy_threshold: float = DEFAULT_ENTROPY_THRESHOLD
    margin: int = PLACEMENT_MARGIN
    sign: int = 1
    jnd: JndConfig = DEFAULT_JND
    detector: DetectorConfig = DEFAULT_DETECTOR
    scrub: ScrubConfig = DEFAULT_SCRUB
    workers: int = 1


@dataclass
class ExperimentRecord:
    image_id: str
    payload_id: str
    strength: int
    width: int
    background_entropy: float
    jnd_ratio: float | None = None
    verdict: str | None = None
    blind_detected: bool | None = None
    paired_score: float | None = None
    scrubbed_detected: bool | None = None
    foreground_mad: float | None = None
    background_iou: float | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in RECORD_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def place_payload(gray, mask: PayloadMask, cfg: HarnessConfig):
    """Lowest-entropy placement, keeping ``cfg.margin`` pixels of clearance
    around the payload when the image is large enough."""
    _, _, w, h = mask.bbox
    m = cfg.margin
    if w + 2 * m <= gray.width and h + 2 * m <= gray.height:
        dec = select_placement(gray, (w + 2 * m, h + 2 * m), cfg.tile_size, cfg.entropy_threshold)
        return (dec.origin[0] + m, dec.origin[1] + m), dec
    dec = select_placement(gray, (w, h), cfg.tile_size, cfg.entropy_threshold)
    return dec.origin, dec


def evaluate_image(
    item: CorpusImage,
    library: PayloadLibrary,
    strengths,
    widths=(None,),
    *,
    cfg: HarnessConfig = HarnessConfig(),
    visibility: bool = True,
    blind: bool = True,
    paired: bool = False,
    mitigate: bool = False,
) -> list[ExperimentRecord]:
    """All cells for one corpus image, in (payload, width, strength) order."""
    clean = item.image
    gray = to_luma(clean)
    jnd = jnd_map(gray, cfg.jnd) if visibility else None
    records = []
    for pid, canonical in library:
        for width in widths:
            mask = canonical if width is None else scale_mask(canonical, width)
            origin, _ = place_payload(gray, mask, cfg)
            for s in strengths:
                spec = InjectionSpec(mask, origin, strength=s, sign=cfg.sign)
                injected, _ = embed_payload(clean, spec)
                rec = ExperimentRecord(item.image_id, pid, int(s), width or mask.bbox[2], item.entropy)
                if visibility:
                    rep = jnd_ratio(clean, injected, place(spec, clean.width, clean.height), cfg.jnd, jnd=jnd)
                    rec.jnd_ratio, rec.verdict = rep.jnd_ratio, rep.verdict.value
                if blind:
                    rep = detect_blind(injected, library, cfg.detector)
                    rec.blind_detected = rep.detected and rep.best_match == pid
                if paired:
                    rep = detect_paired(clean, injected, library, cfg.detector)
                    rec.paired_score = rep.match_score if rep.best_match == pid else 0.0
                if mitigate:
                    rep = scrub(injected, library, cfg.scrub, cfg.detector)
                    rec.scrubbed_detected = not rep.payload_destroyed
                    rec.foreground_mad = rep.foreground_mad
                    rec.background_iou = iou(rep.background.bits, ~item.alpha)
                records.append(rec)
    return records


def evaluate_corpus(corpus, library, strengths, widths=(None,), *, cfg=HarnessConfig(), **flags):
    corpus = list(corpus)
    job = partial(evaluate_image, library=library, strengths=tuple(strengths), widths=tuple(widths),
                  cfg=cfg, **flags)
    if cfg.workers > 1 and len(corpus) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(job, corpus))
    else:
        chunks = [job(item) for item in corpus]
    return [rec for chunk in chunks for rec in chunk]


# --------------------------------------------------------------- aggregation


def _rate(flags) -> float:
    flags = list(flags)
    return sum(bool(f) for f in flags) / len(flags) if flags else float("nan")


def _group(records, key):
    groups: dict = {}
    for r in records:
        groups.setdefault(key(r), []).append(r)
    return dict(sorted(groups.items()))


def _check_strengths(strengths):
    strengths = list(strengths)
    if not strengths:
        raise ValueError("strengths must be non-empty")
    if any(s < 0 or int(s) != s for s in strengths):
        raise ValueError(f"strengths must be non-negative integers, got {strengths}")
    return strengths


def strength_table(records) -> list[list]:
    rows = []
    for (pid, s), cell in _group(records, lambda r: (r.payload_id, r.strength)).items():
        invisible = _rate(r.verdict == Verdict.INVISIBLE.value for r in cell)
        rows.append([pid, s, len(cell), invisible, _rate(r.blind_detected for r in cell)])
    return rows


def entropy_bucket(h: float) -> tuple[int, int]:
    """The 1-bit bucket holding ``h``; the top bucket [6, 8] is closed."""
    for lo, hi in ENTROPY_BUCKETS[:-1]:
        if lo <= h < hi:
            return lo, hi
    lo, hi = ENTROPY_BUCKETS[-1]
    if lo <= h <= hi:
        return lo, hi
    raise ValueError(f"entropy {h} outside [0, 8]")


def entropy_table(records) -> list[list]:
    rows = []
    for (lo, hi), cell in _group(records, lambda r: entropy_bucket(r.background_entropy)).items():
        rows.append([lo, hi, len(cell), _rate(r.blind_detected for r in cell)])
    return rows


def size_table(records) -> list[list]:
    rows = []
    # widths descend so the table reads from large to small logos
    for (pid, neg_w), cell in _group(records, lambda r: (r.payload_id, -r.width)).items():
        rows.append([pid, -neg_w, len(cell), _rate(r.blind_detected for r in cell)])
    return rows


def mitigation_table(records) -> list[list]:
    rows = []
    for (pid, s), cell in _group(records, lambda r: (r.payload_id, r.strength)).items():
        rows.append([
            pid, s, len(cell),
            _rate(not r.scrubbed_detected for r in cell),
            float(np.mean([r.foreground_mad for r in cell])),
            float(np.mean([r.background_iou for r in cell])),
        ])
    return rows


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_csv(records) -> str:
    return to_csv(RECORD_COLUMNS, [[getattr(r, c) for c in RECORD_COLUMNS] for r in records])


def _write(text: str, out) -> str:
    if out is not None:
        Path(out).write_text(text)
    return text


# -------------------------------------------------------------------- sweeps


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[list]
    records: list[ExperimentRecord]

    @property
    def csv(self) -> str:
        return to_csv(self.columns, self.rows)

    def write(self, out, records_out=None) -> None:
        _write(self.csv, out)
        if records_out is not None:
            _write(records_csv(self.records), records_out)


def run_strength_sweep(corpus, library, strengths=DEFAULT_STRENGTHS, *, cfg=HarnessConfig()) -> SweepResult:
    """Per (payload, strength): JND invisibility fraction and blind-detection rate."""
    strengths = _check_strengths(strengths)
    recs = evaluate_corpus(corpus, library, strengths, cfg=cfg, visibility=True, blind=True)
    return SweepResult(STRENGTH_COLUMNS, strength_table(recs), recs)


def run_entropy_sweep(corpus, library, strength: int = 2, *, cfg=HarnessConfig()) -> SweepResult:
    """Blind-detection rate bucketed by the clean image's global entropy (1-bit buckets)."""
    recs = evaluate_corpus(corpus, library, [strength], cfg=cfg, visibility=False, blind=True)
    return SweepResult(ENTROPY_COLUMNS, entropy_table(recs), recs)


def run_size_sweep(corpus, library, widths=DEFAULT_WIDTHS, strength: int = 2, *, cfg=HarnessConfig()) -> SweepResult:
    widths = list(widths)
    if not widths:
        raise ValueError("widths must be non-empty")
    for w in widths:
        if w < 8:
            raise ValueError(f"payload width {w} is below the 8px minimum")
    recs = evaluate_corpus(corpus, library, [strength], widths, cfg=cfg, visibility=False, blind=True)
    return SweepResult(SIZE_COLUMNS, size_table(recs), recs)


def run_mitigation_eval(corpus, library, strengths=(2,), *, cfg=HarnessConfig()) -> SweepResult:
    """Per (payload, strength): scrub success rate, foreground change and
    background-segmentation IoU against ground-truth alpha."""
    strengths = _check_strengths(strengths)
    recs = evaluate_corpus(corpus, library, strengths, cfg=cfg, visibility=False, blind=False, mitigate=True)
    return SweepResult(MITIGATION_COLUMNS, mitigation_table(recs), recs)


def pooled_rate(rows, cells_col: int, rate_col: int) -> float:
    """Cell-weighted mean of per-group rates."""
    total = sum(r[cells_col] for r in rows)
    if total == 0:
        return float("nan")
    return sum(r[cells_col] * r[rate_col] for r in rows) / total


def is_monotone(values, increasing: bool, tol: float = 0.0) -> bool:
    vals = [v for v in values if not math.isnan(v)]
    pairs = zip(vals, vals[1:])
    if increasing:
        return all(b >= a - tol for a, b in pairs)
    return all(b <= a + tol for a, b in pairs)
