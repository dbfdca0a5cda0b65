"""Embed, measure, detect and scrub low-contrast logo payloads in images."""

__version__ = "0.1.0"

from .corpus import CorpusSpec, generate_corpus, load_corpus, synth_corpus
from .detector import DetectionReport, PayloadLibrary, detect_blind, detect_paired, match_payload
from .embedder import InjectionRecord, InjectionSpec, augment_prompt, embed_payload, residual_of
from .entropy import EntropyMap, PlacementDecision, entropy_map, select_placement, shannon_entropy
from .imaging import (
    GrayBuffer,
    ImageBuffer,
    PayloadMask,
    load_mask,
    load_png,
    median_filter,
    save_png,
    scale_mask,
    to_luma,
)
from .mitigation import BackgroundMask, ScrubReport, mitigation_rate, scrub, segment_background
from .perception import JndMap, VisibilityReport, classify_strength_sweep, jnd_map, jnd_ratio

__all__ = [
    "BackgroundMask", "CorpusSpec", "DetectionReport", "EntropyMap", "GrayBuffer", "ImageBuffer",
    "InjectionRecord", "InjectionSpec", "JndMap", "PayloadLibrary", "PayloadMask", "PlacementDecision",
    "ScrubReport", "VisibilityReport", "augment_prompt", "classify_strength_sweep", "detect_blind",
    "detect_paired", "embed_payload", "entropy_map", "generate_corpus", "jnd_map", "jnd_ratio",
    "load_corpus", "load_mask", "load_png", "match_payload", "median_filter", "mitigation_rate",
    "residual_of", "save_png", "scale_mask", "scrub", "segment_background", "select_placement",
    "shannon_entropy", "synth_corpus", "to_luma",
]
