import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stealthmark.detector import (
    DetectorConfig,
    Method,
    PayloadLibrary,
    detect_blind,
    detect_paired,
    iou,
    match_payload,
    match_scores,
)
from stealthmark.embedder import InjectionSpec, embed_payload
from stealthmark.imaging import ImageBuffer, PayloadMask
from stealthmark.logos import LOGO_IDS, render_logo

from conftest import flat, random_image


def test_library_contents(library):
    assert library.ids == LOGO_IDS == ("apple", "benz", "chanel", "mcdonalds", "flower", "fuji")
    for pid, m in library:
        assert m.payload_id == pid and m.bbox[2] == 256 and m.bbox[:2] == (0, 0)
    assert "benz" in library and len(library) == 6
    with pytest.raises(KeyError):
        library["nope"]
    with pytest.raises(KeyError):
        render_logo("nope")


def test_library_validation():
    m = PayloadMask(np.ones((4, 4), bool))
    with pytest.raises(ValueError):
        PayloadLibrary([("a", m), ("a", m)])
    with pytest.raises(ValueError):
        PayloadLibrary([("a", PayloadMask(np.zeros((4, 4), bool)))])


def test_logos_are_pairwise_distinguishable(library):
    for a, ma in library:
        scores = dict(match_scores(ma, library))
        assert scores[a] == 1.0
        assert all(s < 0.5 for b, s in scores.items() if b != a)


def embed(img, mask, origin, strength=2):
    return embed_payload(img, InjectionSpec(mask, origin, strength=strength))[0]


def test_paired_benz(library):
    clean = flat(512, 512)
    suspect = embed(clean, library["benz"], (100, 100))
    rep = detect_paired(clean, suspect, library)
    assert rep.detected and rep.best_match == "benz" and rep.match_score == 1.0
    assert rep.method is Method.PAIRED


def test_paired_clean_and_sparse_noise(rng):
    clean = random_image(rng, 64, 64)
    assert not detect_paired(clean, clean, PayloadLibrary.default()).detected
    px = clean.pixels.copy()
    idx = rng.choice(64 * 64, 10, replace=False)
    px.reshape(-1, 3)[idx, 0] ^= 1
    rep = detect_paired(clean, ImageBuffer(px), PayloadLibrary.default())
    assert not rep.detected and rep.best_match is None and rep.match_score is None


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(LOGO_IDS), st.integers(1, 10))
def test_paired_complete_on_random_instances(seed, pid, strength):
    r = np.random.default_rng(seed)
    lib = PayloadLibrary.default()
    clean = ImageBuffer(r.integers(10, 246, (300, 300, 3), dtype=np.uint8))
    mask = lib[pid]
    x = int(r.integers(0, 300 - mask.bbox[2] + 1))
    y = int(r.integers(0, 300 - mask.bbox[3] + 1))
    rep = detect_paired(clean, embed(clean, mask, (x, y), strength), lib)
    assert rep.detected and rep.best_match == pid and rep.match_score == 1.0


def test_blind_flat_benz(library):
    suspect = embed(flat(768, 768), library["benz"], (256, 256))
    rep = detect_blind(suspect, library)
    assert rep.detected and rep.best_match == "benz" and rep.match_score >= 0.8
    assert rep.method is Method.BLIND


@pytest.mark.parametrize("pid", LOGO_IDS)
def test_blind_identifies_each_logo(library, pid):
    suspect = embed(flat(400, 400, 170), library[pid], (40, 40))
    rep = detect_blind(suspect, library)
    assert rep.best_match == pid


def test_blind_noise_background_fails(library):
    clean = random_image(np.random.default_rng(3), 768, 768)
    rep = detect_blind(embed(clean, library["benz"], (256, 256)), library)
    assert not rep.detected or rep.best_match is None


def test_blind_clean_flat(library):
    rep = detect_blind(flat(256, 256), library)
    assert not rep.detected and rep.recovered.is_empty


def test_match_exact_copy(library):
    bits = np.zeros((400, 400), bool)
    m = library["chanel"]
    bits[30:30 + m.bits.shape[0], 50:50 + m.bits.shape[1]] = m.bits
    assert match_payload(PayloadMask(bits), library) == ("chanel", 1.0)


def test_match_half_erased(library):
    m = library["flower"]
    bits = m.bits.copy()
    ys, xs = np.nonzero(bits)
    # erase every other payload pixel, keeping the extremes so the bbox is unchanged
    keep_bbox = (ys == ys.min()) | (ys == ys.max()) | (xs == xs.min()) | (xs == xs.max())
    erase = (np.arange(ys.size) % 2 == 1) & ~keep_bbox
    bits[ys[erase], xs[erase]] = False
    rec = PayloadMask(bits)
    assert rec.bbox == m.bbox
    expected = rec.count / m.count
    scores = dict(match_scores(rec, library))
    assert scores["flower"] == pytest.approx(expected, abs=1e-12)
    assert abs(expected - 0.5) < 0.01


def test_match_disjoint(library):
    # a thin hollow frame shares almost nothing with any logo
    bits = np.zeros((100, 100), bool)
    bits[0, :] = bits[-1, :] = True
    pid, score = match_payload(PayloadMask(bits), library)
    assert pid is None and score < 0.5
    with pytest.raises(ValueError):
        match_payload(PayloadMask(np.zeros((4, 4), bool)), library)


def test_ties_go_to_library_order():
    m = PayloadMask(np.ones((10, 10), bool))
    lib = PayloadLibrary([("first", m), ("second", m)])
    assert match_payload(m, lib) == ("first", 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_iou_is_one_iff_identical(seed):
    r = np.random.default_rng(seed)
    a = r.random((12, 12)) < 0.5
    b = a.copy()
    if r.random() < 0.5:
        b[r.integers(0, 12), r.integers(0, 12)] ^= True
    assert (iou(a, b) == 1.0) == bool((a == b).all())


def test_report_json(library):
    rep = detect_blind(embed(flat(300, 300), library["fuji"], (20, 20)), library)
    d = rep.to_dict()
    assert d["method"] == "blind" and d["best_match"] == "fuji" and d["recovered_pixels"] > 0
    assert '"method": "blind"' in rep.to_json()


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(band_low=5, band_high=2)
    with pytest.raises(ValueError):
        DetectorConfig(iou_threshold=1.5)
