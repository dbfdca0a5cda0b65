import json

import numpy as np
import pytest

from stealthmark.corpus import CorpusSpec, generate_corpus, generate_image, load_corpus, manifest_ids, synth_corpus
from stealthmark.imaging import load_png


def test_synth_is_byte_identical(tmp_path):
    spec = CorpusSpec(count=1, background="flat", seed=7)
    a, b = synth_corpus(spec, tmp_path / "a"), synth_corpus(spec, tmp_path / "b")
    for name in ("img00000.png", "img00000_alpha.png", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_images_independent_of_count():
    small = generate_corpus(CorpusSpec(count=2, size=256, shape_radius=(20, 40), seed=3))
    big = generate_corpus(CorpusSpec(count=4, size=256, shape_radius=(20, 40), seed=3))
    assert small[1].image == big[1].image
    assert generate_image(CorpusSpec(count=9, size=256, shape_radius=(20, 40), seed=4), 1).image != small[1].image


@pytest.mark.parametrize("bg,check", [("flat", lambda h: h <= 1.0), ("noise", lambda h: h >= 6.0)])
def test_background_entropy_bands(bg, check):
    for item in generate_corpus(CorpusSpec(count=6, size=256, shape_radius=(20, 40), background=bg, seed=2)):
        assert check(item.entropy), item.entropy


def test_flat_background_range_and_shapes():
    for item in generate_corpus(CorpusSpec(count=5, size=256, shape_radius=(20, 40), seed=9)):
        bg = item.image.pixels[~item.alpha]
        assert (bg == bg[0]).all() and 96 <= bg.min() and bg.max() <= 200
        assert item.alpha.any() and not item.alpha[:16].any() and not item.alpha[:, -16:].any()


def test_mixed_cycles_backgrounds():
    items = generate_corpus(CorpusSpec(count=6, size=256, shape_radius=(20, 40), background="mixed", seed=1))
    assert [i.background for i in items] == ["flat", "gradient", "noise"] * 2


def test_load_round_trip(tmp_path):
    spec = CorpusSpec(count=3, size=256, shape_radius=(20, 40), background="mixed", seed=5)
    synth_corpus(spec, tmp_path)
    loaded = load_corpus(tmp_path)
    for a, b in zip(generate_corpus(spec), loaded):
        assert a.image_id == b.image_id and a.image == b.image and (a.alpha == b.alpha).all()
        assert a.entropy == b.entropy and a.background == b.background
    assert manifest_ids(tmp_path) == {"img00000", "img00001", "img00002"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["spec"]["seed"] == 5
    assert load_png(tmp_path / "img00001.png").width == 256


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        CorpusSpec(count=0)
    with pytest.raises(ValueError):
        CorpusSpec(count=1, background="plaid")
    with pytest.raises(ValueError):
        CorpusSpec(count=1, size=100)
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path)


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        synth_corpus(CorpusSpec(count=1, size=256, shape_radius=(20, 40)), blocker / "sub")
