import json

import pytest

from stealthmark.cli import main
from stealthmark.embedder import AUGMENTATION_SUFFIX
from stealthmark.imaging import ImageBuffer, load_png, save_png


@pytest.fixture
def clean(tmp_path):
    p = tmp_path / "clean.png"
    save_png(ImageBuffer.filled(512, 512, (140, 150, 160)), p)
    return p


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_embed_detect_scrub(tmp_path, clean, capsys):
    code, out, _ = run(capsys, "-o", str(tmp_path), "embed", str(clean), "--logo", "fuji", "--strength", "2")
    assert code == 0
    info = json.loads(out)
    injected = tmp_path / "clean_fuji.png"
    assert info["output"] == str(injected) and json.loads((tmp_path / "clean_fuji.json").read_text())["strength"] == 2

    code, out, _ = run(capsys, "detect", str(injected))
    assert code == 0 and json.loads(out)["best_match"] == "fuji"
    code, out, _ = run(capsys, "detect", str(injected), "--clean", str(clean))
    assert json.loads(out)["match_score"] == 1.0

    code, out, _ = run(capsys, "scrub", str(injected), "--out", str(tmp_path / "c.png"))
    assert code == 0 and json.loads(out)["payload_destroyed"] is True
    assert load_png(tmp_path / "c.png").width == 512

    code, out, _ = run(capsys, "analyze", str(injected), "--against", str(clean))
    d = json.loads(out)
    assert code == 0 and d["visibility"]["verdict"] == "invisible" and d["entropy"] < 1.0


def test_embed_explicit_origin_and_infeasible(tmp_path, capsys):
    import numpy as np

    noisy = tmp_path / "n.png"
    save_png(ImageBuffer(np.random.default_rng(0).integers(0, 256, (300, 300, 3), dtype=np.uint8)), noisy)
    code, out, _ = run(capsys, "embed", str(noisy), "--logo", "benz", "--origin", "5,6", "--out",
                       str(tmp_path / "o.png"))
    assert code == 0 and json.loads(out)["origin"] == [5, 6]
    code, _, err = run(capsys, "embed", str(noisy), "--logo", "benz", "--require-feasible",
                       "--out", str(tmp_path / "x.png"))
    assert code == 2 and "entropy" in err


def test_synth_sweep_plot(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert run(capsys, "--seed", "3", "synth", "--count", "1", "--size", "512", "--out", str(corpus))[0] == 0
    code, out, _ = run(capsys, "-o", str(tmp_path / "r"), "sweep", "strength", "--corpus", str(corpus),
                       "--logos", "benz", "--strengths", "2,10", "--plot")
    assert code == 0 and out.startswith("payload_id,strength")
    assert (tmp_path / "r" / "strength_sweep.csv").read_text() == out
    assert (tmp_path / "r" / "strength_sweep_benz.svg").exists()
    assert (tmp_path / "r" / "strength_records.csv").exists()
    code, out, _ = run(capsys, "-o", str(tmp_path / "p"), "plot", str(tmp_path / "r" / "strength_sweep.csv"))
    assert code == 0 and out.strip().endswith("strength_sweep_benz.svg")


def test_augment(capsys):
    code, out, _ = run(capsys, "augment", "a dog")
    assert code == 0 and out.strip() == f"a dog, {AUGMENTATION_SUFFIX}"


@pytest.mark.parametrize("argv", [[], ["bogus"], ["embed"], ["sweep", "volume"], ["--seed", "x", "synth"],
                                  ["sweep", "size", "--widths", "a,b"]])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


@pytest.mark.parametrize("argv", [
    ["detect", "/nonexistent.png"],
    ["--set", "detector.nope=1", "augment", "x"],
    ["--config", "/nonexistent.toml", "augment", "x"],
    ["augment", " "],
])
def test_data_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("stealthmark: error:")


def test_bad_png_and_small_width(tmp_path, clean, capsys):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\nxx")
    assert run(capsys, "detect", str(bad))[0] == 2
    assert run(capsys, "embed", str(clean), "--width", "4")[0] == 2
    assert run(capsys, "sweep", "size", "--count", "1", "--size", "512", "--widths", "4")[0] == 2
