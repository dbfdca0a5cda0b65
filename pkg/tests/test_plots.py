import pytest

from stealthmark.corpus import CorpusSpec, generate_corpus
from stealthmark.detector import PayloadLibrary
from stealthmark.harness import run_size_sweep, run_strength_sweep
from stealthmark.plots import MalformedCsv, emit_plots, read_sweep


@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    d = tmp_path_factory.mktemp("sw")
    full = PayloadLibrary.default()
    lib = PayloadLibrary([(p, full[p]) for p in ("apple", "benz", "chanel")])
    corpus = generate_corpus(CorpusSpec(count=1, size=512, seed=1))
    run_strength_sweep(corpus, lib, [1, 2, 5, 10]).write(d / "strength.csv")
    run_size_sweep(corpus, lib, [256, 128]).write(d / "size.csv")
    return d


def test_one_svg_per_payload(sweeps, tmp_path):
    outs = emit_plots(sweeps / "strength.csv", tmp_path)
    assert sorted(p.name for p in outs) == ["strength_apple.svg", "strength_benz.svg", "strength_chanel.svg"]
    assert all(p.read_text().lstrip().startswith("<?xml") for p in outs)


def test_plots_are_byte_identical(sweeps, tmp_path):
    for name in ("strength.csv", "size.csv"):
        a = emit_plots(sweeps / name, tmp_path / "a")
        b = emit_plots(sweeps / name, tmp_path / "b")
        assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_malformed_inputs(tmp_path, sweeps):
    (tmp_path / "empty.csv").write_text("")
    (tmp_path / "header.csv").write_text((sweeps / "size.csv").read_text().splitlines()[0] + "\n")
    (tmp_path / "junk.csv").write_text("a,b\n1,2\n")
    for name in ("empty.csv", "header.csv", "junk.csv"):
        with pytest.raises(MalformedCsv):
            emit_plots(tmp_path / name, tmp_path)
    assert read_sweep(sweeps / "size.csv")[0] == "size"
