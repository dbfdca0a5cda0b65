import pytest

from stealthmark.config import load_settings, parse_overrides
from stealthmark.errors import ConfigError
from stealthmark.harness import HarnessConfig


def test_defaults():
    assert load_settings() == HarnessConfig()


def test_file_and_overrides(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text('[detector]\nmin_area = 32\n[scrub]\nnoise_std = 0.5\n[harness]\nworkers = 2\n')
    cfg = load_settings(p, parse_overrides(["detector.min_area=100", "jnd.t_mid=4.0"]))
    assert cfg.detector.min_area == 100 and cfg.scrub.noise_std == 0.5
    assert cfg.jnd.t_mid == 4.0 and cfg.workers == 2


def test_override_parsing():
    assert parse_overrides(["a.b=1", "a.c=x y", "d.e=true"]) == {"a": {"b": 1, "c": "x y"}, "d": {"e": True}}
    for bad in ("nodot=1", "a.b", ".b=1"):
        with pytest.raises(ConfigError):
            parse_overrides([bad])


@pytest.mark.parametrize("text", ["[bogus]\nx=1\n", "[detector]\nnope=1\n", "[harness]\nfoo=1\n",
                                  "[detector]\nband_low=9\nband_high=2\n", "not toml ["])
def test_bad_files(tmp_path, text):
    p = tmp_path / "s.toml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_settings(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_settings(tmp_path / "none.toml")
