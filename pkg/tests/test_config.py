import pytest

from freqadapt.config import (ENV_VAR, KEY_NOTES, PUBLISHED, AppConfig, format_config, help_table,
                              load_config, parse_kv_lines)
from freqadapt.errors import ArgumentError


def test_defaults_follow_published_setup():
    c = AppConfig().validate()
    assert (c.lambda1, c.lambda2, c.scale, c.kernel_side) == (1.0, 0.001, 4, 13)
    assert (c.curriculum_start, c.curriculum_end, c.generator_input) == (3.5, 1.2, 512)
    assert c.hr_policy == "bicubic-2x" and c.r_max == 3.0


def test_every_key_is_documented():
    keys = [k for k, _ in AppConfig().items()]
    assert set(keys) == set(KEY_NOTES)
    table = help_table()
    for k in keys:
        assert f"  {k}=" in table
    assert PUBLISHED in table


def test_file_then_overrides(tmp_path, monkeypatch):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\niterations = 300\nlambda2=0.01  # trailing\n\n")
    c = load_config(p, {"iterations": "400"})
    assert c.iterations == 400 and c.lambda2 == 0.01
    monkeypatch.setenv(ENV_VAR, str(p))
    assert load_config().iterations == 300


@pytest.mark.parametrize("key,value", [("lambda1", "-1"), ("kernel_side", "12"), ("r_max", "3.5"),
                                       ("curriculum_end", "0.9"), ("rng", "mt19937"),
                                       ("normalization", "l2"), ("iterations", "many")])
def test_bad_values_name_the_key(key, value):
    with pytest.raises(ArgumentError, match=key):
        load_config(overrides={key: value})


def test_unknown_key_and_syntax(tmp_path):
    with pytest.raises(ArgumentError, match="colour"):
        load_config(overrides={"colour": "red"})
    with pytest.raises(ArgumentError, match="c.cfg:2"):
        parse_kv_lines("a=1\nnot a pair\n", "c.cfg")
    with pytest.raises(ArgumentError):
        load_config(tmp_path / "missing.cfg")


def test_format_round_trip():
    c = AppConfig(iterations=77, hr_policy="source")
    assert load_config(overrides=parse_kv_lines(format_config(c))) == c
