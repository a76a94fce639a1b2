"""Config file parsing and the option precedence chain."""

import pytest

from bort.configio import (
    ConfigError,
    load_config_file,
    parse_config_text,
    resolve_config,
    write_config_file,
)
from bort.training.config import TrainConfig


def test_parse_basics():
    values = parse_config_text(
        "lambda1 = 0.5\n"
        "\n"
        "# a comment\n"
        "use_dr = false   # trailing comment\n"
        "batch_size=64\n"
    )
    assert values == {"lambda1": 0.5, "use_dr": False, "batch_size": 64}


@pytest.mark.parametrize("text", [
    "mystery = 1",
    "lambda1 0.5",
    "lambda1 = sideways",
    "use_br = maybe",
    "seed = 1\nseed = 2",
])
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_precedence_flag_env_file_default():
    file_values = {"seed": 1, "lambda1": 0.9}
    assert resolve_config().seed == 17
    assert resolve_config(file_values).seed == 1
    assert resolve_config(file_values, env_seed="2").seed == 2
    assert resolve_config(file_values, env_seed="2", overrides={"seed": 3}).seed == 3
    # non-seed options never come from the environment
    cfg = resolve_config(file_values, env_seed="2")
    assert cfg.lambda1 == 0.9


def test_none_overrides_are_skipped():
    cfg = resolve_config({"alpha": 0.3}, overrides={"alpha": None, "seed": 5})
    assert cfg.alpha == 0.3
    assert cfg.seed == 5


def test_bad_env_seed():
    with pytest.raises(ConfigError):
        resolve_config(env_seed="soon")


def test_invalid_merged_values_surface_as_config_errors():
    with pytest.raises(ConfigError):
        resolve_config({"lambda1": -1.0})


def test_roundtrip(tmp_path):
    cfg = TrainConfig(lambda1=0.25, use_br=False, seed=99, batch_size=9)
    path = tmp_path / "run.cfg"
    write_config_file(cfg, path)
    assert resolve_config(load_config_file(path)) == cfg
    text = path.read_text()
    assert "use_br = false" in text
    assert "seed = 99" in text
