# tests/test_config.py
import pytest

from stare_kg.config import TOY_CONFIG_PATH
from stare_kg.errors import ConfigKeyError, ConfigValueError
from stare_kg.model.compose import GammaKind, PhiKind
from stare_kg.run_config import (
    DecoderKind, EncoderKind, RunConfig, dump_run_config, load_run_config, parse_flat_lines,
)


def test_defaults_are_the_selected_hyperparameters():
    config = load_run_config()
    assert config.encoder.num_layers == 2
    assert config.encoder.dim == 200
    assert config.encoder.phi_r is PhiKind.ROTATE
    assert config.encoder.gamma is GammaKind.WEIGHTED_SUM
    assert config.encoder.alpha == 0.8
    assert config.decoder.kind is DecoderKind.POOLED_TRANSFORMER
    assert config.decoder.max_len == 15
    assert (config.decoder.trf_layers, config.decoder.trf_hidden, config.decoder.trf_heads) == (2, 512, 4)
    assert config.model.encoder is EncoderKind.STARE
    assert config.train.label_smoothing == 0.1


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# comment\nseed = 3\nencoder.dim = 32   # inline\ndecoder.kind = conve\n", encoding="utf-8")
    config = load_run_config(str(path), ["encoder.dim=16", "eval.hits_at=[1, 3]"])
    assert config.seed == 3
    assert config.encoder.dim == 16
    assert config.decoder.kind is DecoderKind.CONVE
    assert config.eval.hits_at == [1, 3]


def test_unknown_key_is_named():
    with pytest.raises(ConfigKeyError) as exc:
        load_run_config(overrides=["encoder.depth=3"])
    assert exc.value.key == "encoder.depth"
    assert "encoder.depth" in str(exc.value)


@pytest.mark.parametrize("override", ["encoder.dim=zero", "encoder.alpha=1.5", "model.dtype=float16",
                                      "decoder.trf_activation=swish", "decoder.kind=lstm"])
def test_bad_values(override):
    with pytest.raises(ConfigValueError):
        load_run_config(overrides=[override])


def test_line_without_equals():
    with pytest.raises(ConfigValueError):
        parse_flat_lines(["encoder.dim 4"])


def test_none_and_quoted_values():
    flat = parse_flat_lines(["data.out_dir = none", "data.literal_pattern = '^x='"])
    assert flat == {"data.out_dir": None, "data.literal_pattern": "^x="}


def test_dump_round_trip(tmp_path):
    config = load_run_config(TOY_CONFIG_PATH, ["decoder.kind=convkb", "data.out_dir=out"])
    path = tmp_path / "dump.conf"
    path.write_text(dump_run_config(config), encoding="utf-8")
    assert load_run_config(str(path)) == config


def test_toy_config_loads():
    config = load_run_config(TOY_CONFIG_PATH)
    assert isinstance(config, RunConfig)
    assert config.model.dtype == "float64"
    assert config.encoder.dropout == 0.0 and config.decoder.trf_dropout == 0.0
    assert config.gradcheck.num_entities == 5
