"""TOML config loading, validation paths, and end-to-end run_config."""
import numpy as np
import pytest

from tempolearn.config import ConfigError, load_config, run_config, \
    validate_config
from tempolearn.datasets import gen_low_overlap, save_dataset_csv
from tempolearn.numerics import Rng
from tempolearn.training import load_curves_csv

MINIMAL = """
[dataset]
num_categories = 3
items_per_category = 40
dim = 8

[model]
hidden_dim = 6

[training]
epochs = 1
eval_every = 20
"""


def _write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_minimal_config_runs_and_writes_curves(tmp_path):
    path = _write(tmp_path, MINIMAL)
    result = run_config(path, out_dir=tmp_path / "out")
    assert result.curves_path.exists()
    assert result.out_dir == tmp_path / "out" / "exp"
    curves = load_curves_csv(result.curves_path)
    assert len(curves) == 1
    assert curves[0].condition == "exp"
    assert np.all(np.isfinite(curves[0].test_losses()))


def test_identical_configs_byte_identical(tmp_path):
    path = _write(tmp_path, MINIMAL)
    a = run_config(path, out_dir=tmp_path / "a")
    b = run_config(path, out_dir=tmp_path / "b")
    assert a.curves_path.read_bytes() == b.curves_path.read_bytes()


def test_defaults_filled_and_required_enforced():
    cfg = validate_config({"model": {"hidden_dim": 8}})
    assert cfg["dataset"]["kind"] == "low_overlap"
    assert cfg["schedule"]["k"] == 1
    assert cfg["optimizer"]["learning_rate"] == 0.01
    assert cfg["training"]["reset_period"] is None
    with pytest.raises(ConfigError, match="model.hidden_dim"):
        validate_config({"model": {}})


def test_unknown_section_and_key_rejected():
    with pytest.raises(ConfigError, match="oven: unknown section"):
        validate_config({"model": {"hidden_dim": 4}, "oven": {}})
    with pytest.raises(ConfigError, match="model.fidden_dim: unknown key"):
        validate_config({"model": {"hidden_dim": 4, "fidden_dim": 2}})


def test_type_coercion_and_bool_rejection():
    cfg = validate_config({"model": {"hidden_dim": 4},
                           "optimizer": {"learning_rate": 1}})
    assert cfg["optimizer"]["learning_rate"] == 1.0
    assert isinstance(cfg["optimizer"]["learning_rate"], float)
    with pytest.raises(ConfigError, match="training.epochs: expected integer"):
        validate_config({"model": {"hidden_dim": 4},
                         "training": {"epochs": True}})
    with pytest.raises(ConfigError, match="expected str"):
        validate_config({"model": {"hidden_dim": 4},
                         "dataset": {"kind": 7}})


def test_enum_violations_name_the_field():
    with pytest.raises(ConfigError, match="dataset.kind: must be one of"):
        validate_config({"model": {"hidden_dim": 4},
                         "dataset": {"kind": "mystery"}})
    with pytest.raises(ConfigError, match="schedule.kind: must be one of"):
        validate_config({"model": {"hidden_dim": 4},
                         "schedule": {"kind": "zigzag"}})
    with pytest.raises(ConfigError, match="schedule.k: must be >= 1"):
        validate_config({"model": {"hidden_dim": 4}, "schedule": {"k": 0}})
    with pytest.raises(ConfigError, match="dataset.test_fraction"):
        validate_config({"model": {"hidden_dim": 4},
                         "dataset": {"test_fraction": 1.5}})


def test_leak_alphas_length_checked_at_build(tmp_path):
    text = MINIMAL.replace("hidden_dim = 6",
                           "hidden_dim = 6\nleak_alphas = [0.5, 0.5]")
    path = _write(tmp_path, text)
    with pytest.raises(ConfigError,
                       match="model.leak_alphas: 2 entries for 6"):
        run_config(path, out_dir=tmp_path / "out")


def test_csv_dataset_roundtrip(tmp_path):
    ds = gen_low_overlap(Rng(5), 3, 30, 8, 0.1)
    csv_path = tmp_path / "toy.csv"
    save_dataset_csv(ds, csv_path)
    text = MINIMAL.replace(
        "[dataset]\nnum_categories = 3\nitems_per_category = 40\ndim = 8",
        f'[dataset]\nkind = "csv"\npath = "{csv_path}"')
    path = _write(tmp_path, text)
    result = run_config(path, out_dir=tmp_path / "out")
    assert result.curves_path.exists()
    with pytest.raises(ConfigError, match="dataset.path: required"):
        validate_config({"model": {"hidden_dim": 4},
                         "dataset": {"kind": "csv"}})


def test_k_repetition_schedule_config(tmp_path):
    text = MINIMAL + '\n[schedule]\nkind = "k_repetition"\nk = 5\n'
    path = _write(tmp_path, text)
    result = run_config(path, out_dir=tmp_path / "out")
    curves = load_curves_csv(result.curves_path)
    assert len(curves[0].points) > 0


def test_toml_parse_error_wrapped(tmp_path):
    path = _write(tmp_path, "[model\nhidden_dim = 4")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(path)
