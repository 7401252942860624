"""TOML-driven experiment runner.

A config file has five sections, all optional except [model]:

    [dataset]   kind = "low_overlap" | "non_overlapping" | "csv"
                num_categories, items_per_category, dim, noise_halfwidth,
                high, low, path (csv only), test_fraction
    [model]     hidden_dim (required), input_dim, output_dim, leak_alphas,
                output_activation, loss, gating, use_bias
    [schedule]  kind = "random" | "k_repetition", k
    [optimizer] kind = "sgd" | "rmsprop", learning_rate, beta1, beta2, epsilon
    [training]  seed, runs, epochs, eval_every, eval_mode, batch_size,
                reset_period

Unset fields take the defaults listed in SCHEMA. Validation failures raise
ConfigError naming the offending field path (e.g. "model.leak_alphas").
run_config is deterministic: identical files produce byte-identical CSVs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .datasets import (Dataset, gen_low_overlap, gen_non_overlapping_stream,
                       load_dataset_csv, train_test_split)
from .models import ModelSpec, init_state
from .numerics import Rng
from .optim import OptimizerState
from .sampling import (Schedule, k_repetition_schedule, random_schedule,
                       shared_within_category_orders)
from .training import TrainConfig, save_curves_csv, train_incremental, \
    train_minibatch

OUT_DIR_ENV = "TEMPOLEARN_OUT"

# section -> field -> (type, default); None default means required
SCHEMA = {
    "dataset": {
        "kind": (str, "low_overlap"),
        "num_categories": (int, 4),
        "items_per_category": (int, 300),
        "dim": (int, 16),
        "noise_halfwidth": (float, 0.1),
        "high": (float, None),
        "low": (float, None),
        "path": (str, None),
        "test_fraction": (float, 0.2),
    },
    "model": {
        "hidden_dim": (int, None),
        "input_dim": (int, None),
        "output_dim": (int, None),
        "leak_alphas": (object, 0.0),
        "output_activation": (str, "softmax"),
        "loss": (str, "mse"),
        "gating": (str, "none"),
        "use_bias": (bool, True),
    },
    "schedule": {
        "kind": (str, "random"),
        "k": (int, 1),
    },
    "optimizer": {
        "kind": (str, "sgd"),
        "learning_rate": (float, 0.01),
        "beta1": (float, 0.9),
        "beta2": (float, 0.99),
        "epsilon": (float, 1e-8),
    },
    "training": {
        "seed": (int, 1),
        "runs": (int, 1),
        "epochs": (int, 1),
        "eval_every": (int, 10),
        "eval_mode": (str, "stateless"),
        "batch_size": (int, 1),
        "reset_period": (int, None),  # None = no periodic reset
    },
}

DATASET_KINDS = ("low_overlap", "non_overlapping", "csv")
SCHEDULE_KINDS = ("random", "k_repetition")


class ConfigError(ValueError):
    """Invalid config content; message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ConfigResult:
    config_path: Path
    out_dir: Path
    curves_path: Path
    runs: int


def _coerce(section: str, key: str, value, want):
    path = f"{section}.{key}"
    if want is object:
        return value
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, bool):
        raise ConfigError(path, f"expected integer, got {value!r}")
    if not isinstance(value, want):
        raise ConfigError(path, f"expected {want.__name__}, got {value!r}")
    return value


def validate_config(raw: dict) -> dict:
    """Schema check: known sections and keys only, typed, defaults filled.

    Returns {section: {key: value}} with every schema key present (required
    fields checked, None-default optional fields left as None).
    """
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        if not isinstance(raw[section], dict):
            raise ConfigError(section, "expected a table")
    cfg = {}
    for section, fields in SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in fields:
                raise ConfigError(f"{section}.{key}", "unknown key")
        out = {}
        for key, (want, default) in fields.items():
            if key in given:
                out[key] = _coerce(section, key, given[key], want)
            else:
                out[key] = default
        cfg[section] = out
    if cfg["model"]["hidden_dim"] is None:
        raise ConfigError("model.hidden_dim", "required field is missing")
    if cfg["dataset"]["kind"] not in DATASET_KINDS:
        raise ConfigError("dataset.kind",
                          f"must be one of {', '.join(DATASET_KINDS)}")
    if cfg["dataset"]["kind"] == "csv" and cfg["dataset"]["path"] is None:
        raise ConfigError("dataset.path", "required when dataset.kind is csv")
    if cfg["schedule"]["kind"] not in SCHEDULE_KINDS:
        raise ConfigError("schedule.kind",
                          f"must be one of {', '.join(SCHEDULE_KINDS)}")
    if cfg["schedule"]["k"] < 1:
        raise ConfigError("schedule.k", "must be >= 1")
    frac = cfg["dataset"]["test_fraction"]
    if not 0.0 < frac < 1.0:
        raise ConfigError("dataset.test_fraction",
                          "must lie strictly between 0 and 1")
    return cfg


def load_config(path) -> dict:
    with open(path, "rb") as f:
        try:
            raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(str(path), f"not valid TOML ({e})") from e
    return validate_config(raw)


def build_dataset(cfg: dict, rng: Rng) -> Dataset:
    d = cfg["dataset"]
    if d["kind"] == "csv":
        return load_dataset_csv(d["path"], name=Path(d["path"]).stem)
    args = (rng, d["num_categories"], d["items_per_category"], d["dim"],
            d["noise_halfwidth"])
    try:
        if d["kind"] == "low_overlap":
            kw = {k: d[k] for k in ("high", "low") if d[k] is not None}
            return gen_low_overlap(*args, **kw)
        kw = {"high": d["high"]} if d["high"] is not None else {}
        return gen_non_overlapping_stream(*args, **kw)
    except ValueError as e:
        raise ConfigError("dataset", str(e)) from e


def build_model(cfg: dict, dataset: Dataset) -> ModelSpec:
    m = cfg["model"]
    input_dim = m["input_dim"] if m["input_dim"] is not None \
        else dataset.feature_dim
    output_dim = m["output_dim"] if m["output_dim"] is not None \
        else dataset.num_categories
    alphas = m["leak_alphas"]
    if isinstance(alphas, list) and len(alphas) != m["hidden_dim"]:
        raise ConfigError("model.leak_alphas",
                          f"{len(alphas)} entries for {m['hidden_dim']} "
                          "hidden units")
    try:
        return ModelSpec(input_dim=input_dim, hidden_dim=m["hidden_dim"],
                         output_dim=output_dim,
                         leak_alphas=tuple(alphas)
                         if isinstance(alphas, list) else alphas,
                         output_activation=m["output_activation"],
                         loss=m["loss"], gating=m["gating"],
                         use_bias=m["use_bias"])
    except ValueError as e:
        raise ConfigError("model", str(e)) from e


def build_schedule(cfg: dict, ds: Dataset, rng_a: Rng, rng_b: Rng) -> Schedule:
    s = cfg["schedule"]
    if s["kind"] == "random":
        return random_schedule(ds, rng_a)
    blocks = max(1, (len(ds) // ds.num_categories) // s["k"])
    cats = np.tile(rng_a.permutation(ds.num_categories), blocks)
    within = shared_within_category_orders(ds, rng_b)
    return k_repetition_schedule(ds, cats, within, s["k"])


def build_optimizer(cfg: dict) -> OptimizerState:
    o = cfg["optimizer"]
    try:
        return OptimizerState(o["kind"], o["learning_rate"], o["beta1"],
                              o["beta2"], o["epsilon"])
    except ValueError as e:
        raise ConfigError("optimizer", str(e)) from e


def build_train_config(cfg: dict) -> TrainConfig:
    t = cfg["training"]
    try:
        return TrainConfig(epochs=t["epochs"], eval_every=t["eval_every"],
                           eval_mode=t["eval_mode"],
                           batch_size=t["batch_size"],
                           reset_period=t["reset_period"])
    except ValueError as e:
        raise ConfigError("training", str(e)) from e


def run_config(config_path, out_dir=None) -> ConfigResult:
    """Execute one config: every run trains the same data/model/schedule
    combination from a fresh seeded init, all runs land in one curves CSV.

    Streams: data spawn(0), split spawn(1), init 1000+run, train schedule
    2000+run/3000+run, test order 5000+run/6000+run (ordered eval only).
    """
    config_path = Path(config_path)
    cfg = load_config(config_path)
    t = cfg["training"]
    master = Rng(t["seed"])
    base = build_dataset(cfg, master.spawn(0))
    train_ds, test_ds = train_test_split(master.spawn(1), base,
                                         cfg["dataset"]["test_fraction"])
    spec = build_model(cfg, train_ds)
    train_cfg = build_train_config(cfg)

    curves = []
    for r in range(t["runs"]):
        sched = build_schedule(cfg, train_ds, master.spawn(2000 + r),
                               master.spawn(3000 + r))
        test_order = None
        if t["eval_mode"] == "ordered":
            test_order = build_schedule(cfg, test_ds, master.spawn(5000 + r),
                                        master.spawn(6000 + r)).order
        state = init_state(spec, master.spawn(1000 + r))
        opt = build_optimizer(cfg)
        if t["batch_size"] > 1:
            curve = train_minibatch(spec, state, train_ds, sched, test_ds,
                                    opt, train_cfg, run=r,
                                    condition=config_path.stem)
        else:
            curve = train_incremental(spec, state, train_ds, sched, test_ds,
                                      opt, train_cfg, run=r,
                                      condition=config_path.stem,
                                      test_order=test_order)
        curves.append(curve)

    out_root = Path(out_dir or os.environ.get(OUT_DIR_ENV) or "out")
    target = out_root / config_path.stem
    curves_path = target / "curves.csv"
    save_curves_csv(curves_path, curves)
    return ConfigResult(config_path, target, curves_path, t["runs"])
