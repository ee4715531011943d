"""Declarative experiment configuration.

Configs are TOML files with explicit units in key names.  Every random
choice in a run is pinned by the four seeds in ``[seeds]`` (data, init,
noise, shuffle); there is no implicit entropy anywhere, which is what
makes reruns byte-identical.

Paper-scale hyperparameters are the config defaults; ``--desk-scale``
overlays a small configuration that trains in minutes on a laptop while
preserving every protocol property (paired seeds, learning-rate
selection, early stopping on test Q).
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import LINK_PRESETS
from .equalizer import EqualizerSpec

HEAD_CHOICES = ("regression", "classification", "both")

# M = 51 for the standard fiber, M = 41 for the low-dispersion fiber
_DEFAULT_NEIGHBORS = {"ssmf_5x100": 25, "twc_9x50": 20}

DESK_SCALE = {
    "mlp_hidden": (96, 24, 48),
    "lstm_hidden": 64,
    "minibatch": 1024,
    "learning_rates": (1e-3,),
    "max_epochs": 300,
    "patience": 30,
    "frame_symbols": 65536,
    "n_frames_train": 1,
    "n_frames_test": 1,
}


class ConfigError(ValueError):
    """Invalid or missing configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    link_preset: str
    seed_data: int
    seed_init: int
    seed_noise: int
    seed_shuffle: int
    out_dir: str = "runs/out"
    link_overrides: dict = field(default_factory=dict)
    modulation_orders: tuple = (16,)
    symbol_rate_hz: float = 34.4e9
    samples_per_symbol: int = 8
    rrc_rolloff: float = 0.1
    rrc_span_symbols: int = 64
    launch_powers_dbm: tuple = (0.0,)
    frame_symbols: int = 65536
    # four frames approximate the 2^18-symbol reference datasets after
    # guard discards; desk scale drops to a single frame
    n_frames_train: int = 4
    n_frames_test: int = 4
    guard_symbols: int = 2048
    trunk: str = "mlp"
    head: str = "both"
    n_neighbors: int | None = None
    mlp_hidden: tuple = (481, 31, 263)
    lstm_hidden: int = 226
    minibatch: int = 4331
    learning_rates: tuple = (1e-3, 5e-4, 1e-4, 5e-5)
    max_epochs: int = 5000
    patience: int = 150
    target_polarization: str = "x"
    ase_enabled: bool = True

    def __post_init__(self):
        if self.link_preset not in LINK_PRESETS:
            raise ConfigError(f"unknown link preset {self.link_preset!r}; "
                              f"available: {LINK_PRESETS}")
        if self.head not in HEAD_CHOICES:
            raise ConfigError(f"head must be one of {HEAD_CHOICES}")
        for name in ("modulation_orders", "launch_powers_dbm",
                     "learning_rates", "mlp_hidden"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_neighbors is None:
            object.__setattr__(self, "n_neighbors",
                               _DEFAULT_NEIGHBORS[self.link_preset])
        if self.guard_symbols * 2 >= self.frame_symbols:
            raise ConfigError("guard_symbols leave no usable symbols")
        if self.target_polarization not in ("x", "y"):
            raise ConfigError("target_polarization must be 'x' or 'y'")

    @property
    def heads(self) -> tuple:
        if self.head == "both":
            return ("regression", "classification")
        return (self.head,)

    def equalizer_spec(self, head: str, modulation_order: int) -> EqualizerSpec:
        return EqualizerSpec(
            trunk=self.trunk, head=head, modulation_order=modulation_order,
            n_neighbors=self.n_neighbors, mlp_hidden=self.mlp_hidden,
            lstm_hidden=self.lstm_hidden, minibatch=self.minibatch,
            learning_rates=self.learning_rates, max_epochs=self.max_epochs,
            patience=self.patience)

    def canonical_json(self) -> str:
        """Key-sorted JSON; stable under config file field reordering."""
        return json.dumps(asdict(self), sort_keys=True, default=list)

    def config_sha(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


_SECTION_FIELDS = {
    "link": {"preset": "link_preset"},
    "signal": {"modulation_orders": "modulation_orders",
               "symbol_rate_hz": "symbol_rate_hz",
               "samples_per_symbol": "samples_per_symbol",
               "rrc_rolloff": "rrc_rolloff",
               "rrc_span_symbols": "rrc_span_symbols",
               "launch_powers_dbm": "launch_powers_dbm",
               "frame_symbols": "frame_symbols",
               "n_frames_train": "n_frames_train",
               "n_frames_test": "n_frames_test",
               "guard_symbols": "guard_symbols",
               "ase_enabled": "ase_enabled"},
    "equalizer": {"trunk": "trunk", "head": "head",
                  "n_neighbors": "n_neighbors",
                  "mlp_hidden": "mlp_hidden", "lstm_hidden": "lstm_hidden",
                  "minibatch": "minibatch",
                  "learning_rates": "learning_rates",
                  "max_epochs": "max_epochs", "patience": "patience",
                  "target_polarization": "target_polarization"},
    "seeds": {"data": "seed_data", "init": "seed_init",
              "noise": "seed_noise", "shuffle": "seed_shuffle"},
    "output": {"dir": "out_dir"},
}


def load_config(path, desk_scale: bool = False, seed_overrides=None,
                out_dir=None) -> ExperimentConfig:
    """Parse a TOML experiment file into an ExperimentConfig."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err

    kwargs = {}
    for section, mapping in _SECTION_FIELDS.items():
        body = raw.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if section == "link" and key != "preset":
                kwargs.setdefault("link_overrides", {})[key] = value
            elif key in mapping:
                kwargs[mapping[key]] = value
            else:
                raise ConfigError(f"unknown key [{section}] {key}")
    for section in raw:
        if section not in _SECTION_FIELDS:
            raise ConfigError(f"unknown section [{section}]")
    if "seeds" not in raw or not all(
            f"seed_{k}" in kwargs for k in ("data", "init", "noise", "shuffle")):
        raise ConfigError("[seeds] must pin data, init, noise and shuffle")
    # single-order convenience key
    if "modulation_order" in raw.get("signal", {}):
        raise ConfigError("use modulation_orders = [..] (list)")

    if desk_scale:
        kwargs.update(DESK_SCALE)
    if seed_overrides:
        for key, value in seed_overrides.items():
            if key not in ("data", "init", "noise", "shuffle"):
                raise ConfigError(f"unknown seed override {key!r}")
            kwargs[f"seed_{key}"] = int(value)
    if out_dir is not None:
        kwargs["out_dir"] = str(out_dir)
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
