"""Self-describing checkpoint files (npz with a JSON metadata record).

A checkpoint stores everything needed to resume training exactly where
it stopped: layer topology, float32 parameters, Adam moments and step
counter, the shuffle generator state and the epoch counter.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def save_checkpoint(path, model, optimizer=None, rng=None, epoch=0,
                    meta=None) -> None:
    arrays = {name: p for name, p in model.param_items()}
    record = {
        "format": "fiberq-checkpoint-1",
        "epoch": int(epoch),
        "param_names": [name for name, _ in model.param_items()],
        "meta": meta or {},
    }
    if optimizer is not None:
        state = optimizer.state_dict()
        record["adam"] = {k: state[k] for k in
                          ("learning_rate", "beta1", "beta2", "eps", "t")}
        for j, (m, v) in enumerate(zip(state["m"], state["v"])):
            arrays[f"adam_m{j}"] = m
            arrays[f"adam_v{j}"] = v
    if rng is not None:
        record["rng_state"] = rng.bit_generator.state
    arrays["metadata_json"] = np.frombuffer(
        json.dumps(record).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Returns (param dict, record dict, adam moment arrays or None)."""
    with np.load(Path(path)) as data:
        record = json.loads(bytes(data["metadata_json"]).decode())
        params = {name: data[name] for name in record["param_names"]}
        moments = None
        if "adam" in record:
            n = len(record["param_names"])
            moments = ([data[f"adam_m{j}"] for j in range(n)],
                       [data[f"adam_v{j}"] for j in range(n)])
    return params, record, moments


def restore_model(model, params) -> None:
    for name, p in model.param_items():
        if name not in params:
            raise ValueError(f"checkpoint is missing parameter {name}")
        if params[name].shape != p.shape:
            raise ValueError(f"shape mismatch for {name}")
        p[...] = params[name]


def restore_optimizer(optimizer, record, moments) -> None:
    state = dict(record["adam"])
    state["m"], state["v"] = moments
    optimizer.load_state_dict(state)


def restore_rng(record):
    rng = np.random.default_rng()
    rng.bit_generator.state = record["rng_state"]
    return rng
