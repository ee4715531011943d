"""Neural-network post-equalizers: model assembly and training protocol.

Two trunks (a three-hidden-layer tanh MLP and a single bidirectional
LSTM layer) combine with two heads: a linear two-output regression head
recovering Re/Im of the center symbol, or a softmax classification head
over the constellation.  For a fixed seed the trunk initialization is
identical whichever head is attached, and paired runs shuffle with the
same dedicated seed stream, so regression/classification comparisons
differ in nothing but the head and the loss.

Training is epoch-wise minibatch Adam; after every epoch the model is
scored on the held-out set and early stopping tracks the best test
Q-factor (the common currency between the two heads).  The best-epoch
parameters are restored before returning.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import WindowedDataset
from .metrics import (clamp_q_db, evm_db, mi_classification,
                      mi_gaussian_lower_bound_points, q_factor_from_ber)
from .nn.layers import BiLSTM, Dense, Flatten, Tanh
from .nn.losses import mse_loss_grad, softmax_cel, softmax_forward
from .nn.model import Sequential
from .nn.optim import Adam
from .qam import QamAlphabet, build_alphabet

TRUNKS = ("mlp", "bilstm")
HEADS = ("regression", "classification")


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the partial report in .report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class EqualizerSpec:
    trunk: str
    head: str
    modulation_order: int
    n_neighbors: int
    mlp_hidden: tuple = (481, 31, 263)
    lstm_hidden: int = 226
    minibatch: int = 4331
    learning_rates: tuple = (1e-3, 5e-4, 1e-4, 5e-5)
    max_epochs: int = 5000
    patience: int = 150

    def __post_init__(self):
        if self.trunk not in TRUNKS:
            raise ValueError(f"unknown trunk {self.trunk!r}")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if self.minibatch < 1:
            raise ValueError("minibatch must be >= 1")
        if not self.patience < self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        object.__setattr__(self, "mlp_hidden", tuple(self.mlp_hidden))
        object.__setattr__(self, "learning_rates",
                           tuple(self.learning_rates))

    @property
    def memory(self) -> int:
        return 2 * self.n_neighbors + 1

    def with_head(self, head: str) -> "EqualizerSpec":
        return replace(self, head=head)


@dataclass
class EqualizerModel:
    net: Sequential
    spec: EqualizerSpec
    alphabet: QamAlphabet
    seed: int
    trunk_init_sha: str

    @property
    def head(self) -> str:
        return self.spec.head


def _sha(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def build_model(spec: EqualizerSpec, seed: int) -> EqualizerModel:
    """Assemble trunk + head; the trunk draws from its own seed stream,
    so both heads built from one seed share identical trunk weights."""
    trunk_ss, head_ss = np.random.SeedSequence(seed).spawn(2)
    trunk_rng = np.random.default_rng(trunk_ss)
    head_rng = np.random.default_rng(head_ss)

    memory = spec.memory
    layers = []
    if spec.trunk == "mlp":
        layers.append(Flatten())
        width_in = memory * 4
        for width in spec.mlp_hidden:
            layers.append(Dense(width_in, width, trunk_rng))
            layers.append(Tanh())
            width_in = width
    else:
        layers.append(BiLSTM(4, spec.lstm_hidden, trunk_rng))
        layers.append(Flatten())
        width_in = memory * 2 * spec.lstm_hidden
    trunk_init_sha = _sha(*[p for layer in layers
                            for p in layer.params().values()])

    n_out = 2 if spec.head == "regression" else spec.modulation_order
    layers.append(Dense(width_in, n_out, head_rng))
    return EqualizerModel(net=Sequential(layers), spec=spec,
                          alphabet=build_alphabet(spec.modulation_order),
                          seed=seed, trunk_init_sha=trunk_init_sha)


@dataclass
class EvalResult:
    loss: float
    ber: float
    ser: float
    q_db: float
    evm_db: float
    mi_bits: float


def _predicted_symbols(model: EqualizerModel, out: np.ndarray) -> np.ndarray:
    if model.head == "regression":
        return out[:, 0].astype(np.float64) + 1j * out[:, 1].astype(np.float64)
    probs = softmax_forward(out.astype(np.float64))
    return model.alphabet.points[np.argmax(probs, axis=1)]


def evaluate(model: EqualizerModel, ds: WindowedDataset,
             batch_size: int = 8192) -> EvalResult:
    """Score a frozen model on a dataset (loss, Q, EVM, MI)."""
    out = model.net.predict(ds.inputs, batch_size)
    alphabet = model.alphabet
    if model.head == "regression":
        diff = out - ds.reg_targets
        loss = float(np.mean(diff.astype(np.float64) ** 2))
        soft = out[:, 0].astype(np.float64) + 1j * out[:, 1].astype(np.float64)
        classes = alphabet.nearest_class(soft)
        mi = mi_gaussian_lower_bound_points(soft, ds.class_labels,
                                            alphabet.order)
        evm = evm_db(soft, ds.tx_symbols)
    else:
        loss, _, probs = softmax_cel(out.astype(np.float64), ds.class_labels)
        classes = np.argmax(probs, axis=1)
        mi = mi_classification(probs, ds.class_labels, check_uniform=False)
        evm = evm_db(alphabet.points[classes], ds.tx_symbols)
    bits = alphabet.bit_table[classes]
    ber = float(np.mean(bits != ds.target_bits))
    ser = float(np.mean(classes != ds.class_labels))
    return EvalResult(loss=loss, ber=ber, ser=ser,
                      q_db=q_factor_from_ber(ber), evm_db=evm, mi_bits=mi)


@dataclass
class TrainReport:
    """Per-epoch training history plus the early-stopping outcome.

    CSV columns (one row per epoch): epoch, train_loss, test_loss,
    train_q_db, train_q_flag, test_q_db, test_q_flag, train_mi_bits,
    test_mi_bits.  Infinite Q values are clamped to +/-99.99 dB with the
    flag column carrying their sign.
    """

    head: str
    learning_rate: float
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    train_q_db: list = field(default_factory=list)
    test_q_db: list = field(default_factory=list)
    train_mi_bits: list = field(default_factory=list)
    test_mi_bits: list = field(default_factory=list)
    best_epoch: int = -1
    best_test_q_db: float = -math.inf
    best_eval: EvalResult | None = None
    best_train_eval: EvalResult | None = None
    stopped_early: bool = False
    wall_clock_s: float = 0.0
    fairness: dict = field(default_factory=dict)

    @property
    def epochs_run(self) -> int:
        return len(self.test_q_db)

    CSV_HEADER = ("epoch,train_loss,test_loss,train_q_db,train_q_flag,"
                  "test_q_db,test_q_flag,train_mi_bits,test_mi_bits")

    def to_csv(self, path) -> None:
        lines = [self.CSV_HEADER]
        for e in range(self.epochs_run):
            tq, tf = clamp_q_db(self.train_q_db[e])
            vq, vf = clamp_q_db(self.test_q_db[e])
            lines.append(",".join([
                str(e),
                f"{self.train_loss[e]:.10g}", f"{self.test_loss[e]:.10g}",
                f"{tq:.10g}", str(tf), f"{vq:.10g}", str(vf),
                f"{self.train_mi_bits[e]:.10g}",
                f"{self.test_mi_bits[e]:.10g}",
            ]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def train(model: EqualizerModel, train_ds: WindowedDataset,
          test_ds: WindowedDataset, learning_rate: float,
          shuffle_seed: int, max_epochs: int | None = None,
          patience: int | None = None,
          minibatch: int | None = None) -> TrainReport:
    """Minibatch Adam with test-Q early stopping and best-epoch restore.

    One epoch is one shuffled pass over the training rows.  Improvement
    means a strictly larger test Q-factor; after ``patience + 1``
    consecutive non-improving epochs training stops (patience=0 stops at
    the first non-improving epoch).  Deterministic for fixed inputs,
    seed and thread count.
    """
    spec = model.spec
    max_epochs = spec.max_epochs if max_epochs is None else max_epochs
    patience = spec.patience if patience is None else patience
    minibatch = spec.minibatch if minibatch is None else minibatch
    if train_ds.alphabet.order != spec.modulation_order:
        raise ValueError("dataset and model modulation order differ")

    rng = np.random.default_rng(shuffle_seed)
    optimizer = Adam(learning_rate)
    params = model.net.param_list()
    report = TrainReport(head=model.head, learning_rate=learning_rate)
    report.fairness = {
        "train_dataset_sha": train_ds.sha256(),
        "test_dataset_sha": test_ds.sha256(),
        "trunk_init_sha": model.trunk_init_sha,
    }
    started = time.perf_counter()
    n_rows = train_ds.n_rows
    regression = model.head == "regression"
    best_snapshot = None
    wait = 0

    for epoch in range(max_epochs):
        order = rng.permutation(n_rows)
        if epoch == 0:
            report.fairness["shuffle_epoch0_sha"] = _sha(order)
        for start in range(0, n_rows, minibatch):
            idx = order[start:start + minibatch]
            out = model.net.forward(train_ds.inputs[idx])
            if regression:
                loss, grad = mse_loss_grad(out, train_ds.reg_targets[idx])
            else:
                loss, grad, _ = softmax_cel(out, train_ds.class_labels[idx])
            if not math.isfinite(loss):
                report.wall_clock_s = time.perf_counter() - started
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, "
                    f"batch offset {start} (lr={learning_rate})", report)
            model.net.zero_grads()
            model.net.backward(grad.astype(out.dtype, copy=False))
            optimizer.step(params, model.net.grad_list())

        train_eval = evaluate(model, train_ds)
        test_eval = evaluate(model, test_ds)
        report.train_loss.append(train_eval.loss)
        report.test_loss.append(test_eval.loss)
        report.train_q_db.append(train_eval.q_db)
        report.test_q_db.append(test_eval.q_db)
        report.train_mi_bits.append(train_eval.mi_bits)
        report.test_mi_bits.append(test_eval.mi_bits)

        # ties on Q (e.g. error-free epochs) break toward lower test loss,
        # so training keeps refining soft outputs after Q saturates
        improved = test_eval.q_db > report.best_test_q_db or (
            test_eval.q_db == report.best_test_q_db
            and report.best_eval is not None
            and test_eval.loss < report.best_eval.loss)
        if improved:
            report.best_test_q_db = test_eval.q_db
            report.best_epoch = epoch
            report.best_eval = test_eval
            report.best_train_eval = train_eval
            best_snapshot = model.net.snapshot()
            wait = 0
        else:
            wait += 1
            if wait > patience:
                report.stopped_early = True
                break

    if best_snapshot is not None:
        model.net.restore(best_snapshot)
    report.wall_clock_s = time.perf_counter() - started
    return report


def equalize(model: EqualizerModel, ds: WindowedDataset,
             batch_size: int = 8192) -> np.ndarray:
    """Apply a frozen equalizer to a dataset.

    Regression models return the recovered complex symbols (one per
    row); classification models return the (rows, order) matrix of
    class probabilities.  ``classifier_symbols`` maps the latter to hard
    symbols.
    """
    out = model.net.predict(ds.inputs, batch_size)
    if model.head == "regression":
        return out[:, 0].astype(np.float64) + 1j * out[:, 1].astype(np.float64)
    return softmax_forward(out.astype(np.float64))


def classifier_symbols(probs: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    return alphabet.points[np.argmax(probs, axis=1)]
