"""Windowed (received, transmitted) training datasets.

Each dataset row is a window of ``M = 2N + 1`` consecutive received
symbol slots with four real features per slot (Re/Im of the target
polarization first, then Re/Im of the other polarization).  The row's
targets describe the transmitted symbol at the center slot: its exact
complex value, its Re/Im pair for regression, and its class label plus
bit word for classification metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .frames import SymbolFrame
from .qam import QamAlphabet


@dataclass(frozen=True)
class WindowedDataset:
    inputs: np.ndarray        # (B, M, 4) float32
    reg_targets: np.ndarray   # (B, 2) float32
    class_labels: np.ndarray  # (B,) int32
    tx_symbols: np.ndarray    # (B,) complex128, exact alphabet points
    rx_symbols: np.ndarray    # (B,) complex128, received center slot
    target_bits: np.ndarray   # (B, bits_per_symbol) uint8
    alphabet: QamAlphabet
    pol: str

    @property
    def n_rows(self) -> int:
        return len(self.inputs)

    @property
    def memory(self) -> int:
        return self.inputs.shape[1]

    def sha256(self) -> str:
        """Digest of everything a training run consumes from this dataset."""
        import hashlib
        h = hashlib.sha256()
        for arr in (self.inputs, self.reg_targets, self.class_labels,
                    self.target_bits):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def build_dataset(rx: SymbolFrame, tx: SymbolFrame, n_neighbors: int,
                  pol: str = "x") -> WindowedDataset:
    """Slice aligned rx/tx streams into overlapping windows.

    Row ``k`` covers slots ``[k, k + 2N]`` and targets slot ``k + N``;
    with ``L`` input symbols there are ``L - 2N`` rows.  The transmitted
    stream must contain exact alphabet points (it defines the labels).
    """
    if rx.n_symbols != tx.n_symbols:
        raise ValueError("rx/tx streams are not aligned")
    alphabet = tx.alphabet or rx.alphabet
    if alphabet is None:
        raise ValueError("no alphabet attached to either frame")
    n = int(n_neighbors)
    if n < 0:
        raise ValueError("n_neighbors must be non-negative")
    length = rx.n_symbols
    memory = 2 * n + 1
    if length <= memory:
        raise ValueError(f"need more than {memory} symbols, got {length}")

    main = rx.pol(pol)
    other = rx.pol("y" if pol == "x" else "x")
    win_main = sliding_window_view(main, memory)
    win_other = sliding_window_view(other, memory)
    rows = length - 2 * n
    inputs = np.empty((rows, memory, 4), dtype=np.float32)
    inputs[:, :, 0] = win_main.real
    inputs[:, :, 1] = win_main.imag
    inputs[:, :, 2] = win_other.real
    inputs[:, :, 3] = win_other.imag

    tx_center = tx.pol(pol)[n:length - n]
    classes = alphabet.class_of_exact_point(tx_center)
    reg_targets = np.stack([tx_center.real, tx_center.imag],
                           axis=1).astype(np.float32)
    return WindowedDataset(
        inputs=inputs,
        reg_targets=reg_targets,
        class_labels=classes.astype(np.int32),
        tx_symbols=tx_center.copy(),
        rx_symbols=main[n:length - n].copy(),
        target_bits=alphabet.bit_table[classes],
        alphabet=alphabet,
        pol=pol,
    )


def check_dataset_independence(train: SymbolFrame, test: SymbolFrame,
                               max_lag: int = 1000) -> float:
    """Worst-case normalized circular cross-correlation magnitude.

    Scans lags ``|l| <= max_lag`` on both polarizations (streams are
    truncated to a common length first).  Values near 1 betray reuse or
    shifted copies of the same data; independent seeds stay far below
    the 0.02 acceptance threshold.
    """
    n = min(train.n_symbols, test.n_symbols)
    worst = 0.0
    for pol in ("x", "y"):
        a = train.pol(pol)[:n]
        b = test.pol(pol)[:n]
        norm = np.sqrt(np.sum(np.abs(a) ** 2) * np.sum(np.abs(b) ** 2))
        if norm == 0.0:
            raise ValueError("zero-power sequence")
        corr = np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b)))
        window = np.concatenate([corr[n - max_lag:], corr[:max_lag + 1]])
        worst = max(worst, float(np.max(np.abs(window)) / norm))
    return worst
