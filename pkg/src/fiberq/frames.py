"""Dual-polarization signal/symbol containers.

A ``SignalFrame`` is the analog-equivalent waveform flowing through the
transmitter, the fiber and the receiver front end; a ``SymbolFrame`` holds
one complex value per symbol slot (transmitted references or received
decisions candidates).  Frames are immutable values: arrays are copied on
construction and marked read-only, so frames can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .qam import QamAlphabet


def _frozen_complex(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    if arr.ndim != 1:
        raise ValueError("polarization data must be one-dimensional")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SignalFrame:
    """Dual-polarization complex baseband waveform with rate metadata.

    The field envelope is dimensionless until a launch power is applied,
    after which mean power is in watts.  ``sample_rate`` must equal
    ``symbol_rate * sps`` exactly.
    """

    samples_x: np.ndarray
    samples_y: np.ndarray
    sample_rate: float
    symbol_rate: float
    sps: int

    def __post_init__(self):
        object.__setattr__(self, "samples_x", _frozen_complex(self.samples_x))
        object.__setattr__(self, "samples_y", _frozen_complex(self.samples_y))
        if len(self.samples_x) != len(self.samples_y):
            raise ValueError("polarizations must have equal length")
        if self.sps < 1 or int(self.sps) != self.sps:
            raise ValueError("sps must be a positive integer")
        object.__setattr__(self, "sps", int(self.sps))
        if not np.isclose(self.sample_rate, self.symbol_rate * self.sps,
                          rtol=1e-12, atol=0.0):
            raise ValueError("sample_rate must equal symbol_rate * sps")

    @property
    def n_samples(self) -> int:
        return len(self.samples_x)

    @property
    def mean_power_w(self) -> float:
        """Total mean power summed over both polarizations."""
        px = np.mean(np.abs(self.samples_x) ** 2)
        py = np.mean(np.abs(self.samples_y) ** 2)
        return float(px + py)

    def with_samples(self, samples_x, samples_y) -> "SignalFrame":
        return replace(self, samples_x=samples_x, samples_y=samples_y)


@dataclass(frozen=True)
class SymbolFrame:
    """One complex value per symbol slot on each polarization.

    ``role`` records which side of the link produced the symbols
    ("transmitted" or "received"); ``symbol_rate`` is carried for
    serialization and may be 0.0 when unknown.
    """

    syms_x: np.ndarray
    syms_y: np.ndarray
    role: str
    alphabet: Optional["QamAlphabet"] = None
    symbol_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "syms_x", _frozen_complex(self.syms_x))
        object.__setattr__(self, "syms_y", _frozen_complex(self.syms_y))
        if len(self.syms_x) != len(self.syms_y):
            raise ValueError("polarizations must have equal length")
        if self.role not in ("transmitted", "received"):
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def n_symbols(self) -> int:
        return len(self.syms_x)

    def pol(self, which: str) -> np.ndarray:
        if which == "x":
            return self.syms_x
        if which == "y":
            return self.syms_y
        raise ValueError("polarization must be 'x' or 'y'")

    def trimmed(self, n_edge: int) -> "SymbolFrame":
        """Drop ``n_edge`` symbols from each end of both polarizations."""
        if n_edge == 0:
            return self
        if 2 * n_edge >= self.n_symbols:
            raise ValueError("trim exceeds frame length")
        return replace(self, syms_x=self.syms_x[n_edge:-n_edge],
                       syms_y=self.syms_y[n_edge:-n_edge])
