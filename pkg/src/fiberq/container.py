"""FQSF binary container for signal and symbol frames.

Layout (normative; little-endian, no padding)::

    offset  size  field
    0       4     magic "FQSF"
    4       2     format version (u16, currently 1)
    6       1     role (u8): 0 = transmitted symbols, 1 = received symbols,
                             2 = waveform
    7       2     modulation order MF (u16, 0 if not attached)
    9       2     samples per symbol (u16, 1 for symbol frames)
    11      8     symbol rate in Hz (f64, 0.0 if unknown)
    19      8     length = complex samples per polarization (u64)
    27      ...   payload: length records of four f64 values
                  (re_x, im_x, re_y, im_y), interleaved

Files written by one run are byte-reusable by any later run, which is
what makes cached datasets shareable.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .frames import SignalFrame, SymbolFrame
from .qam import build_alphabet

MAGIC = b"FQSF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBHHdQ")

_ROLE_TX = 0
_ROLE_RX = 1
_ROLE_WAVEFORM = 2
_ROLE_FROM_NAME = {"transmitted": _ROLE_TX, "received": _ROLE_RX}
_ROLE_TO_NAME = {v: k for k, v in _ROLE_FROM_NAME.items()}


def _payload(x: np.ndarray, y: np.ndarray) -> bytes:
    out = np.empty((len(x), 4), dtype="<f8")
    out[:, 0] = x.real
    out[:, 1] = x.imag
    out[:, 2] = y.real
    out[:, 3] = y.imag
    return out.tobytes()


def write_frame(path, frame) -> None:
    """Serialize a SignalFrame or SymbolFrame to an FQSF file."""
    path = Path(path)
    if isinstance(frame, SignalFrame):
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, _ROLE_WAVEFORM, 0,
                              frame.sps, frame.symbol_rate, frame.n_samples)
        body = _payload(frame.samples_x, frame.samples_y)
    elif isinstance(frame, SymbolFrame):
        mf = frame.alphabet.order if frame.alphabet is not None else 0
        header = _HEADER.pack(MAGIC, FORMAT_VERSION,
                              _ROLE_FROM_NAME[frame.role], mf, 1,
                              frame.symbol_rate, frame.n_symbols)
        body = _payload(frame.syms_x, frame.syms_y)
    else:
        raise TypeError(f"cannot serialize {type(frame).__name__}")
    path.write_bytes(header + body)


def read_frame(path):
    """Read an FQSF file back into the frame type recorded in its header."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated FQSF header")
    magic, version, role, mf, sps, symbol_rate, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + 32 * length
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(-1, 4)
    x = data[:, 0] + 1j * data[:, 1]
    y = data[:, 2] + 1j * data[:, 3]
    if role == _ROLE_WAVEFORM:
        return SignalFrame(samples_x=x, samples_y=y,
                           sample_rate=symbol_rate * sps,
                           symbol_rate=symbol_rate, sps=sps)
    if role in _ROLE_TO_NAME:
        alphabet = build_alphabet(mf) if mf else None
        return SymbolFrame(syms_x=x, syms_y=y, role=_ROLE_TO_NAME[role],
                           alphabet=alphabet, symbol_rate=symbol_rate)
    raise ValueError(f"{path}: unknown role code {role}")
