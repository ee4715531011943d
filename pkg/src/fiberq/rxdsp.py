"""Receiver DSP chain: CDC, matched filtering, normalization, decisions.

The chain mirrors the transmitter in reverse: frequency-domain chromatic
dispersion compensation at the full sample rate, RRC matched filtering,
decimation to one sample per symbol, and a data-aided single complex
scalar normalization per polarization.  Everything is synchronous by
construction (the simulator tracks group delays exactly), so there is no
clock or carrier recovery.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft
from scipy.signal import oaconvolve

from .frames import SignalFrame, SymbolFrame
from .qam import QamAlphabet, interleave_dual_pol_bits
from .waveform import rrc_taps


def cdc(frame: SignalFrame, beta2_total_s2: float) -> SignalFrame:
    """All-pass frequency-domain dispersion compensation.

    Multiplies the spectrum by ``exp(+1j * (beta2_total / 2) * w**2)``,
    the exact inverse of the accumulated linear dispersion phase of the
    link (``beta2_total = beta2 * total length`` in s^2).
    """
    w = 2.0 * np.pi * sfft.fftfreq(frame.n_samples, d=1.0 / frame.sample_rate)
    equalizer = np.exp(0.5j * beta2_total_s2 * w ** 2)
    fields = np.vstack([frame.samples_x, frame.samples_y])
    fields = sfft.ifft(sfft.fft(fields, axis=1, workers=2) * equalizer,
                       axis=1, workers=2)
    return frame.with_samples(fields[0], fields[1])


def matched_filter_downsample(frame: SignalFrame, rolloff: float = 0.1,
                              span_symbols: int = 64,
                              alphabet: QamAlphabet | None = None) -> SymbolFrame:
    """RRC matched filter, symbol-rate decimation and edge discard.

    Returns ``n_symbols - 2 * span_symbols`` symbols: ``span_symbols``
    slots are dropped at each frame boundary because they carry the
    combined Tx + Rx filter transients.  Align the transmitted reference
    with ``SymbolFrame.trimmed(span_symbols)``.
    """
    taps = rrc_taps(frame.sps, rolloff, span_symbols)
    delay = len(taps) - 1
    if delay % 2 != 0:
        raise RuntimeError("matched filter has non-integer group delay")
    delay //= 2
    out = []
    for samples in (frame.samples_x, frame.samples_y):
        filtered = oaconvolve(samples, taps, mode="full")
        aligned = filtered[delay:delay + len(samples)]
        out.append(aligned[::frame.sps])
    n_sym = len(out[0])
    if n_sym <= 2 * span_symbols:
        raise ValueError("frame too short for the filter edge discard")
    return SymbolFrame(
        syms_x=out[0][span_symbols:n_sym - span_symbols],
        syms_y=out[1][span_symbols:n_sym - span_symbols],
        role="received",
        alphabet=alphabet,
        symbol_rate=frame.symbol_rate,
    )


def _ls_scalar(reference: np.ndarray, received: np.ndarray) -> complex:
    power = np.sum(received.real ** 2 + received.imag ** 2)
    if power == 0.0:
        raise ValueError("received sequence has zero power")
    return np.sum(reference * np.conj(received)) / power


def normalize_to_reference(received: SymbolFrame,
                           transmitted: SymbolFrame) -> SymbolFrame:
    """Data-aided phase/amplitude normalization per polarization.

    Applies the least-squares scalar ``k* = sum(x * conj(y)) / sum(|y|^2)``
    (x transmitted, y received) to each polarization; the residual
    ``x - k* y`` is orthogonal to the received sequence.
    """
    if received.n_symbols != transmitted.n_symbols:
        raise ValueError("received/transmitted lengths differ")
    kx = _ls_scalar(transmitted.syms_x, received.syms_x)
    ky = _ls_scalar(transmitted.syms_y, received.syms_y)
    return SymbolFrame(
        syms_x=received.syms_x * kx,
        syms_y=received.syms_y * ky,
        role="received",
        alphabet=received.alphabet or transmitted.alphabet,
        symbol_rate=received.symbol_rate or transmitted.symbol_rate,
    )


def hard_decision(received: SymbolFrame) -> tuple[SymbolFrame, np.ndarray]:
    """Nearest-point decision on both polarizations.

    Ties fall to the lowest class index.  The returned bits re-interleave
    the two polarizations (even words X, odd words Y), matching the
    transmitter's bit-stream order.
    """
    alphabet = received.alphabet
    if alphabet is None:
        raise ValueError("frame has no alphabet attached")
    cls_x = alphabet.nearest_class(received.syms_x)
    cls_y = alphabet.nearest_class(received.syms_y)
    decided = SymbolFrame(
        syms_x=alphabet.points[cls_x],
        syms_y=alphabet.points[cls_y],
        role="received",
        alphabet=alphabet,
        symbol_rate=received.symbol_rate,
    )
    bits = interleave_dual_pol_bits(alphabet.classes_to_bits(cls_x),
                                    alphabet.classes_to_bits(cls_y), alphabet)
    return decided, bits
