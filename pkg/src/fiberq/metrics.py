"""Performance metrics: BER/SER, Q-factor, EVM and mutual information.

Mutual information comes in two flavors matching the two equalizer
heads: for classifiers it is ``log2(order) - CEL`` with the cross
entropy in bits; for soft symbol outputs it is a Gaussian-mixture lower
bound fitted per transmitted class.  The lower bound underestimates the
true MI by construction and is never reported as exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcinv, logsumexp

from .frames import SymbolFrame
from .nn.losses import cel_loss
from .qam import QamAlphabet

Q_CLAMP_DB = 99.99
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MetricReport:
    ber: float
    ser: float
    q_db: float
    evm_db: float
    mi_bits: float
    n_symbols: int
    method: str   # hard-decision | classification-cel | gaussian-lower-bound

    _METHODS = ("hard-decision", "classification-cel", "gaussian-lower-bound")

    def __post_init__(self):
        if self.method not in self._METHODS:
            raise ValueError(f"unknown method {self.method!r}")


def ber_ser(decided_bits, reference_bits, decided_symbols,
            reference_symbols) -> tuple[float, float]:
    """Bit and symbol error ratios between aligned sequences."""
    decided_bits = np.asarray(decided_bits)
    reference_bits = np.asarray(reference_bits)
    if decided_bits.shape != reference_bits.shape:
        raise ValueError("bit sequences differ in length")
    decided_symbols = np.asarray(decided_symbols)
    reference_symbols = np.asarray(reference_symbols)
    if decided_symbols.shape != reference_symbols.shape:
        raise ValueError("symbol sequences differ in length")
    ber = float(np.mean(decided_bits != reference_bits))
    ser = float(np.mean(decided_symbols != reference_symbols))
    return ber, ser


def q_factor_from_ber(ber: float) -> float:
    """Q = 20*log10(sqrt(2) * erfcinv(2*ber)) in dB.

    Out-of-domain inputs return signed infinity sentinels: +inf for an
    error-free measurement, -inf for ber >= 0.5.
    """
    if ber <= 0.0:
        return math.inf
    if ber >= 0.5:
        return -math.inf
    return float(20.0 * np.log10(np.sqrt(2.0) * erfcinv(2.0 * ber)))


def clamp_q_db(q_db: float) -> tuple[float, int]:
    """Map infinities to +/-99.99 dB for tabular output; flag = sign."""
    if math.isinf(q_db):
        return (Q_CLAMP_DB if q_db > 0 else -Q_CLAMP_DB,
                1 if q_db > 0 else -1)
    return q_db, 0


def evm_db(received, reference) -> float:
    """10*log10(sum |y - x|^2 / sum |x|^2), floored at -100 dB."""
    received = np.asarray(received)
    reference = np.asarray(reference)
    if received.shape != reference.shape:
        raise ValueError("sequences differ in length")
    ref_power = np.sum(np.abs(reference) ** 2)
    if ref_power == 0.0:
        raise ValueError("reference has zero power")
    err = np.sum(np.abs(received - reference) ** 2)
    if err == 0.0:
        return -100.0
    return float(max(10.0 * np.log10(err / ref_power), -100.0))


def mi_classification(probs, labels, check_uniform: bool = True) -> float:
    """Classifier mutual information: log2(order) - CEL, in bits/symbol.

    Valid only when the transmitted labels are (empirically) uniform;
    the frequency check rejects inputs further than 5 multinomial sigma
    from uniformity.
    """
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    order = probs.shape[1]
    if check_uniform:
        counts = np.bincount(labels, minlength=order)
        p = 1.0 / order
        sigma = math.sqrt(len(labels) * p * (1.0 - p))
        if np.max(np.abs(counts - len(labels) * p)) >= 5.0 * sigma + 1e-12:
            raise ValueError("class labels deviate from uniform by >= 5 sigma")
    return math.log2(order) - cel_loss(probs, labels)


def _fit_class_gaussians(points, labels, order):
    """Per-class 2-D mean/covariance with trace-scaled regularization."""
    means = np.zeros((order, 2))
    covs = np.zeros((order, 2, 2))
    flagged = False
    xy = np.stack([points.real, points.imag], axis=1)
    global_trace = float(np.var(xy[:, 0]) + np.var(xy[:, 1]))
    for k in range(order):
        sel = xy[labels == k]
        if len(sel) < 2:
            flagged = True
            means[k] = sel.mean(axis=0) if len(sel) else 0.0
            covs[k] = np.eye(2) * max(global_trace, 1e-30) / 2.0
            continue
        means[k] = sel.mean(axis=0)
        centered = sel - means[k]
        cov = centered.T @ centered / len(sel)
        if np.linalg.det(cov) <= 0.0:
            flagged = True
        tau = 1e-9 * np.trace(cov) / 2.0
        if tau <= 0.0:
            tau = 1e-30
            flagged = True
        covs[k] = cov + tau * np.eye(2)
    return means, covs, flagged


def mi_gaussian_lower_bound_points(points, labels, order: int) -> float:
    """Gaussian-mixture MI lower bound from soft symbols and labels.

    Fits one full-covariance 2-D Gaussian per transmitted class (Re/Im
    as the two dimensions) and evaluates the empirical mean of
    ``log2[p(y|x_k) / sum_i p(i) p(y|x_i)]`` with uniform priors
    ``p(i) = 1/order``.  The ratio is bounded by ``order`` pointwise, so
    the estimate never exceeds ``log2(order)``.  Negative estimates are
    clamped to zero.
    """
    points = np.asarray(points, dtype=np.complex128)
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=order)
    if np.min(counts) < 100:
        warnings.warn("fewer than 100 samples in some class; the MI lower "
                      "bound will be unreliable", stacklevel=2)
    means, covs, flagged = _fit_class_gaussians(points, labels, order)
    if flagged:
        warnings.warn("degenerate class covariance regularized",
                      stacklevel=2)

    xy = np.stack([points.real, points.imag], axis=1)
    log_pdf = np.empty((len(points), order))
    for k in range(order):
        inv = np.linalg.inv(covs[k])
        _, logdet = np.linalg.slogdet(covs[k])
        d = xy - means[k]
        quad = (d @ inv * d).sum(axis=1)
        log_pdf[:, k] = -0.5 * (quad + logdet) - math.log(2.0 * math.pi)
    log_num = log_pdf[np.arange(len(points)), labels]
    log_den = logsumexp(log_pdf, axis=1) - math.log(order)
    mi = float(np.mean(log_num - log_den) / _LN2)
    if mi < 0.0:
        warnings.warn("negative MI estimate clamped to zero", stacklevel=2)
        return 0.0
    return mi


def mi_gaussian_lower_bound(received: SymbolFrame,
                            transmitted: SymbolFrame,
                            pol: str = "x") -> float:
    """Frame-level wrapper around :func:`mi_gaussian_lower_bound_points`."""
    alphabet = transmitted.alphabet or received.alphabet
    if alphabet is None:
        raise ValueError("no alphabet attached")
    labels = alphabet.class_of_exact_point(transmitted.pol(pol))
    return mi_gaussian_lower_bound_points(received.pol(pol), labels,
                                          alphabet.order)


def hard_decision_report(received: SymbolFrame, transmitted: SymbolFrame,
                         mi: float | None = None) -> MetricReport:
    """Hard-decision metrics of a received frame against the reference."""
    from .rxdsp import hard_decision

    alphabet = received.alphabet or transmitted.alphabet
    if alphabet is None:
        raise ValueError("no alphabet attached")
    decided, bits = hard_decision(
        received if received.alphabet else
        SymbolFrame(received.syms_x, received.syms_y, role="received",
                    alphabet=alphabet, symbol_rate=received.symbol_rate))
    _, ref_bits = hard_decision(
        transmitted if transmitted.alphabet else
        SymbolFrame(transmitted.syms_x, transmitted.syms_y, role="transmitted",
                    alphabet=alphabet, symbol_rate=transmitted.symbol_rate))
    ber, ser = ber_ser(bits, ref_bits,
                       np.concatenate([decided.syms_x, decided.syms_y]),
                       np.concatenate([transmitted.syms_x,
                                       transmitted.syms_y]))
    if mi is None:
        mi = mi_gaussian_lower_bound(received, transmitted)
    return MetricReport(
        ber=ber, ser=ser, q_db=q_factor_from_ber(ber),
        evm_db=evm_db(np.concatenate([received.syms_x, received.syms_y]),
                      np.concatenate([transmitted.syms_x,
                                      transmitted.syms_y])),
        mi_bits=mi, n_symbols=2 * received.n_symbols, method="hard-decision")
