"""Fast invariant suite behind the ``selftest`` CLI subcommand.

Each check is a reduced-size version of a library invariant: physics
conservation laws, DSP round trips, metric identities, gradient
correctness and training determinism.  The whole suite runs in well
under a minute; it is a smoke screen for broken installs, not a
replacement for the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

from .channel import FiberSpec, beta2_from_dispersion, link_preset, propagate_link, propagate_span
from .dataset import build_dataset
from .equalizer import EqualizerSpec, build_model, train
from .frames import SignalFrame, SymbolFrame
from .metrics import mi_classification, mi_gaussian_lower_bound_points, q_factor_from_ber
from .nn.layers import BiLSTM, Dense, Softmax, Tanh
from .nn.losses import mse_loss_grad, softmax_cel
from .nn.optim import Adam
from .qam import build_alphabet, generate_bits, map_bits_dual_pol
from .rxdsp import cdc, hard_decision, matched_filter_downsample, normalize_to_reference
from .waveform import raised_cosine_response, rrc_shape, rrc_taps, set_launch_power

RATE = 34.4e9


def _tx(n_symbols, order=16, seed=0, power_dbm=0.0):
    alphabet = build_alphabet(order)
    bits = generate_bits(2 * n_symbols * alphabet.bits_per_symbol, seed)
    syms = map_bits_dual_pol(bits, alphabet, symbol_rate=RATE)
    return alphabet, syms, set_launch_power(rrc_shape(syms), power_dbm)


def _numeric_grad(func, x, eps=1e-6):
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        fp = func()
        x[idx] = orig - eps
        fm = func()
        x[idx] = orig
        grad[idx] = (fp - fm) / (2.0 * eps)
    return grad


def _grad_ok(layer, x, rng, tol=1e-5):
    weights = rng.normal(size=layer.forward(x).shape)
    layer.zero_grads()
    layer.forward(x)
    grad_in = layer.backward(weights.copy())

    def objective():
        return float(np.sum(weights * layer.forward(x)))

    checks = [(grad_in, _numeric_grad(objective, x))]
    checks += [(layer.grads()[name], _numeric_grad(objective, p))
               for name, p in layer.params().items()]
    worst = max(np.max(np.abs(a - n)) / max(np.max(np.abs(n)), 1e-8)
                for a, n in checks)
    return worst <= tol, f"max rel err {worst:.2e}"


def check_alphabets():
    for order in (16, 32, 64):
        alphabet = build_alphabet(order)
        if abs(np.mean(np.abs(alphabet.points) ** 2) - 1.0) > 1e-12:
            return False, f"{order}-QAM power off"
        if len(np.unique(alphabet.points)) != order:
            return False, f"{order}-QAM duplicate points"
    return True, "16/32/64-QAM unit power, bijective labels"


def check_rrc():
    taps = rrc_taps(8, 0.1, 64)
    if abs(np.sum(taps ** 2) - 1.0) > 1e-9:
        return False, "tap energy"
    spectrum = np.abs(np.fft.fft(np.fft.ifftshift(taps))) ** 2
    expected = raised_cosine_response(np.fft.fftfreq(513, 1 / 8), 0.1)
    err = np.max(np.abs(spectrum / spectrum[0] - expected))
    return err < 1e-6, f"spectrum err {err:.1e}"


def check_back_to_back():
    alphabet, syms, wave = _tx(2 ** 12, seed=3)
    rx = matched_filter_downsample(wave, alphabet=alphabet)
    ref = syms.trimmed(64)
    norm = normalize_to_reference(rx, ref)
    decided, _ = hard_decision(norm)
    errors = int(np.sum(decided.syms_x != ref.syms_x))
    evm = 10 * np.log10(np.sum(np.abs(norm.syms_x - ref.syms_x) ** 2)
                        / np.sum(np.abs(ref.syms_x) ** 2))
    return (errors == 0 and evm <= -45.0), f"{errors} errors, EVM {evm:.1f} dB"


def check_loss_law():
    _, _, wave = _tx(2 ** 11, seed=4)
    out = propagate_span(wave, FiberSpec(0.2, 17.0, 0.0, 100.0, 1.0),
                         beta2_from_dispersion(17.0, 1550.0))
    ratio = out.mean_power_w / wave.mean_power_w / 10.0 ** (-2.0)
    return abs(ratio - 1.0) < 1e-9, f"rel err {abs(ratio-1):.1e}"


def check_cw_phase():
    power, gamma, length = 1e-3, 1.2, 100.0
    frame = SignalFrame(np.full(2048, math.sqrt(power), complex),
                        np.zeros(2048, complex),
                        sample_rate=8 * RATE, symbol_rate=RATE, sps=8)
    out = propagate_span(frame, FiberSpec(0.0, 0.0, gamma, length, 1.0), 0.0)
    expected = (8.0 / 9.0) * gamma * power * length
    wrapped = (expected + math.pi) % (2 * math.pi) - math.pi
    err = np.max(np.abs(np.angle(out.samples_x / frame.samples_x) - wrapped))
    return err < 1e-6 * expected, f"phase err {err:.1e} rad"


def check_linear_link_inverse():
    _, _, wave = _tx(2 ** 11, seed=5)
    link = link_preset("ssmf_5x100", n_spans=1, ase_enabled=False,
                       gamma_per_w_km=0.0)
    out, _ = propagate_link(wave, link)
    rec = cdc(out, beta2_from_dispersion(17.0, 1550.0) * 100.0)
    err = np.sum(np.abs(rec.samples_x - wave.samples_x) ** 2)
    ref = np.sum(np.abs(wave.samples_x) ** 2)
    evm = 10 * np.log10(err / ref)
    return evm <= -40.0, f"EVM {evm:.1f} dB"


def check_ase_variance():
    import scipy.constants as const
    from .channel import amplify_with_ase
    n = 2 ** 16
    frame = SignalFrame(np.zeros(n, complex), np.zeros(n, complex),
                        sample_rate=8 * RATE, symbol_rate=RATE, sps=8)
    out = amplify_with_ase(frame, 10.0, 4.5, 1550.0,
                           np.random.default_rng(6))
    nu = const.c / 1550e-9
    sigma2 = 9.0 * const.h * nu * 10 ** 0.45 / 2.0 * frame.sample_rate
    ratio = np.mean(np.abs(out.samples_x) ** 2) / sigma2
    return abs(ratio - 1.0) < 0.05, f"variance ratio {ratio:.3f}"


def check_normalization():
    rng = np.random.default_rng(7)
    x = rng.normal(size=128) + 1j * rng.normal(size=128)
    y = 0.5 * np.exp(0.4j) * x + 0.01 * (rng.normal(size=128)
                                         + 1j * rng.normal(size=128))
    frame_x = SymbolFrame(x, x, role="transmitted")
    frame_y = SymbolFrame(y, y, role="received")
    out = normalize_to_reference(frame_y, frame_x)
    k = out.syms_x[0] / y[0]
    residual = np.abs(np.sum((x - k * y) * np.conj(y)))
    return residual < 1e-9 * np.sum(np.abs(y) ** 2), f"residual {residual:.1e}"


def check_gradients():
    rng = np.random.default_rng(8)
    layers = [
        (Dense(5, 4, rng, dtype=np.float64), rng.normal(size=(3, 5))),
        (Tanh(), rng.normal(size=(3, 4))),
        (Softmax(), rng.normal(size=(3, 4))),
        (BiLSTM(3, 2, rng, dtype=np.float64), rng.normal(size=(2, 4, 3))),
    ]
    for layer, x in layers:
        ok, detail = _grad_ok(layer, x, rng)
        if not ok:
            return False, f"{type(layer).__name__}: {detail}"
    return True, "dense/tanh/softmax/bilstm vs finite differences"


def check_losses_and_adam():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    loss, grad = mse_loss_grad(pred, pred - 1.0)
    if loss != 1.0:
        return False, "mse"
    logits = np.array([[0.0, 0.0]])
    fused, _, probs = softmax_cel(logits, np.array([0]))
    if abs(fused - 1.0) > 1e-12 or abs(probs[0, 0] - 0.5) > 1e-12:
        return False, "fused cel"
    p = np.zeros(1)
    opt = Adam(1e-3)
    opt.step([p], [np.array([2.0])])
    if abs(-p[0] - 1e-3 * 2.0 / (2.0 + opt.eps)) > 1e-12:
        return False, "adam first step"
    return True, "mse/cel identities, adam first step"


def check_metric_identities():
    q = q_factor_from_ber(1e-3)
    if abs(q - 9.80) > 0.01:
        return False, f"q(1e-3) = {q:.3f}"
    if q_factor_from_ber(0.0) != math.inf or q_factor_from_ber(0.5) != -math.inf:
        return False, "sentinels"
    labels = np.tile(np.arange(16), 16)
    if mi_classification(np.eye(16)[labels], labels) != 4.0:
        return False, "one-hot MI"
    if abs(mi_classification(np.full((256, 16), 1 / 16), labels)) > 1e-12:
        return False, "uniform MI"
    rng = np.random.default_rng(9)
    pts = build_alphabet(16).points[labels] + 0.05 * (
        rng.normal(size=256) + 1j * rng.normal(size=256))
    mi = mi_gaussian_lower_bound_points(pts, labels, 16)
    return mi <= 4.0 + 1e-9, f"gaussian bound {mi:.3f} bits"


def check_training_determinism():
    alphabet = build_alphabet(16)
    tx = map_bits_dual_pol(generate_bits(2 * 512 * 4, 10), alphabet,
                           symbol_rate=1.0)
    rx = SymbolFrame(tx.syms_x, tx.syms_y, role="received",
                     alphabet=alphabet)
    ds = build_dataset(rx, tx, 0)
    spec = EqualizerSpec(trunk="mlp", head="regression",
                         modulation_order=16, n_neighbors=0,
                         mlp_hidden=(8, 8, 8), minibatch=128,
                         max_epochs=2, patience=1)

    def run():
        model = build_model(spec, seed=11)
        train(model, ds, ds, 1e-3, shuffle_seed=12)
        return model.net.snapshot()

    a, b = run(), run()
    same = all(np.array_equal(p, q) for p, q in zip(a, b))
    return same, "two seeded runs bit-identical"


CHECKS = [
    ("qam-alphabets", check_alphabets),
    ("rrc-filter", check_rrc),
    ("back-to-back-chain", check_back_to_back),
    ("fiber-loss-law", check_loss_law),
    ("cw-nonlinear-phase", check_cw_phase),
    ("linear-link-cdc-inverse", check_linear_link_inverse),
    ("ase-variance", check_ase_variance),
    ("normalization-least-squares", check_normalization),
    ("gradient-checks", check_gradients),
    ("losses-and-adam", check_losses_and_adam),
    ("metric-identities", check_metric_identities),
    ("training-determinism", check_training_determinism),
]


def run_selftest(verbose=True) -> bool:
    import warnings
    all_ok = True
    for name, check in CHECKS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                ok, detail = check()
            except Exception as err:   # a crash is a failure, not an abort
                ok, detail = False, f"raised {type(err).__name__}: {err}"
        all_ok &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
