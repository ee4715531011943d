import numpy as np
import pytest

from fiberq.dataset import build_dataset, check_dataset_independence
from fiberq.frames import SymbolFrame
from fiberq.qam import build_alphabet, generate_bits, map_bits_dual_pol

ALPHABET = build_alphabet(16)


def symbol_pair(n_symbols=512, seed=0, noise=0.05):
    tx = map_bits_dual_pol(
        generate_bits(2 * n_symbols * 4, seed), ALPHABET, symbol_rate=1.0)
    rng = np.random.default_rng(seed + 1000)
    rx = SymbolFrame(
        tx.syms_x + noise * (rng.normal(size=n_symbols)
                             + 1j * rng.normal(size=n_symbols)),
        tx.syms_y + noise * (rng.normal(size=n_symbols)
                             + 1j * rng.normal(size=n_symbols)),
        role="received", alphabet=ALPHABET, symbol_rate=1.0)
    return rx, tx


class TestBuildDataset:
    def test_row_count_for_ssmf_memory(self):
        rx, tx = symbol_pair(n_symbols=2 ** 16)
        ds = build_dataset(rx, tx, n_neighbors=25)
        assert ds.n_rows == 2 ** 16 - 50
        assert ds.inputs.shape == (65486, 51, 4)
        assert ds.memory == 51 and ds.memory % 2 == 1

    def test_n_zero_windows_are_single_slots(self):
        rx, tx = symbol_pair(n_symbols=64)
        ds = build_dataset(rx, tx, n_neighbors=0)
        assert ds.inputs.shape == (64, 1, 4)
        assert np.allclose(ds.inputs[:, 0, 0], rx.syms_x.real.astype(np.float32))

    def test_center_slot_alignment_and_feature_order(self):
        rx, tx = symbol_pair(n_symbols=128)
        n = 3
        ds = build_dataset(rx, tx, n_neighbors=n, pol="x")
        k = 17
        center = rx.syms_x[k + n]
        other = rx.syms_y[k + n]
        assert ds.inputs[k, n, 0] == np.float32(center.real)
        assert ds.inputs[k, n, 1] == np.float32(center.imag)
        assert ds.inputs[k, n, 2] == np.float32(other.real)
        assert ds.inputs[k, n, 3] == np.float32(other.imag)
        assert ds.tx_symbols[k] == tx.syms_x[k + n]
        assert ds.rx_symbols[k] == center

    def test_targets_are_exact_alphabet_points_with_labels(self):
        rx, tx = symbol_pair()
        ds = build_dataset(rx, tx, n_neighbors=5)
        assert np.all(np.isin(ds.tx_symbols, ALPHABET.points))
        assert np.array_equal(ALPHABET.points[ds.class_labels], ds.tx_symbols)
        assert np.array_equal(ds.target_bits,
                              ALPHABET.bit_table[ds.class_labels])

    def test_y_polarization_targets(self):
        rx, tx = symbol_pair(n_symbols=64)
        ds = build_dataset(rx, tx, n_neighbors=2, pol="y")
        assert ds.tx_symbols[0] == tx.syms_y[2]
        assert ds.inputs[0, 2, 0] == np.float32(rx.syms_y[2].real)
        assert ds.inputs[0, 2, 2] == np.float32(rx.syms_x[2].real)

    def test_joint_shift_preserves_pairs(self):
        rx, tx = symbol_pair(n_symbols=256)
        ds = build_dataset(rx, tx, n_neighbors=4)
        shift = 10
        rx_s = SymbolFrame(rx.syms_x[shift:], rx.syms_y[shift:],
                           role="received", alphabet=ALPHABET)
        tx_s = SymbolFrame(tx.syms_x[shift:], tx.syms_y[shift:],
                           role="transmitted", alphabet=ALPHABET)
        ds_s = build_dataset(rx_s, tx_s, n_neighbors=4)
        assert np.array_equal(ds_s.inputs, ds.inputs[shift:])
        assert np.array_equal(ds_s.tx_symbols, ds.tx_symbols[shift:])

    def test_perturbation_only_touches_covering_windows(self):
        rx, tx = symbol_pair(n_symbols=128)
        n = 4
        ds = build_dataset(rx, tx, n_neighbors=n)
        slot = 60
        bumped = rx.syms_x.copy()
        bumped[slot] += 1.0
        rx2 = SymbolFrame(bumped, rx.syms_y, role="received",
                          alphabet=ALPHABET)
        ds2 = build_dataset(rx2, tx, n_neighbors=n)
        changed = np.flatnonzero(
            np.any(ds2.inputs != ds.inputs, axis=(1, 2)))
        expected = np.arange(slot - 2 * n, slot + 1)
        assert np.array_equal(changed, expected)

    def test_too_short_stream_rejected(self):
        rx, tx = symbol_pair(n_symbols=11)
        with pytest.raises(ValueError):
            build_dataset(rx, tx, n_neighbors=5)
        with pytest.raises(ValueError):
            build_dataset(rx, tx.trimmed(1), n_neighbors=2)


class TestIndependenceCheck:
    def test_identical_streams_hit_one(self):
        _, tx = symbol_pair(n_symbols=2 ** 14)
        assert abs(check_dataset_independence(tx, tx) - 1.0) < 1e-12

    def test_circular_shift_detected(self):
        _, tx = symbol_pair(n_symbols=2 ** 14)
        rolled = SymbolFrame(np.roll(tx.syms_x, 500), np.roll(tx.syms_y, 500),
                             role="transmitted", alphabet=ALPHABET)
        assert abs(check_dataset_independence(tx, rolled) - 1.0) < 1e-12

    def test_independent_seeds_stay_below_threshold(self):
        a = map_bits_dual_pol(generate_bits(2 * 2 ** 18 * 4, 100), ALPHABET)
        b = map_bits_dual_pol(generate_bits(2 * 2 ** 18 * 4, 200), ALPHABET)
        assert check_dataset_independence(a, b) <= 0.02
