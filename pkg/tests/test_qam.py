import numpy as np
import pytest

from fiberq.qam import (SUPPORTED_ORDERS, build_alphabet, generate_bits,
                        interleave_dual_pol_bits, map_bits_dual_pol,
                        map_symbols)


def max_normalized_xcorr(a, b, max_lag):
    """Brute-force normalized circular cross-correlation magnitude."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    norm = np.sqrt(np.sum(np.abs(a) ** 2) * np.sum(np.abs(b) ** 2))
    best = 0.0
    for lag in range(-max_lag, max_lag + 1):
        c = np.abs(np.sum(a * np.conj(np.roll(b, lag))))
        best = max(best, c / norm)
    return best


class TestGenerateBits:
    def test_deterministic_for_fixed_seed(self):
        assert np.array_equal(generate_bits(8, 1234), generate_bits(8, 1234))

    def test_distinct_seeds_differ(self):
        assert not np.array_equal(generate_bits(64, 1), generate_bits(64, 2))

    def test_rejects_empty_request(self):
        with pytest.raises(ValueError):
            generate_bits(0, 7)

    def test_mean_close_to_half(self):
        bits = generate_bits(2 ** 20, 42)
        assert 0.499 <= bits.mean() <= 0.501

    def test_cross_correlation_between_seeds(self):
        a = 2.0 * generate_bits(2 ** 20, 11).astype(np.float64) - 1.0
        b = 2.0 * generate_bits(2 ** 20, 12).astype(np.float64) - 1.0
        assert max_normalized_xcorr(a, b, max_lag=100) <= 0.02


class TestAlphabet:
    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_unit_average_power(self, order):
        alphabet = build_alphabet(order)
        assert abs(np.mean(np.abs(alphabet.points) ** 2) - 1.0) < 1e-12

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_points_and_labels_are_bijections(self, order):
        alphabet = build_alphabet(order)
        assert len(np.unique(alphabet.points)) == order
        words = alphabet.bit_table @ (1 << np.arange(
            alphabet.bits_per_symbol - 1, -1, -1))
        assert sorted(words) == list(range(order))

    def test_16qam_grid(self):
        alphabet = build_alphabet(16)
        expected = np.array([a + 1j * b for a in (-3, -1, 1, 3)
                             for b in (-3, -1, 1, 3)]) / np.sqrt(10.0)
        assert np.allclose(sorted(alphabet.points, key=lambda p: (p.real, p.imag)),
                           sorted(expected, key=lambda p: (p.real, p.imag)))

    def test_32qam_cross_shape(self):
        # 6x6 grid of odd levels minus the four corners, normalized to
        # unit power (grid mean power 20 before scaling).
        alphabet = build_alphabet(32)
        scaled = alphabet.points * np.sqrt(20.0)
        re = np.round(scaled.real).astype(int)
        im = np.round(scaled.imag).astype(int)
        assert np.allclose(scaled, re + 1j * im, atol=1e-9)
        assert set(np.abs(re)) == {1, 3, 5} and set(np.abs(im)) == {1, 3, 5}
        assert not np.any((np.abs(re) == 5) & (np.abs(im) == 5))
        assert abs(np.mean(np.abs(alphabet.points) ** 2) - 1.0) < 1e-12

    @pytest.mark.parametrize("order", [16, 64])
    def test_square_gray_property(self, order):
        # Exhaustive scan: axis-adjacent points differ in exactly one bit.
        alphabet = build_alphabet(order)
        pts = alphabet.points
        spacing = np.min(np.abs(pts[1:] - pts[:-1])[np.abs(pts[1:] - pts[:-1]) > 1e-12])
        spacing = np.min([np.abs(p - q) for p in pts for q in pts if p != q])
        for i in range(order):
            for j in range(order):
                if i == j:
                    continue
                if abs(abs(pts[i] - pts[j]) - spacing) < 1e-9:
                    diff = np.sum(alphabet.bit_table[i] != alphabet.bit_table[j])
                    assert diff == 1, (pts[i], pts[j])

    def test_32qam_quasi_gray_quality(self):
        # Cross constellations cannot be perfectly Gray; the folded
        # construction keeps the mean nearest-neighbor Hamming distance
        # close to 1 with no pair worse than 2 bits.
        alphabet = build_alphabet(32)
        pts = alphabet.points
        dists = np.abs(pts[:, None] - pts[None, :])
        spacing = np.min(dists[dists > 1e-12])
        hammings = []
        for i in range(32):
            for j in range(i + 1, 32):
                if abs(dists[i, j] - spacing) < 1e-9:
                    hammings.append(
                        np.sum(alphabet.bit_table[i] != alphabet.bit_table[j]))
        assert max(hammings) <= 2
        assert np.mean(hammings) <= 1.25

    def test_rejects_unsupported_order(self):
        with pytest.raises(ValueError):
            build_alphabet(8)


class TestMapping:
    def test_all_zero_bits_map_to_word_zero(self):
        alphabet = build_alphabet(16)
        syms = map_symbols(np.zeros(64, dtype=np.uint8), alphabet)
        assert np.all(syms == alphabet.points[0])

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_round_trip_is_identity(self, order):
        alphabet = build_alphabet(order)
        bits = generate_bits(alphabet.bits_per_symbol * 512, seed=3)
        syms = map_symbols(bits, alphabet)
        back = alphabet.classes_to_bits(alphabet.nearest_class(syms))
        assert np.array_equal(back, bits)

    def test_rejects_length_mismatch(self):
        alphabet = build_alphabet(16)
        with pytest.raises(ValueError):
            map_symbols(np.zeros(7, dtype=np.uint8), alphabet)

    def test_symbol_histogram_uniform(self):
        # Chi-square oracle: with n = 2^16 bits -> 2^14 16-QAM symbols,
        # each class count is Binomial(n_sym, 1/16); check 3-sigma bounds.
        alphabet = build_alphabet(16)
        bits = generate_bits(2 ** 16, seed=5)
        classes = alphabet.bits_to_classes(bits)
        n_sym = len(classes)
        counts = np.bincount(classes, minlength=16)
        p = 1.0 / 16.0
        sigma = np.sqrt(n_sym * p * (1 - p))
        assert np.all(np.abs(counts - n_sym * p) < 3.0 * sigma + 1e-9)

    def test_dual_pol_split_and_interleave(self):
        alphabet = build_alphabet(16)
        bits = generate_bits(16 * 4, seed=9)
        frame = map_bits_dual_pol(bits, alphabet)
        assert frame.n_symbols == 8
        bx = alphabet.classes_to_bits(alphabet.nearest_class(frame.syms_x))
        by = alphabet.classes_to_bits(alphabet.nearest_class(frame.syms_y))
        assert np.array_equal(interleave_dual_pol_bits(bx, by, alphabet), bits)

    def test_dual_pol_needs_even_word_count(self):
        alphabet = build_alphabet(16)
        with pytest.raises(ValueError):
            map_bits_dual_pol(np.zeros(12, dtype=np.uint8), alphabet)
