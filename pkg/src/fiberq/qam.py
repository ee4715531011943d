"""Gray-coded QAM alphabets, pseudo-random bit streams and symbol mapping.

Square constellations (16/64-QAM) are Gray coded independently on each
axis, so nearest neighbors differ in exactly one bit.  32-QAM uses the
classic folded-rectangle cross construction (see :func:`_cross_alphabet`),
which is quasi-Gray: a perfect Gray labeling does not exist for cross
constellations, and the handful of fold seams cost a second bit flip.

The class index of a point equals the integer value of its bit word
(MSB first), so labels, bit words and constellation indices are three
views of the same bijection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import SymbolFrame

SUPPORTED_ORDERS = (16, 32, 64)


@dataclass(frozen=True)
class QamAlphabet:
    """Unit-mean-power constellation with bit <-> point <-> class maps.

    ``points[c]`` is the constellation point whose bit word (MSB first)
    has integer value ``c``; ``bit_table[c]`` spells that word out as
    individual bits.
    """

    order: int
    points: np.ndarray            # (order,) complex128, indexed by class
    bit_table: np.ndarray         # (order, bits_per_symbol) uint8

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128, copy=True)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        bits = np.array(self.bit_table, dtype=np.uint8, copy=True)
        bits.flags.writeable = False
        object.__setattr__(self, "bit_table", bits)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    def bits_to_classes(self, bits: np.ndarray) -> np.ndarray:
        """Pack a flat bit array into class indices, MSB first."""
        k = self.bits_per_symbol
        bits = np.asarray(bits)
        if bits.size % k != 0:
            raise ValueError(f"bit count {bits.size} not divisible by {k}")
        words = bits.reshape(-1, k).astype(np.int64)
        weights = 1 << np.arange(k - 1, -1, -1)
        return words @ weights

    def classes_to_bits(self, classes: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`bits_to_classes`; returns a flat bit array."""
        return self.bit_table[np.asarray(classes)].reshape(-1)

    def nearest_class(self, symbols: np.ndarray) -> np.ndarray:
        """Minimum-Euclidean-distance class per symbol.

        Ties resolve to the lowest class index because ``argmin`` keeps
        the first minimum and ``points`` is ordered by class.
        """
        symbols = np.asarray(symbols, dtype=np.complex128)
        d2 = np.abs(symbols[:, None] - self.points[None, :]) ** 2
        return np.argmin(d2, axis=1)

    def class_of_exact_point(self, symbols: np.ndarray) -> np.ndarray:
        """Class lookup for symbols known to be exact alphabet points."""
        classes = self.nearest_class(symbols)
        if not np.array_equal(self.points[classes], np.asarray(symbols)):
            raise ValueError("symbols are not exact alphabet points")
        return classes


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _gray_positions(n: int) -> np.ndarray:
    """Axis position for each Gray codeword value (inverse Gray map)."""
    pos = np.zeros(n, dtype=np.int64)
    for p in range(n):
        pos[_gray(p)] = p
    return pos


def _square_alphabet(order: int) -> tuple[np.ndarray, np.ndarray]:
    k = int(np.log2(order))
    kh = k // 2
    nlev = 1 << kh
    levels = 2.0 * np.arange(nlev) - (nlev - 1)
    pos = _gray_positions(nlev)
    classes = np.arange(order)
    code_i = classes >> kh
    code_q = classes & (nlev - 1)
    points = levels[pos[code_i]] + 1j * levels[pos[code_q]]
    return points, classes


def _cross_alphabet() -> tuple[np.ndarray, np.ndarray]:
    """32-point cross constellation via the folded 8x4 rectangle.

    Columns of an 8x4 grid carry a 3-bit Gray code and rows a 2-bit Gray
    code (label = column bits << 2 | row bits).  The outermost columns
    (|x| = 7) fold onto the cross wings: (+/-7, y) -> (+/-|y|, 5*sign(y)).
    The label travels with the point, which preserves Gray adjacency
    everywhere except across the fold seams.
    """
    points = np.zeros(32, dtype=np.complex128)
    col_levels = 2.0 * np.arange(8) - 7.0
    row_levels = 2.0 * np.arange(4) - 3.0
    for c in range(8):
        for r in range(4):
            label = (_gray(c) << 2) | _gray(r)
            x, y = col_levels[c], row_levels[r]
            if abs(x) == 7.0:
                x, y = np.sign(x) * abs(y), 5.0 * np.sign(y)
            points[label] = x + 1j * y
    return points, np.arange(32)


def build_alphabet(order: int) -> QamAlphabet:
    """Build the unit-average-power alphabet for a supported QAM order."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported modulation order {order}; "
                         f"supported: {SUPPORTED_ORDERS}")
    if order == 32:
        points, classes = _cross_alphabet()
    else:
        points, classes = _square_alphabet(order)
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    k = int(np.log2(order))
    shifts = np.arange(k - 1, -1, -1)
    bit_table = ((classes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return QamAlphabet(order=order, points=points, bit_table=bit_table)


def generate_bits(n_bits: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-random bit stream (uint8 zeros/ones).

    Backed by PCG64 (period 2^128); statistically equivalent to any other
    high-quality generator for this purpose, and fully reproducible from
    the 64-bit seed.
    """
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


def map_symbols(bits: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Map a flat bit array to constellation points (one polarization)."""
    return alphabet.points[alphabet.bits_to_classes(bits)]


def map_bits_dual_pol(bits: np.ndarray, alphabet: QamAlphabet,
                      symbol_rate: float = 0.0) -> SymbolFrame:
    """Map one bit stream onto both polarizations.

    Even-indexed symbol words go to X and odd-indexed words to Y, so a
    single seeded stream drives the whole frame.  The word count must be
    even.
    """
    classes = alphabet.bits_to_classes(bits)
    if len(classes) % 2 != 0:
        raise ValueError("bit stream must contain an even number of words")
    return SymbolFrame(
        syms_x=alphabet.points[classes[0::2]],
        syms_y=alphabet.points[classes[1::2]],
        role="transmitted",
        alphabet=alphabet,
        symbol_rate=symbol_rate,
    )


def interleave_dual_pol_bits(bits_x: np.ndarray, bits_y: np.ndarray,
                             alphabet: QamAlphabet) -> np.ndarray:
    """Undo the even/odd word split of :func:`map_bits_dual_pol`."""
    k = alphabet.bits_per_symbol
    wx = np.asarray(bits_x).reshape(-1, k)
    wy = np.asarray(bits_y).reshape(-1, k)
    if len(wx) != len(wy):
        raise ValueError("polarizations carry different word counts")
    out = np.empty((len(wx) * 2, k), dtype=np.uint8)
    out[0::2] = wx
    out[1::2] = wy
    return out.reshape(-1)
