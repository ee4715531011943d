import numpy as np
import pytest

from fiberq.container import _HEADER, MAGIC, read_frame, write_frame
from fiberq.frames import SignalFrame, SymbolFrame
from fiberq.qam import build_alphabet


def random_signal_frame(n=256, seed=0):
    rng = np.random.default_rng(seed)
    return SignalFrame(
        samples_x=rng.normal(size=n) + 1j * rng.normal(size=n),
        samples_y=rng.normal(size=n) + 1j * rng.normal(size=n),
        sample_rate=8 * 34.4e9,
        symbol_rate=34.4e9,
        sps=8,
    )


class TestFrameInvariants:
    def test_polarization_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SignalFrame(np.zeros(4, complex), np.zeros(5, complex),
                        sample_rate=8.0, symbol_rate=1.0, sps=8)

    def test_rate_consistency_enforced(self):
        with pytest.raises(ValueError):
            SignalFrame(np.zeros(4, complex), np.zeros(4, complex),
                        sample_rate=7.0, symbol_rate=1.0, sps=8)

    def test_frames_are_immutable(self):
        frame = random_signal_frame()
        with pytest.raises(ValueError):
            frame.samples_x[0] = 0.0

    def test_symbol_frame_role_checked(self):
        with pytest.raises(ValueError):
            SymbolFrame(np.zeros(4, complex), np.zeros(4, complex),
                        role="bogus")

    def test_trimmed_drops_both_edges(self):
        frame = SymbolFrame(np.arange(10) + 0j, np.arange(10) + 10j,
                            role="received")
        cut = frame.trimmed(3)
        assert np.array_equal(cut.syms_x, np.arange(3, 7))
        assert np.array_equal(cut.syms_y, np.arange(3, 7) + 10j)


class TestContainer:
    def test_signal_frame_round_trip(self, tmp_path):
        frame = random_signal_frame(n=300, seed=3)
        path = tmp_path / "wave.fqsf"
        write_frame(path, frame)
        back = read_frame(path)
        assert isinstance(back, SignalFrame)
        assert np.array_equal(back.samples_x, frame.samples_x)
        assert np.array_equal(back.samples_y, frame.samples_y)
        assert back.sps == 8 and back.symbol_rate == frame.symbol_rate

    def test_symbol_frame_round_trip_restores_alphabet(self, tmp_path):
        alphabet = build_alphabet(32)
        rng = np.random.default_rng(1)
        frame = SymbolFrame(alphabet.points[rng.integers(0, 32, 64)],
                            alphabet.points[rng.integers(0, 32, 64)],
                            role="transmitted", alphabet=alphabet,
                            symbol_rate=34.4e9)
        path = tmp_path / "syms.fqsf"
        write_frame(path, frame)
        back = read_frame(path)
        assert isinstance(back, SymbolFrame)
        assert back.role == "transmitted"
        assert back.alphabet is not None and back.alphabet.order == 32
        assert np.array_equal(back.syms_x, frame.syms_x)

    def test_exact_byte_layout(self, tmp_path):
        # The layout is normative: header fields then interleaved float64
        # (re_x, im_x, re_y, im_y) records, all little-endian.
        frame = SymbolFrame(np.array([1.5 + 2.5j]), np.array([-3.0 + 4.0j]),
                            role="received", symbol_rate=2.0)
        path = tmp_path / "one.fqsf"
        write_frame(path, frame)
        raw = path.read_bytes()
        assert raw[:4] == MAGIC
        assert len(raw) == _HEADER.size + 32
        magic, version, role, mf, sps, rate, length = _HEADER.unpack_from(raw)
        assert (version, role, mf, sps, rate, length) == (1, 1, 0, 1, 2.0, 1)
        payload = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        assert np.array_equal(payload, [1.5, 2.5, -3.0, 4.0])

    def test_truncated_file_rejected(self, tmp_path):
        frame = random_signal_frame(n=16)
        path = tmp_path / "cut.fqsf"
        write_frame(path, frame)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_frame(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.fqsf"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(ValueError):
            read_frame(path)
