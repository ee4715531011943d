"""End-to-end transmitter -> link -> receiver composition.

One "frame pair" is a seeded transmitted frame and the aligned,
normalized received symbols after the full DSP chain.  Frames are
simulated at ``frame_symbols`` per call; the matched filter drops its
transient edges and the harness widens that discard to ``guard_symbols``
per edge, which also removes the split-step FFT wrap-around.  Several
frames concatenate into one stream when a dataset larger than a single
frame is requested.

All per-frame seeds derive from the experiment seeds through
``numpy.random.SeedSequence([root, role, frame_index])``, so train/test
streams and every frame are independent but fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import beta2_from_dispersion, link_preset, propagate_link
from .config import ExperimentConfig
from .dataset import WindowedDataset, build_dataset, check_dataset_independence
from .frames import SymbolFrame
from .qam import build_alphabet, generate_bits, map_bits_dual_pol
from .rxdsp import cdc, matched_filter_downsample, normalize_to_reference
from .waveform import rrc_shape, set_launch_power

_ROLE_INDEX = {"train": 0, "test": 1}

INDEPENDENCE_THRESHOLD = 0.02


class IndependenceError(RuntimeError):
    """Train/test streams are correlated; carries the value in .value."""

    def __init__(self, value):
        super().__init__(
            f"train/test cross-correlation {value:.4g} exceeds "
            f"{INDEPENDENCE_THRESHOLD}")
        self.value = value


def _child_seed(root: int, role: str, frame_index: int) -> int:
    ss = np.random.SeedSequence([root, _ROLE_INDEX[role], frame_index])
    return int(ss.generate_state(1, np.uint64)[0])


def simulate_frame_pair(config: ExperimentConfig, modulation_order: int,
                        power_dbm: float, role: str,
                        frame_index: int) -> tuple[SymbolFrame, SymbolFrame]:
    """Simulate one frame through the link; returns (rx, tx) aligned
    symbol streams with filter and guard edges removed."""
    alphabet = build_alphabet(modulation_order)
    n_bits = 2 * config.frame_symbols * alphabet.bits_per_symbol
    bits = generate_bits(n_bits, _child_seed(config.seed_data, role,
                                             frame_index))
    tx = map_bits_dual_pol(bits, alphabet, symbol_rate=config.symbol_rate_hz)
    wave = rrc_shape(tx, sps=config.samples_per_symbol,
                     rolloff=config.rrc_rolloff,
                     span_symbols=config.rrc_span_symbols)
    wave = set_launch_power(wave, power_dbm)

    link = link_preset(config.link_preset,
                       noise_seed=_child_seed(config.seed_noise, role,
                                              frame_index),
                       ase_enabled=config.ase_enabled,
                       **config.link_overrides)
    received, _ = propagate_link(wave, link)

    beta2_total = beta2_from_dispersion(
        link.fiber.dispersion_ps_nm_km,
        link.center_wavelength_nm) * link.total_length_km
    compensated = cdc(received, beta2_total)
    rx = matched_filter_downsample(compensated, rolloff=config.rrc_rolloff,
                                   span_symbols=config.rrc_span_symbols,
                                   alphabet=alphabet)
    ref = tx.trimmed(config.rrc_span_symbols)
    extra = config.guard_symbols - config.rrc_span_symbols
    if extra > 0:
        rx = rx.trimmed(extra)
        ref = ref.trimmed(extra)
    return normalize_to_reference(rx, ref), ref


def _concat(frames: list[SymbolFrame]) -> SymbolFrame:
    if len(frames) == 1:
        return frames[0]
    return SymbolFrame(
        syms_x=np.concatenate([f.syms_x for f in frames]),
        syms_y=np.concatenate([f.syms_y for f in frames]),
        role=frames[0].role, alphabet=frames[0].alphabet,
        symbol_rate=frames[0].symbol_rate)


@dataclass
class SimulatedStreams:
    rx_train: SymbolFrame
    tx_train: SymbolFrame
    rx_test: SymbolFrame
    tx_test: SymbolFrame
    independence: float


def simulate_streams(config: ExperimentConfig, modulation_order: int,
                     power_dbm: float) -> SimulatedStreams:
    """Simulate the train and test streams and enforce independence."""
    parts = {}
    for role, n_frames in (("train", config.n_frames_train),
                           ("test", config.n_frames_test)):
        rx_list, tx_list = [], []
        for index in range(n_frames):
            rx, tx = simulate_frame_pair(config, modulation_order, power_dbm,
                                         role, index)
            rx_list.append(rx)
            tx_list.append(tx)
        parts[role] = (_concat(rx_list), _concat(tx_list))
    value = check_dataset_independence(parts["train"][1], parts["test"][1])
    if value > INDEPENDENCE_THRESHOLD:
        raise IndependenceError(value)
    return SimulatedStreams(rx_train=parts["train"][0],
                            tx_train=parts["train"][1],
                            rx_test=parts["test"][0],
                            tx_test=parts["test"][1],
                            independence=value)


def streams_to_datasets(config: ExperimentConfig,
                        streams: SimulatedStreams
                        ) -> tuple[WindowedDataset, WindowedDataset]:
    train_ds = build_dataset(streams.rx_train, streams.tx_train,
                             config.n_neighbors,
                             pol=config.target_polarization)
    test_ds = build_dataset(streams.rx_test, streams.tx_test,
                            config.n_neighbors,
                            pol=config.target_polarization)
    return train_ds, test_ds
