"""Coherent optical transmission laboratory with NN post-equalizers."""

__version__ = "0.1.0"

from .frames import SignalFrame, SymbolFrame
from .qam import QamAlphabet, build_alphabet, generate_bits, map_symbols, map_bits_dual_pol
from .waveform import rrc_taps, rrc_shape, set_launch_power
from .channel import (FiberSpec, LinkSpec, PropagationTrace, link_preset,
                      beta2_from_dispersion, propagate_span, amplify_with_ase,
                      propagate_link)
from .rxdsp import cdc, matched_filter_downsample, normalize_to_reference, hard_decision
from .container import read_frame, write_frame

__all__ = [
    "SignalFrame", "SymbolFrame", "QamAlphabet", "build_alphabet",
    "generate_bits", "map_symbols", "map_bits_dual_pol",
    "rrc_taps", "rrc_shape", "set_launch_power",
    "FiberSpec", "LinkSpec", "PropagationTrace", "link_preset",
    "beta2_from_dispersion", "propagate_span", "amplify_with_ase",
    "propagate_link",
    "cdc", "matched_filter_downsample", "normalize_to_reference",
    "hard_decision",
    "read_frame", "write_frame",
]
