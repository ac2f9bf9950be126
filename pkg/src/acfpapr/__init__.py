"""PAPR reduction of oversampled OFDM by passband clipping and composed filtering."""
from .clipfilter import (
    ChebyshevSpec,
    ClippingSpec,
    FilterResponse,
    clip_by_cr,
    clip_passband,
    composed_filter,
    design_chebyshev1_bandpass,
)
from .channel import AwgnSpec, BerSample, add_awgn, measure_ber
from .link import FilterSettings, Link, simulate_ber
from .metrics import CcdfCurve, collect_papr, papr_at_ccdf
from .modem import ModulationScheme, analytical_ber, demap_symbols, map_bits
from .ofdm import OfdmConfig, papr_db, transmit_frame

__all__ = [
    "AwgnSpec",
    "BerSample",
    "CcdfCurve",
    "ChebyshevSpec",
    "ClippingSpec",
    "FilterResponse",
    "FilterSettings",
    "Link",
    "ModulationScheme",
    "OfdmConfig",
    "add_awgn",
    "analytical_ber",
    "clip_by_cr",
    "clip_passband",
    "collect_papr",
    "composed_filter",
    "demap_symbols",
    "design_chebyshev1_bandpass",
    "map_bits",
    "measure_ber",
    "papr_at_ccdf",
    "papr_db",
    "simulate_ber",
    "transmit_frame",
]
