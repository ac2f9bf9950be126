"""Gray-coded QPSK / 16-QAM mapping, hard-decision demapping and AWGN BER references.

Bit labelling (fixed, per in-phase / quadrature axis):

* QPSK: bit ``b`` on an axis maps to the amplitude ``1 - 2b``; bits are
  ``(b_I, b_Q)`` so ``00 -> (1 + 1j)/sqrt(2)``.
* 16-QAM: two bits per axis, ``(sign, magnitude)``:
  ``00 -> +1, 01 -> +3, 10 -> -1, 11 -> -3``; bits are ``(b_I0, b_I1, b_Q0, b_Q1)``.
  Along each axis the order ``-3, -1, +1, +3`` carries labels ``11, 10, 00, 01``
  so neighbours differ in one bit.

Both constellations are scaled to unit average energy.
"""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
from scipy.special import erfc


class ModulationScheme(enum.Enum):
    QPSK = "qpsk"
    QAM16 = "qam16"

    @property
    def bits_per_symbol(self) -> int:
        return 2 if self is ModulationScheme.QPSK else 4

    @property
    def order(self) -> int:
        return 2 ** self.bits_per_symbol

    @classmethod
    def parse(cls, name: str | "ModulationScheme") -> "ModulationScheme":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "")
        aliases = {"qpsk": cls.QPSK, "4qam": cls.QPSK, "qam16": cls.QAM16, "16qam": cls.QAM16, "qam": cls.QAM16}
        if key not in aliases:
            raise ValueError(f"unknown modulation scheme {name!r}")
        return aliases[key]


# per-axis amplitude (before normalisation) indexed by the axis bits read as an integer
_AXIS_LEVELS = {
    ModulationScheme.QPSK: np.array([1.0, -1.0]),
    ModulationScheme.QAM16: np.array([1.0, 3.0, -1.0, -3.0]),
}
_SCALE = {ModulationScheme.QPSK: np.sqrt(2.0), ModulationScheme.QAM16: np.sqrt(10.0)}


@lru_cache(maxsize=None)
def _table(scheme: ModulationScheme) -> tuple[np.ndarray, np.ndarray]:
    """Return (points, labels): points[i] is the symbol whose bit label is labels[i]."""
    bps = scheme.bits_per_symbol
    half = bps // 2
    levels = _AXIS_LEVELS[scheme]
    idx = np.arange(2**bps)
    i_axis = idx >> half
    q_axis = idx & ((1 << half) - 1)
    points = (levels[i_axis] + 1j * levels[q_axis]) / _SCALE[scheme]
    labels = ((idx[:, None] >> np.arange(bps - 1, -1, -1)) & 1).astype(np.uint8)
    points.setflags(write=False)
    labels.setflags(write=False)
    return points, labels


def constellation(scheme: ModulationScheme) -> np.ndarray:
    """All constellation points, indexed by the integer value of their bit label (MSB first)."""
    return _table(scheme)[0]


def bit_labels(scheme: ModulationScheme) -> np.ndarray:
    return _table(scheme)[1]


def map_bits(bits, scheme: ModulationScheme) -> np.ndarray:
    """Map a bit array (last axis) to Gray-coded unit-energy symbols.

    The last axis length must be a multiple of ``bits_per_symbol``; leading
    axes are kept, so a ``(blocks, N * bps)`` array gives ``(blocks, N)`` symbols.
    """
    bits = np.asarray(bits)
    bps = scheme.bits_per_symbol
    if bits.shape[-1] % bps:
        raise ValueError(
            f"bit stream length {bits.shape[-1]} is not a multiple of {bps} ({scheme.name})"
        )
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0 or 1")
    groups = bits.reshape(*bits.shape[:-1], -1, bps).astype(np.int64)
    index = groups @ (1 << np.arange(bps - 1, -1, -1))
    return constellation(scheme)[index]


def _slice_axis(v: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    """Nearest per-axis level; returns axis bits as integer in [0, 2**(bps/2))."""
    if scheme is ModulationScheme.QPSK:
        return (v < 0).astype(np.int64)
    v = v * _SCALE[scheme]
    sign = (v < 0).astype(np.int64)
    outer = (np.abs(v) > 2.0).astype(np.int64)
    return (sign << 1) | outer


def demap_symbols(points, scheme: ModulationScheme) -> np.ndarray:
    """Hard-decision, minimum-Euclidean-distance demapping back to bits.

    The constellations are square grids, so nearest-point search separates
    into independent slicing of the real and imaginary parts.
    """
    points = np.asarray(points)
    half = scheme.bits_per_symbol // 2
    index = (_slice_axis(points.real, scheme) << half) | _slice_axis(points.imag, scheme)
    labels = bit_labels(scheme)[index]
    return labels.reshape(*points.shape[:-1], -1) if points.ndim else labels


def qfunc(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def analytical_ber(scheme: ModulationScheme, ebn0_db):
    """Bit error probability over AWGN with Gray labelling.

    QPSK is exact: ``Q(sqrt(2 Eb/N0))``. 16-QAM uses the nearest-neighbour
    approximation ``3/4 Q(sqrt(4/5 Eb/N0))``, which counts one bit error per
    symbol error and ignores non-adjacent decision errors (tight above ~4 dB).
    """
    ebn0_db = np.asarray(ebn0_db, dtype=float)
    if not np.all(np.isfinite(ebn0_db) | (ebn0_db == np.inf)):
        raise ValueError("Eb/N0 must be finite or +inf")
    g = 10.0 ** (ebn0_db / 10.0)
    if scheme is ModulationScheme.QPSK:
        out = qfunc(np.sqrt(2.0 * g))
    else:
        out = 0.75 * qfunc(np.sqrt(0.8 * g))
    return out if out.ndim else float(out)
