"""AWGN channel calibrated in Eb/N0 and bit-error counting.

Calibration: the energy per bit is the transmitted frame energy divided by
the bits it carries, with the cyclic prefix treated as overhead::

    P_sig = sum(p**2) / (N L + cp L)          # per-sample power over the burst
    Eb    = P_sig * N L / (N * bits_per_symbol)
    sigma_n**2 = Eb / (2 Eb/N0)               # real passband noise, N0/2 per sample

With the unitary transforms of :mod:`acfpapr.ofdm` this puts complex noise of
variance N0 on every demodulated subcarrier, so an unclipped link reproduces
the textbook ``Q(sqrt(2 Eb/N0))`` QPSK curve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ofdm import OfdmConfig

# independent random substreams per block
BITS_STREAM = 0
NOISE_STREAM = 1


def block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    """Generator fixed by (seed, block index, stream); independent of batching."""
    return np.random.default_rng([int(stream), int(block), int(seed) & (2**64 - 1)])


@dataclass(frozen=True)
class AwgnSpec:
    ebn0_db: float
    seed: int = 0


@dataclass(frozen=True)
class BerSample:
    ebn0_db: float
    bit_errors: int
    bits_sent: int

    def __post_init__(self):
        if self.bits_sent <= 0:
            raise ValueError("a BER sample needs at least one bit")
        if not 0 <= self.bit_errors <= self.bits_sent:
            raise ValueError("bit errors must lie in [0, bits_sent]")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent

    def stderr(self, p: float | None = None) -> float:
        """Binomial standard deviation of the estimate (at ``p`` if given)."""
        p = self.ber if p is None else p
        return float(np.sqrt(p * (1 - p) / self.bits_sent))


def noise_variance(p, cfg: OfdmConfig, ebn0_db: float):
    """Per-sample noise variance for each frame in ``p`` (last axis = time)."""
    p = np.asarray(p, dtype=float)
    p_sig = np.sum(p**2, axis=-1) / cfg.symbol_len
    if np.any(p_sig <= 0):
        raise ValueError("cannot calibrate noise against a zero-power signal")
    eb = p_sig * cfg.NL / cfg.bits_per_block
    return eb / (2.0 * 10.0 ** (ebn0_db / 10.0))


def unit_noise(shape, seed: int, blocks) -> np.ndarray:
    """Standard normal noise, one row per block index, reproducible per block."""
    blocks = np.atleast_1d(blocks)
    return np.stack([block_rng(seed, b, NOISE_STREAM).standard_normal(shape[-1]) for b in blocks])


def add_awgn(p, spec: AwgnSpec, cfg: OfdmConfig, blocks=0, noise=None) -> np.ndarray:
    """Add calibrated white Gaussian noise to real passband frames.

    ``blocks`` gives the block index of each row (scalar for a single frame);
    the noise of a row depends only on ``(spec.seed, block index)``. A
    precomputed unit-variance ``noise`` array may be passed instead.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    var = noise_variance(p2, cfg, spec.ebn0_db)
    if noise is None:
        noise = unit_noise(p2.shape, spec.seed, blocks)
    out = p2 + np.sqrt(var)[:, None] * np.reshape(noise, p2.shape)
    return out[0] if single else out


def measure_ber(tx, rx, ebn0_db: float = float("nan")) -> BerSample:
    tx = np.asarray(tx)
    rx = np.asarray(rx)
    if tx.shape != rx.shape:
        raise ValueError(f"bit streams differ in shape: {tx.shape} vs {rx.shape}")
    return BerSample(ebn0_db, int(np.count_nonzero(tx != rx)), int(tx.size))
