"""End-to-end transmit/receive chain and deterministic batch runners.

Transmitter, per block::

    bits -> symbols -> zero pad -> oversampled IFFT -> CP -> frame -> upconvert
         [-> clip at cr * sigma -> composed filter]        (pipeline != "none")

Receiver::

    frame -> downconvert (ideal LPF, |f| <= BW) -> undo filter bulk delay
          -> drop CP -> FFT -> data bins -> common complex gain -> hard decisions

The receiver low-pass is twice as wide as the occupied half-band: a cutoff
right at BW/2 would slice through the main lobes of the edge subcarriers of a
time-limited symbol, while anything below ``2 fc - BW/2`` still removes the
mixing image. The receiver knows which transmit filter was used and removes its group delay
at the carrier; residual in-band amplitude/phase distortion is left alone.
The common complex gain per block is taken from the noiseless transmitted
frame and the known symbols (an ideal AGC and carrier-phase reference), which
16-QAM needs because clipping scales the constellation.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import clipfilter as cf
from . import ofdm
from .channel import BITS_STREAM, AwgnSpec, BerSample, add_awgn, block_rng, unit_noise
from .modem import demap_symbols, map_bits
from .ofdm import OfdmConfig

PIPELINES = ("none", "existing", "proposed")

# Hamming main-lobe transition width is about 3.3 fs / taps
_HAMMING_TRANSITION = 3.3


@dataclass(frozen=True)
class FilterSettings:
    """Filter choices for both composed-filter variants.

    Unset edges default to the occupied band ``fc -/+ BW/2``. FIR cutoffs
    default to that band widened by half the Hamming transition width so the
    FIR passband covers every data subcarrier.
    """

    cheb_order: int = 1
    cheb_ripple_db: float = 1.0
    cheb_f_low: float | None = None
    cheb_f_high: float | None = None
    fir_taps: int = 511
    fir_f_low: float | None = None
    fir_f_high: float | None = None
    existing_kind: str = "fir"

    def chebyshev_spec(self, cfg: OfdmConfig) -> cf.ChebyshevSpec:
        lo, hi = occupied_band(cfg)
        return cf.ChebyshevSpec(
            self.cheb_order,
            self.cheb_ripple_db,
            lo if self.cheb_f_low is None else self.cheb_f_low,
            hi if self.cheb_f_high is None else self.cheb_f_high,
        )

    def fir_cutoffs(self, cfg: OfdmConfig) -> tuple[float, float]:
        lo, hi = occupied_band(cfg)
        margin = 0.5 * _HAMMING_TRANSITION * cfg.fs / self.fir_taps
        return (
            lo - margin if self.fir_f_low is None else self.fir_f_low,
            hi + margin if self.fir_f_high is None else self.fir_f_high,
        )


def occupied_band(cfg: OfdmConfig) -> tuple[float, float]:
    return cfg.fc - cfg.bw / 2, cfg.fc + cfg.bw / 2


def build_filters(cfg: OfdmConfig, settings: FilterSettings | None = None) -> dict[str, cf.FilterResponse]:
    """Responses of the existing and proposed composed filters on the frame grid."""
    settings = settings or FilterSettings()
    n = cfg.frame_size
    if settings.existing_kind == "fir":
        existing = cf.fir_bandpass_response(settings.fir_taps, *settings.fir_cutoffs(cfg), n, cfg.fs)
    elif settings.existing_kind == "ideal":
        existing = cf.ideal_mask_response(*occupied_band(cfg), n, cfg.fs)
    else:
        raise ValueError(f"unknown existing-filter kind {settings.existing_kind!r}")
    proposed = cf.design_chebyshev1_bandpass(settings.chebyshev_spec(cfg), cfg.fs, n)
    return {"existing": existing, "proposed": proposed}


@dataclass(frozen=True)
class Link:
    cfg: OfdmConfig
    filters: dict = field(default_factory=dict)
    sigma_mode: str = "symbol"
    rx_cutoff: float | None = None

    @classmethod
    def build(cls, cfg: OfdmConfig, settings: FilterSettings | None = None, sigma_mode: str = "symbol",
              rx_cutoff: float | None = None):
        return cls(cfg, build_filters(cfg, settings), sigma_mode, rx_cutoff)

    @property
    def cutoff(self) -> float:
        """Receiver low-pass cutoff in Hz (default ``BW``)."""
        return self.cfg.bw if self.rx_cutoff is None else self.rx_cutoff

    def _filter(self, pipeline: str) -> cf.FilterResponse | None:
        if pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {pipeline!r}; expected one of {PIPELINES}")
        if pipeline == "none":
            return None
        if pipeline not in self.filters:
            raise ValueError(f"link has no {pipeline!r} filter")
        return self.filters[pipeline]

    def clipping(self, cr: float) -> cf.ClippingSpec:
        if self.sigma_mode == "ensemble":
            # unit-energy symbols give a per-sample power of 1/L before the prefix
            return cf.ClippingSpec(cr, "ensemble", float(np.sqrt(1.0 / self.cfg.L)))
        return cf.ClippingSpec(cr, "symbol")

    def transmit(self, X, pipeline: str = "none", cr: float | None = None) -> np.ndarray:
        """Symbols ``(blocks, N)`` -> real passband frames ``(blocks, frame_size)``."""
        H = self._filter(pipeline)
        p = ofdm.transmit_frame(X, self.cfg)
        if H is None:
            return p
        if cr is None:
            raise ValueError("clipping pipelines need a clipping ratio")
        clipped, _ = cf.clip_by_cr(p, self.clipping(cr), ofdm.symbol_window(self.cfg))
        return cf.composed_filter(clipped, H)

    def bulk_delay(self, pipeline: str) -> float:
        H = self._filter(pipeline)
        return 0.0 if H is None else H.group_delay_at(self.cfg.fc)

    def receive(self, frames, pipeline: str, X_ref=None, clean=None) -> np.ndarray:
        """Passband frames -> data-symbol estimates ``(blocks, N)``.

        With ``X_ref`` the estimates are divided by a per-block complex gain
        ``<Y, X_ref> / <X_ref, X_ref>``. The gain is measured on ``clean``
        (the noiseless transmitted frames) when given, so it carries no noise.
        """
        Y = self._demodulate(frames, pipeline)
        if X_ref is not None:
            X_ref = np.asarray(X_ref)
            Yg = Y if clean is None else self._demodulate(clean, pipeline)
            gain = np.sum(Yg * np.conj(X_ref), axis=-1, keepdims=True) / np.sum(
                np.abs(X_ref) ** 2, axis=-1, keepdims=True
            )
            Y = Y / gain
        return Y

    def _demodulate(self, frames, pipeline: str) -> np.ndarray:
        cfg = self.cfg
        bb = ofdm.downconvert(np.asarray(frames), cfg.fc, cfg.fs, self.cutoff)
        tau = self.bulk_delay(pipeline)
        if tau:
            f = np.fft.fftfreq(bb.shape[-1])
            bb = np.fft.ifft(np.fft.fft(bb, axis=-1) * np.exp(2j * np.pi * f * tau), axis=-1)
        return ofdm.demodulate_block(bb[..., ofdm.fft_window(cfg)], cfg.N)


def block_bits(cfg: OfdmConfig, seed: int, blocks) -> np.ndarray:
    """Random bits for the given block indices, ``(len(blocks), N * bps)``."""
    blocks = np.atleast_1d(blocks)
    return np.stack(
        [block_rng(seed, b, BITS_STREAM).integers(0, 2, cfg.bits_per_block, dtype=np.uint8) for b in blocks]
    )


# ---------------------------------------------------------------- runners

def papr_batch(link: Link, pipeline: str, cr: float | None, seed: int, start: int, stop: int) -> np.ndarray:
    """PAPR (dB, over the observation frame) of blocks ``start..stop-1``."""
    bits = block_bits(link.cfg, seed, np.arange(start, stop))
    X = map_bits(bits, link.cfg.scheme)
    return ofdm.papr_db(link.transmit(X, pipeline, cr))


def ber_batch(link: Link, pipeline: str, cr: float | None, ebn0_db: float, seed: int,
              start: int, stop: int) -> tuple[int, int]:
    """(bit errors, bits sent) over blocks ``start..stop-1``."""
    blocks = np.arange(start, stop)
    bits = block_bits(link.cfg, seed, blocks)
    X = map_bits(bits, link.cfg.scheme)
    tx = link.transmit(X, pipeline, cr)
    noise = unit_noise(tx.shape, seed, blocks)
    rx = add_awgn(tx, AwgnSpec(ebn0_db, seed), link.cfg, noise=noise)
    Y = link.receive(rx, pipeline, X_ref=X, clean=tx)
    bits_hat = demap_symbols(Y, link.cfg.scheme)
    return int(np.count_nonzero(bits_hat != bits)), int(bits.size)


def _call(args):
    fn, rest = args
    return fn(*rest)


def run_batches(fn, common: tuple, spans, workers: int = 1) -> list:
    """Evaluate ``fn(*common, start, stop)`` for each span, in span order."""
    jobs = [(fn, (*common, a, b)) for a, b in spans]
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


def spans(total: int, batch: int, first: int = 0):
    return [(a, min(a + batch, first + total)) for a in range(first, first + total, batch)]


def simulate_ber(link: Link, pipeline: str, cr: float | None, ebn0_db: float, seed: int,
                 min_errors: int = 200, max_bits: int = 2_000_000, batch: int = 64,
                 workers: int = 1) -> BerSample:
    """Monte Carlo BER at one Eb/N0 with the stopping rule
    "at least ``min_errors`` errors or ``max_bits`` bits, whichever comes first".

    Blocks are consumed in fixed batches and the rule is checked after each
    batch in order, so the result does not depend on ``workers``.
    """
    errors = sent = 0
    next_block = 0
    per_round = max(1, workers)
    bits_per_batch = batch * link.cfg.bits_per_block
    while errors < min_errors and sent < max_bits:
        remaining = -(-(max_bits - sent) // bits_per_batch)
        todo = spans(min(per_round, remaining) * batch, batch, next_block)
        results = run_batches(ber_batch, (link, pipeline, cr, ebn0_db, seed), todo, workers)
        for (e, n), (a, b) in zip(results, todo):
            errors += e
            sent += n
            next_block = b
            if errors >= min_errors or sent >= max_bits:
                break
    return BerSample(ebn0_db, errors, sent)
