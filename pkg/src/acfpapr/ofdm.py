"""OFDM block assembly: zero padding, oversampled transforms, cyclic prefix,
observation framing, passband conversion and the PAPR metric.

Signals are plain numpy arrays with time (or frequency) on the last axis, so
every function works on a single block or on a ``(blocks, samples)`` batch.
Baseband signals are complex; passband signals are real float arrays. The
sample rate of anything past the IFFT is ``OfdmConfig.fs``.

Transform scaling: the oversampled IFFT carries ``1/sqrt(N L)`` and the
forward FFT the matching ``1/sqrt(N L)``, so the pair is unitary and
``sum |x|^2 == sum |X|^2``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .modem import ModulationScheme


@dataclass(frozen=True)
class OfdmConfig:
    """System parameters; the defaults are the reference simulation setup.

    ``frame_len`` is the length (in oversampled samples) of the zero-guarded
    observation frame each CP-extended symbol is centred in. PAPR, clipping,
    filtering and the channel all operate on that frame. ``frame_len=0``
    means "no guard": the frame is exactly the symbol plus prefix.
    """

    N: int = 128
    L: int = 8
    bw: float = 1e6
    fc: float = 2e6
    cp_len: int = 32
    scheme: ModulationScheme = ModulationScheme.QPSK
    frame_len: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", ModulationScheme.parse(self.scheme))
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be an integer >= 1, got {self.L}")
        if self.bw <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0 <= self.cp_len < self.N:
            raise ValueError(f"cp_len must satisfy 0 <= cp_len < N, got {self.cp_len}")
        if not 0 < self.fc < self.fs / 2:
            raise ValueError(f"carrier {self.fc} Hz must lie in (0, fs/2 = {self.fs / 2} Hz)")
        if self.frame_len is not None and 0 < self.frame_len < self.symbol_len:
            raise ValueError(
                f"frame_len {self.frame_len} shorter than symbol+CP ({self.symbol_len} samples)"
            )

    @property
    def fs(self) -> float:
        return self.bw * self.L

    @property
    def NL(self) -> int:
        return self.N * self.L

    @property
    def cp_samples(self) -> int:
        return self.cp_len * self.L

    @property
    def symbol_len(self) -> int:
        """Oversampled length of one symbol including its prefix."""
        return self.NL + self.cp_samples

    @property
    def frame_size(self) -> int:
        """Resolved observation-frame length (default ``2 N L``)."""
        if self.frame_len is None:
            return 2 * self.NL
        return self.frame_len or self.symbol_len

    @property
    def frame_offset(self) -> int:
        """Index of the first prefix sample inside the frame."""
        return (self.frame_size - self.symbol_len) // 2

    @property
    def bits_per_block(self) -> int:
        return self.N * self.scheme.bits_per_symbol

    def replace(self, **changes) -> "OfdmConfig":
        return dataclasses.replace(self, **changes)


def zero_pad_center(X, L: int) -> np.ndarray:
    """Insert ``N(L-1)`` zeros in the middle of an N-point spectrum.

    Bins ``0..N/2`` stay at the bottom, bins ``N/2+1..N-1`` move to the top
    (``X'[k] = X[k - N(L-1)]``). The Nyquist bin ``N/2`` is copied once, into
    the lower half only.
    """
    X = np.asarray(X)
    if int(L) != L or L < 1:
        raise ValueError(f"oversampling factor must be an integer >= 1, got {L}")
    N = X.shape[-1]
    if N % 2:
        raise ValueError("block length must be even")
    out = np.zeros(X.shape[:-1] + (N * L,), dtype=complex)
    out[..., : N // 2 + 1] = X[..., : N // 2 + 1]
    out[..., N * L - N // 2 + 1 :] = X[..., N // 2 + 1 :]
    return out


def extract_center(Xp, N: int) -> np.ndarray:
    """Inverse of :func:`zero_pad_center`: pick the N data bins out of N*L."""
    Xp = np.asarray(Xp)
    NL = Xp.shape[-1]
    return np.concatenate([Xp[..., : N // 2 + 1], Xp[..., NL - N // 2 + 1 :]], axis=-1)


def ifft_oversampled(spectrum) -> np.ndarray:
    """``x'[m] = 1/sqrt(LN) sum_k X'[k] exp(j 2 pi m k / LN)``."""
    spectrum = np.asarray(spectrum)
    n = spectrum.shape[-1]
    return np.fft.ifft(spectrum, axis=-1) * np.sqrt(n)


def forward_fft(x) -> np.ndarray:
    """Unitary forward transform matching :func:`ifft_oversampled`."""
    x = np.asarray(x)
    return np.fft.fft(x, axis=-1) / np.sqrt(x.shape[-1])


def modulate_block(X, L: int) -> np.ndarray:
    """N data symbols -> L-times oversampled baseband block."""
    return ifft_oversampled(zero_pad_center(X, L))


def demodulate_block(x, N: int) -> np.ndarray:
    return extract_center(forward_fft(x), N)


def add_cyclic_prefix(x, n_prefix: int) -> np.ndarray:
    x = np.asarray(x)
    if n_prefix < 0 or n_prefix > x.shape[-1]:
        raise ValueError(f"prefix of {n_prefix} samples does not fit a {x.shape[-1]}-sample block")
    if n_prefix == 0:
        return x.copy()
    return np.concatenate([x[..., -n_prefix:], x], axis=-1)


def remove_cyclic_prefix(x, n_prefix: int) -> np.ndarray:
    x = np.asarray(x)
    if n_prefix < 0 or n_prefix > x.shape[-1]:
        raise ValueError(f"prefix of {n_prefix} samples is longer than the {x.shape[-1]}-sample input")
    return x[..., n_prefix:].copy()


def place_in_frame(burst, cfg: OfdmConfig) -> np.ndarray:
    """Centre a CP-extended symbol in a zero-guarded observation frame."""
    burst = np.asarray(burst)
    if burst.shape[-1] != cfg.symbol_len:
        raise ValueError(f"expected {cfg.symbol_len} samples, got {burst.shape[-1]}")
    out = np.zeros(burst.shape[:-1] + (cfg.frame_size,), dtype=burst.dtype)
    o = cfg.frame_offset
    out[..., o : o + cfg.symbol_len] = burst
    return out


def symbol_window(cfg: OfdmConfig) -> slice:
    """Frame samples covering the prefix and the symbol."""
    return slice(cfg.frame_offset, cfg.frame_offset + cfg.symbol_len)


def fft_window(cfg: OfdmConfig) -> slice:
    """Frame samples the receiver transforms (prefix dropped)."""
    start = cfg.frame_offset + cfg.cp_samples
    return slice(start, start + cfg.NL)


def _check_carrier(fc: float, fs: float):
    if not 0 < fc < fs / 2:
        raise ValueError(f"carrier {fc} Hz must lie in (0, fs/2 = {fs / 2} Hz)")


def upconvert(x, fc: float, fs: float) -> np.ndarray:
    """``x_p[m] = sqrt(2) Re{x[m] exp(j 2 pi fc m / fs)}``; average power is preserved."""
    _check_carrier(fc, fs)
    x = np.asarray(x)
    m = np.arange(x.shape[-1])
    return np.sqrt(2.0) * np.real(x * np.exp(2j * np.pi * fc / fs * m))


def downconvert(p, fc: float, fs: float, cutoff: float) -> np.ndarray:
    """Mix a real passband signal to baseband and apply an ideal low-pass.

    Bins with ``|f| > cutoff`` are zeroed (circular, over the whole input).
    """
    _check_carrier(fc, fs)
    p = np.asarray(p)
    n = p.shape[-1]
    m = np.arange(n)
    mixed = np.sqrt(2.0) * p * np.exp(-2j * np.pi * fc / fs * m)
    spec = np.fft.fft(mixed, axis=-1)
    f = np.fft.fftfreq(n, 1.0 / fs)
    spec[..., np.abs(f) > cutoff * (1 + 1e-12)] = 0
    return np.fft.ifft(spec, axis=-1)


def transmit_frame(X, cfg: OfdmConfig) -> np.ndarray:
    """Data symbols -> real passband observation frame (before any clipping)."""
    x = modulate_block(X, cfg.L)
    x = add_cyclic_prefix(x, cfg.cp_samples)
    return upconvert(place_in_frame(x, cfg), cfg.fc, cfg.fs)


def papr_db(x, axis: int = -1):
    """``10 log10(max |x|^2 / mean |x|^2)`` along ``axis``."""
    power = np.abs(np.asarray(x)) ** 2
    if power.shape[axis] == 0:
        raise ValueError("PAPR of an empty signal is undefined")
    mean = power.mean(axis=axis)
    if np.any(mean == 0):
        raise ValueError("PAPR of an all-zero signal is undefined")
    out = 10.0 * np.log10(power.max(axis=axis) / mean)
    return out if np.ndim(out) else float(out)
