"""Passband amplitude clipping and the FFT -> band-pass -> IFFT composed filter.

Two band-pass families are provided for the composed filter:

* ``fir_bandpass_response``: linear-phase Hamming-windowed sinc (the
  conventional scheme), plus ``ideal_mask_response`` as a diagnostic baseline.
* ``design_chebyshev1_bandpass``: Chebyshev Type I IIR band-pass designed from
  the analog prototype, low-pass -> band-pass transformed and mapped with the
  bilinear transform.

Every filter is applied as a bin-wise multiplication by its exact response on
the DFT grid of the signal being filtered, i.e. circular convolution over the
observation frame. For the IIR filter this is the steady-state response, with
no start-up transient.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------- clipping

@dataclass(frozen=True)
class ClippingSpec:
    """Clip level ``A = cr * sigma``.

    ``sigma_mode="symbol"`` takes sigma as the RMS of each unclipped symbol;
    ``"ensemble"`` uses the fixed value ``ensemble_rms``.
    """

    cr: float
    sigma_mode: str = "symbol"
    ensemble_rms: float | None = None

    def __post_init__(self):
        if not self.cr > 0:
            raise ValueError(f"clipping ratio must be positive, got {self.cr}")
        if self.sigma_mode not in ("symbol", "ensemble"):
            raise ValueError(f"unknown sigma mode {self.sigma_mode!r}")
        if self.sigma_mode == "ensemble" and not (self.ensemble_rms and self.ensemble_rms > 0):
            raise ValueError("ensemble sigma mode needs a positive ensemble_rms")


def rms(x, axis: int = -1, keepdims: bool = False):
    x = np.asarray(x)
    if x.shape[axis] == 0:
        raise ValueError("RMS of an empty signal is undefined")
    out = np.sqrt(np.mean(np.abs(x) ** 2, axis=axis, keepdims=keepdims))
    return out if np.ndim(out) else float(out)


def clip_passband(p, A):
    """Hard-limit a real signal to ``[-A, A]``. ``A`` may broadcast per block."""
    A = np.asarray(A, dtype=float)
    if np.any(~(A > 0)):
        raise ValueError("clip level must be positive")
    p = np.asarray(p)
    if np.iscomplexobj(p):
        raise TypeError("clip_passband expects a real passband signal; use clip_envelope")
    return np.clip(p, -A, A)


def clip_envelope(x, A):
    """Magnitude-limit a complex signal to A, keeping the phase."""
    A = np.asarray(A, dtype=float)
    if np.any(~(A > 0)):
        raise ValueError("clip level must be positive")
    x = np.asarray(x)
    mag = np.abs(x)
    scale = np.divide(A, mag, out=np.ones(mag.shape), where=mag > A)
    return x * scale


def clip_by_cr(p, spec: ClippingSpec, active: slice | None = None):
    """Clip ``p`` at ``A = cr * sigma``; returns ``(clipped, A)``.

    In symbol mode sigma is measured per block (last axis) over ``active``
    (default: the whole block), so guard samples of a frame can be excluded.
    Blocks whose sigma is zero are returned unchanged with a warning.
    """
    p = np.asarray(p, dtype=float)
    if spec.sigma_mode == "ensemble":
        sigma = np.full(p.shape[:-1] + (1,), float(spec.ensemble_rms))
    else:
        region = p if active is None else p[..., active]
        sigma = rms(region, keepdims=True)
    A = spec.cr * sigma
    dead = A <= 0
    if np.any(dead):
        warnings.warn("all-zero block passed through clipping unchanged", RuntimeWarning, stacklevel=2)
        A = np.where(dead, np.inf, A)
    clipped = np.clip(p, -A, A)
    A = np.where(dead, 0.0, A)[..., 0]
    return clipped, (float(A) if p.ndim == 1 else A)


# ------------------------------------------------------- filter responses

@dataclass(frozen=True)
class FilterResponse:
    """Complex gain ``H[k]`` at ``f_k = k fs / n`` for ``k = 0..n-1``.

    ``sos`` holds second-order sections (rows ``b0 b1 b2 a0 a1 a2``) for IIR
    designs and ``taps`` the impulse response for FIR designs.
    """

    H: np.ndarray
    fs: float
    kind: str
    sos: np.ndarray | None = None
    taps: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        mirror = np.conj(H[(-np.arange(H.size)) % H.size])
        if np.max(np.abs(H - mirror), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(H))):
            raise ValueError("filter response is not conjugate-symmetric")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def n(self) -> int:
        return self.H.size

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.n) * self.fs / self.n

    def gain_at(self, f_hz: float) -> complex:
        """Response at an arbitrary frequency (exact for FIR/IIR, nearest bin for masks)."""
        if self.sos is not None:
            return complex(sos_response(self.sos, np.array([f_hz]), self.fs)[0])
        if self.taps is not None:
            w = 2 * np.pi * f_hz / self.fs
            return complex(np.sum(self.taps * np.exp(-1j * w * np.arange(self.taps.size))))
        return complex(self.H[int(round(f_hz * self.n / self.fs)) % self.n])

    def group_delay_at(self, f_hz: float, df: float | None = None) -> float:
        """Group delay in samples, by central difference of the phase."""
        df = df or self.fs * 1e-6
        g0, g1 = self.gain_at(f_hz - df), self.gain_at(f_hz + df)
        dphi = np.angle(g1 * np.conj(g0))
        return float(-dphi / (2 * np.pi * 2 * df / self.fs))


def _check_band(f_low: float, f_high: float, fs: float):
    if not 0 < f_low < f_high < fs / 2:
        raise ValueError(f"band edges must satisfy 0 < f_low < f_high < fs/2, got ({f_low}, {f_high})")


def _mirror_mask(n: int, fs: float, inside) -> np.ndarray:
    f = np.abs(np.fft.fftfreq(n, 1.0 / fs))
    return inside(f)


def ideal_mask_response(f_low: float, f_high: float, n: int, fs: float) -> FilterResponse:
    _check_band(f_low, f_high, fs)
    tol = 1e-9 * fs
    H = _mirror_mask(n, fs, lambda f: (f >= f_low - tol) & (f <= f_high + tol)).astype(complex)
    return FilterResponse(H, fs, "ideal-mask", meta={"f_low": f_low, "f_high": f_high})


def fir_bandpass_taps(taps: int, f_low: float, f_high: float, fs: float) -> np.ndarray:
    """Hamming-windowed sinc band-pass with -6 dB points at ``f_low``/``f_high``,
    scaled to unit gain at the band centre."""
    if int(taps) != taps or taps < 3 or taps % 2 == 0:
        raise ValueError(f"FIR length must be an odd integer >= 3, got {taps}")
    _check_band(f_low, f_high, fs)
    n = np.arange(taps) - (taps - 1) / 2
    ideal = 2 * f_high / fs * np.sinc(2 * f_high / fs * n) - 2 * f_low / fs * np.sinc(2 * f_low / fs * n)
    h = ideal * np.hamming(taps)
    f0 = 0.5 * (f_low + f_high)
    h /= np.abs(np.sum(h * np.exp(-2j * np.pi * f0 / fs * np.arange(taps))))
    return h


def fir_bandpass_response(taps: int, f_low: float, f_high: float, n: int, fs: float) -> FilterResponse:
    """Linear-phase FIR band-pass on an n-point grid, passband peak scaled to 1.

    The taps are zero-padded to n, so multiplying by ``H`` is exactly circular
    convolution with the taps.
    """
    h = fir_bandpass_taps(taps, f_low, f_high, fs)
    if taps > n:
        raise ValueError(f"{taps} taps do not fit an {n}-point grid")
    dense = np.linspace(f_low, f_high, 2001)
    peak = np.max(np.abs(np.exp(-2j * np.pi * np.outer(dense, np.arange(taps)) / fs) @ h))
    h = h / peak
    H = np.fft.fft(h, n)
    return FilterResponse(H, fs, "fir", taps=h, meta={"f_low": f_low, "f_high": f_high, "taps": taps})


# --------------------------------------------------------- Chebyshev Type I

@dataclass(frozen=True)
class ChebyshevSpec:
    """Chebyshev Type I band-pass: prototype order ``order`` (band-pass order
    ``2 * order``), passband ripple in dB, passband edges in Hz."""

    order: int
    ripple_db: float
    f_low: float
    f_high: float

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"prototype order must be an integer >= 1, got {self.order}")
        if not self.ripple_db > 0:
            raise ValueError("passband ripple must be positive")
        if not 0 < self.f_low < self.f_high:
            raise ValueError("band edges must satisfy 0 < f_low < f_high")

    @property
    def epsilon(self) -> float:
        return float(np.sqrt(10.0 ** (self.ripple_db / 10.0) - 1.0))

    @property
    def edge_gain(self) -> float:
        return 1.0 / np.sqrt(1.0 + self.epsilon**2)


def chebyshev_polynomial(n: int, x):
    """T_n(x) by the three-term recurrence (valid for any real x)."""
    if n < 0:
        raise ValueError("Chebyshev polynomial order must be >= 0")
    x = np.asarray(x, dtype=float)
    t_prev, t = np.ones_like(x), x.copy()
    if n == 0:
        return t_prev if t_prev.ndim else float(t_prev)
    for _ in range(n - 1):
        t_prev, t = t, 2 * x * t - t_prev
    return t if t.ndim else float(t)


def chebyshev1_prototype(order: int, ripple_db: float):
    """Analog low-pass prototype (passband edge 1 rad/s): poles and gain.

    Poles sit on an ellipse: ``-sinh(mu) sin(theta_k) + j cosh(mu) cos(theta_k)``
    with ``mu = asinh(1/eps)/n``. Gain makes the DC response 1 for odd order and
    ``1/sqrt(1+eps^2)`` for even order, so the passband peaks at exactly 1.
    """
    eps = np.sqrt(10.0 ** (ripple_db / 10.0) - 1.0)
    mu = np.arcsinh(1.0 / eps) / order
    theta = np.pi * (2 * np.arange(1, order + 1) - 1) / (2 * order)
    poles = -np.sinh(mu) * np.sin(theta) + 1j * np.cosh(mu) * np.cos(theta)
    gain = np.real(np.prod(-poles))
    if order % 2 == 0:
        gain /= np.sqrt(1.0 + eps**2)
    return poles, gain


def _lp_to_bp(poles, gain, w0: float, bw: float):
    """s -> (s^2 + w0^2) / (bw s): each prototype pole becomes two band-pass
    poles, and the band-pass gets ``order`` zeros at s = 0."""
    pb = poles * bw / 2
    disc = np.sqrt(pb**2 - w0**2 + 0j)
    bp_poles = np.concatenate([pb + disc, pb - disc])
    bp_zeros = np.zeros(poles.size)
    return bp_zeros, bp_poles, gain * bw ** poles.size


def _bilinear(zeros, poles, gain, fs: float):
    fs2 = 2.0 * fs
    zd = (fs2 + zeros) / (fs2 - zeros)
    pd = (fs2 + poles) / (fs2 - poles)
    # zeros at infinity land on z = -1
    zd = np.concatenate([zd, -np.ones(poles.size - zeros.size)])
    kd = gain * np.real(np.prod(fs2 - zeros) / np.prod(fs2 - poles))
    return zd, pd, kd


def _pair_sections(zeros, poles, gain) -> np.ndarray:
    """Group conjugate pole pairs into second-order sections.

    Every band-pass section gets one zero at z=1 and one at z=-1; the overall
    gain is folded into the first section.
    """
    upper = poles[poles.imag > 1e-14]
    reals = np.sort(poles[np.abs(poles.imag) <= 1e-14].real)
    pairs = [(p, np.conj(p)) for p in upper[np.argsort(np.abs(upper))]]
    pairs += [(reals[i], reals[i + 1]) for i in range(0, reals.size - 1, 2)]
    if reals.size % 2:
        raise ValueError("odd number of real poles cannot be paired")
    z_pos = list(np.sort(zeros[np.real(zeros) > 0].real))
    z_neg = list(np.sort(zeros[np.real(zeros) <= 0].real))
    rows = []
    for p1, p2 in pairs:
        za = z_pos.pop() if z_pos else z_neg.pop()
        zb = z_neg.pop() if z_neg else z_pos.pop()
        b = np.real(np.poly([za, zb]))
        a = np.real(np.poly([p1, p2]))
        rows.append(np.concatenate([b, a]))
    sos = np.array(rows)
    sos[0, :3] *= gain
    return sos


def sos_response(sos, freqs, fs: float) -> np.ndarray:
    """Evaluate a cascade of biquads at the given frequencies (Hz)."""
    sos = np.asarray(sos, dtype=float)
    zi = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / fs)
    powers = np.stack([np.ones_like(zi), zi, zi**2])
    H = np.ones_like(zi)
    for row in sos:
        H = H * (row[:3] @ powers) / (row[3:] @ powers)
    return H


def zpk_response(zeros, poles, gain, freqs, fs: float) -> np.ndarray:
    """Pole-zero product form ``k prod(z - z_i) / prod(z - p_i)`` on the unit circle."""
    z = np.exp(2j * np.pi * np.asarray(freqs, dtype=float) / fs)[:, None]
    num = np.prod(z - np.asarray(zeros)[None, :], axis=1)
    den = np.prod(z - np.asarray(poles)[None, :], axis=1)
    return gain * num / den


def chebyshev1_magnitude(spec: ChebyshevSpec, freqs, fs: float) -> np.ndarray:
    """Closed-form magnitude ``1/sqrt(1 + eps^2 T_n^2(Omega))`` through the
    pre-warped band-pass frequency map; independent of pole placement."""
    f = np.asarray(freqs, dtype=float)
    wa = 2 * fs * np.tan(np.pi * np.clip(f, 1e-12 * fs, None) / fs)
    w1 = 2 * fs * np.tan(np.pi * spec.f_low / fs)
    w2 = 2 * fs * np.tan(np.pi * spec.f_high / fs)
    omega = (wa**2 - w1 * w2) / ((w2 - w1) * wa)
    t = chebyshev_polynomial(spec.order, omega)
    return 1.0 / np.sqrt(1.0 + spec.epsilon**2 * t**2)


def design_chebyshev1_bandpass(spec: ChebyshevSpec, fs: float, n: int) -> FilterResponse:
    """Chebyshev Type I band-pass on an n-point DFT grid.

    Edges are pre-warped (``2 fs tan(pi f / fs)``) so that after the bilinear
    transform the response is exactly ``1/sqrt(1+eps^2)`` at ``f_low`` and
    ``f_high``. The grid response comes from the pole-zero product; the SOS
    coefficients are an independent realisation of the same filter.
    """
    _check_band(spec.f_low, spec.f_high, fs)
    w1 = 2 * fs * np.tan(np.pi * spec.f_low / fs)
    w2 = 2 * fs * np.tan(np.pi * spec.f_high / fs)
    poles, gain = chebyshev1_prototype(spec.order, spec.ripple_db)
    za, pa, ka = _lp_to_bp(poles, gain, np.sqrt(w1 * w2), w2 - w1)
    zd, pd, kd = _bilinear(za, pa, ka, fs)
    if np.any(np.abs(pd) >= 1):
        raise ValueError("design produced an unstable pole")
    sos = _pair_sections(zd, pd, kd)
    freqs = np.arange(n) * fs / n
    H = zpk_response(zd, pd, kd, freqs, fs)
    # restore exact conjugate symmetry lost to rounding
    H = 0.5 * (H + np.conj(H[(-np.arange(n)) % n]))
    return FilterResponse(
        H, fs, "chebyshev1", sos=sos,
        meta={"order": spec.order, "ripple_db": spec.ripple_db, "f_low": spec.f_low,
              "f_high": spec.f_high, "zeros": zd, "poles": pd, "gain": kd},
    )


def write_sos(path, sos) -> None:
    """One section per line: ``b0 b1 b2 a0 a1 a2`` at round-trip precision."""
    with open(path, "w") as fh:
        for row in np.asarray(sos, dtype=float):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_sos(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, dtype=float))


# ------------------------------------------------------------- application

def composed_filter(p, response: FilterResponse) -> np.ndarray:
    """FFT, bin-wise multiply by ``response.H``, IFFT; returns a real signal."""
    p = np.asarray(p)
    if p.shape[-1] != response.n:
        raise ValueError(f"signal length {p.shape[-1]} does not match the {response.n}-point response")
    y = np.fft.ifft(np.fft.fft(p, axis=-1) * response.H, axis=-1)
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    if np.max(np.abs(y.imag), initial=0.0) > 1e-10 * scale:
        raise ArithmeticError("composed filter output is not real")
    return y.real
