import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal

from acfpapr import clipfilter as cf
from acfpapr import ofdm
from acfpapr.modem import ModulationScheme, map_bits
from acfpapr.ofdm import OfdmConfig

FS = 8e6
NFFT = 2048
SPEC_DEFAULT = cf.ChebyshevSpec(4, 0.5, 1.5e6, 2.5e6)
DESIGNS = [
    cf.ChebyshevSpec(1, 1.0, 1.5e6, 2.5e6),
    SPEC_DEFAULT,
    cf.ChebyshevSpec(3, 0.1, 1.2e6, 2.9e6),
    cf.ChebyshevSpec(6, 2.0, 0.4e6, 1.1e6),
]

real_signals = arrays(np.float64, st.integers(1, 64), elements=st.floats(-1e3, 1e3))


def random_frames(blocks, seed=0, cfg=OfdmConfig()):
    rng = np.random.default_rng(seed)
    X = map_bits(rng.integers(0, 2, (blocks, cfg.bits_per_block)), cfg.scheme)
    return ofdm.transmit_frame(X, cfg)


class TestRms:
    def test_carrier_whole_periods(self):
        m = np.arange(64)
        assert cf.rms(math.sqrt(2) * np.cos(2 * np.pi * m / 8)) == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        assert cf.rms(np.full(10, -3 + 4j)) == pytest.approx(5.0)

    def test_naive_sum(self):
        x = np.random.default_rng(1).normal(size=777)
        naive = math.sqrt(sum(v * v for v in x) / len(x))
        assert cf.rms(x) == pytest.approx(naive, abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            cf.rms(np.array([]))


class TestClipPassband:
    def test_example(self):
        np.testing.assert_array_equal(cf.clip_passband(np.array([3.0, -5.0, 0.5]), 1.0), [1, -1, 0.5])

    def test_rejects_nonpositive_level(self):
        with pytest.raises(ValueError):
            cf.clip_passband(np.ones(3), 0.0)

    def test_rejects_complex(self):
        with pytest.raises(TypeError):
            cf.clip_passband(np.ones(3, dtype=complex), 1.0)

    @given(real_signals, st.floats(1e-3, 1e3))
    def test_properties(self, p, A):
        c = cf.clip_passband(p, A)
        assert np.max(np.abs(c)) <= A
        np.testing.assert_array_equal(cf.clip_passband(c, A), c)
        assert np.sum(c**2) <= np.sum(p**2)
        keep = np.abs(p) < A
        np.testing.assert_array_equal(c[keep], p[keep])

    @given(real_signals)
    def test_identity_above_peak(self, p):
        A = float(np.max(np.abs(p))) + 1.0
        np.testing.assert_array_equal(cf.clip_passband(p, A), p)


class TestClipEnvelope:
    @given(arrays(np.complex128, 32, elements=st.complex_numbers(max_magnitude=100, allow_nan=False)),
           st.floats(0.01, 50))
    def test_magnitude_limited_phase_kept(self, x, A):
        y = cf.clip_envelope(x, A)
        assert np.all(np.abs(y) <= A * (1 + 1e-12))
        big = np.abs(x) > A
        np.testing.assert_allclose(np.angle(y[big]), np.angle(x[big]), atol=1e-12)
        np.testing.assert_array_equal(y[~big], x[~big])


class TestClipByCr:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            cf.ClippingSpec(0.0)
        with pytest.raises(ValueError):
            cf.ClippingSpec(1.0, "ensemble")

    def test_large_cr_never_clips(self):
        cfg = OfdmConfig()
        p = random_frames(10_000, seed=2, cfg=cfg)
        out, A = cf.clip_by_cr(p, cf.ClippingSpec(10.0), ofdm.symbol_window(cfg))
        assert np.all(np.max(np.abs(p), axis=-1) < A)
        np.testing.assert_array_equal(out, p)

    def test_clipped_fraction_near_gaussian(self):
        cfg = OfdmConfig()
        p = random_frames(200, seed=3, cfg=cfg)
        out, A = cf.clip_by_cr(p, cf.ClippingSpec(1.0), ofdm.symbol_window(cfg))
        sym = p[:, ofdm.symbol_window(cfg)]
        frac = np.mean(np.abs(sym) > A[:, None])
        assert abs(frac - 0.3173105) < 0.01  # 2 Q(1)

    def test_square_wave_unchanged(self):
        p = np.tile([2.0, -2.0], 16)
        out, A = cf.clip_by_cr(p, cf.ClippingSpec(1.0))
        assert A == pytest.approx(2.0)
        np.testing.assert_array_equal(out, p)

    def test_per_block_level(self):
        p = np.array([[1.0, -1.0, 3.0, 0.0], [2.0, -2.0, 2.0, -2.0]])
        out, A = cf.clip_by_cr(p, cf.ClippingSpec(0.5))
        np.testing.assert_allclose(A, [0.5 * math.sqrt(11 / 4), 1.0])
        assert np.all(np.max(np.abs(out), axis=1) <= A)

    def test_ensemble_mode(self):
        out, A = cf.clip_by_cr(np.array([0.1, 2.0, -3.0]), cf.ClippingSpec(2.0, "ensemble", 0.5))
        assert A == 1.0
        np.testing.assert_array_equal(out, [0.1, 1.0, -1.0])

    def test_zero_block_passes_with_warning(self):
        p = np.zeros((2, 8))
        p[1, 0] = 5.0
        with pytest.warns(RuntimeWarning):
            out, A = cf.clip_by_cr(p, cf.ClippingSpec(1.0))
        assert A[0] == 0.0
        np.testing.assert_array_equal(out[0], 0.0)
        assert out[1, 0] == pytest.approx(5.0 / math.sqrt(8))


class TestChebyshevPolynomial:
    @pytest.mark.parametrize("n, x, expected", [(0, 7.3, 1.0), (2, 0.5, -0.5), (3, 0.5, -1.0), (1, -2.0, -2.0)])
    def test_values(self, n, x, expected):
        assert cf.chebyshev_polynomial(n, x) == pytest.approx(expected)

    def test_trig_identity(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1, 1, 1000)
        for n in range(13):
            np.testing.assert_allclose(cf.chebyshev_polynomial(n, x), np.cos(n * np.arccos(x)), atol=1e-9)

    def test_hyperbolic_identity(self):
        x = np.linspace(1.0, 4.0, 50)
        for n in range(1, 9):
            np.testing.assert_allclose(cf.chebyshev_polynomial(n, x), np.cosh(n * np.arccosh(x)), rtol=1e-10)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            cf.chebyshev_polynomial(-1, 0.0)


class TestChebyshevDesign:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            cf.ChebyshevSpec(0, 0.5, 1e6, 2e6)
        with pytest.raises(ValueError):
            cf.ChebyshevSpec(2, 0.0, 1e6, 2e6)
        with pytest.raises(ValueError):
            cf.ChebyshevSpec(2, 0.5, 2e6, 1e6)
        with pytest.raises(ValueError):
            cf.design_chebyshev1_bandpass(cf.ChebyshevSpec(2, 0.5, 1e6, 4.5e6), FS, NFFT)

    def test_epsilon(self):
        assert SPEC_DEFAULT.epsilon == pytest.approx(math.sqrt(10**0.05 - 1))
        assert SPEC_DEFAULT.edge_gain == pytest.approx(0.9440608762859234)

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_order_and_stability(self, spec):
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        assert H.meta["poles"].size == 2 * spec.order
        assert np.all(np.abs(H.meta["poles"]) < 1)
        assert H.sos.shape == (spec.order, 6)

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_edge_gain(self, spec):
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        for f in (spec.f_low, spec.f_high):
            assert abs(abs(H.gain_at(f)) - spec.edge_gain) < 1e-3

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_equiripple_passband(self, spec):
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        f = np.linspace(spec.f_low, spec.f_high, 4001)
        mag = np.abs(cf.sos_response(H.sos, f, FS))
        assert mag.min() >= spec.edge_gain - 1e-6
        assert mag.max() <= 1 + 1e-6
        assert mag.max() == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_monotone_stopband(self, spec):
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        mag = np.abs(H.H[: NFFT // 2 + 1])
        f = H.freqs[: NFFT // 2 + 1]
        lower = mag[(f > 0) & (f < spec.f_low)]
        upper = mag[f > spec.f_high]
        assert np.all(np.diff(lower) > 0)
        assert np.all(np.diff(upper) < 0)

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_three_evaluation_paths_agree(self, spec):
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        np.testing.assert_allclose(cf.sos_response(H.sos, H.freqs, FS), H.H, atol=1e-8)
        closed = cf.chebyshev1_magnitude(spec, H.freqs[1:NFFT // 2], FS)
        np.testing.assert_allclose(np.abs(H.H[1:NFFT // 2]), closed, atol=1e-9)

    @pytest.mark.parametrize("spec", DESIGNS)
    def test_matches_scipy_design(self, spec):
        sos = signal.cheby1(spec.order, spec.ripple_db, [spec.f_low, spec.f_high], btype="bandpass",
                            fs=FS, output="sos")
        f = np.linspace(0, FS / 2, 777)
        _, ref = signal.sosfreqz(sos, worN=f, fs=FS)
        H = cf.design_chebyshev1_bandpass(spec, FS, NFFT)
        np.testing.assert_allclose(cf.sos_response(H.sos, f, FS), ref, atol=1e-9)

    def test_sos_file_round_trip(self, tmp_path):
        H = cf.design_chebyshev1_bandpass(SPEC_DEFAULT, FS, NFFT)
        path = tmp_path / "sos.txt"
        cf.write_sos(path, H.sos)
        lines = path.read_text().splitlines()
        assert len(lines) == 4 and all(len(line.split()) == 6 for line in lines)
        np.testing.assert_array_equal(cf.read_sos(path), H.sos)

    def test_group_delay_of_pure_delay(self):
        n = 256
        H = np.exp(-2j * np.pi * np.fft.fftfreq(n) * 5)
        taps = np.zeros(11)
        taps[5] = 1.0
        resp = cf.FilterResponse(H, FS, "fir", taps=taps)
        assert resp.group_delay_at(1e6) == pytest.approx(5.0, abs=1e-6)


class TestIdealMask:
    def test_tones(self):
        m = np.arange(NFFT)
        H = cf.ideal_mask_response(1.5e6, 2.5e6, NFFT, FS)
        inband = np.cos(2 * np.pi * 2e6 / FS * m)
        outband = np.cos(2 * np.pi * 3e6 / FS * m)
        np.testing.assert_allclose(cf.composed_filter(inband, H), inband, atol=1e-12)
        assert np.max(np.abs(cf.composed_filter(outband, H))) < 1e-12

    def test_symmetry(self):
        H = cf.ideal_mask_response(1.5e6, 2.5e6, NFFT, FS).H
        np.testing.assert_array_equal(H, np.conj(H[(-np.arange(NFFT)) % NFFT]))

    def test_edges_validated(self):
        with pytest.raises(ValueError):
            cf.ideal_mask_response(0.0, 1e6, NFFT, FS)


class TestFir:
    @pytest.mark.parametrize("taps", [63, 127, 511])
    def test_taps_match_scipy_window_design(self, taps):
        ref = signal.firwin(taps, [1.5e6, 2.5e6], pass_zero=False, window="hamming", fs=FS)
        np.testing.assert_allclose(cf.fir_bandpass_taps(taps, 1.5e6, 2.5e6, FS), ref, atol=1e-13)

    @pytest.mark.parametrize("taps", [2, 1, 64])
    def test_invalid_taps(self, taps):
        with pytest.raises(ValueError):
            cf.fir_bandpass_taps(taps, 1.5e6, 2.5e6, FS)

    def test_too_long_for_grid(self):
        with pytest.raises(ValueError):
            cf.fir_bandpass_response(257, 1.5e6, 2.5e6, 128, FS)

    def test_linear_phase(self):
        H = cf.fir_bandpass_response(127, 1.5e6, 2.5e6, NFFT, FS)
        for f in np.linspace(1.6e6, 2.4e6, 9):
            assert H.group_delay_at(f) == pytest.approx(63.0, abs=1e-6)

    def test_dc_and_peak(self):
        H = cf.fir_bandpass_response(127, 1.5e6, 2.5e6, NFFT, FS)
        assert abs(H.H[0]) < 1e-3
        peak = max(abs(H.gain_at(v)) for v in np.linspace(1.5e6, 2.5e6, 2001))
        assert peak == pytest.approx(1.0, abs=1e-12)

    def test_grid_is_circular_convolution(self):
        H = cf.fir_bandpass_response(31, 1.5e6, 2.5e6, 256, FS)
        x = np.random.default_rng(0).normal(size=256)
        direct = np.array([sum(H.taps[j] * x[(i - j) % 256] for j in range(31)) for i in range(256)])
        np.testing.assert_allclose(cf.composed_filter(x, H), direct, atol=1e-12)

    def test_converges_to_ideal_mask(self):
        ideal = np.abs(cf.ideal_mask_response(1.5e6, 2.5e6, 4096, FS).H)
        err = [np.sqrt(np.mean((np.abs(cf.fir_bandpass_response(t, 1.5e6, 2.5e6, 4096, FS).H) - ideal) ** 2))
               for t in (63, 255, 1023)]
        assert err[0] > err[1] > err[2]


class TestComposedFilter:
    def test_all_pass_and_all_stop(self):
        x = np.random.default_rng(1).normal(size=64)
        np.testing.assert_allclose(cf.composed_filter(x, cf.FilterResponse(np.ones(64), FS, "mask")), x, atol=1e-10)
        assert not np.any(cf.composed_filter(x, cf.FilterResponse(np.zeros(64), FS, "mask")))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cf.composed_filter(np.ones(10), cf.FilterResponse(np.ones(8), FS, "mask"))

    def test_asymmetric_response_rejected(self):
        H = np.ones(8, dtype=complex)
        H[1] = 1j
        with pytest.raises(ValueError):
            cf.FilterResponse(H, FS, "mask")

    def test_stopband_tone_attenuation(self):
        H = cf.design_chebyshev1_bandpass(SPEC_DEFAULT, FS, NFFT)
        k = 3 * NFFT // 8  # 3.5 MHz, an exact bin
        tone = np.cos(2 * np.pi * k * np.arange(NFFT) / NFFT)
        _, ref = signal.freqz_zpk(H.meta["zeros"], H.meta["poles"], H.meta["gain"], worN=[k * FS / NFFT], fs=FS)
        out = cf.composed_filter(tone, H)
        assert cf.rms(out) / cf.rms(tone) == pytest.approx(abs(ref[0]), rel=1e-9)
        assert abs(ref[0]) < 0.05

    @given(arrays(np.float64, 32, elements=st.floats(-10, 10)), st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_real_output(self, x, seed):
        rng = np.random.default_rng(seed)
        half = rng.normal(size=17) + 1j * rng.normal(size=17)
        half[0] = half[0].real
        half[16] = half[16].real
        H = np.concatenate([half, np.conj(half[15:0:-1])])
        y = np.fft.ifft(np.fft.fft(x) * H)
        assert np.max(np.abs(y.imag)) <= 1e-10 * max(1.0, np.max(np.abs(y)))
        cf.composed_filter(x, cf.FilterResponse(H, FS, "random"))

    def test_peak_regrowth_exists(self):
        cfg = OfdmConfig()
        p = random_frames(1000, seed=9, cfg=cfg)
        H = cf.design_chebyshev1_bandpass(cf.ChebyshevSpec(1, 1.0, 1.5e6, 2.5e6), cfg.fs, cfg.frame_size)
        clipped, _ = cf.clip_by_cr(p, cf.ClippingSpec(1.0), ofdm.symbol_window(cfg))
        assert np.any(ofdm.papr_db(cf.composed_filter(clipped, H)) > ofdm.papr_db(clipped))
