import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acfpapr import ofdm
from acfpapr.channel import AwgnSpec, BerSample, add_awgn, measure_ber, noise_variance, unit_noise
from acfpapr.link import Link, block_bits, simulate_ber
from acfpapr.modem import ModulationScheme, analytical_ber, map_bits
from acfpapr.ofdm import OfdmConfig

CFG = OfdmConfig()


@pytest.fixture(scope="module")
def frames():
    X = map_bits(block_bits(CFG, 0, np.arange(500)), CFG.scheme)
    return ofdm.transmit_frame(X, CFG)


@pytest.fixture(scope="module")
def link():
    return Link.build(CFG)


class TestAwgn:
    def test_vanishing_noise(self, frames):
        out = add_awgn(frames[:4], AwgnSpec(200.0, 1), CFG, blocks=np.arange(4))
        assert np.max(np.abs(out - frames[:4])) < 1e-6

    def test_variance_formula(self):
        # constant-power burst: every sample 0.5 over symbol_len samples, zeros elsewhere
        p = np.zeros(CFG.frame_size)
        p[ofdm.symbol_window(CFG)] = 0.5
        eb = 0.25 * CFG.NL / (CFG.N * 2)
        assert noise_variance(p, CFG, 3.0) == pytest.approx(eb / (2 * 10**0.3), rel=1e-12)

    def test_empirical_variance(self, frames):
        spec = AwgnSpec(4.0, 7)
        noise = add_awgn(frames, spec, CFG, blocks=np.arange(len(frames))) - frames
        assert noise.size > 10**6
        ratio = np.mean(noise**2 / noise_variance(frames, CFG, 4.0)[:, None])
        assert abs(ratio - 1) < 0.01
        assert abs(np.mean(noise) / np.std(noise)) < 4 / math.sqrt(noise.size)

    def test_zero_power_rejected(self):
        with pytest.raises(ValueError):
            add_awgn(np.zeros(CFG.frame_size), AwgnSpec(5.0), CFG)

    def test_deterministic(self, frames):
        a = add_awgn(frames[:3], AwgnSpec(5.0, 42), CFG, blocks=[0, 1, 2])
        b = add_awgn(frames[:3], AwgnSpec(5.0, 42), CFG, blocks=[0, 1, 2])
        np.testing.assert_array_equal(a, b)
        c = add_awgn(frames[:3], AwgnSpec(5.0, 43), CFG, blocks=[0, 1, 2])
        assert not np.array_equal(a, c)

    def test_noise_depends_only_on_block_index(self, frames):
        batch = add_awgn(frames[:4], AwgnSpec(5.0, 9), CFG, blocks=[10, 11, 12, 13])
        for i in range(4):
            single = add_awgn(frames[i], AwgnSpec(5.0, 9), CFG, blocks=10 + i)
            np.testing.assert_array_equal(batch[i], single)

    def test_whiteness(self):
        n = unit_noise((400, CFG.frame_size), 3, np.arange(400)).ravel()
        n = n - n.mean()
        r0 = np.dot(n, n)
        for lag in range(1, 11):
            assert abs(np.dot(n[:-lag], n[lag:]) / r0) < 4 / math.sqrt(n.size)


class TestMeasureBer:
    def test_identical(self):
        bits = np.random.default_rng(0).integers(0, 2, 100)
        assert measure_ber(bits, bits).ber == 0.0

    def test_complemented(self):
        bits = np.random.default_rng(0).integers(0, 2, 100)
        assert measure_ber(bits, 1 - bits).ber == 1.0

    def test_single_error(self):
        tx = np.zeros(1000, dtype=int)
        rx = tx.copy()
        rx[17] = 1
        s = measure_ber(tx, rx)
        assert (s.bit_errors, s.bits_sent, s.ber) == (1, 1000, 0.001)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            measure_ber(np.zeros(3), np.zeros(4))

    @pytest.mark.parametrize("errors, sent", [(1, 0), (-1, 5), (6, 5)])
    def test_sample_validation(self, errors, sent):
        with pytest.raises(ValueError):
            BerSample(0.0, errors, sent)

    @given(st.integers(1, 10**7).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
    def test_ber_in_unit_interval(self, pair):
        s = BerSample(1.0, *pair)
        assert 0 <= s.ber <= 1
        assert s.stderr() >= 0


class TestBerSimulation:
    def test_noiseless_link_is_error_free(self, link):
        s = simulate_ber(link, "none", None, 200.0, 1, max_bits=20_000)
        assert s.bit_errors == 0

    def test_stopping_rule(self, link):
        s = simulate_ber(link, "none", None, 0.0, 1, min_errors=200, max_bits=2_000_000)
        assert s.bit_errors >= 200
        # checked after every 64-block batch
        assert s.bits_sent == 64 * CFG.bits_per_block
        s = simulate_ber(link, "none", None, 12.0, 1, min_errors=200, max_bits=50_000)
        assert 50_000 <= s.bits_sent < 50_000 + 64 * CFG.bits_per_block

    def test_worker_count_does_not_change_result(self, link):
        a = simulate_ber(link, "proposed", 1.0, 4.0, 5, min_errors=10**9, max_bits=60_000, workers=1)
        b = simulate_ber(link, "proposed", 1.0, 4.0, 5, min_errors=10**9, max_bits=60_000, workers=2)
        assert a == b

    def test_unclipped_qpsk_matches_analytical_at_6db(self, link):
        s = simulate_ber(link, "none", None, 6.0, 11, min_errors=10**9, max_bits=1_000_000)
        ref = analytical_ber(ModulationScheme.QPSK, 6.0)
        assert abs(s.ber - ref) <= 3 * s.stderr(ref)

    def test_unclipped_ber_decreases_with_ebn0(self, link):
        samples = [simulate_ber(link, "none", None, e, 2, max_bits=400_000) for e in (0, 2, 4, 6, 8)]
        for lo, hi in zip(samples, samples[1:]):
            assert hi.ber < lo.ber + 3 * math.hypot(lo.stderr(), hi.stderr())
