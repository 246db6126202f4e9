import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomalink.phy import (
    ChannelRealization,
    Scheme,
    constellation,
    modulate,
    nearest_point,
    random_bits,
    rayleigh_channel,
    sic_detect,
    sic_order,
    superpose_tu_noma,
)


def _frame(blocks, powers, hs, var, seed=0, schemes=None):
    chans = [ChannelRealization(complex(h), var) for h in hs]
    return superpose_tu_noma(blocks, powers, chans, np.random.default_rng(seed), schemes)


class TestConstellation:
    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_unit_energy_and_distinct_points(self, scheme):
        pts = constellation(scheme).points
        assert pts.size == scheme.order
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)
        assert np.unique(np.round(pts, 12)).size == pts.size

    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_gray_neighbours_differ_in_one_bit(self, scheme):
        const = constellation(scheme)
        pts, d = const.points, const.min_distance
        for i, p in enumerate(pts):
            near = np.flatnonzero(np.abs(np.abs(pts - p) - d) < 1e-9)
            assert near.size >= 2
            for j in near:
                assert bin(i ^ j).count("1") == 1

    def test_parse_names(self):
        assert Scheme.parse("qam16") is Scheme.QAM16
        assert Scheme.parse("64QAM") is Scheme.QAM64
        with pytest.raises(ValueError):
            Scheme.parse("16PSK")


class TestModulate:
    def test_qpsk_four_patterns_give_four_unit_points(self):
        s = modulate([0, 0, 0, 1, 1, 1, 1, 0], Scheme.QPSK)
        assert s.size == 4
        assert np.unique(np.round(s, 12)).size == 4
        np.testing.assert_allclose(np.abs(s), 1.0, atol=1e-12)

    def test_empty_bits_give_empty_block(self):
        assert modulate([], Scheme.QAM16).size == 0

    def test_64qam_random_bits_mean_energy(self):
        bits = np.random.default_rng(5).integers(0, 2, 6000)
        s = modulate(bits, Scheme.QAM64)
        assert s.size == 1000
        assert abs(np.mean(np.abs(s) ** 2) - 1.0) <= 0.05

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            modulate([0, 1, 1], Scheme.QPSK)

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            modulate([0, 2], Scheme.QPSK)

    def test_nearest_point_tie_goes_to_lowest_index(self):
        pts = constellation(Scheme.QPSK).points
        assert nearest_point([0j], pts)[0] == 0


class TestSuperpose:
    def test_single_active_user_noiseless(self):
        rng = np.random.default_rng(1)
        s1 = modulate(random_bits(50, "QPSK", rng), "QPSK")
        s2 = modulate(random_bits(50, "QPSK", rng), "QPSK")
        h1 = 0.3 - 0.7j
        f = _frame([s1, s2], [1.0, 0.0], [h1, 1.0], 0.0)
        np.testing.assert_array_equal(f.superposed, h1 * s1)

    def test_amplitudes_are_square_roots_of_power(self):
        s1, s2 = np.array([1 + 0j]), np.array([0 + 1j])
        f = _frame([s1, s2], [4.0, 1.0], [1.0, 1.0], 0.0)
        np.testing.assert_array_equal(f.superposed, 2 * s1 + 1 * s2)

    def test_injected_noise_power(self):
        z = np.zeros(10_000, complex)
        f = _frame([z, z], [1.0, 1.0], [1.0, 1.0], 0.1, seed=3)
        assert np.mean(np.abs(f.noise) ** 2) == pytest.approx(0.1, rel=0.05)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            _frame([np.ones(3, complex), np.ones(4, complex)], [1, 1], [1, 1], 0.0)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            _frame([np.ones(3, complex)] * 2, [1, -1], [1, 1], 0.0)

    def test_same_seed_same_frame(self):
        z = np.ones(64, complex)
        a = _frame([z, z], [0.8, 0.2], [1, 0.5], 0.01, seed=9)
        b = _frame([z, z], [0.8, 0.2], [1, 0.5], 0.01, seed=9)
        np.testing.assert_array_equal(a.superposed, b.superposed)

    @settings(max_examples=50, deadline=None)
    @given(
        p1=st.floats(0.01, 10), p2=st.floats(0.01, 10),
        h1=st.complex_numbers(min_magnitude=0.1, max_magnitude=3),
        h2=st.complex_numbers(min_magnitude=0.1, max_magnitude=3),
        n4=st.integers(1, 50), seed=st.integers(0, 2**32 - 1),
    )
    def test_noiseless_energy_bookkeeping(self, p1, p2, h1, h2, n4, seed):
        # second block = first rotated by j^k: exactly uncorrelated over multiples of 4 symbols,
        # so the superposed power is the sum of the per-user powers
        rng = np.random.default_rng(seed)
        s1 = modulate(random_bits(4 * n4, "QPSK", rng), "QPSK")
        s2 = s1 * (1j ** np.arange(s1.size))
        f = _frame([s1, s2], [p1, p2], [h1, h2], 0.0)
        want = abs(h1) ** 2 * p1 * np.mean(np.abs(s1) ** 2) + abs(h2) ** 2 * p2 * np.mean(np.abs(s2) ** 2)
        assert np.mean(np.abs(f.superposed) ** 2) == pytest.approx(want, rel=1e-12)


class TestSic:
    def test_noiseless_residual_is_weak_user(self):
        rng = np.random.default_rng(2)
        s1 = modulate(random_bits(200, "16QAM", rng), "16QAM")
        s2 = modulate(random_bits(200, "QPSK", rng), "QPSK")
        h = [0.9 + 0.2j, 0.4 - 0.3j]
        p = [0.9, 0.1]
        f = _frame([s1, s2], p, h, 0.0)
        res = sic_detect(f, ["16QAM", "QPSK"], [0, 1])
        np.testing.assert_allclose(res.residual, h[1] * np.sqrt(p[1]) * s2, rtol=0, atol=1e-12)

    def test_zero_power_weak_user_outputs_noise(self):
        rng = np.random.default_rng(4)
        s1 = modulate(random_bits(500, "QPSK", rng), "QPSK")
        f = _frame([s1, s1], [1.0, 0.0], [1.0, 1.0], 1e-3, seed=4)
        res = sic_detect(f, ["QPSK", "QPSK"], [0, 1])
        np.testing.assert_allclose(res.soft[1], f.noise, atol=1e-12)

    def test_strong_user_symbol_error_rate_at_20db(self):
        rng = np.random.default_rng(6)
        s1 = modulate(random_bits(1000, "QPSK", rng), "QPSK")
        s2 = modulate(random_bits(1000, "QPSK", rng), "QPSK")
        f = _frame([s1, s2], [0.8, 0.2], [1.0, 1.0], 10 ** (-20 / 10), seed=6)
        res = sic_detect(f, ["QPSK", "QPSK"], [0, 1])
        assert np.mean(~np.isclose(res.first_decisions, s1)) < 1e-2

    def test_order_is_descending_received_power(self):
        z = np.ones(8, complex)
        f = _frame([z, z], [0.2, 0.8], [1.0, 1.0], 0.0)
        assert sic_order(f) == [1, 0]

    @settings(max_examples=60, deadline=None)
    @given(
        p1=st.floats(0.05, 1.0), ratio=st.floats(0.05, 0.9),
        ph1=st.floats(0, 2 * np.pi), ph2=st.floats(0, 2 * np.pi),
        scheme=st.sampled_from(list(Scheme)), seed=st.integers(0, 2**32 - 1),
    )
    def test_noiseless_perfect_recovery(self, p1, ratio, ph1, ph2, scheme, seed):
        # keep the weak user's peak amplitude inside half the strong user's minimum distance
        c1 = constellation(scheme)
        peak2 = np.max(np.abs(constellation("QPSK").points))
        a1 = np.sqrt(p1)
        a2 = ratio * a1 * c1.min_distance / 2 / peak2
        p2 = a2**2
        rng = np.random.default_rng(seed)
        s1 = modulate(random_bits(64, scheme, rng), scheme)
        s2 = modulate(random_bits(64, "QPSK", rng), "QPSK")
        h = [np.exp(1j * ph1), np.exp(1j * ph2)]
        f = _frame([s1, s2], [p1, p2], h, 0.0)
        res = sic_detect(f, [scheme, "QPSK"])
        np.testing.assert_array_equal(res.first_decisions, s1)
        np.testing.assert_allclose(res.soft[1], s2, atol=1e-9)


def test_rayleigh_mean_gain():
    chans = rayleigh_channel(np.random.default_rng(8), 0.1, size=100_000)
    gains = np.array([c.gain for c in chans])
    assert np.mean(gains) == pytest.approx(1.0, rel=0.02)


def test_negative_noise_variance_rejected():
    with pytest.raises(ValueError):
        ChannelRealization(1.0, -0.1)
