import ast
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nomalink.sinr as sinr_mod
from nomalink.amc import fit_hypothesis
from nomalink.phy import Scheme, constellation, modulate, nearest_point, random_bits
from nomalink.sim import awgn_frame
from nomalink.sinr import (
    SINR_CAP_DB,
    ErrorSignal,
    estimate_sinr,
    expected_error_power,
    extract_error_signal,
    map_to_level,
    noise_from_error_power,
)
from nomalink.svm import KernelParams

WIDE_MARGIN_BOUND = KernelParams(regularization=10.0)


def _monte_carlo_error_power(scheme, nv, n=400_000, seed=0):
    rng = np.random.default_rng(seed)
    pts = constellation(scheme).points
    s = pts[rng.integers(0, pts.size, n)]
    x = (s + np.sqrt(nv / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))) / np.sqrt(1 + nv)
    return float(np.mean(np.abs(x - pts[nearest_point(x, pts)]) ** 2))


class TestErrorModel:
    @pytest.mark.parametrize("scheme", list(Scheme))
    @pytest.mark.parametrize("snr_db", [-3.0, 5.0, 15.0])
    def test_closed_form_matches_monte_carlo(self, scheme, snr_db):
        nv = 10 ** (-snr_db / 10)
        mc = _monte_carlo_error_power(scheme, nv)
        assert expected_error_power(scheme, nv) == pytest.approx(mc, rel=0.02)

    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_inversion_round_trip(self, scheme):
        for snr_db in (0.0, 7.0, 20.0):
            nv = 10 ** (-snr_db / 10)
            assert noise_from_error_power(scheme, expected_error_power(scheme, nv)) == pytest.approx(nv, rel=1e-3)


class TestExtraction:
    def test_noiseless_perfect_separation_has_no_violators(self):
        rng = np.random.default_rng(1)
        block = modulate(random_bits(500, "QPSK", rng), "QPSK")
        fit = fit_hypothesis(block, "QPSK", WIDE_MARGIN_BOUND)
        err = extract_error_signal(block, fit)
        assert err.count == 0
        assert estimate_sinr(block, err).sinr_db == SINR_CAP_DB

    def test_margin_exactly_one_is_not_a_violation(self):
        block = modulate(random_bits(64, "QPSK", np.random.default_rng(2)), "QPSK")

        class Fit:
            scheme = Scheme.QPSK
            normalized = block
            margins = np.ones(64)

        assert extract_error_signal(block, Fit()).count == 0

    def test_qpsk_at_10db_has_some_violators(self):
        block = awgn_frame(Scheme.QPSK, 10.0, 1000, np.random.default_rng(3))
        err = extract_error_signal(block, fit_hypothesis(block, "QPSK", WIDE_MARGIN_BOUND))
        assert 0 < err.count < 1000

    def test_foreign_fit_rejected(self):
        a = awgn_frame(Scheme.QPSK, 10.0, 200, np.random.default_rng(4))
        fit = fit_hypothesis(a, "QPSK")
        with pytest.raises(ValueError):
            extract_error_signal(a[:100], fit)


class TestEstimate:
    def test_zero_error_caps(self):
        block = np.ones(10, complex)
        err = ErrorSignal(np.zeros(0, complex), np.zeros(0, complex), 10, Scheme.QPSK, 1.0)
        est = estimate_sinr(block, err)
        assert est.sinr_db == 40.0 and est.level_index == 15

    def test_ten_db_arithmetic(self):
        block = np.exp(2j * np.pi * np.arange(10) / 10)  # mean power exactly 1
        dev = np.zeros(10, complex)
        dev[0] = 1.0  # error power 1 / 10
        err = ErrorSignal(dev, dev, 10, Scheme.QPSK, 1.0)
        est = estimate_sinr(block, err, bias_correction=False, signal_power="received")
        assert est.sinr_db == 10.0
        assert est.level_index == 8

    def test_empty_block_rejected(self):
        err = ErrorSignal(np.zeros(0, complex), np.zeros(0, complex), 0, Scheme.QPSK, 0.0)
        with pytest.raises(ValueError):
            estimate_sinr(np.zeros(0, complex), err)

    def test_unknown_modes_rejected(self):
        err = ErrorSignal(np.zeros(0, complex), np.zeros(0, complex), 4, Scheme.QPSK, 1.0)
        with pytest.raises(ValueError):
            estimate_sinr(np.ones(4, complex), err, signal_power="peak")
        with pytest.raises(ValueError):
            estimate_sinr(np.ones(4, complex), err, error_entries="bits")

    @pytest.mark.parametrize("sinr,level", [(9.0, 8), (25.0, 15), (-4.7, 2)])
    def test_level_mapping(self, sinr, level):
        assert map_to_level(sinr) == level

    def test_tracks_injected_noise_on_a_short_sweep(self):
        rng = np.random.default_rng(5)
        means = []
        for true_db in (0.0, 6.0, 12.0, 18.0):
            est = []
            for _ in range(20):
                block = awgn_frame(Scheme.QPSK, true_db, 1000, rng)
                est.append(estimate_sinr(block, extract_error_signal(block, fit_hypothesis(block, "QPSK"))).sinr_db)
            means.append(np.mean(est))
            assert abs(means[-1] - true_db) <= 2.0
        assert all(b > a for a, b in zip(means, means[1:]))

    @settings(max_examples=40, deadline=None)
    @given(
        scale=st.floats(1e-3, 1e3),
        snr_db=st.floats(-10, 40),
        scheme=st.sampled_from(list(Scheme)),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_never_nan_or_infinite(self, scale, snr_db, scheme, seed):
        block = scale * awgn_frame(scheme, snr_db, 128, np.random.default_rng(seed))
        fit = fit_hypothesis(block, scheme)
        for opts in ({}, dict(bias_correction=False, signal_power="received", error_entries="raw")):
            est = estimate_sinr(block, extract_error_signal(block, fit), **opts)
            assert np.isfinite(est.sinr_db) and -40 <= est.sinr_db <= 40
            assert 1 <= est.level_index <= 15


def test_estimator_has_no_decoding_dependency():
    tree = ast.parse(Path(sinr_mod.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            imported |= {a.name for a in node.names}
        elif isinstance(node, ast.ImportFrom):
            imported.add(("." * node.level) + (node.module or ""))
    assert imported <= {"__future__", "dataclasses", "functools", "numpy", "scipy.stats", ".cqi", ".phy"}
