"""Tests for the generalized eigenfunctions and their pointwise bounds."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from src.eigen import (
    WaveIndex,
    channel_ladder,
    default_rho_grid,
    eval_psi,
    eval_psi_array,
    eval_psi_scaled,
    fit_decay_constant,
    fit_small_rho_exponent,
    make_channel,
    uniformity_spread,
    verify_derivative_bounds,
    verify_pointwise_bounds,
)
from src.error_handler import CouplingError, DataValidationError, InvalidIndexError

RHO = np.geomspace(1e-2, 60.0, 80)


def _free_oracle(n: int, order: float, x: np.ndarray) -> np.ndarray:
    c = math.sqrt(2 * math.pi) * 2.0 ** (-n / 2.0)
    return c * x ** (1 - n / 2.0) * special.jv(order, x)


class TestWaveIndex:
    def test_valid_indices(self):
        assert WaveIndex(2, -1.5).label == "k=-1.5"
        assert WaveIndex(3, 2, 1.5).label == "k=+2,m=+1.5"

    @pytest.mark.parametrize(
        "n,k,m_k",
        [(2, 1.0, None), (2, 0.5, 0.5), (3, 0.0, None), (3, 1.5, None), (3, 1.0, 1.5), (4, 1.0, None)],
    )
    def test_invalid_indices(self, n, k, m_k):
        with pytest.raises(InvalidIndexError):
            WaveIndex(n, k, m_k)

    def test_channel_ladder(self):
        assert [i.k for i in channel_ladder(3, 2)] == [1.0, -1.0, 2.0, -2.0]
        assert [i.k for i in channel_ladder(2, 1.5)] == [0.5, -0.5, 1.5, -1.5]


class TestMakeChannel:
    def test_constants(self):
        channel = make_channel(WaveIndex(3, 1), 0.6)
        assert channel.gamma == pytest.approx(0.8)
        assert channel.small_rho_exponent == pytest.approx(-0.2)

    def test_phase_shift_examples(self):
        assert make_channel(WaveIndex(3, 1), 0.5).xi == pytest.approx(math.pi / 12.0, rel=1e-14)
        assert make_channel(WaveIndex(3, -1), 0.0).xi == pytest.approx(math.pi / 2.0, rel=1e-14)

    def test_coupling_bound_2d(self):
        with pytest.raises(CouplingError, match=r"exceeds the bound \|nu\| <= 1/2 for n = 2"):
            make_channel(WaveIndex(2, 0.5), 0.6)

    def test_gamma_must_be_positive(self):
        with pytest.raises(CouplingError, match="not positive"):
            make_channel(WaveIndex(3, 1), 1.0)


class TestEvaluation:
    @pytest.mark.parametrize(
        "n,k",
        [(2, sign * (j + 0.5)) for j in range(5) for sign in (1, -1)]
        + [(3, float(sign * j)) for j in range(1, 6) for sign in (1, -1)],
    )
    def test_free_channel_is_bessel(self, n, k):
        values = eval_psi_array(make_channel(WaveIndex(n, k), 0.0), 1, RHO)
        upper = _free_oracle(n, abs(k) + 0.5, RHO)
        lower = _free_oracle(n, abs(k) - 0.5, RHO)
        # k < 0 shifts the phase by pi/2: F takes the lower order, G the negated upper one
        expected_f, expected_g = (upper, lower) if k > 0 else (lower, -upper)
        np.testing.assert_allclose(values.F, expected_f, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(values.G, expected_g, rtol=1e-6, atol=1e-8)

    @pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_homogeneity_is_exact(self, scale, sign):
        channel = make_channel(WaveIndex(3, 2), 0.4)
        r = np.geomspace(1e-2, 40.0, 25)
        by_energy = eval_psi_scaled(channel, sign, scale * 1.5, r)
        by_radius = eval_psi_scaled(channel, sign, 1.5, scale * r)
        np.testing.assert_array_equal(by_energy.F, by_radius.F)
        np.testing.assert_array_equal(by_energy.G, by_radius.G)

    def test_negative_energy_is_mirrored_and_swapped(self):
        channel = make_channel(WaveIndex(3, 2), 0.4)
        minus = eval_psi_array(channel, -1, RHO)
        mirrored = eval_psi_array(channel.mirrored(), 1, RHO)
        np.testing.assert_array_equal(minus.F, mirrored.G)
        np.testing.assert_array_equal(minus.G, mirrored.F)

    def test_analytic_derivatives(self):
        channel = make_channel(WaveIndex(2, 1.5), 0.3)
        for x in (0.7, 5.0, 12.0):
            sample = eval_psi(channel, 1, x)
            h = 1e-5 * x
            forward = eval_psi(channel, 1, x + h)
            backward = eval_psi(channel, 1, x - h)
            assert sample.F_prime == pytest.approx((forward.F - backward.F) / (2 * h), rel=1e-5, abs=1e-9)
            assert sample.G_prime == pytest.approx((forward.G - backward.G) / (2 * h), rel=1e-5, abs=1e-9)

    def test_small_rho_power_law(self):
        channel = make_channel(WaveIndex(3, 1), 0.5)
        assert fit_small_rho_exponent(channel) == pytest.approx(channel.small_rho_exponent, abs=1e-3)

    def test_large_rho_decay(self):
        channel = make_channel(WaveIndex(3, 1), 0.5)
        rho = np.array([200.0, 400.0, 800.0])
        magnitude = eval_psi_array(channel, 1, rho, derivatives=False).magnitude
        scaled = magnitude * rho
        assert np.all(scaled < 2.0)

    def test_rejects_non_positive_rho(self):
        channel = make_channel(WaveIndex(3, 1), 0.0)
        with pytest.raises(DataValidationError):
            eval_psi_array(channel, 1, np.array([0.0, 1.0]))
        with pytest.raises(DataValidationError):
            eval_psi_array(channel, 0, np.array([1.0]))


class TestBounds:
    def test_pointwise_bounds(self):
        channel = make_channel(WaveIndex(3, 2), 0.5)
        report = verify_pointwise_bounds(channel, default_rho_grid(2, 200), decay_constant=0.0)
        assert report.passed
        assert all(c > 0 for c in report.regime_constants)
        assert report.small_rho_exponent == pytest.approx(channel.small_rho_exponent, abs=1e-2)
        assert report.to_dict()["pass"] is True

    def test_derivative_bounds(self):
        channel = make_channel(WaveIndex(2, 1.5), 0.25)
        report = verify_derivative_bounds(channel, default_rho_grid(1.5, 150), decay_constant=0.0)
        assert report.passed
        assert report.derivative
        assert report.small_rho_exponent == pytest.approx(channel.small_rho_exponent - 1.0, abs=1e-2)

    def test_uniformity_spread(self):
        reports = [
            verify_pointwise_bounds(make_channel(index, 0.3), default_rho_grid(index.k, 120), decay_constant=0.0)
            for index in channel_ladder(3, 3)
        ]
        spread = uniformity_spread(reports)
        assert len(spread) == 3
        assert all(s >= 0 for s in spread)
        assert uniformity_spread([]) == [0.0, 0.0, 0.0]

    def test_free_constants_are_uniform_in_k(self):
        reports = [
            verify_pointwise_bounds(make_channel(index, 0.0), default_rho_grid(index.k, 400), decay_constant=0.0)
            for index in channel_ladder(3, 5)
        ]
        assert max(uniformity_spread(reports)) <= 0.10

    def test_decay_constant_fit(self):
        assert fit_decay_constant(3, 0.3, (4.0,)) == 0.0
        value = fit_decay_constant(3, 0.3, (4.0, 5.0, 6.0))
        assert value >= 0.0 and math.isfinite(value)
