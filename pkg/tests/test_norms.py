"""Tests for exponents, admissibility, mixed norms and the smoothing functionals."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.eigen import WaveIndex, make_channel
from src.error_handler import CouplingError, DataValidationError, RadialityError, ZeroDatumError
from src.norms import (
    INF,
    ExponentTable,
    admissibility,
    annulus_derivative_fit,
    annulus_exponent_fit,
    beta_exponent,
    critical_exponents,
    delta_exponent,
    gamma_condition,
    hardy_check_2d,
    hardy_lower_bound_2d,
    hartree_pair_case,
    hartree_pair_threshold,
    lowest_gamma,
    mixed_norm,
    morrey_functional,
    norm_equivalence_ratios,
    smoothing_average,
    sobolev_index,
    sobolev_norm,
    strichartz_ratio,
)
from src.partialwave import RadialGrid, single_channel_field
from src.propagator import Trajectory, band_limited_datum, bump_profile


class TestExponents:
    @pytest.mark.parametrize(
        "n,q,expected",
        [(2, 2.0, 0.0), (2, 4.0, 0.25 - 1.0 / 3.0), (3, 2.0, -0.5), (3, INF, -5.0 / 6.0)],
    )
    def test_beta(self, n, q, expected):
        assert beta_exponent(n, q) == pytest.approx(expected)

    def test_delta(self):
        assert delta_exponent(3, 2.0) == pytest.approx(-0.5)
        assert delta_exponent(3, 8.0, 0.99) == pytest.approx(1.0 / 3.96 - 1.0)

    def test_exponent_range(self):
        with pytest.raises(DataValidationError):
            beta_exponent(3, 1.5)
        with pytest.raises(DataValidationError):
            delta_exponent(3, 4.0, epsilon=0.4)

    def test_lowest_gamma(self):
        assert lowest_gamma(3, 0.6) == pytest.approx(0.8)
        with pytest.raises(CouplingError):
            lowest_gamma(2, 0.5)

    def test_gamma_condition(self):
        assert gamma_condition(3, 0.0, 2.0, 6.0)
        assert not gamma_condition(3, 0.0, 2.0, 4.0)

    def test_q_weight_continuous(self):
        table = ExponentTable(3, 0.0, 2.0, 6.0)
        assert table.q_weight(1.0, 1.0) == pytest.approx(1.0)
        assert table.q_weight(2.0, 1.0) == pytest.approx(2.0**table.large_exponent)
        assert table.q_weight(1.0 - 1e-12, 1.0) == pytest.approx(1.0)

    def test_schur_sum_scale_invariant(self):
        table = ExponentTable(3, 0.0, 2.0, 6.0)
        sums = [table.schur_sum(R) for R in (0.5, 1.0, 2.0)]
        assert all(math.isfinite(s) for s in sums)
        assert max(sums) == pytest.approx(min(sums), rel=1e-2)
        assert table.schur_supremum([0.5, 1.0, 2.0]) == max(sums)


class TestAdmissibility:
    def test_critical_exponents_3d(self):
        q_c, p_c = critical_exponents(3, 0.5)
        assert q_c == pytest.approx(3.0 / (1.0 - math.sqrt(0.75)))
        assert p_c == 2.0
        assert critical_exponents(3, 0.0) == (INF, 2.0)

    def test_critical_exponents_2d(self):
        q_c, p_c = critical_exponents(2, 0.3)
        assert q_c == pytest.approx(20.0)
        assert p_c == pytest.approx(2.25)

    def test_nonradial_class(self):
        assert critical_exponents(2, 0.5, "dirac_nonradial") == (INF, 2.0)
        assert admissibility(3, 0.9, 4.0, INF, "dirac_nonradial").admissible

    def test_coupling_limits(self):
        with pytest.raises(CouplingError):
            critical_exponents(2, 0.5)
        with pytest.raises(CouplingError):
            critical_exponents(3, 0.97)
        with pytest.raises(DataValidationError):
            critical_exponents(3, 0.1, "cylindrical")

    def test_endpoint(self):
        case = admissibility(3, 0.5, INF, 2.0)
        assert case.admissible and case.reason == "endpoint"
        assert case.s == 0.0

    @pytest.mark.parametrize(
        "n,nu,p,q,ok",
        [
            (3, 0.5, 4.0, 6.0, True),
            (3, 0.5, 2.0, 4.0, False),
            (3, 0.5, 8.0, 30.0, False),
            (2, 0.3, 4.0, 8.0, True),
            (2, 0.3, 2.2, 8.0, False),
        ],
    )
    def test_region(self, n, nu, p, q, ok):
        assert admissibility(n, nu, p, q).admissible is ok

    @pytest.mark.parametrize(
        "n,nu,radial_class",
        [
            (3, 0.5, "all"),
            (3, 0.8, "dirac_radial"),
            (3, 0.5, "dirac_nonradial"),
            (2, 0.25, "all"),
            (2, 0.4, "dirac_nonradial"),
        ],
    )
    def test_region_is_monotone_on_lattice(self, n, nu, radial_class):
        inv = np.linspace(0.0, 0.5, 50)
        q_c, _ = critical_exponents(n, nu, radial_class)
        inv_qc = 0.0 if q_c == INF else 1.0 / q_c
        nonradial = radial_class == "dirac_nonradial"

        def exponent(value: float) -> float:
            return INF if value == 0.0 else 1.0 / value

        table = np.array(
            [[admissibility(n, nu, exponent(x), exponent(y), radial_class).admissible for y in inv] for x in inv]
        )
        assert table.any()
        # larger p never leaves the region
        for i in range(1, inv.size):
            assert not np.any(table[i] & ~table[i - 1])
        # larger q never leaves it while q stays in range
        for j in range(1, inv.size):
            if inv[j - 1] > inv_qc or (nonradial and inv[j - 1] >= inv_qc):
                assert not np.any(table[:, j] & ~table[:, j - 1])

    def test_sobolev_index(self):
        assert sobolev_index(3, 4.0, 6.0) == pytest.approx(0.75)

    def test_hartree_pairs(self):
        assert hartree_pair_threshold(0.0) == pytest.approx(1.0)
        case = hartree_pair_case(0.5, 2.0)
        assert case.admissible
        assert (case.p, case.q) == (4.0, 4.0)
        assert not admissibility(3, 0.5, 4.0, 6.0, "hartree_pair").admissible
        with pytest.raises(DataValidationError):
            hartree_pair_case(0.5, 1.0)


class TestMixedNorm:
    @pytest.fixture
    def stationary(self):
        grid = RadialGrid.gauss_panels(1e-3, 2.0, 0.25, 8)
        state = single_channel_field(WaveIndex(2, 0.5), grid, np.ones(grid.size))
        return Trajectory(np.array([0.0, 1.0]), [state, state])

    def test_values(self, stationary):
        l2 = math.sqrt((4.0 - 1e-6) / 2.0)
        assert mixed_norm(stationary, 2.0, 2.0) == pytest.approx(l2)
        assert mixed_norm(stationary, INF, 2.0) == pytest.approx(l2)
        assert mixed_norm(stationary, 2.0, INF) == pytest.approx(1.0)

    def test_channelwise_dominates(self):
        grid = RadialGrid.gauss_panels(1e-3, 2.0, 0.25, 8)
        state = single_channel_field(WaveIndex(2, 0.5), grid, np.ones(grid.size), grid.nodes)
        traj = Trajectory(np.array([0.0, 1.0]), [state, state])
        assert mixed_norm(traj, 4.0, 6.0, "channelwise") >= mixed_norm(traj, 4.0, 6.0)

    def test_rejects(self, stationary):
        with pytest.raises(DataValidationError):
            mixed_norm(stationary, 2.0, 2.0, ordering="sideways")
        single = Trajectory(stationary.times[:1], stationary.states[:1])
        with pytest.raises(DataValidationError):
            mixed_norm(single, 4.0, 2.0)


class TestSobolev:
    def test_l2_isometry(self, band_limited):
        assert sobolev_norm(band_limited.datum, 0.0, 0.5, transformer=band_limited.transformer) == pytest.approx(
            1.0, abs=2e-3
        )

    def test_energy_window(self, band_limited):
        value = sobolev_norm(band_limited.datum, 1.0, 0.5, transformer=band_limited.transformer)
        assert 0.25 < value < 1.75

    def test_rejects(self, band_limited):
        with pytest.raises(DataValidationError):
            sobolev_norm(band_limited.datum, 2.5, 0.5, transformer=band_limited.transformer)
        with pytest.raises(DataValidationError):
            sobolev_norm(band_limited.datum, 0.0, 0.5, flavor="free", transformer=band_limited.transformer)
        with pytest.raises(DataValidationError):
            sobolev_norm(band_limited.datum, 0.0, 0.5, flavor="dressed")

    def test_ratio_at_zero_regularity(self, band_limited):
        ratios = norm_equivalence_ratios(band_limited.datum, 0.5, [0.0], band_limited.rho_grid)
        assert 0.99 < ratios[0.0] < 1.5


class TestStrichartzRatio:
    def test_endpoint_is_mass(self, band_limited):
        case = admissibility(3, 0.5, INF, 2.0)
        times = np.linspace(0.0, 1.0, 5)
        ratio = strichartz_ratio(band_limited.datum, 0.5, case, times, propagator=band_limited.propagator)
        assert ratio == pytest.approx(1.0, abs=5e-3)

    @pytest.mark.parametrize("factor", [0.875, 1.125])
    def test_dilation_invariant(self, band_limited, factor):
        case = admissibility(3, 0.5, 4.0, 6.0)
        times = np.linspace(0.0, 1.0, 5)
        base = strichartz_ratio(band_limited.datum, 0.5, case, times, propagator=band_limited.propagator)

        # the dilated datum is rebuilt on the same grids from the rescaled spectral bump
        a, b = (edge / factor for edge in band_limited.support)
        dilated = band_limited_datum(
            band_limited.index, 0.5, bump_profile(a, b), (a, b), band_limited.r_grid,
            transformer=band_limited.transformer,
        )
        scaled = strichartz_ratio(dilated, 0.5, case, factor * times, propagator=band_limited.propagator)
        assert scaled != base
        assert scaled == pytest.approx(base, rel=5e-3)

    def test_rejects(self, band_limited):
        times = np.linspace(0.0, 1.0, 3)
        with pytest.raises(DataValidationError, match="not admissible"):
            strichartz_ratio(band_limited.datum, 0.5, admissibility(3, 0.5, 2.0, 4.0), times)
        with pytest.raises(ZeroDatumError):
            strichartz_ratio(
                band_limited.datum.scaled(0.0), 0.5, admissibility(3, 0.5, INF, 2.0), times,
                propagator=band_limited.propagator,
            )
        with pytest.raises(DataValidationError, match="coupling"):
            strichartz_ratio(
                band_limited.datum, 0.3, admissibility(3, 0.3, INF, 2.0), times, propagator=band_limited.propagator
            )


class TestSmoothing:
    def test_morrey_on_stationary_state(self):
        grid = RadialGrid.gauss_panels(1e-3, 2.0, 0.25, 8)
        state = single_channel_field(WaveIndex(3, 1, 0.5), grid, np.ones(grid.size))
        traj = Trajectory(np.array([0.0, 1.0]), [state, state])
        result = morrey_functional(traj, [0.5, 1.0, 2.0])
        np.testing.assert_allclose(result.values, np.array([0.5, 1.0, 2.0]) / math.sqrt(3.0), rtol=1e-6)
        assert result.argmax == 2
        assert not result.interior
        assert result.plateau_ratio == pytest.approx(2.0, rel=1e-6)

    def test_morrey_rejects(self):
        grid = RadialGrid.gauss_panels(1e-3, 2.0, 0.25, 8)
        state = single_channel_field(WaveIndex(3, 1, 0.5), grid, np.ones(grid.size))
        traj = Trajectory(np.array([0.0, 1.0]), [state, state])
        with pytest.raises(DataValidationError):
            morrey_functional(traj, [4.0])
        with pytest.raises(DataValidationError):
            morrey_functional(Trajectory(np.array([0.0]), [state]), [1.0])

    def test_morrey_on_flow(self, band_limited):
        traj = band_limited.propagator.evolve_trajectory(band_limited.datum, np.linspace(0.0, 1.0, 5))
        result = morrey_functional(traj, [2.0**j for j in range(-2, 5)])
        assert result.supremum > 0.0
        assert math.isfinite(result.plateau_ratio)

    def test_smoothing_average_bounded(self):
        averages = smoothing_average(make_channel(WaveIndex(3, 1), 0.5), [4.0, 8.0, 16.0, 32.0])
        assert np.all(averages > 0)
        assert np.max(averages) / np.min(averages) < 2.0


class TestAnnulusFits:
    def test_small_radius_slope(self):
        channel = make_channel(WaveIndex(3, 1), 0.5)
        fit = annulus_exponent_fit(channel, 2.0, "small")
        assert fit.target == pytest.approx(channel.gamma + 0.5 - 1.0)
        assert fit.matches()

    def test_small_radius_derivative_slope(self):
        channel = make_channel(WaveIndex(3, 1), 0.5)
        fit = annulus_derivative_fit(channel, 2.0)
        assert fit.target == pytest.approx(channel.gamma + 0.5 - 2.0)
        assert fit.matches()

    def test_large_radius_slope(self):
        channel = make_channel(WaveIndex(3, 2), 0.3)
        fit = annulus_exponent_fit(channel, 2.0, "large")
        assert fit.target == pytest.approx(-0.5)
        assert fit.bound == pytest.approx(beta_exponent(3, 2.0))
        assert fit.matches()

    def test_needs_enough_radii(self):
        with pytest.raises(DataValidationError):
            annulus_exponent_fit(make_channel(WaveIndex(3, 1), 0.0), 2.0, radii=[1.0, 2.0])
        with pytest.raises(DataValidationError):
            annulus_exponent_fit(make_channel(WaveIndex(3, 1), 0.0), 2.0, regime="medium")


class TestHardy:
    @pytest.fixture
    def grid(self):
        return RadialGrid.gauss_panels(1e-3, 10.0, 0.5, 8)

    def test_nonradial_ratio_below_one(self, grid):
        r = grid.nodes
        u = single_channel_field(WaveIndex(2, 1.5), grid, r**2 * np.exp(-((r - 3.0) ** 2)))
        ratio = hardy_check_2d(u)
        assert 0.0 < ratio < 1.0

    def test_rejects_radial_data(self, grid):
        u = single_channel_field(WaveIndex(2, -0.5), grid, np.exp(-((grid.nodes - 3.0) ** 2)))
        with pytest.raises(RadialityError):
            hardy_check_2d(u)

    def test_lower_bound_rejects_radial_data(self, grid):
        u = single_channel_field(WaveIndex(2, 0.5), grid, np.exp(-((grid.nodes - 3.0) ** 2)))
        with pytest.raises(RadialityError):
            hardy_lower_bound_2d(u, 0.2)
