"""Tests for grids, angular bases, channel fields and the radial Dirac matrices."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.eigen import WaveIndex, make_channel
from src.error_handler import DataValidationError, InvalidIndexError, SupportError
from src.partialwave import (
    CLIFFORD,
    PartialWaveField,
    RadialGrid,
    angular_basis,
    angular_quadrature,
    apply_radial_dirac,
    basis_samples,
    channel_indices,
    decompose,
    dilate,
    is_dirac_radial_index,
    project_dirac_nonradial,
    project_dirac_radial,
    reconstruct,
    single_channel_field,
)


@pytest.fixture
def panel_grid():
    return RadialGrid.gauss_panels(1e-3, 10.0, 0.25, order=12)


def _gaussian(grid: RadialGrid, center: float, width: float = 0.5) -> np.ndarray:
    return np.exp(-((grid.nodes - center) ** 2) / width**2).astype(complex)


class TestRadialGrid:
    def test_panel_layout(self):
        grid = RadialGrid.gauss_panels(1e-3, 10.0, 0.5, order=8)
        assert grid.r_min == 1e-3
        assert grid.r_max == 10.0
        assert grid.max_panel_length <= 0.5
        assert grid.size == 8 * (grid.panels.size - 1)
        assert 0.5 in grid.panels and 0.25 in grid.panels

    def test_integrates_polynomials_exactly(self, panel_grid):
        assert panel_grid.integrate(np.ones(panel_grid.size)) == pytest.approx(10.0 - 1e-3, rel=1e-13)
        assert panel_grid.integrate(np.ones(panel_grid.size), n=3) == pytest.approx((1000.0 - 1e-9) / 3, rel=1e-13)

    def test_mass_below_panel_boundary(self, panel_grid):
        values = np.ones(panel_grid.size)
        assert panel_grid.mass_below(values, 1.0, 3) == pytest.approx((1.0 - 1e-9) / 3, rel=1e-13)

    def test_mass_below_between_nodes(self, panel_grid):
        values = np.ones(panel_grid.size)
        assert panel_grid.mass_below(values, 3.1, 1) == pytest.approx(3.1 - 1e-3, rel=1e-2)

    def test_differentiate_panels(self, panel_grid):
        derivative = panel_grid.differentiate(np.sin(panel_grid.nodes))
        np.testing.assert_allclose(derivative, np.cos(panel_grid.nodes), atol=1e-8)

    def test_log_uniform_quadrature(self):
        grid = RadialGrid.log_uniform(0.01, 20.0, 301)
        width = 0.3
        integrand = np.exp(-np.log(grid.nodes) ** 2 / width**2) / grid.nodes
        assert grid.integrate(integrand) == pytest.approx(math.sqrt(math.pi) * width, rel=1e-8)

    def test_log_uniform_differentiate(self):
        grid = RadialGrid.log_uniform(0.1, 10.0, 401)
        values = np.exp(-np.log(grid.nodes) ** 2)
        expected = -2.0 * np.log(grid.nodes) / grid.nodes * values
        np.testing.assert_allclose(grid.differentiate(values), expected, atol=1e-5)

    def test_scaled(self, panel_grid):
        scaled = panel_grid.scaled(2.0)
        np.testing.assert_allclose(scaled.nodes, 2.0 * panel_grid.nodes)
        assert scaled.integrate(np.ones(scaled.size)) == pytest.approx(2.0 * (10.0 - 1e-3))

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: RadialGrid.gauss_panels(1.0, 0.5, 0.1),
            lambda: RadialGrid.gauss_panels(0.1, 1.0, 0.0),
            lambda: RadialGrid.log_uniform(0.1, 1.0, 5),
        ],
    )
    def test_invalid_grids(self, factory):
        with pytest.raises(DataValidationError):
            factory()


class TestAngularBases:
    def test_clifford_relations(self):
        assert CLIFFORD.anticommutator_defect() < 1e-14

    @pytest.mark.parametrize("n", [2, 3])
    def test_orthonormal_under_quadrature(self, n):
        quadrature = angular_quadrature(n, 2.5)
        samples = basis_samples(n, 2.5, quadrature.angles)
        values = np.stack([s.value for s in samples])
        gram = np.einsum("iaj,kaj,a->ik", np.conj(values), values, quadrature.weights)
        np.testing.assert_allclose(gram, np.eye(len(samples)), atol=1e-12)

    def test_channel_indices_count_3d(self):
        # two m_k values per sign at |k| = 1, four at |k| = 2
        assert len(channel_indices(3, 2)) == 12

    def test_3d_basis_needs_m_k(self):
        with pytest.raises(InvalidIndexError):
            angular_basis(WaveIndex(3, 1), 1, np.zeros((1, 2)))

    def test_decompose_reconstruct(self):
        grid = RadialGrid.gauss_panels(0.01, 4.0, 0.5)
        index = WaveIndex(2, -1.5)
        profile = np.exp(-grid.nodes**2)

        def sampler(r, angles):
            return profile[:, None, None] * angular_basis(index, -1, angles)[None, :, :]

        pwf = decompose(2, grid, sampler)
        assert pwf.indices == [index]
        np.testing.assert_allclose(pwf.channels[index][1], profile, atol=1e-12)
        np.testing.assert_allclose(pwf.channels[index][0], 0.0, atol=1e-12)

        angles = np.linspace(0.0, 2 * math.pi, 7)
        np.testing.assert_allclose(reconstruct(pwf, angles), sampler(grid.nodes, angles), atol=1e-12)


class TestChannelField:
    def test_norm_and_dilation(self, panel_grid):
        index = WaveIndex(3, 1, 0.5)
        pwf = single_channel_field(index, panel_grid, _gaussian(panel_grid, 4.0))
        expected = math.sqrt(panel_grid.integrate(np.abs(_gaussian(panel_grid, 4.0)) ** 2, n=3))
        assert pwf.norm() == pytest.approx(expected)
        assert dilate(pwf, 3.0).norm() == pytest.approx(pwf.norm(), rel=1e-12)

    def test_linear_combination_uses_channel_union(self, panel_grid):
        a = single_channel_field(WaveIndex(2, 0.5), panel_grid, _gaussian(panel_grid, 3.0))
        b = single_channel_field(WaveIndex(2, 1.5), panel_grid, _gaussian(panel_grid, 5.0))
        combined = a.linear_combination(1.0, b, 2.0)
        assert combined.indices == [WaveIndex(2, 0.5), WaveIndex(2, 1.5)]
        assert combined.norm() == pytest.approx(math.hypot(a.norm(), 2.0 * b.norm()))
        assert combined.inner(a) == pytest.approx(a.norm() ** 2)

    def test_projections(self, panel_grid):
        a = single_channel_field(WaveIndex(2, -0.5), panel_grid, _gaussian(panel_grid, 3.0))
        b = single_channel_field(WaveIndex(2, 2.5), panel_grid, _gaussian(panel_grid, 5.0))
        both = a.linear_combination(1.0, b, 1.0)
        assert project_dirac_radial(both).indices == [WaveIndex(2, -0.5)]
        assert project_dirac_nonradial(both).indices == [WaveIndex(2, 2.5)]
        assert is_dirac_radial_index(WaveIndex(3, -1, 0.5))

    def test_3d_channels_need_m_k(self, panel_grid):
        with pytest.raises(InvalidIndexError):
            single_channel_field(WaveIndex(3, 1), panel_grid, _gaussian(panel_grid, 3.0))

    def test_profile_length_checked(self, panel_grid):
        with pytest.raises(DataValidationError):
            single_channel_field(WaveIndex(2, 0.5), panel_grid, np.ones(3))

    def test_save_load(self, panel_grid, tmp_path):
        pwf = single_channel_field(WaveIndex(3, -2, 1.5), panel_grid, _gaussian(panel_grid, 3.0) * 1j)
        pwf.save(tmp_path / "field.json")
        loaded = PartialWaveField.load(tmp_path / "field.json")
        assert loaded.indices == pwf.indices
        np.testing.assert_array_equal(loaded.channels[WaveIndex(3, -2, 1.5)][0], pwf.channels[WaveIndex(3, -2, 1.5)][0])

    def test_invalid_document(self):
        with pytest.raises(DataValidationError, match="invalid PartialWaveField document"):
            PartialWaveField.from_dict({"n": 3, "channels": []})


class TestRadialDirac:
    @pytest.mark.parametrize("n,k,nu", [(2, 1.5, 0.3), (3, -1, 0.5), (3, 2, 0.0)])
    def test_symmetric(self, panel_grid, n, k, nu):
        channel = make_channel(WaveIndex(n, k), nu)
        f = (_gaussian(panel_grid, 4.0), 0.5 * _gaussian(panel_grid, 4.5))
        g = (_gaussian(panel_grid, 5.0) * 1j, _gaussian(panel_grid, 3.5))
        df = apply_radial_dirac(channel, *f, panel_grid)
        dg = apply_radial_dirac(channel, *g, panel_grid)
        measure = panel_grid.measure(n)
        lhs = np.sum((np.conj(df[0]) * g[0] + np.conj(df[1]) * g[1]) * measure)
        rhs = np.sum((np.conj(f[0]) * dg[0] + np.conj(f[1]) * dg[1]) * measure)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)

    def test_support_error(self, panel_grid):
        channel = make_channel(WaveIndex(3, 1), 0.0)
        with pytest.raises(SupportError):
            apply_radial_dirac(channel, np.ones(panel_grid.size), np.zeros(panel_grid.size), panel_grid)

    @pytest.mark.parametrize("n,k,nu", [(3, 2, 0.0), (3, -1, 0.4), (2, 0.5, 0.2)])
    def test_matches_closed_form_on_bump(self, panel_grid, n, k, nu):
        channel = make_channel(WaveIndex(n, k), nu)
        r = panel_grid.nodes
        f_plus = _gaussian(panel_grid, 5.0, 0.7)
        f_minus = 0.5 * _gaussian(panel_grid, 5.5, 0.7)
        d_plus = -2.0 * (r - 5.0) / 0.49 * f_plus
        d_minus = -2.0 * (r - 5.5) / 0.49 * f_minus
        shift = (n - 1) / (2.0 * r)
        expected_plus = -nu / r * f_plus - (d_minus + shift * f_minus) + k / r * f_minus
        expected_minus = d_plus + shift * f_plus + k / r * f_plus - nu / r * f_minus
        g_plus, g_minus = apply_radial_dirac(channel, f_plus, f_minus, panel_grid)
        np.testing.assert_allclose(g_plus, expected_plus, rtol=0.0, atol=1e-6 * np.max(np.abs(expected_plus)))
        np.testing.assert_allclose(g_minus, expected_minus, rtol=0.0, atol=1e-6 * np.max(np.abs(expected_minus)))


class TestAngularStructure:
    @pytest.mark.parametrize("k", [sign * (j + 0.5) for j in range(4) for sign in (1, -1)])
    @pytest.mark.parametrize("component", [1, -1])
    def test_theta_derivative_eigenrelation(self, k, component):
        index = WaveIndex(2, k)
        theta = np.linspace(0.1, 2.0 * math.pi - 0.1, 23)
        h = 1e-3

        def basis(angles):
            return angular_basis(index, component, angles)

        derivative = (-basis(theta + 2 * h) + 8 * basis(theta + h) - 8 * basis(theta - h) + basis(theta - 2 * h)) / (
            12.0 * h
        )
        np.testing.assert_allclose(derivative, 1j * (k - 0.5 * component) * basis(theta), rtol=0.0, atol=1e-8)

    def test_constant_spinor_is_lowest_channel(self):
        grid = RadialGrid.gauss_panels(0.01, 4.0, 0.5)

        def sampler(r, angles):
            out = np.zeros((r.size, angles.size, 2), dtype=complex)
            out[:, :, 0] = 1.5
            return out

        pwf = decompose(2, grid, sampler, k_max=2.5)
        assert pwf.indices == [WaveIndex(2, 0.5)]
        np.testing.assert_allclose(pwf.channels[WaveIndex(2, 0.5)][0], 1.5 * math.sqrt(2.0 * math.pi), rtol=1e-12)

    @pytest.mark.parametrize("n,k_max", [(2, 2.5), (3, 2.0)])
    def test_parseval(self, n, k_max):
        grid = RadialGrid.gauss_panels(0.01, 4.0, 0.5)
        rng = np.random.default_rng(5)
        components = [
            (index, component, complex(*rng.normal(size=2)) * np.exp(-((grid.nodes - rng.uniform(0.5, 2.5)) ** 2)))
            for index in channel_indices(n, k_max)
            for component in (1, -1)
        ]

        def sampler(r, angles):
            return sum(
                profile[:, None, None] * angular_basis(index, component, angles)[None, :, :]
                for index, component, profile in components
            )

        pwf = decompose(n, grid, sampler, k_max=k_max)
        quadrature = angular_quadrature(n, k_max)
        samples = sampler(grid.nodes, quadrature.angles)
        angular = np.sum(np.abs(samples) ** 2 * quadrature.weights[None, :, None], axis=(1, 2))
        spatial = np.sum(angular * grid.measure(n))
        assert len(pwf.indices) == len(channel_indices(n, k_max))
        assert pwf.norm() ** 2 == pytest.approx(float(spatial), rel=1e-10)
        expected = sum(float(np.sum(np.abs(profile) ** 2 * grid.measure(n))) for _, _, profile in components)
        assert pwf.norm() ** 2 == pytest.approx(expected, rel=1e-10)

        radial, nonradial = project_dirac_radial(pwf), project_dirac_nonradial(pwf)
        assert radial.norm() ** 2 + nonradial.norm() ** 2 == pytest.approx(pwf.norm() ** 2, rel=1e-12)
