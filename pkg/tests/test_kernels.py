import math

import numpy as np
import pytest

from fkmoments import (
    Constant,
    DomainError,
    GaussianBump,
    HeatKernel,
    PoissonKernel,
    RieszKernel,
    TemporalKernel,
    ZeroKernel,
    heat_density,
    initial_field,
)

RNG = np.random.default_rng(12345)


class TestTemporalKernel:
    def test_alpha_h(self):
        k = TemporalKernel(0.75)
        assert k.alpha_h == pytest.approx(0.375)

    def test_eta_simple_value(self):
        # alpha_H = 0.375 and |1-0|^(2H-2) = 1
        assert TemporalKernel(0.75).eta(1.0, 0.0) == pytest.approx(0.375)

    def test_eta_derived_value(self):
        # 0.12 * 0.5^(-0.8), frozen from an mpmath evaluation
        assert TemporalKernel(0.6).eta(1.0, 0.5) == pytest.approx(
            0.20893213519106979, rel=1e-13
        )

    def test_eta_singular_diagonal(self):
        with pytest.raises(DomainError):
            TemporalKernel(0.8).eta(0.3, 0.3)

    @pytest.mark.parametrize("hurst", [0.55, 0.75, 0.9])
    def test_eta_symmetry(self, hurst):
        k = TemporalKernel(hurst)
        t = RNG.uniform(0, 1, 50)
        s = RNG.uniform(0, 1, 50)
        assert np.allclose(k.eta(t, s), k.eta(s, t))

    def test_hurst_range_enforced(self):
        for bad in (0.5, 1.0, 0.3, 1.2):
            with pytest.raises(DomainError):
                TemporalKernel(bad)

    def test_mass_full_square(self):
        for hurst in (0.55, 0.75, 0.9):
            assert TemporalKernel(hurst).mass(1.0, 1.0) == pytest.approx(1.0)

    def test_mass_empty_domain(self):
        assert TemporalKernel(0.75).mass(1.0, 0.0) == 0.0

    def test_mass_half(self):
        # (1 + 0.5^(2H) - 0.5^(2H)) / 2 for any H
        assert TemporalKernel(0.75).mass(1.0, 0.5) == pytest.approx(0.5)

    @pytest.mark.parametrize("hurst", [0.55, 0.75, 0.9])
    @pytest.mark.parametrize("ts", [(1.0, 1.0), (1.0, 0.5), (0.3, 0.7)])
    def test_mass_matches_graded_quadrature(self, hurst, ts):
        from fkmoments.quadrature import eta_weight_total

        t, s = ts
        closed = TemporalKernel(hurst).mass(t, s)
        quad = eta_weight_total(hurst, t, s)
        assert abs(closed - quad) < 1e-6


class TestSpatialKernels:
    def test_zero_kernel(self):
        f = ZeroKernel(dim=2)
        assert f.value((0.3, -0.4)) == 0.0

    def test_heat_kernel_at_origin(self):
        f = HeatKernel(dim=1, bandwidth=1.0)
        assert f.value((0.0,)) == pytest.approx(0.3989422804014327, rel=1e-14)

    def test_riesz_kernel_value(self):
        f = RieszKernel(dim=2, order=1.0)
        assert f.value((2.0, 0.0)) == pytest.approx(0.5)

    def test_riesz_singular_at_origin(self):
        f = RieszKernel(dim=1, order=0.5)
        assert f.value((0.0,)) == math.inf

    def test_riesz_order_validated(self):
        with pytest.raises(DomainError):
            RieszKernel(dim=1, order=1.5)

    def test_poisson_kernel_is_cauchy_in_1d(self):
        f = PoissonKernel(dim=1, scale=2.0)
        x = np.linspace(-3, 3, 7)[:, None]
        expected = 2.0 / (np.pi * (4.0 + x[:, 0] ** 2))
        assert np.allclose(f.values(x), expected)

    @pytest.mark.parametrize(
        "f",
        [
            HeatKernel(dim=2, bandwidth=0.7),
            RieszKernel(dim=2, order=1.3),
            PoissonKernel(dim=2, scale=0.5),
            ZeroKernel(dim=2),
        ],
    )
    def test_symmetry_and_nonnegativity(self, f):
        x = RNG.normal(size=(40, 2))
        vals = f.values(x)
        assert np.allclose(vals, f.values(-x))
        assert np.all(vals >= 0)

    def test_heat_kernel_bounded_by_origin_value(self):
        f = HeatKernel(dim=2, bandwidth=0.8)
        x = RNG.normal(size=(100, 2))
        assert np.all(f.values(x) <= f.value((0.0, 0.0)))


class TestHeatDensity:
    def test_values(self):
        assert heat_density(1.0, 0.0) == pytest.approx(0.3989422804014327, rel=1e-14)
        assert heat_density(2.0, 0.0) == pytest.approx(0.28209479177387814, rel=1e-14)

    def test_symmetry(self):
        x = RNG.normal(size=(30, 3))
        assert np.allclose(heat_density(0.7, x), heat_density(0.7, -x))

    def test_requires_positive_time(self):
        with pytest.raises(DomainError):
            heat_density(0.0, 0.5)

    def test_normalization_1d(self):
        t = 0.37
        lim = 10 * math.sqrt(t)
        x = np.linspace(-lim, lim, 20001)
        integral = np.trapezoid(heat_density(t, x[:, None]), x)
        assert abs(integral - 1.0) < 1e-8

    def test_semigroup_property_1d(self):
        # int p_t(x - z) p_s(z) dz = p_{t+s}(x)
        t, s = 0.4, 0.9
        z = np.linspace(-12.0, 12.0, 40001)
        for x in (0.0, 0.7, -1.3):
            conv = np.trapezoid(
                heat_density(t, (x - z)[:, None]) * heat_density(s, z[:, None]), z
            )
            assert abs(conv - heat_density(t + s, x)) < 1e-6


class TestInitialField:
    def test_constant(self):
        u0 = Constant(2.5)
        assert initial_field(u0, 0.0, (1.0,)) == 2.5
        assert initial_field(u0, 0.9, (-3.0,)) == 2.5

    def test_bump_at_time_zero_recovers_u0(self):
        u0 = GaussianBump(amplitude=1.0, center=(0.0,), width=1.0)
        assert initial_field(u0, 0.0, (0.0,)) == pytest.approx(1.0)

    def test_bump_closed_form_value(self):
        u0 = GaussianBump(amplitude=1.0, center=(0.0,), width=1.0)
        assert initial_field(u0, 1.0, (0.0,)) == pytest.approx(
            0.7071067811865476, rel=1e-14
        )

    def test_bump_matches_convolution_quadrature(self):
        u0 = GaussianBump(amplitude=1.3, center=(0.4,), width=0.8)
        t = 0.6
        y = np.linspace(-14.0, 14.0, 40001)
        bump_vals = u0.amplitude * np.exp(-((y - 0.4) ** 2) / (2 * 0.8))
        for x in (0.0, 0.4, -1.1):
            conv = np.trapezoid(heat_density(t, (x - y)[:, None]) * bump_vals, y)
            assert abs(conv - initial_field(u0, t, (x,))) < 1e-6

    def test_bump_rejects_negative_time(self):
        u0 = GaussianBump()
        with pytest.raises(DomainError):
            initial_field(u0, -0.1, (0.0,))
