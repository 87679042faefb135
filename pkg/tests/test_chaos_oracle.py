import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from fkmoments import (
    CapabilityError,
    Constant,
    DomainError,
    GaussianBump,
    HeatKernel,
    NumericError,
    QueryPoint,
    RieszKernel,
    TemporalKernel,
    ZeroKernel,
    alpha_n_quadrature,
    heat_density,
    inner_product_closed_form,
    second_moment_series,
    truncation_tail,
    white_noise_order_term,
)

HEAT1 = HeatKernel(dim=1, bandwidth=1.0)
CONST1 = Constant(1.0)


def alpha1_substitution_oracle(hurst, t, s, h, offset, nodes=80):
    """Independent route to the first chaos coefficient.

    a_1 = int_0^t int_0^s eta(u,v) p_{h+(t-u)+(s-v)}(offset) dv du, with the
    inner integral desingularized by z = |u - v|^(2H-1) per branch and the
    outer integral on panels graded toward the kinks at u = 0 and u = s.
    """
    p = 2 * hurst - 1
    alpha = hurst * p
    x, w = leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w

    def inner(u):
        total = 0.0
        branches = []
        if u <= s:
            branches = [(u**p, -1.0, 0.0), ((s - u) ** p, 1.0, 0.0)]
        else:
            branches = [(u**p, -1.0, (u - s) ** p)]
        for z_hi, sign, z_lo in branches:
            if z_hi <= z_lo:
                continue
            z = z_lo + (z_hi - z_lo) * x
            v = u + sign * z ** (1.0 / p)
            g = heat_density(h + (t - u) + (s - v), np.asarray(offset) + np.zeros((nodes, 1)))
            total += (z_hi - z_lo) * np.dot(w, g)
        return alpha / p * total

    knots = np.concatenate(
        [[0.0, t], [s] if s < t else [], t * 0.5 ** np.arange(1, 30)]
    )
    if s <= t:
        knots = np.concatenate([knots, s - s * 0.5 ** np.arange(1, 30), s * 0.5 ** np.arange(1, 30)])
    knots = np.unique(np.clip(knots, 0.0, t))
    value = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        u_nodes = lo + (hi - lo) * x
        value += (hi - lo) * np.dot(w, [inner(u) for u in u_nodes])
    return value


class TestQueryPoint:
    def test_validates_time_range(self):
        with pytest.raises(DomainError):
            QueryPoint(t=1.2, s=0.5, x=(0.0,), y=(0.0,))
        with pytest.raises(DomainError):
            QueryPoint(t=0.5, s=-0.1, x=(0.0,), y=(0.0,))

    def test_validates_matching_dimensions(self):
        with pytest.raises(DomainError):
            QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0, 1.0))

    def test_scalar_points_promoted(self):
        q = QueryPoint(t=0.5, s=0.5, x=0.3, y=-0.2)
        assert q.dim == 1
        assert q.offset_sq == pytest.approx(0.25)


class TestInnerProductClosedForm:
    def test_reference_value(self):
        q = QueryPoint(t=1.0, s=1.0, x=(0.0,), y=(0.0,))
        val = inner_product_closed_form([0.5], [0.5], q, HEAT1, CONST1)
        assert val == pytest.approx(0.28209479177387814, rel=1e-10)

    def test_empty_times_give_constant_squared(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(1.0,))
        assert inner_product_closed_form([], [], q, HEAT1, Constant(1.7)) == 1.7 * 1.7

    def test_rejects_unsupported_kernel(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        with pytest.raises(CapabilityError):
            inner_product_closed_form([0.2], [0.3], q, RieszKernel(dim=2, order=1.0), CONST1)

    def test_rejects_unsupported_initial_condition(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        with pytest.raises(CapabilityError):
            inner_product_closed_form([0.2], [0.3], q, HEAT1, GaussianBump())

    def test_matches_monte_carlo(self):
        from fkmoments import EstimatorConfig, estimate_inner_product_mc

        q = QueryPoint(t=1.0, s=1.0, x=(0.0,), y=(0.0,))
        rng = np.random.default_rng(5)
        t_times = np.sort(rng.uniform(0.05, 1.0, 2))
        s_times = np.sort(rng.uniform(0.05, 1.0, 2))
        closed = inner_product_closed_form(t_times, s_times, q, HEAT1, CONST1)
        mc, se = estimate_inner_product_mc(
            t_times, s_times, q, HEAT1, CONST1, EstimatorConfig(replicates=200_000, seed=11)
        )
        assert abs(mc - closed) <= 3 * se


class TestAlphaQuadrature:
    def test_alpha1_matches_substitution_oracle(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        k = TemporalKernel(0.75)
        tol = 1e-5
        quad = alpha_n_quadrature(1, q, k, HEAT1, CONST1, tol)
        oracle = alpha1_substitution_oracle(0.75, 0.5, 0.5, 1.0, (0.0,))
        assert abs(quad - oracle) < 2 * tol

    def test_alpha1_offset_and_uneven_times(self):
        q = QueryPoint(t=0.8, s=0.6, x=(0.4,), y=(-0.3,))
        k = TemporalKernel(0.6)
        quad = alpha_n_quadrature(1, q, k, HEAT1, CONST1, 1e-6)
        oracle = alpha1_substitution_oracle(0.6, 0.8, 0.6, 1.0, (0.7,))
        assert quad == pytest.approx(oracle, abs=2e-6)

    def test_zero_kernel_is_exactly_zero(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        k = TemporalKernel(0.75)
        for n in (1, 2, 3):
            assert alpha_n_quadrature(n, q, k, ZeroKernel(dim=1), CONST1, 1e-5) == 0.0

    def test_constant_scaling_is_exact(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        k = TemporalKernel(0.75)
        base = alpha_n_quadrature(2, q, k, HEAT1, CONST1, 1e-5, scale_floor=1.0)
        scaled = alpha_n_quadrature(2, q, k, HEAT1, Constant(2.5), 1e-5, scale_floor=1.0)
        assert scaled == 2.5 * 2.5 * base

    def test_degenerate_time_is_zero(self):
        q = QueryPoint(t=0.0, s=0.5, x=(0.0,), y=(0.0,))
        assert alpha_n_quadrature(1, q, TemporalKernel(0.75), HEAT1, CONST1, 1e-5) == 0.0

    def test_order_cap(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        with pytest.raises(DomainError):
            alpha_n_quadrature(4, q, TemporalKernel(0.75), HEAT1, CONST1, 1e-3)

    def test_unreachable_tolerance_raises(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        with pytest.raises(NumericError):
            alpha_n_quadrature(1, q, TemporalKernel(0.75), HEAT1, CONST1, 1e-16)

    def test_monotone_refinement(self):
        # the reported value differs from the next refinement by < tol
        from fkmoments.chaos_oracle import _PAIR_LEVELS, _contract_gaussian
        from fkmoments.quadrature import eta_pair_rule

        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        k = TemporalKernel(0.75)
        tol = 1e-5
        reported = alpha_n_quadrature(1, q, k, HEAT1, CONST1, tol)
        values = []
        for depth_u, depth_r in _PAIR_LEVELS[1]:
            u, v, w = eta_pair_rule(k.hurst, 0.5, 0.5, depth_u, depth_r)
            values.append(_contract_gaussian(0.5 - u, 0.5 - v, w, 1, 1.0, 1, 0.0))
        idx = values.index(reported)
        assert idx + 1 < len(values)
        assert abs(values[idx + 1] - reported) < tol * abs(reported)


class TestSecondMomentSeries:
    def test_zero_kernel_shortcut(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        res = second_moment_series(q, TemporalKernel(0.75), ZeroKernel(dim=1), Constant(2.0), 3, 1e-5)
        assert res.total == res.zeroth_term == 4.0
        assert res.tail_estimate == 0.0
        assert res.order_terms == [0.0, 0.0, 0.0]

    def test_degenerate_time_returns_initial_product(self):
        q = QueryPoint(t=0.0, s=0.0, x=(0.3,), y=(-0.4,))
        u0 = GaussianBump(amplitude=1.0, center=(0.0,), width=1.0)
        res = second_moment_series(q, TemporalKernel(0.75), HEAT1, u0, 3, 1e-5)
        expected = u0.field(0.0, (0.3,)) * u0.field(0.0, (-0.4,))
        assert res.total == pytest.approx(expected, rel=1e-14)

    def test_total_is_zeroth_plus_orders(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        res = second_moment_series(q, TemporalKernel(0.75), HEAT1, CONST1, 2, 1e-4)
        assert res.total == pytest.approx(res.zeroth_term + sum(res.order_terms), abs=1e-15)
        assert res.tail_is_heuristic

    def test_order_terms_positive_at_coincident_points(self):
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        res = second_moment_series(q, TemporalKernel(0.75), HEAT1, CONST1, 2, 1e-4)
        assert all(term > 0 for term in res.order_terms)
        assert res.order_terms[1] < res.order_terms[0]

    def test_swap_symmetry_exact(self):
        k = TemporalKernel(0.7)
        q = QueryPoint(t=0.7, s=0.4, x=(0.2,), y=(-0.5,))
        a = second_moment_series(q, k, HEAT1, CONST1, 2, 1e-4)
        b = second_moment_series(q.swapped(), k, HEAT1, CONST1, 2, 1e-4)
        assert a.total == b.total
        assert a.order_terms == b.order_terms

    def test_translation_invariance_exact(self):
        k = TemporalKernel(0.8)
        a = second_moment_series(
            QueryPoint(t=0.6, s=0.5, x=(0.0,), y=(1.0,)), k, HEAT1, CONST1, 2, 1e-4
        )
        b = second_moment_series(
            QueryPoint(t=0.6, s=0.5, x=(2.0,), y=(3.0,)), k, HEAT1, CONST1, 2, 1e-4
        )
        assert a.total == b.total

    def test_golden_reference_configuration(self):
        # frozen after ladder convergence at tol 1e-5; guards regressions
        q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
        res = second_moment_series(q, TemporalKernel(0.75), HEAT1, CONST1, 3, 1e-5)
        assert res.total == pytest.approx(1.1235476874500951, abs=5e-5)


class TestWhiteNoiseOrderTerm:
    def test_zero_kernel(self):
        assert white_noise_order_term(2, 0.5, (0.0,), (0.0,), ZeroKernel(dim=1), CONST1, 1e-5) == 0.0

    def test_first_order_closed_form(self):
        # int_0^1 p_{1+2a}(0) da = (sqrt(3) - 1)/sqrt(2 pi)
        val = white_noise_order_term(1, 1.0, (0.0,), (0.0,), HEAT1, CONST1, 1e-8)
        assert val == pytest.approx((math.sqrt(3) - 1) / math.sqrt(2 * math.pi), rel=1e-9)

    def test_first_order_brute_quadrature(self):
        t, h, off = 0.7, 0.8, 0.5
        a = np.linspace(0.0, t, 200_001)
        target = np.trapezoid(heat_density(h + 2 * a, np.full((a.size, 1), off)), a)
        val = white_noise_order_term(1, t, (off,), (0.0,), HeatKernel(dim=1, bandwidth=h), CONST1, 1e-8)
        assert val == pytest.approx(target, abs=1e-8)

    def test_simplex_volume(self):
        from fkmoments.quadrature import simplex_rule

        for n in (1, 2, 3):
            _, w = simplex_rule(n, 0.8, 12)
            assert np.sum(w) == pytest.approx(0.8**n / math.factorial(n), rel=1e-13)


class TestTruncationTail:
    def test_geometric_example(self):
        assert truncation_tail([0.1, 0.01]) == pytest.approx(0.01 * 0.1 / 0.9)

    def test_non_decreasing_signals_infinity(self):
        assert truncation_tail([0.1, 0.2]) == math.inf

    def test_zero_last_term(self):
        assert truncation_tail([0.3, 0.0]) == 0.0

    def test_ratio_clamp(self):
        tail = truncation_tail([1.0, 0.95])
        assert tail == pytest.approx(0.95 * 0.9 / 0.1)

    def test_single_term(self):
        assert truncation_tail([0.5]) == math.inf
        assert truncation_tail([0.0]) == 0.0
