"""Property-check suites surfaced by the ``verify`` CLI subcommand.

Each check draws with a pinned seed and reports a named statistic against
a fixed threshold, so the suites are deterministic and CI-safe.
Statistical significance levels are fixed at 1e-3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .chaos_oracle import QueryPoint, inner_product_closed_form
from .kernels import Constant, HeatKernel, TemporalKernel, ZeroKernel
from .mc_engine import (
    EstimatorConfig,
    estimate_inner_product_mc,
    estimate_second_moment_fractional,
    estimate_second_moment_white,
)
from .point_process import (
    Rectangle,
    count_rectangle,
    mc_hypercube_integral,
    sample_global,
    sample_restricted,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "available_suites"]

ALPHA = 1e-3
DEFAULT_SEED = 42


@dataclass
class CheckResult:
    suite: str
    name: str
    statistic: float
    threshold: float
    passed: bool
    comparison: str = "<="


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def check_poisson_law(seed: int = DEFAULT_SEED, realizations: int = 100_000):
    """Counts over a rectangle are Poisson(area); disjoint counts decorrelate."""
    rng = _rng(seed)
    r1 = Rectangle(0.0, 0.5, 0.0, 0.5)
    r2 = Rectangle(0.5, 1.0, 0.5, 1.0)
    c1 = np.empty(realizations, dtype=int)
    c2 = np.empty(realizations, dtype=int)
    for i in range(realizations):
        pr = sample_global(1.0, rng)
        c1[i] = count_rectangle(pr, r1)
        c2[i] = count_rectangle(pr, r2)
    lam = 0.25
    top = 3
    observed = np.bincount(np.minimum(c1, top), minlength=top + 1)
    pmf = stats.poisson.pmf(np.arange(top), lam)
    expected = np.append(pmf, 1.0 - pmf.sum()) * realizations
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    pvalue = float(stats.chi2.sf(chi2, df=top))
    corr = float(np.corrcoef(c1, c2)[0, 1])
    return [
        CheckResult("poisson-law", "chi-square-gof-pvalue", pvalue, ALPHA, pvalue > ALPHA, ">"),
        CheckResult("poisson-law", "disjoint-count-correlation", abs(corr), 0.02, abs(corr) < 0.02, "<"),
    ]


def check_conditional_uniformity(
    seed: int = DEFAULT_SEED, samples: int = 100_000, t: float = 1.0, s: float = 0.7, n: int = 2
):
    """Given K = n restricted points, (t - tau, s - rho) are i.i.d. uniform."""
    rng = _rng(seed)
    taus = []
    rhos = []
    for _ in range(samples):
        sample = sample_restricted(t, s, 1.0, rng)
        if sample.count == n:
            taus.append(sample.points[:, 0])
            rhos.append(sample.points[:, 1])
    tau_tr = t - np.concatenate(taus)
    rho_tr = s - np.concatenate(rhos)
    p_tau = float(stats.kstest(tau_tr / t, "uniform").pvalue)
    p_rho = float(stats.kstest(rho_tr / s, "uniform").pvalue)
    return [
        CheckResult("conditional-uniformity", "ks-pvalue-first-coordinate", p_tau, ALPHA, p_tau > ALPHA, ">"),
        CheckResult("conditional-uniformity", "ks-pvalue-second-coordinate", p_rho, ALPHA, p_rho > ALPHA, ">"),
    ]


def check_integral_identity(seed: int = DEFAULT_SEED, replicates: int = 1_000_000):
    """Hypercube integrals against their closed-form values, 3-sigma."""
    kernel = TemporalKernel(hurst=0.75)
    t = s = 1.0
    results = []
    seq = 0

    def zcheck(name, est, stderr, truth):
        z = abs(est - truth) / stderr if stderr > 0 else math.inf
        results.append(CheckResult("integral-identity", name, z, 3.0, z <= 3.0))

    for n in (1, 2, 3):
        est, stderr = mc_hypercube_integral(
            lambda ta, sa: np.ones(ta.shape[0]), n, t, s, replicates, _rng(seed + seq)
        )
        zcheck(f"constant-integrand-n{n}", est, stderr, 1.0)
        seq += 1
    for n in (1, 2, 3):
        est, stderr = mc_hypercube_integral(
            lambda ta, sa: np.prod(ta * sa, axis=1), n, t, s, replicates, _rng(seed + seq)
        )
        zcheck(f"separable-polynomial-n{n}", est, stderr, 4.0 ** (-n))
        seq += 1
    est, stderr = mc_hypercube_integral(
        lambda ta, sa: kernel.eta(t - ta, s - sa)[:, 0],
        1,
        t,
        s,
        replicates,
        _rng(seed + seq),
    )
    zcheck("temporal-kernel-n1", est, stderr, kernel.mass(t, s))
    return results


def check_lemma2(seed: int = DEFAULT_SEED, replicates: int = 100_000):
    """Closed-form inner products match their Monte Carlo estimates, 3-sigma."""
    f = HeatKernel(dim=1, bandwidth=1.0)
    u0 = Constant(1.0)
    picker = _rng(seed)
    results = []
    for offset_label, xy in (("coincident", 0.0), ("offset", 1.0)):
        for n in (1, 2, 3):
            t_times = np.sort(picker.uniform(0.05, 1.0, size=n))
            s_times = np.sort(picker.uniform(0.05, 1.0, size=n))
            q = QueryPoint(t=1.0, s=1.0, x=(0.0,), y=(-xy,))
            closed = inner_product_closed_form(t_times, s_times, q, f, u0)
            cfg = EstimatorConfig(replicates=replicates, seed=seed + n)
            mc, stderr = estimate_inner_product_mc(t_times, s_times, q, f, u0, cfg)
            z = abs(mc - closed) / stderr if stderr > 0 else math.inf
            results.append(
                CheckResult("lemma2", f"inner-product-{offset_label}-n{n}", z, 3.0, z <= 3.0)
            )
    return results


def check_estimator_identities(seed: int = DEFAULT_SEED, replicates: int = 100_000):
    """Degenerate identities of the two moment estimators."""
    results = []
    q = QueryPoint(t=0.5, s=0.5, x=(0.0,), y=(0.0,))
    kernel = TemporalKernel(hurst=0.75)
    zero = ZeroKernel(dim=1)
    heat = HeatKernel(dim=1, bandwidth=1.0)
    cfg = EstimatorConfig(replicates=replicates, seed=seed)

    est = estimate_second_moment_fractional(q, kernel, zero, Constant(1.0), cfg)
    z = abs(est.value - 1.0) / est.stderr if est.stderr > 0 else math.inf
    results.append(CheckResult("estimator-identities", "zero-kernel-fractional", z, 3.0, z <= 3.0))

    west = estimate_second_moment_white(0.5, (0.0,), (0.0,), zero, Constant(1.0), cfg)
    z = abs(west.value - 1.0) / west.stderr if west.stderr > 0 else math.inf
    results.append(CheckResult("estimator-identities", "zero-kernel-white", z, 3.0, z <= 3.0))

    c = 1.7
    base = estimate_second_moment_fractional(q, kernel, heat, Constant(1.0), cfg)
    scaled = estimate_second_moment_fractional(q, kernel, heat, Constant(c), cfg)
    diff = abs(scaled.value - c * c * base.value)
    results.append(CheckResult("estimator-identities", "u0-scaling-bit-exact", diff, 0.0, diff == 0.0))

    q0 = QueryPoint(t=0.0, s=0.0, x=(0.3,), y=(-0.2,))
    est0 = estimate_second_moment_fractional(q0, kernel, heat, Constant(2.0), cfg)
    err = abs(est0.value - 4.0) + est0.stderr
    results.append(CheckResult("estimator-identities", "degenerate-time-exact", err, 0.0, err == 0.0))
    return results


SUITES = {
    "poisson-law": check_poisson_law,
    "conditional-uniformity": check_conditional_uniformity,
    "integral-identity": check_integral_identity,
    "lemma2": check_lemma2,
    "estimator-identities": check_estimator_identities,
}


def available_suites():
    return list(SUITES) + ["all"]


def run_suite(name: str, seed: int = DEFAULT_SEED):
    """Run one named suite, or all of them, returning CheckResults."""
    if name == "all":
        out = []
        for fn in SUITES.values():
            out.extend(fn(seed=seed))
        return out
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(available_suites())}")
    return SUITES[name](seed=seed)
