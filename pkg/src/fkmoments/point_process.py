"""Planar and linear Poisson processes.

Provides the global planar process on [0,1]^2 with rectangle counts, the
restriction of the process to [0,t] x [0,s] (sampled directly, which is
equivalent in law and cheaper than thinning a global realization), an
importance-tilted sampler whose point density is proportional to
eta(t-a, s-b), ordered jump times of the linear process, and the Monte
Carlo evaluation of 2n-dimensional hypercube integrals through the planar
count identity

    int_{[0,t]^n x [0,s]^n} F = n! e^{ts} E[F(t-tau_1, s-rho_1, ...) 1{K=n}]

for symmetric F, where K is the number of restricted points.  The index
sum behind this identity is read over unordered index sets, which is the
reading consistent with (ts)^n = n! e^{ts} P(K = n).

Every sampler is a pure function of (parameters, generator); fixed seeds
give bit-reproducible output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .kernels import TemporalKernel

__all__ = [
    "PlanarRealization",
    "Rectangle",
    "RestrictedPointSample",
    "UNIFORM",
    "TEMPORAL_IMPORTANCE",
    "sample_global",
    "count_rectangle",
    "sample_restricted",
    "sample_restricted_importance",
    "sample_temporal_importance",
    "sample_linear_jump_times",
    "mc_hypercube_integral",
]

UNIFORM = "uniform"
TEMPORAL_IMPORTANCE = "importance"

# Loop cap for the rejection sampler; acceptance probability is bounded
# away from zero so this is never reached in practice.
_REJECTION_CAP = 10**6


@dataclass(frozen=True)
class PlanarRealization:
    """One draw of the planar Poisson process on [0,1]^2.

    ``points`` has shape (X, 2) with X the Poisson-distributed total count;
    the count field N_{t,s} counts points with tau_i <= t and rho_i <= s,
    so it vanishes on the axes.
    """

    rate: float
    points: np.ndarray

    @property
    def total_count(self) -> int:
        return self.points.shape[0]

    def count_at(self, t: float, s: float) -> int:
        """Corner count N_{t,s}."""
        p = self.points
        return int(np.count_nonzero((p[:, 0] <= t) & (p[:, 1] <= s)))


@dataclass(frozen=True)
class Rectangle:
    """Half-open rectangle (a, b] x (c, d] inside [0,1]^2."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0 and 0.0 <= self.c < self.d <= 1.0):
            raise DomainError(
                f"invalid rectangle ({self.a},{self.b}]x({self.c},{self.d}]"
            )

    @property
    def area(self) -> float:
        return (self.b - self.a) * (self.d - self.c)


@dataclass(frozen=True)
class RestrictedPointSample:
    """Points of a planar realization restricted to [0,t] x [0,s].

    ``mode`` records how point locations were drawn: uniform, or tilted by
    the temporal kernel.  In the tilted case each eta factor of the target
    integrand is replaced by the constant ``per_point_weight`` =
    eta_mass(t,s) / (t s); in the uniform case the weight is 1.
    """

    t: float
    s: float
    points: np.ndarray
    mode: str = UNIFORM
    per_point_weight: float = 1.0

    @property
    def count(self) -> int:
        return self.points.shape[0]


def sample_global(rate: float, rng: np.random.Generator) -> PlanarRealization:
    """Draw a planar Poisson realization on [0,1]^2 with the given rate.

    Construction: X ~ Poisson(rate), then X i.i.d. points uniform on the
    unit square, independent of X.
    """
    if rate <= 0:
        raise DomainError(f"rate must be positive, got {rate}")
    x = int(rng.poisson(rate))
    pts = rng.uniform(0.0, 1.0, size=(x, 2))
    return PlanarRealization(rate=rate, points=pts)


def count_rectangle(pr: PlanarRealization, r: Rectangle) -> int:
    """Number of points in (a,b] x (c,d] by corner inclusion-exclusion:
    N_R = N_{a,c} + N_{b,d} - N_{a,d} - N_{b,c}.
    """
    return (
        pr.count_at(r.a, r.c)
        + pr.count_at(r.b, r.d)
        - pr.count_at(r.a, r.d)
        - pr.count_at(r.b, r.c)
    )


def sample_restricted(
    t: float, s: float, rate: float, rng: np.random.Generator
) -> RestrictedPointSample:
    """Restriction of the rate-``rate`` planar process to [0,t] x [0,s].

    Drawn directly: K ~ Poisson(rate t s) and, given K, i.i.d. uniform
    locations on the rectangle.  Equivalent in law to restricting a global
    realization by the Poisson restriction property.
    """
    if not (0.0 < t <= 1.0 and 0.0 < s <= 1.0):
        raise DomainError(f"horizons must satisfy 0 < t, s <= 1, got t={t} s={s}")
    if rate <= 0:
        raise DomainError(f"rate must be positive, got {rate}")
    k = int(rng.poisson(rate * t * s))
    pts = rng.uniform(0.0, 1.0, size=(k, 2))
    pts[:, 0] *= t
    pts[:, 1] *= s
    return RestrictedPointSample(t=t, s=s, points=pts, mode=UNIFORM)


# ---------------------------------------------------------------------------
# temporal importance sampling
# ---------------------------------------------------------------------------
#
# Target density on [0,t] x [0,s]:  q(a, b) = eta(t-a, s-b) / C  with
# C = eta_mass(t, s).  Substituting u = t-a, v = s-b turns this into
# sampling (u, v) with density eta(u, v) / C on the same rectangle.
#
# The u-marginal (up to the factor alpha_H/(2H-1) = H) is
#     m(u) = H (u^p + (s-u)^p)        for u <  s,
#     m(u) = H (u^p - (u-s)^p)        for u >= s,
# with p = 2H - 1 in (0, 1).  On [0, s] the marginal rises to an interior
# maximum at u = s/2 (m' = H p (u^(p-1) - (s-u)^(p-1)) changes sign there)
# and is decreasing past s, so
#     sup m = m(s/2) = 2H (s/2)^p     if t >= s/2,
#     sup m = m(t)                    otherwise (m increasing on [0, s/2]).
# This analytic bound drives a uniform-proposal rejection step for u.
#
# Given u, the conditional density of v is proportional to |u - v|^(p-1)
# on [0, s]; its CDF is an explicit piecewise power function, inverted in
# closed form below.


def _u_marginal(t: float, s: float, hurst: float, u: np.ndarray) -> np.ndarray:
    p = 2.0 * hurst - 1.0
    u = np.asarray(u, dtype=float)
    out = np.where(
        u < s,
        u**p + np.maximum(s - u, 0.0) ** p,
        np.maximum(u, s) ** p - np.maximum(u - s, 0.0) ** p,
    )
    return hurst * out


def _u_marginal_sup(t: float, s: float, hurst: float) -> float:
    p = 2.0 * hurst - 1.0
    if t >= 0.5 * s:
        return 2.0 * hurst * (0.5 * s) ** p
    return float(_u_marginal(t, s, hurst, np.asarray(t)))


def _conditional_v(s: float, hurst: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Inverse CDF of the density ~ |u-v|^(2H-2) on [0, s], given u."""
    p = 2.0 * hurst - 1.0
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    left = u**p
    right = np.where(u <= s, (s - np.minimum(u, s)) ** p, 0.0)
    total = np.where(u <= s, left + right, left - np.abs(u - s) ** p)
    target = w * total
    below = target <= left
    # below the diagonal: v = u - (u^p - T)^(1/p); above: v = u + (T - u^p)^(1/p)
    v_lo = u - np.maximum(left - target, 0.0) ** (1.0 / p)
    v_hi = u + np.maximum(target - left, 0.0) ** (1.0 / p)
    v = np.where(below, v_lo, v_hi)
    return np.clip(v, 0.0, s)


def sample_eta_tilted(
    t: float, s: float, kernel: TemporalKernel, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``size`` points (tau, rho) with density eta(t-a, s-b)/eta_mass.

    Returns an array of shape (size, 2).  Internally samples (u, v) with
    density eta(u, v)/C and reflects: tau = t - u, rho = s - v.

    The density concentrates on the diagonal, so at floating-point
    resolution a returned pair can satisfy t - tau == s - rho exactly;
    consumers must not evaluate eta there (the estimators replace each
    eta factor by a constant, which is the point of the tilt).
    """
    if t <= 0 or s <= 0:
        raise DomainError(f"horizons must be positive, got t={t} s={s}")
    if size == 0:
        return np.empty((0, 2))
    sup = _u_marginal_sup(t, s, kernel.hurst) * (1.0 + 1e-12)
    accepted = np.empty(size)
    got = 0
    for _ in range(_REJECTION_CAP):
        need = size - got
        if need == 0:
            break
        batch = max(16, int(1.5 * need))
        cand = rng.uniform(0.0, t, size=batch)
        keep = rng.uniform(0.0, sup, size=batch) < _u_marginal(t, s, kernel.hurst, cand)
        kept = cand[keep][:need]
        accepted[got : got + kept.size] = kept
        got += kept.size
    else:
        raise NumericError("rejection sampler failed to accept within the cap")
    u = accepted
    v = _conditional_v(s, kernel.hurst, u, rng.uniform(0.0, 1.0, size=size))
    out = np.empty((size, 2))
    out[:, 0] = t - u
    out[:, 1] = s - v
    return out


def sample_temporal_importance(
    t: float, s: float, kernel: TemporalKernel, rng: np.random.Generator
) -> tuple[float, float]:
    """One point of the eta-tilted location distribution on [0,t] x [0,s]."""
    pt = sample_eta_tilted(t, s, kernel, 1, rng)
    return float(pt[0, 0]), float(pt[0, 1])


def sample_restricted_importance(
    t: float, s: float, kernel: TemporalKernel, rate: float, rng: np.random.Generator
) -> RestrictedPointSample:
    """Restricted sample with Poisson count and eta-tilted locations.

    The count keeps its Poisson(rate t s) law; only locations are tilted.
    ``per_point_weight`` carries the constant eta_mass(t,s)/(t s) that
    replaces each eta factor of the target integrand.
    """
    if not (0.0 < t <= 1.0 and 0.0 < s <= 1.0):
        raise DomainError(f"horizons must satisfy 0 < t, s <= 1, got t={t} s={s}")
    k = int(rng.poisson(rate * t * s))
    pts = sample_eta_tilted(t, s, kernel, k, rng)
    return RestrictedPointSample(
        t=t,
        s=s,
        points=pts,
        mode=TEMPORAL_IMPORTANCE,
        per_point_weight=kernel.mass(t, s) / (t * s),
    )


# ---------------------------------------------------------------------------
# linear process and the hypercube integral identity
# ---------------------------------------------------------------------------


def sample_linear_jump_times(
    t: float, rate: float, rng: np.random.Generator
) -> np.ndarray:
    """Ordered jump times of a rate-``rate`` Poisson process on [0, t].

    N_t ~ Poisson(rate t); given N_t = n the times are the order statistics
    of n i.i.d. uniforms on [0, t].
    """
    if t <= 0:
        raise DomainError(f"horizon must be positive, got t={t}")
    if rate <= 0:
        raise DomainError(f"rate must be positive, got {rate}")
    n = int(rng.poisson(rate * t))
    return np.sort(rng.uniform(0.0, t, size=n))


def mc_hypercube_integral(
    F,
    n: int,
    t: float,
    s: float,
    replicates: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo value of int_{[0,t]^n x [0,s]^n} F via the count identity.

    ``F(t_args, s_args)`` must accept arrays of shape (m, n) and return a
    vector of m values; it is only ever evaluated at reflected restricted
    points (t - tau_j, s - rho_j).  Per replicate, a restricted sample is
    drawn and contributes n! e^{ts} F(...) when its count equals n, else 0.
    Returns (estimate, CLT standard error).
    """
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if replicates < 2:
        raise DomainError("at least 2 replicates are required for a standard error")
    counts = rng.poisson(t * s, size=replicates)
    hits = np.nonzero(counts == n)[0]
    values = np.zeros(replicates)
    if hits.size:
        pts = rng.uniform(0.0, 1.0, size=(hits.size, n, 2))
        taus = pts[..., 0] * t
        rhos = pts[..., 1] * s
        values[hits] = F(t - taus, s - rhos)
    values *= math.exp(t * s) * math.factorial(n)
    est = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(replicates))
    return est, stderr
