"""Feynman-Kac Monte Carlo estimators for the second moment.

Two representations are implemented.  The fractional one averages, over
restricted planar-Poisson samples with K points (tau_j, rho_j) and two
independent Brownian paths from x and y,

    V = w(t - tau*, B1_{tau*}) w(s - rho*, B2_{rho*})
        * prod_j eta(t - tau_j, s - rho_j) f(B1_{tau_j} - B2_{rho_j}),

with tau* = rho* = 0 and an empty product when K = 0, and reports
e^{ts} mean(V).  This collapsed single-expectation form follows from the
unordered reading of the index sum: conditioning on the restricted points
is exactly the sum over index sets, and the spatial inner product is
replaced by its path expectation (see docs/representation.md for the
derivation).  In importance mode the point locations are tilted by the
temporal kernel and every eta factor collapses to the constant
eta_mass(t, s)/(t s), which removes the eta-factor variance entirely.

The white-in-time representation averages over linear-Poisson jump times,
with both paths evaluated at the same times, and reports e^{t} mean(V).

Replicates are processed in fixed-size chunks whose generators are keyed
by (seed, stream tag, chunk index); chunk results are combined in chunk
order, so output is bit-identical for a given config no matter how many
workers execute the chunks.  When the initial condition is constant its
w-product is factored out of the replicate average, which keeps the
bilinear scaling u0 -> c u0 exact at fixed seed.  Standard errors come
from contiguous batch means (robust under the heavy-tailed replicate
values that uniform mode and the Riesz kernel produce); the naive
per-replicate standard error is also reported in diagnostics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .gaussian_paths import brownian_batch_nd
from .kernels import (
    Constant,
    SpatialKernel,
    TemporalKernel,
    ZeroKernel,
    initial_field,
)
from .point_process import TEMPORAL_IMPORTANCE, UNIFORM, sample_eta_tilted

__all__ = [
    "EstimatorConfig",
    "MomentEstimate",
    "estimate_second_moment_fractional",
    "estimate_second_moment_white",
    "estimate_order_contribution",
    "estimate_inner_product_mc",
]

CHUNK_SIZE = 1 << 16

_STREAM_FRACTIONAL = 1
_STREAM_WHITE = 2
_STREAM_ORDER = 3
_STREAM_INNER = 4

# Singular kernel evaluations (Riesz exactly at the origin) have
# probability zero; affected replicates are redrawn wholesale.
_REDRAW_CAP = 64


@dataclass(frozen=True)
class EstimatorConfig:
    """Replication plan for the Monte Carlo estimators.

    ``workers`` caps chunk-level parallelism (0 means machine
    parallelism); results do not depend on it.
    """

    replicates: int
    seed: int
    mode: str = UNIFORM
    batch_count: int = 32
    max_order_tracked: int = 5
    workers: int = 1

    def __post_init__(self):
        if self.batch_count < 2:
            raise DomainError(f"batch_count must be >= 2, got {self.batch_count}")
        if self.replicates < self.batch_count:
            raise DomainError(
                f"replicates ({self.replicates}) must be >= batch_count ({self.batch_count})"
            )
        if self.mode not in (UNIFORM, TEMPORAL_IMPORTANCE):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.max_order_tracked < 0 or self.workers < 0:
            raise DomainError("max_order_tracked and workers must be nonnegative")

    @property
    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


@dataclass
class MomentEstimate:
    """Point estimate with uncertainty and per-chaos-order breakdown.

    ``per_order`` maps n to (mean contribution, stderr, replicate count
    with K = n) for n up to the tracked maximum; ``residual`` is the value
    minus the tracked contributions, so the decomposition is exact.
    """

    value: float
    stderr: float
    replicates_used: int
    per_order: dict
    residual: float
    diagnostics: dict = field(default_factory=dict)


def _chunk_rng(seed: int, stream: int, chunk_idx: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(stream, chunk_idx)
    )
    return np.random.Generator(np.random.PCG64(ss))


def _run_chunks(total: int, workers: int, chunk_fn):
    """Evaluate chunk_fn(chunk_idx, size) over fixed-size chunks, in order.

    Thread workers only change wall time, never results: the chunk layout
    is fixed and outputs are collected by index.
    """
    sizes = []
    remaining = total
    while remaining > 0:
        sizes.append(min(CHUNK_SIZE, remaining))
        remaining -= sizes[-1]
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(chunk_fn, i, n) for i, n in enumerate(sizes)]
            return [fut.result() for fut in futures]
    return [chunk_fn(i, n) for i, n in enumerate(sizes)]


def _eta_raw(k: TemporalKernel, dt: np.ndarray, ds: np.ndarray) -> np.ndarray:
    """eta without the diagonal guard; exact hits become inf and trigger
    the replicate redraw path."""
    gap = np.abs(dt - ds)
    with np.errstate(divide="ignore"):
        return k.alpha_h * gap ** (2.0 * k.hurst - 2.0)


def _w_product_constant(u0):
    """c*c when the initial condition is constant, else None."""
    if isinstance(u0, Constant):
        return u0.value * u0.value
    return None


def _draw_points(mode, t, s, k, g, kk, rng):
    """(taus, rhos) of shape (g, kk) for g replicates with kk points each."""
    if mode == UNIFORM:
        pts = rng.uniform(0.0, 1.0, size=(g, kk, 2))
        return t * pts[..., 0], s * pts[..., 1]
    pts = sample_eta_tilted(t, s, k, g * kk, rng)
    return pts[:, 0].reshape(g, kk), pts[:, 1].reshape(g, kk)


def _with_redraw(evaluate, g: int, rng: np.random.Generator):
    """Evaluate g replicates, redrawing any that come back non-finite."""
    rest = evaluate(g, rng)
    hits = 0
    for _ in range(_REDRAW_CAP):
        bad = ~np.isfinite(rest)
        n_bad = int(np.count_nonzero(bad))
        if n_bad == 0:
            return rest, hits
        hits += n_bad
        rest[bad] = evaluate(n_bad, rng)
    raise NumericError("persistent singular kernel evaluations; check inputs")


def _batch_means_stderr(values: np.ndarray, batch_count: int) -> float:
    means = np.array([b.mean() for b in np.array_split(values, batch_count)])
    return float(np.std(means, ddof=1) / math.sqrt(batch_count))


def _assemble(v_rest, counts, scale, wfac, cfg, extra_diagnostics) -> MomentEstimate:
    """Statistics for estimates of the form wfac * scale * mean(v_rest).

    ``wfac`` is the factored-out constant w-product (None when the w
    factors already sit inside ``v_rest``); ``scale`` the exponential
    prefactor.
    """
    amp = 1.0 if wfac is None else wfac
    value = amp * (scale * float(np.mean(v_rest)))
    stderr = abs(amp) * (scale * _batch_means_stderr(v_rest, cfg.batch_count))
    naive = abs(amp) * (scale * float(np.std(v_rest, ddof=1) / math.sqrt(v_rest.size)))
    per_order = {}
    for n in range(cfg.max_order_tracked + 1):
        masked = np.where(counts == n, v_rest, 0.0)
        mean_n = amp * (scale * float(np.mean(masked)))
        stderr_n = abs(amp) * (scale * _batch_means_stderr(masked, cfg.batch_count))
        per_order[n] = (mean_n, stderr_n, int(np.count_nonzero(counts == n)))
    residual = value - math.fsum(c[0] for c in per_order.values())
    abs_scaled = np.abs(v_rest) * (abs(amp) * scale)
    sum_abs = float(np.sum(np.abs(v_rest)))
    sum_sq = float(np.sum(np.square(v_rest)))
    ess = (sum_abs * sum_abs / sum_sq) if sum_sq > 0.0 else float(v_rest.size)
    diagnostics = {
        "max_abs_replicate": float(abs_scaled.max()) if abs_scaled.size else 0.0,
        "abs_replicate_q999": float(np.quantile(abs_scaled, 0.999)),
        "effective_sample_size": ess,
        "naive_stderr": naive,
        "singular_hits": 0,
        "variance_warning": None,
    }
    diagnostics.update(extra_diagnostics)
    return MomentEstimate(
        value=value,
        stderr=stderr,
        replicates_used=int(v_rest.size),
        per_order=per_order,
        residual=residual,
        diagnostics=diagnostics,
    )


def _degenerate_estimate(value: float, cfg: EstimatorConfig) -> MomentEstimate:
    per_order = {
        n: (value if n == 0 else 0.0, 0.0, cfg.replicates if n == 0 else 0)
        for n in range(cfg.max_order_tracked + 1)
    }
    return MomentEstimate(
        value=value,
        stderr=0.0,
        replicates_used=cfg.replicates,
        per_order=per_order,
        residual=0.0,
        diagnostics={
            "max_abs_replicate": abs(value),
            "abs_replicate_q999": abs(value),
            "effective_sample_size": float(cfg.replicates),
            "naive_stderr": 0.0,
            "singular_hits": 0,
            "variance_warning": None,
        },
    )


def _variance_warning(k: TemporalKernel, f, mode: str):
    # per-point eta factor has infinite second moment near the diagonal
    # when 2(2H-2) <= -1, i.e. H <= 3/4, in uniform mode
    if mode == UNIFORM and k.hurst <= 0.75 and not isinstance(f, ZeroKernel):
        return (
            "uniform mode with hurst <= 0.75: the temporal factor has "
            "infinite variance near the singular diagonal; importance mode "
            "removes it"
        )
    return None


def _value_at_max(paths: np.ndarray, times: np.ndarray, start: np.ndarray):
    """Path position at each row's latest time, plus that time."""
    idx = np.argmax(times, axis=1)
    pos = start[None, :] + np.take_along_axis(paths, idx[:, None, None], axis=1).squeeze(axis=1)
    t_star = np.take_along_axis(times, idx[:, None], axis=1)[:, 0]
    return pos, t_star


def estimate_second_moment_fractional(
    q, k: TemporalKernel, f: SpatialKernel, u0, cfg: EstimatorConfig
) -> MomentEstimate:
    """Second moment E[u_{t,x} u_{s,y}] via the planar-Poisson representation."""
    t, s = q.t, q.s
    d = q.dim
    if f.dim != d:
        raise DomainError(f"kernel dimension {f.dim} != query dimension {d}")
    if t * s == 0.0:
        w_pair = float(initial_field(u0, t, q.x_arr)) * float(
            initial_field(u0, s, q.y_arr)
        )
        return _degenerate_estimate(w_pair, cfg)
    offset = q.x_arr - q.y_arr
    wfac = _w_product_constant(u0)
    eta_const = k.mass(t, s) / (t * s)

    def group_rest(kk):
        def evaluate(g, rng):
            taus, rhos = _draw_points(cfg.mode, t, s, k, g, kk, rng)
            w1 = brownian_batch_nd(taus, d, rng)
            w2 = brownian_batch_nd(rhos, d, rng)
            f_prod = np.prod(f.values(offset[None, None, :] + w1 - w2), axis=1)
            if cfg.mode == UNIFORM:
                eta_prod = np.prod(_eta_raw(k, t - taus, s - rhos), axis=1)
            else:
                eta_prod = eta_const**kk
            rest = eta_prod * f_prod
            if wfac is None:
                b1_star, tau_star = _value_at_max(w1, taus, q.x_arr)
                b2_star, rho_star = _value_at_max(w2, rhos, q.y_arr)
                rest = rest * initial_field(u0, t - tau_star, b1_star) * initial_field(
                    u0, s - rho_star, b2_star
                )
            return rest

        return evaluate

    def chunk(chunk_idx: int, size: int):
        rng = _chunk_rng(cfg.seed, _STREAM_FRACTIONAL, chunk_idx)
        counts = rng.poisson(t * s, size=size)
        v = np.empty(size)
        if wfac is not None:
            v[counts == 0] = 1.0
        else:
            v[counts == 0] = float(initial_field(u0, t, q.x_arr)) * float(
                initial_field(u0, s, q.y_arr)
            )
        hits = 0
        for kk in np.unique(counts[counts > 0]):
            rows = np.nonzero(counts == kk)[0]
            rest, h = _with_redraw(group_rest(int(kk)), rows.size, rng)
            v[rows] = rest
            hits += h
        return v, counts, hits

    results = _run_chunks(cfg.replicates, cfg.effective_workers, chunk)
    v_all = np.concatenate([r[0] for r in results])
    k_all = np.concatenate([r[1] for r in results])
    hits = sum(r[2] for r in results)
    return _assemble(
        v_all,
        k_all,
        math.exp(t * s),
        wfac,
        cfg,
        {"singular_hits": hits, "variance_warning": _variance_warning(k, f, cfg.mode)},
    )


def estimate_second_moment_white(
    t: float, x, y, f: SpatialKernel, u0, cfg: EstimatorConfig
) -> MomentEstimate:
    """Second moment at equal times via the linear-Poisson representation."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x.shape[0]
    if f.dim != d:
        raise DomainError(f"kernel dimension {f.dim} != point dimension {d}")
    if t == 0.0:
        w_pair = float(initial_field(u0, 0.0, x)) * float(initial_field(u0, 0.0, y))
        return _degenerate_estimate(w_pair, cfg)
    offset = x - y
    wfac = _w_product_constant(u0)

    def group_rest(kk):
        def evaluate(g, rng):
            times = rng.uniform(0.0, t, size=(g, kk))
            w1 = brownian_batch_nd(times, d, rng)
            w2 = brownian_batch_nd(times, d, rng)
            rest = np.prod(f.values(offset[None, None, :] + w1 - w2), axis=1)
            if wfac is None:
                b1_last, t_last = _value_at_max(w1, times, x)
                b2_last, _ = _value_at_max(w2, times, y)
                rest = rest * initial_field(u0, t - t_last, b1_last) * initial_field(
                    u0, t - t_last, b2_last
                )
            return rest

        return evaluate

    def chunk(chunk_idx: int, size: int):
        rng = _chunk_rng(cfg.seed, _STREAM_WHITE, chunk_idx)
        counts = rng.poisson(t, size=size)
        v = np.empty(size)
        if wfac is not None:
            v[counts == 0] = 1.0
        else:
            v[counts == 0] = float(initial_field(u0, t, x)) * float(
                initial_field(u0, t, y)
            )
        hits = 0
        for kk in np.unique(counts[counts > 0]):
            rows = np.nonzero(counts == kk)[0]
            rest, h = _with_redraw(group_rest(int(kk)), rows.size, rng)
            v[rows] = rest
            hits += h
        return v, counts, hits

    results = _run_chunks(cfg.replicates, cfg.effective_workers, chunk)
    v_all = np.concatenate([r[0] for r in results])
    k_all = np.concatenate([r[1] for r in results])
    hits = sum(r[2] for r in results)
    return _assemble(v_all, k_all, math.exp(t), wfac, cfg, {"singular_hits": hits})


def estimate_order_contribution(
    n: int, q, k: TemporalKernel, f: SpatialKernel, u0, cfg: EstimatorConfig
) -> tuple[float, float]:
    """Direct estimate of a_n/n! with exactly n points per replicate.

    By conditional uniformity the order-n term equals (t s)^n / n! times
    the expectation of the fractional per-replicate integrand at n i.i.d.
    points, so no replicates are wasted on other counts.  Returns
    (mean, stderr).
    """
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    t, s = q.t, q.s
    d = q.dim
    w_pair = float(initial_field(u0, t, q.x_arr)) * float(initial_field(u0, s, q.y_arr))
    if n == 0:
        return w_pair, 0.0
    if t * s == 0.0:
        return 0.0, 0.0
    offset = q.x_arr - q.y_arr
    wfac = _w_product_constant(u0)
    eta_const = k.mass(t, s) / (t * s)

    def evaluate(g, rng):
        taus, rhos = _draw_points(cfg.mode, t, s, k, g, n, rng)
        w1 = brownian_batch_nd(taus, d, rng)
        w2 = brownian_batch_nd(rhos, d, rng)
        f_prod = np.prod(f.values(offset[None, None, :] + w1 - w2), axis=1)
        if cfg.mode == UNIFORM:
            eta_prod = np.prod(_eta_raw(k, t - taus, s - rhos), axis=1)
        else:
            eta_prod = eta_const**n
        rest = eta_prod * f_prod
        if wfac is None:
            b1_star, tau_star = _value_at_max(w1, taus, q.x_arr)
            b2_star, rho_star = _value_at_max(w2, rhos, q.y_arr)
            rest = rest * initial_field(u0, t - tau_star, b1_star) * initial_field(
                u0, s - rho_star, b2_star
            )
        return rest

    def chunk(chunk_idx: int, size: int):
        rng = _chunk_rng(cfg.seed, _STREAM_ORDER, chunk_idx)
        rest, hits = _with_redraw(evaluate, size, rng)
        return (rest,)

    results = _run_chunks(cfg.replicates, cfg.effective_workers, chunk)
    rest_all = np.concatenate([r[0] for r in results])
    amp = 1.0 if wfac is None else wfac
    scale = (t * s) ** n / math.factorial(n)
    mean = amp * (scale * float(np.mean(rest_all)))
    stderr = abs(amp) * (scale * _batch_means_stderr(rest_all, cfg.batch_count))
    return mean, stderr


def estimate_inner_product_mc(
    t_times, s_times, q, f: SpatialKernel, u0, cfg: EstimatorConfig
) -> tuple[float, float]:
    """Monte Carlo value of the spatial inner product at fixed elapsed times.

    Averages w(t - t*, B1_{t*}) w(s - s*, B2_{s*}) prod_j f(B1_{t_j} -
    B2_{s_j}) over path draws; the closed-form route is its oracle for the
    heat kernel with constant data.  Returns (mean, stderr).
    """
    t_times = np.asarray(t_times, dtype=float)
    s_times = np.asarray(s_times, dtype=float)
    if t_times.shape != s_times.shape or t_times.ndim != 1:
        raise DomainError("time lists must be one-dimensional and equal length")
    d = q.dim
    w_pair = float(initial_field(u0, q.t, q.x_arr)) * float(
        initial_field(u0, q.s, q.y_arr)
    )
    if t_times.size == 0:
        return w_pair, 0.0
    n = t_times.size
    offset = q.x_arr - q.y_arr
    wfac = _w_product_constant(u0)
    t_star_idx = int(np.argmax(t_times))
    s_star_idx = int(np.argmax(s_times))

    def evaluate(g, rng):
        w1 = brownian_batch_nd(np.broadcast_to(t_times, (g, n)), d, rng)
        w2 = brownian_batch_nd(np.broadcast_to(s_times, (g, n)), d, rng)
        rest = np.prod(f.values(offset[None, None, :] + w1 - w2), axis=1)
        if wfac is None:
            b1_star = q.x_arr[None, :] + w1[:, t_star_idx, :]
            b2_star = q.y_arr[None, :] + w2[:, s_star_idx, :]
            rest = rest * initial_field(
                u0, q.t - t_times[t_star_idx], b1_star
            ) * initial_field(u0, q.s - s_times[s_star_idx], b2_star)
        return rest

    def chunk(chunk_idx: int, size: int):
        rng = _chunk_rng(cfg.seed, _STREAM_INNER, chunk_idx)
        rest, hits = _with_redraw(evaluate, size, rng)
        return (rest,)

    results = _run_chunks(cfg.replicates, cfg.effective_workers, chunk)
    rest_all = np.concatenate([r[0] for r in results])
    amp = 1.0 if wfac is None else wfac
    mean = amp * float(np.mean(rest_all))
    stderr = abs(amp) * _batch_means_stderr(rest_all, cfg.batch_count)
    return mean, stderr
