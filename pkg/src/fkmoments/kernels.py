"""Deterministic kernel and field evaluations.

Covers the temporal covariance kernel eta(t, s) = alpha_H |t-s|^(2H-2) of
fractional Brownian motion, a small catalog of pointwise-evaluable spatial
covariance kernels f, the Gaussian heat density p_t, and the noiseless
field w(t, x) obtained by running the heat semigroup on the initial
condition.

All objects are immutable and all operations are pure functions, so they
are safe to evaluate concurrently.  Array arguments follow one convention:
the last axis of a point argument is the spatial dimension, and leading
axes are broadcast batch axes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "TemporalKernel",
    "SpatialKernel",
    "HeatKernel",
    "RieszKernel",
    "PoissonKernel",
    "ZeroKernel",
    "Constant",
    "GaussianBump",
    "heat_density",
    "initial_field",
]


def _sq_norm(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean norm over the last (spatial) axis."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x * x
    return np.sum(x * x, axis=-1)


# ---------------------------------------------------------------------------
# temporal kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TemporalKernel:
    """Fractional covariance kernel eta(t, s) = alpha_H |t-s|^(2H-2).

    The Hurst parameter must satisfy 1/2 < H < 1 (long-range dependence
    regime), which makes alpha_H = H(2H-1) positive and the singularity on
    the diagonal t = s integrable.
    """

    hurst: float

    def __post_init__(self):
        if not 0.5 < self.hurst < 1.0:
            raise DomainError(
                f"hurst must lie in the open interval (1/2, 1), got {self.hurst}"
            )

    @property
    def alpha_h(self) -> float:
        return self.hurst * (2.0 * self.hurst - 1.0)

    def eta(self, t, s):
        """Evaluate eta(t, s) = alpha_H |t-s|^(2H-2), elementwise.

        Raises DomainError if any t == s: the kernel diverges there and the
        caller is expected to avoid or reweight the singular set.
        """
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        gap = np.abs(t - s)
        if np.any(gap == 0.0):
            raise DomainError("eta(t, s) is singular on the diagonal t = s")
        out = self.alpha_h * gap ** (2.0 * self.hurst - 2.0)
        return out if out.ndim else float(out)

    def mass(self, t: float, s: float) -> float:
        """Integral of eta over [0, t] x [0, s], in closed form.

        Equals the fractional Brownian covariance
        (t^(2H) + s^(2H) - |t-s|^(2H)) / 2.
        """
        h2 = 2.0 * self.hurst
        return 0.5 * (t**h2 + s**h2 - abs(t - s) ** h2)


# ---------------------------------------------------------------------------
# spatial kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpatialKernel:
    """Base for pointwise-evaluable spatial covariance kernels.

    Subclasses implement ``values(x)`` for batches of points (last axis =
    dim); every kernel is symmetric, nonnegative, and translation-free in
    the sense that it is evaluated at displacement vectors.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")

    def values(self, x) -> np.ndarray:
        raise NotImplementedError

    def value(self, x) -> float:
        """Scalar convenience wrapper around :meth:`values`."""
        return float(self.values(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class HeatKernel(SpatialKernel):
    """f(x) = p_h(x), the Gaussian heat density with bandwidth h > 0."""

    bandwidth: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.bandwidth <= 0:
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth}")

    def values(self, x):
        return heat_density(self.bandwidth, x)


@dataclass(frozen=True)
class RieszKernel(SpatialKernel):
    """f(x) = |x|^(alpha - d) with 0 < alpha < d; infinite at the origin.

    Unnormalized by convention: no multiplicative constant is applied, so
    the Monte Carlo estimators and the quadrature oracle share the same
    scale.  Evaluation at x = 0 returns +inf as the singular-value signal;
    the estimators treat such replicates as redraws.
    """

    order: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.order < self.dim:
            raise DomainError(
                f"Riesz order must satisfy 0 < order < dim, got order={self.order} dim={self.dim}"
            )

    def values(self, x):
        r2 = _sq_norm(x)
        with np.errstate(divide="ignore"):
            out = np.where(r2 > 0.0, r2 ** (0.5 * (self.order - self.dim)), np.inf)
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class PoissonKernel(SpatialKernel):
    """f(x) = c_d a / (a^2 + |x|^2)^((d+1)/2), the half-space Poisson kernel.

    c_d = Gamma((d+1)/2) / pi^((d+1)/2) makes f a probability density.
    """

    scale: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.scale <= 0:
            raise DomainError(f"scale must be positive, got {self.scale}")

    @property
    def _const(self) -> float:
        return math.gamma(0.5 * (self.dim + 1)) / math.pi ** (0.5 * (self.dim + 1))

    def values(self, x):
        r2 = _sq_norm(x)
        a = self.scale
        out = self._const * a / (a * a + r2) ** (0.5 * (self.dim + 1))
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class ZeroKernel(SpatialKernel):
    """Identically-zero kernel; kills every chaos order n >= 1."""

    def values(self, x):
        r2 = _sq_norm(x)
        out = np.zeros_like(np.asarray(r2, dtype=float))
        return out if np.ndim(out) else 0.0


# Existence of the underlying solution is only guaranteed on part of the
# (kernel, d, H) parameter space; outside it the representation formula is
# still evaluated as stated, after a warning.
def warn_outside_existence_regime(f: SpatialKernel, hurst: float) -> str | None:
    msg = None
    if isinstance(f, RieszKernel) and f.dim > 2 + f.order:
        msg = (
            f"Riesz kernel with dim={f.dim} > 2 + order={f.order}: outside the "
            "surveyed existence regime; computing the representation anyway"
        )
    if msg is not None:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return msg


# ---------------------------------------------------------------------------
# heat density and initial field
# ---------------------------------------------------------------------------


def heat_density(t, x):
    """Gaussian heat density p_t(x) = (2 pi t)^(-d/2) exp(-|x|^2 / (2t)).

    ``x`` carries the dimension on its last axis (a scalar is a point in
    d = 1); ``t`` broadcasts against the batch axes and must be positive.
    """
    x = np.asarray(x, dtype=float)
    d = 1 if x.ndim == 0 else x.shape[-1]
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("heat_density requires t > 0")
    out = (2.0 * math.pi * t) ** (-0.5 * d) * np.exp(-_sq_norm(x) / (2.0 * t))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Constant:
    """Constant initial condition u_0(x) = c."""

    value: float = 1.0

    def field(self, t, x):
        """w(t, x) for constant data is the constant itself."""
        shape = np.broadcast_shapes(np.shape(t), np.shape(x)[:-1] if np.ndim(x) else ())
        if shape == ():
            return self.value
        return np.full(shape, self.value)


@dataclass(frozen=True)
class GaussianBump:
    """u_0(x) = amplitude * exp(-|x - center|^2 / (2 width)).

    Bounded and continuous; the heat evolution has the closed form
    w(t, x) = amplitude (width / (width + t))^(d/2)
              exp(-|x - center|^2 / (2 (width + t))).
    """

    amplitude: float = 1.0
    center: tuple = (0.0,)
    width: float = 1.0
    _center_arr: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.width <= 0:
            raise DomainError(f"width must be positive, got {self.width}")
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "_center_arr", c)

    def field(self, t, x):
        """Heat semigroup applied to the bump, valid for all t >= 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0):
            raise DomainError("initial field requires t >= 0")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = x.shape[-1]
        if d != self._center_arr.shape[0]:
            raise DomainError(
                f"point dimension {d} does not match bump center dimension "
                f"{self._center_arr.shape[0]}"
            )
        w = self.width
        out = (
            self.amplitude
            * (w / (w + t)) ** (0.5 * d)
            * np.exp(-_sq_norm(x - self._center_arr) / (2.0 * (w + t)))
        )
        return out if np.ndim(out) else float(out)


def initial_field(u0, t, x):
    """w(t, x): the noiseless heat evolution of the initial condition."""
    return u0.field(t, x)
