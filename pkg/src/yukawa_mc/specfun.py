"""Special functions used as exact oracles for the stochastic solvers.

The killing constant of an ``n``-dimensional ball is

    psi_n(mu) = mu**nu / (2**nu * Gamma(nu + 1) * I_nu(mu)),   nu = (n - 2) / 2,

which simplifies to ``1 / 0F1(; nu + 1; mu**2 / 4)``: the leading power of the
ascending Bessel series cancels against the numerator. Both ``bessel_i`` and
``psi`` are therefore driven by the same normalised series, accumulated with
periodic rescaling so that its logarithm stays finite far past the point where
``I_nu`` itself overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "BesselOrder",
    "MAX_TERMS",
    "SAFE_X",
    "bessel_i",
    "gaussian_kernel",
    "log_bessel_i",
    "log_gamma",
    "psi",
]

#: Hard cap on the number of series terms.
MAX_TERMS = 10_000
#: Largest argument for which ``bessel_i`` returns a finite double (I_0(700) ~ 1.5e302).
SAFE_X = 700.0

_RESCALE = 1e280
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class BesselOrder:
    """Order ``nu >= 0`` of a modified Bessel function."""

    nu: float

    def __post_init__(self):
        if not (self.nu >= 0.0):
            raise ValueError(f"Bessel order must be >= 0, got {self.nu}")

    @classmethod
    def from_dimension(cls, n: int) -> "BesselOrder":
        """Order ``(n - 2) / 2`` attached to the ball in ``n`` dimensions."""
        if int(n) != n or n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {n}")
        return cls((int(n) - 2) / 2)


@njit(cache=True)
def _log_normalized_series(nu, x):
    """log of sum_m Gamma(nu+1) / (m! Gamma(m+nu+1)) (x/2)**(2m).

    Returns NaN when the term cap is reached before convergence.
    """
    q = 0.25 * x * x
    total = 1.0
    term = 1.0
    log_scale = 0.0
    for m in range(MAX_TERMS):
        term *= q / ((m + 1.0) * (m + 1.0 + nu))
        if term < 1e-16 * total:
            return log_scale + math.log(total)
        total += term
        if total > _RESCALE:
            total /= _RESCALE
            term /= _RESCALE
            log_scale += _LOG_RESCALE
    return math.nan


@njit(cache=True)
def psi_nu(nu, x):
    """Killing constant for Bessel order ``nu`` at argument ``x``; numba-callable.

    Returns NaN for arguments where the series does not converge within the cap.
    """
    if x == 0.0:
        return 1.0
    return math.exp(-_log_normalized_series(nu, x))


def _as_nu(order) -> float:
    if isinstance(order, BesselOrder):
        return order.nu
    return BesselOrder(float(order)).nu


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"log_gamma is defined for x > 0, got {x}")
    return math.lgamma(x)


def log_bessel_i(order, x: float) -> float:
    """``ln I_nu(x)``; finite well beyond ``SAFE_X`` (about x <= 1.9e4)."""
    nu = _as_nu(order)
    x = float(x)
    if x < 0.0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    log_s = _log_normalized_series(nu, x)
    if math.isnan(log_s):
        raise OverflowError(f"Bessel series did not converge within {MAX_TERMS} terms at x={x}")
    return nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) + log_s


def bessel_i(order, x: float) -> float:
    """Modified Bessel function of the first kind ``I_nu(x)`` from its ascending series.

    Terms are added until the next one drops below ``1e-16`` times the partial
    sum. Raises ``OverflowError`` for ``x > SAFE_X``; no asymptotic expansion
    is used.
    """
    x = float(x)
    if x > SAFE_X:
        raise OverflowError(f"bessel_i argument {x} exceeds the safe bound {SAFE_X}")
    nu = _as_nu(order)
    if x < 0.0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    log_s = _log_normalized_series(nu, x)
    lead = nu * math.log(0.5 * x) - math.lgamma(nu + 1.0)
    return math.exp(lead) * math.exp(log_s)


def psi(n: int, mu_r: float) -> float:
    """Killing constant ``psi_n(mu r)`` in ``(0, 1]``.

    Equals the Laplace transform ``E[exp(-mu^2 tau / 2)]`` of the exit time
    of an ``n``-dimensional Brownian motion from a ball of radius ``r`` started
    at its centre. Defined as 1 at ``mu_r = 0``.
    """
    nu = BesselOrder.from_dimension(n).nu
    mu_r = float(mu_r)
    if not mu_r >= 0.0:
        raise ValueError(f"psi requires mu_r >= 0, got {mu_r}")
    value = psi_nu(nu, mu_r)
    if math.isnan(value):
        raise OverflowError(f"psi_{n} series did not converge at mu_r={mu_r}")
    return value


def gaussian_kernel(n: int, t: float, x) -> float:
    """Brownian transition density ``(2 pi t)^(-n/2) exp(-|x|^2 / (2t))``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not t > 0.0:
        raise ValueError(f"gaussian_kernel requires t > 0, got {t}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != n:
        raise ValueError(f"expected a vector of length {n}, got {x.size}")
    sq = float(np.dot(x, x))
    return (2.0 * math.pi * t) ** (-0.5 * n) * math.exp(-sq / (2.0 * t))
