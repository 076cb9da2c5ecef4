"""Exponential power distribution rho(x) ~ exp(-|(x - mu)/sigma|^kappa / kappa).

kappa = 2 is the Gaussian, kappa = 1 the Laplace distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError
from .special import digamma, inv_reg_upper_gamma, ln_gamma, reg_upper_gamma

__all__ = [
    "EpdParams",
    "LogPdfGrad",
    "log_norm_const",
    "pdf",
    "log_pdf",
    "cdf",
    "quantile",
    "sample",
    "variance_of",
    "variance_factor",
    "log_pdf_grad",
]


_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EpdParams:
    """Shape ``kappa``, location ``mu`` and scale ``sigma`` of one EPD member."""

    kappa: float
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")


def log_norm_const(kappa):
    """ln of kappa^(-1/kappa) / (2 Gamma(1 + 1/kappa)), the density at the mode for sigma=1."""
    if isinstance(kappa, (float, int)):
        k = float(kappa)
        return -_LN2 - math.log(k) / k - ln_gamma(1.0 + 1.0 / k)
    kappa = np.asarray(kappa, dtype=float)
    out = -_LN2 - np.log(kappa) / kappa - ln_gamma(1.0 + 1.0 / kappa)
    return float(out) if out.ndim == 0 else out


def _ret(out, x):
    return float(out) if np.ndim(x) == 0 else out


def log_pdf(p: EpdParams, x):
    """Log-density, evaluated without exponentiating."""
    u = np.abs(np.asarray(x, dtype=float) - p.mu) / p.sigma
    out = log_norm_const(p.kappa) - math.log(p.sigma) - u**p.kappa / p.kappa
    return _ret(out, x)


def pdf(p: EpdParams, x):
    return _ret(np.exp(log_pdf(p, x)), x)


def cdf(p: EpdParams, x):
    x = np.asarray(x, dtype=float)
    u = np.abs(x - p.mu) / p.sigma
    half_tail = 0.5 * reg_upper_gamma(1.0 / p.kappa, u**p.kappa / p.kappa)
    out = np.where(x < p.mu, half_tail, 1.0 - half_tail)
    return _ret(out, x)


def quantile(p: EpdParams, q):
    """Inverse CDF for q in (0, 1)."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr > 0) & (q_arr < 1))):
        raise DomainError("quantile requires q in (0, 1)")
    tail = np.where(q_arr < 0.5, q_arr, 1.0 - q_arr)
    z = np.asarray(inv_reg_upper_gamma(1.0 / p.kappa, 2.0 * tail), dtype=float)
    dist = p.sigma * (p.kappa * z) ** (1.0 / p.kappa)
    out = np.where(q_arr < 0.5, p.mu - dist, p.mu + dist)
    out = np.where(q_arr == 0.5, p.mu, out)
    return _ret(out, q)


def sample(p: EpdParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. values as mu + s * sigma * (kappa * G)^(1/kappa), G ~ Gamma(1/kappa)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    g = rng.gamma(1.0 / p.kappa, 1.0, size=n)
    sign = rng.integers(0, 2, size=n) * 2 - 1
    return p.mu + sign * p.sigma * (p.kappa * g) ** (1.0 / p.kappa)


def variance_factor(kappa):
    """Variance of the unit-scale EPD, kappa^(2/kappa) Gamma(3/kappa) / Gamma(1/kappa)."""
    kappa = np.asarray(kappa, dtype=float)
    out = np.exp(2.0 * np.log(kappa) / kappa + ln_gamma(3.0 / kappa) - ln_gamma(1.0 / kappa))
    return float(out) if out.ndim == 0 else out


def variance_of(p: EpdParams) -> float:
    return variance_factor(p.kappa) * p.sigma**2


class LogPdfGrad(NamedTuple):
    dkappa: float
    dmu: float
    dsigma: float
    singular: bool  # x == mu with kappa <= 1: dmu set to 0 by convention


def log_pdf_grad(p: EpdParams, x: float) -> LogPdfGrad:
    """Analytic partial derivatives of ln pdf with respect to (kappa, mu, sigma)."""
    k, s = p.kappa, p.sigma
    diff = float(x) - p.mu
    u = abs(diff) / s
    uk = u**k
    dsigma = (uk - 1.0) / s
    # d/dkappa of -ln(kappa)/kappa - ln Gamma(1 + 1/kappa) - u^kappa / kappa
    dkappa = (math.log(k) - 1.0 + digamma(1.0 + 1.0 / k)) / k**2 + uk / k**2
    if u > 0:
        dkappa -= uk * math.log(u) / k
    singular = diff == 0.0 and k <= 1.0
    if diff == 0.0:
        dmu = 0.0
    else:
        dmu = math.copysign(u ** (k - 1.0), diff) / s
    return LogPdfGrad(dkappa, dmu, dsigma, singular)
