"""GARCH(1,1) with Gaussian innovations, used as the comparison baseline.

sigma2_t = omega + alpha * (x_{t-1} - mu)^2 + beta * sigma2_{t-1}
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from .exceptions import DomainError, InsufficientDataError

__all__ = [
    "GarchParams",
    "GarchFilterResult",
    "GarchFit",
    "garch_filter",
    "garch_fit",
    "simulate_garch",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# (persistence alpha+beta, share of alpha in it, log multiplier on omega)
_STARTS = (
    (0.95, 0.08, 0.0),
    (0.98, 0.05, 0.0),
    (0.90, 0.15, 0.0),
    (0.70, 0.30, 0.0),
    (0.995, 0.03, 0.5),
)


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("alpha and beta must be nonnegative")
        if not self.alpha + self.beta < 1:
            raise DomainError("alpha + beta must be < 1 for covariance stationarity")

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


class GarchFilterResult(NamedTuple):
    sigma2: np.ndarray  # one-step-ahead variance for each observation
    terms: np.ndarray  # per-observation Gaussian log-density
    mean_loglik: float


class GarchFit(NamedTuple):
    params: GarchParams
    mean_loglik: float
    sigma2_init: float
    converged: bool


def _variance_path(p: GarchParams, x: np.ndarray, sigma2_init: float) -> np.ndarray:
    e2 = (x - p.mu) ** 2
    # forcing for t >= 2; the recursion is linear in sigma2
    u = p.omega + p.alpha * e2[:-1]
    if u.size == 0:
        return np.array([sigma2_init])
    rest, _ = lfilter([1.0], [1.0, -p.beta], u, zi=[p.beta * sigma2_init])
    return np.concatenate(([sigma2_init], rest))


def garch_filter(p: GarchParams, returns: Sequence[float], sigma2_init: float) -> GarchFilterResult:
    """One-step-ahead variances and mean Gaussian log-likelihood."""
    x = np.asarray(returns, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("empty return series")
    if not sigma2_init > 0:
        raise DomainError("sigma2_init must be positive")
    s2 = _variance_path(p, x, sigma2_init)
    terms = -_HALF_LOG_2PI - 0.5 * np.log(s2) - 0.5 * (x - p.mu) ** 2 / s2
    return GarchFilterResult(s2, terms, float(terms.mean()))


def simulate_garch(
    p: GarchParams, n: int, seed=None, sigma2_init: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate returns and the latent variance path (started at the unconditional variance)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    s2 = np.empty(n)
    s2[0] = p.unconditional_variance if sigma2_init is None else sigma2_init
    # sigma2_{t+1} = omega + (alpha z_t^2 + beta) sigma2_t
    coef = p.alpha * z[:-1] ** 2 + p.beta
    for t in range(1, n):
        s2[t] = p.omega + coef[t - 1] * s2[t - 1]
    return p.mu + np.sqrt(s2) * z, s2


def _unpack(theta: np.ndarray, var: float, mu: float) -> GarchParams:
    persistence = float(expit(theta[1]))
    share = float(expit(theta[2]))
    # omega relative to the sample variance keeps the fit scale-equivariant
    omega = var * (1.0 - persistence) * math.exp(float(theta[0]))
    return GarchParams(omega, persistence * share, persistence * (1.0 - share), mu)


def garch_fit(returns: Sequence[float], threads: int = 1) -> GarchFit:
    """Gaussian quasi-MLE with the mean fixed at the sample mean.

    Nelder-Mead on an unconstrained (log/logit) parameterization from fixed
    multi-starts; deterministic.
    """
    x = np.asarray(returns, dtype=float)
    if x.size < 100:
        raise InsufficientDataError(f"GARCH fit needs n >= 100, got {x.size}")
    mu = float(x.mean())
    var = float(x.var())
    if var <= 0:
        raise DomainError("returns have zero variance")

    def objective(theta):
        theta = np.clip(theta, -30.0, 30.0)
        res = garch_filter(_unpack(theta, var, mu), x, var)
        return -res.mean_loglik if np.isfinite(res.mean_loglik) else np.inf

    def run(start):
        pers, share, lw = start
        theta0 = np.array([lw, logit(pers), logit(share)])
        return minimize(
            objective, theta0, method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000, "maxfev": 8000},
        )

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, _STARTS))
    else:
        results = [run(s) for s in _STARTS]
    best = min(results, key=lambda r: r.fun)
    params = _unpack(np.clip(best.x, -30.0, 30.0), var, mu)
    loglik = garch_filter(params, x, var).mean_loglik

    # the i.i.d. Gaussian point (alpha = beta = 0) is the boundary of the
    # parameterization; never return anything worse
    flat = GarchParams(var, 0.0, 0.0, mu)
    flat_ll = garch_filter(flat, x, var).mean_loglik
    if flat_ll > loglik:
        return GarchFit(flat, flat_ll, var, bool(best.success))
    return GarchFit(params, loglik, var, bool(best.success))
