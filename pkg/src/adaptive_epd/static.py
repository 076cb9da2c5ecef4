"""Static (weighted) maximum-likelihood estimation of EPD parameters."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from ._optimize import golden_section
from .epd import EpdParams, log_norm_const, log_pdf, variance_factor
from .exceptions import DegenerateSampleError, DomainError, NoSolutionError

__all__ = [
    "WeightedSample",
    "FitResult",
    "DEFAULT_KAPPA_RANGE",
    "weighted_loglik",
    "deviation_objective",
    "sigma_mle",
    "mu_estimate",
    "fit_fixed_kappa",
    "fit_full",
    "kappa_from_moments",
]

DEFAULT_KAPPA_RANGE = (0.3, 4.0)

# exhaustive data-point search for kappa <= 1 up to this many distinct values
_EXHAUSTIVE_LIMIT = 4000
_WINDOW = 256
_CHUNK = 32


@dataclass(frozen=True)
class WeightedSample:
    """Values with nonnegative weights, normalized to sum to one."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.size == 0:
            raise DomainError("sample is empty")
        if v.shape != w.shape:
            raise DomainError("values and weights differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
            raise DomainError("weights must be nonnegative with positive sum")
        if not np.all(np.isfinite(v)):
            raise DomainError("values must be finite")
        w = w / w.sum()
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "WeightedSample":
        v = np.asarray(values, dtype=float)
        return cls(v, np.ones(v.shape))

    def __len__(self):
        return self.values.size


class FitResult(NamedTuple):
    params: EpdParams
    loglik: float  # weighted mean log-likelihood at the fitted parameters


def weighted_loglik(s: WeightedSample, p: EpdParams) -> float:
    """Direct evaluation of sum_i w_i ln rho(x_i)."""
    return float(np.dot(s.weights, log_pdf(p, s.values)))


def deviation_objective(s: WeightedSample, kappa: float, mu: float) -> float:
    """sum_i w_i |x_i - mu|^kappa."""
    return float(np.dot(s.weights, np.abs(s.values - mu) ** kappa))


def sigma_mle(s: WeightedSample, kappa: float, mu: float) -> float:
    """Closed-form scale MLE (sum_i w_i |x_i - mu|^kappa)^(1/kappa)."""
    m = deviation_objective(s, kappa, mu)
    if m <= 0.0:
        raise DegenerateSampleError("all values equal mu; scale MLE is zero")
    return m ** (1.0 / kappa)


def _objective_at(s: WeightedSample, kappa: float, candidates: np.ndarray) -> np.ndarray:
    out = np.empty(candidates.size)
    for i in range(0, candidates.size, _CHUNK):
        c = candidates[i : i + _CHUNK]
        out[i : i + _CHUNK] = (np.abs(s.values[None, :] - c[:, None]) ** kappa) @ s.weights
    return out


def _mu_nonconvex(s: WeightedSample, kappa: float) -> float:
    # For kappa <= 1 the objective is concave between consecutive data points,
    # so the minimum is attained at a data point.
    xs = np.unique(s.values[s.weights > 0])
    if xs.size <= _EXHAUSTIVE_LIMIT:
        return float(xs[np.argmin(_objective_at(s, kappa, xs))])
    # Large samples: locate the basin by golden section, then scan data points
    # around it, sliding the window until the best point is interior.
    seed, _ = golden_section(
        lambda m: deviation_objective(s, kappa, m), xs[0], xs[-1], tol=1e-12 * (xs[-1] - xs[0])
    )
    center = int(np.searchsorted(xs, seed))
    half = _WINDOW // 2
    seen: dict[int, float] = {}
    for _ in range(1000):
        lo, hi = max(0, center - half), min(xs.size, center + half)
        idx = np.array([i for i in range(lo, hi) if i not in seen], dtype=int)
        if idx.size:
            for i, v in zip(idx, _objective_at(s, kappa, xs[idx])):
                seen[int(i)] = float(v)
        best = min(range(lo, hi), key=seen.__getitem__)
        at_edge = (best == lo and lo > 0) or (best == hi - 1 and hi < xs.size)
        if not at_edge:
            return float(xs[best])
        center = best
    return float(xs[best])


def mu_estimate(s: WeightedSample, kappa: float) -> float:
    """Location minimizing sum_i w_i |x_i - mu|^kappa."""
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    if kappa == 2.0:
        return float(np.dot(s.weights, s.values))
    if kappa <= 1.0:
        return _mu_nonconvex(s, kappa)
    lo, hi = float(s.values.min()), float(s.values.max())
    if lo == hi:
        return lo
    mu, _ = golden_section(
        lambda m: deviation_objective(s, kappa, m), lo, hi, tol=1e-13 * max(hi - lo, abs(lo), abs(hi))
    )
    return float(mu)


def fit_fixed_kappa(s: WeightedSample, kappa: float) -> FitResult:
    """Profile MLE at fixed kappa; returns params and the closed-form maximized log-likelihood."""
    mu = mu_estimate(s, kappa)
    sigma = sigma_mle(s, kappa, mu)
    # at the optimum the exponent term averages to exactly 1/kappa
    loglik = log_norm_const(kappa) - math.log(sigma) - 1.0 / kappa
    return FitResult(EpdParams(kappa, mu, sigma), float(loglik))


def _kappa_grid(lo: float, hi: float, step: float = 0.05) -> np.ndarray:
    grid = np.arange(lo, hi + 1e-12, step)
    if grid[-1] < hi - 1e-12:
        grid = np.append(grid, hi)
    return grid


def fit_full(
    s: WeightedSample,
    kappa_range: tuple[float, float] = DEFAULT_KAPPA_RANGE,
    threads: int = 1,
) -> FitResult:
    """Full MLE: grid pre-scan in kappa, then golden-section refinement in log kappa."""
    lo, hi = kappa_range
    if not (0 < lo < hi):
        raise DomainError(f"invalid kappa range {kappa_range}")
    grid = _kappa_grid(lo, hi)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            fits = list(pool.map(lambda k: fit_fixed_kappa(s, k), grid))
    else:
        fits = [fit_fixed_kappa(s, k) for k in grid]
    i = int(np.argmax([f.loglik for f in fits]))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    cache: dict[float, FitResult] = {}

    def neg(logk: float) -> float:
        k = math.exp(logk)
        cache[logk] = fit_fixed_kappa(s, k)
        return -cache[logk].loglik

    logk, _ = golden_section(neg, math.log(a), math.log(b), tol=1e-7, min_iter=40)
    best = cache[logk]
    return best if best.loglik >= fits[i].loglik else fits[i]


def kappa_from_moments(
    variance: float,
    sigma: float,
    kappa_range: tuple[float, float] = DEFAULT_KAPPA_RANGE,
) -> float:
    """Solve variance = variance_factor(kappa) * sigma^2 for kappa."""
    if variance <= 0 or sigma <= 0:
        raise DomainError("variance and sigma must be positive")
    lo, hi = kappa_range
    target = math.log(variance) - 2.0 * math.log(sigma)

    def f(k):
        return math.log(variance_factor(k)) - target

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSolutionError(
            f"variance ratio {math.exp(target):.6g} not attainable for kappa in {kappa_range}"
        )
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
