"""Moving (exponentially weighted) estimators for EPD parameters.

The scale follows b_{T+1} = eta * b_T + (1 - eta) * |x_T - mu_T|^kappa with
sigma_T = b_T^(1/kappa); the location and the second moment follow analogous
EMAs with retention nu.  Every density is evaluated with the parameters in
force *before* the observation is consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.signal import lfilter

from .epd import EpdParams, log_norm_const, log_pdf_grad
from .exceptions import DomainError, InsufficientDataError, NoSolutionError, UndefinedRateError
from .static import DEFAULT_KAPPA_RANGE, kappa_from_moments

__all__ = [
    "RateConfig",
    "AdaptiveState",
    "init_state",
    "adaptive_step",
    "run_stepwise",
    "ema_before",
    "exact_moving_mle",
    "generic_moving_estimator",
    "eta_gradient",
    "RateEstimate",
    "rate_from_variance_ratio",
    "KappaEstimate",
    "kappa_moment_step",
    "kappa_gradient_step",
    "adaptive_logpdf_terms",
]

KAPPA_MODES = ("fixed", "moments", "gradient")


@dataclass(frozen=True)
class RateConfig:
    """Forgetting rates and adaptation switches.

    ``eta`` and ``nu`` are retention weights on the previous value (0.94 and
    0.997 for daily returns).  With ``mu_convention="weight"`` the location
    update becomes mu <- (1 - nu) mu + nu x instead.
    """

    eta: float = 0.94
    nu: float = 0.997
    epsilon_eta: float = 0.0
    epsilon_kappa: float = 0.0
    debias: bool = False
    xi: float | None = None
    mu_convention: str = "retention"
    kappa_mode: str = "fixed"
    kappa_range: tuple[float, float] = DEFAULT_KAPPA_RANGE
    eta_clamp: tuple[float, float] = (0.5, 0.9999)
    burn_in: int = 100
    adapt_mu: bool = True

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must be in (0, 1], got {self.eta}")
        if not 0 < self.nu <= 1:
            raise DomainError(f"nu must be in (0, 1], got {self.nu}")
        if self.epsilon_eta < 0 or self.epsilon_kappa < 0:
            raise DomainError("learning rates must be nonnegative")
        if self.xi is not None and not 0 < self.xi < 1:
            raise DomainError(f"xi must be in (0, 1), got {self.xi}")
        if self.mu_convention not in ("retention", "weight"):
            raise DomainError(f"unknown mu_convention {self.mu_convention!r}")
        if self.kappa_mode not in KAPPA_MODES:
            raise DomainError(f"kappa_mode must be one of {KAPPA_MODES}")
        if self.kappa_mode == "gradient" and self.epsilon_kappa <= 0:
            raise DomainError("kappa_mode='gradient' needs epsilon_kappa > 0")
        lo, hi = self.kappa_range
        if not 0 < lo < hi:
            raise DomainError(f"invalid kappa_range {self.kappa_range}")

    @property
    def mu_retention(self) -> float:
        return self.nu if self.mu_convention == "retention" else 1.0 - self.nu


@dataclass(frozen=True)
class AdaptiveState:
    """Estimator state at time T, i.e. after consuming x_1 .. x_{T-1}."""

    b: float  # sigma_T^kappa
    mu_hat: float
    x2_hat: float
    kappa: float
    eta: float
    t: int = 1
    # effective sample sizes of the debiased EMAs
    n_b: float = 0.0
    n_mu: float = 0.0
    # (b_{T-1}, x_{T-1}, mu_{T-1}) for the eta gradient
    prev: tuple[float, float, float] | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def sigma(self) -> float:
        return self.b ** (1.0 / self.kappa)

    @property
    def params(self) -> EpdParams:
        return EpdParams(self.kappa, self.mu_hat, self.sigma)


def init_state(sigma_1: float, mu_1: float, kappa: float, rates: RateConfig) -> AdaptiveState:
    if sigma_1 <= 0:
        raise DomainError(f"sigma_1 must be positive, got {sigma_1}")
    if kappa <= 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    return AdaptiveState(
        b=sigma_1**kappa, mu_hat=float(mu_1), x2_hat=sigma_1**2, kappa=float(kappa), eta=rates.eta
    )


def _ema(old: float, new: float, retention: float, n: float, debias: bool) -> tuple[float, float]:
    if debias:
        n = retention * n + 1.0
        return old + (new - old) / n, n
    return retention * old + (1.0 - retention) * new, n


def adaptive_step(state: AdaptiveState, x: float, rates: RateConfig) -> tuple[AdaptiveState, float]:
    """Consume one observation.

    Returns the new state and ln rho(x) under the parameters *before* the update.
    """
    kappa, mu, b = state.kappa, state.mu_hat, state.b
    sigma = b ** (1.0 / kappa)
    lp = log_norm_const(kappa) - math.log(sigma) - (abs(x - mu) / sigma) ** kappa / kappa
    flags = state.flags

    eta = state.eta
    if rates.epsilon_eta > 0 and state.prev is not None:
        b_prev, x_prev, mu_prev = state.prev
        g_t = eta_gradient(b_prev, x_prev, x, kappa, mu_prev)
        eta = min(max(eta - rates.epsilon_eta * g_t, rates.eta_clamp[0]), rates.eta_clamp[1])

    g = abs(x - mu) ** kappa
    b_new, n_b = _ema(b, g, eta, state.n_b, rates.debias)
    r_mu = rates.mu_retention
    x2_new, _ = _ema(state.x2_hat, x * x, r_mu, state.n_mu, rates.debias)
    if rates.adapt_mu:
        mu_new, n_mu = _ema(mu, x, r_mu, state.n_mu, rates.debias)
    else:
        mu_new, n_mu = mu, _ema(0.0, 0.0, r_mu, state.n_mu, rates.debias)[1]

    new = replace(
        state, b=b_new, mu_hat=mu_new, x2_hat=x2_new, eta=eta, t=state.t + 1,
        n_b=n_b, n_mu=n_mu, prev=(b, float(x), mu),
    )

    kappa_new = kappa
    if rates.kappa_mode == "moments" and new.t > rates.burn_in:
        est = kappa_moment_step(new, rates)
        kappa_new = est.kappa
        if not est.ok and "kappa_moment_infeasible" not in flags:
            flags = flags + ("kappa_moment_infeasible",)
    elif rates.kappa_mode == "gradient":
        kappa_new = kappa_gradient_step(state, x, rates.epsilon_kappa, rates.kappa_range)
    if kappa_new != kappa:
        # keep sigma fixed while its exponent changes
        new = replace(new, kappa=kappa_new, b=b_new ** (kappa_new / kappa))
    if flags is not state.flags:
        new = replace(new, flags=flags)
    return new, float(lp)


def run_stepwise(
    x: Sequence[float], state: AdaptiveState, rates: RateConfig
) -> tuple[AdaptiveState, np.ndarray, np.ndarray, np.ndarray]:
    """Drive ``adaptive_step`` over a stream.

    Returns final state, log-density terms, and the sigma and mu used at each step.
    """
    n = len(x)
    terms, sig, mus = np.empty(n), np.empty(n), np.empty(n)
    for i, xi in enumerate(np.asarray(x, dtype=float)):
        sig[i], mus[i] = state.sigma, state.mu_hat
        state, terms[i] = adaptive_step(state, float(xi), rates)
    return state, terms, sig, mus


def ema_before(values, retention: float, init: float, debias: bool = False) -> np.ndarray:
    """EMA value in force before each element is consumed (length = len(values)).

    Element 0 is ``init``; element T is the EMA over values[:T].  With
    ``debias`` the weights retention^(T-t) are renormalized to sum to one.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v.copy()
    if debias:
        num = lfilter([1.0], [1.0, -retention], v)
        den = lfilter([1.0], [1.0, -retention], np.ones_like(v))
        after = num / den
    else:
        after, _ = lfilter([1.0 - retention], [1.0, -retention], v, zi=[retention * init])
    return np.concatenate(([init], after[:-1]))


def exact_moving_mle(history: Sequence[float], T: int, kappa: float, mu: float, eta: float) -> float:
    """Scale maximizing the normalized moving log-likelihood at time T (1-based).

    Uses x_1 .. x_{T-1} with weights eta^(T-t) / c_T; O(T) per call.
    """
    if T < 2:
        raise InsufficientDataError("moving MLE needs T >= 2")
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    x = np.asarray(history, dtype=float)[: T - 1]
    if x.size < T - 1:
        raise InsufficientDataError(f"history has {x.size} values, need {T - 1}")
    t = np.arange(1, T)
    c_t = (eta - eta**T) / (1.0 - eta)
    w = eta ** (T - t) / c_t
    return float(np.dot(w, np.abs(x - mu) ** kappa) ** (1.0 / kappa))


def generic_moving_estimator(
    g: Callable[[float], float],
    f: Callable[[float], float],
    stream: Sequence[float],
    eta: float,
    b_1: float,
) -> list[float]:
    """Adaptive version of theta = f(sum_i w_i g(x_i)): emits f(b_T) before consuming x_T."""
    if not 0 < eta <= 1:
        raise DomainError("eta must lie in (0, 1]")
    b = b_1
    out = []
    for x in stream:
        out.append(f(b))
        b = b + (1.0 - eta) * (g(x) - b)
    return out


def eta_gradient(b_prev: float, x_prev: float, x: float, kappa: float, mu: float) -> float:
    """Sensitivity G_T of ln rho(x_T) to the update speed 1 - eta used in the last step.

    G_T = (g(x_{T-1}) - b_{T-1}) f'(b_{T-1}) d/dsigma ln rho(f(b_{T-1}), x_T)
    with f(b) = b^(1/kappa), g(x) = |x - mu|^kappa.
    """
    if b_prev <= 0:
        raise DomainError("b_prev must be positive")
    step = abs(x_prev - mu) ** kappa - b_prev
    sigma = b_prev ** (1.0 / kappa)
    fprime = sigma / (kappa * b_prev)
    dsigma = log_pdf_grad(EpdParams(kappa, mu, sigma), x).dsigma
    return step * fprime * dsigma


class RateEstimate(NamedTuple):
    eta_bar: float
    flagged: bool  # numerator variance was zero


def rate_from_variance_ratio(b: Sequence[float], g: Sequence[float]) -> RateEstimate:
    """Estimate 1 - eta as std(b_{T+1} - b_T) / std(g(x_T) - b_T).

    ``b`` holds b_1 .. b_{n+1} (or b_1 .. b_n) for ``g`` = g(x_1) .. g(x_n).
    """
    b = np.asarray(b, dtype=float)
    g = np.asarray(g, dtype=float)
    if b.size == g.size + 1:
        steps, dev = np.diff(b), g - b[:-1]
    elif b.size == g.size:
        steps, dev = np.diff(b), (g - b)[:-1]
    else:
        raise DomainError("b must have len(g) or len(g) + 1 entries")
    if steps.size < 2:
        raise InsufficientDataError("need at least 2 steps of history")
    den = float(np.std(dev))
    if den == 0.0:
        raise UndefinedRateError("g(x) - b has zero variance")
    num = float(np.std(steps))
    return RateEstimate(num / den, num == 0.0)


class KappaEstimate(NamedTuple):
    kappa: float
    ok: bool


def kappa_moment_step(state: AdaptiveState, rates: RateConfig | None = None) -> KappaEstimate:
    """Method-of-moments kappa from the EMA variance and the current scale."""
    rates = rates or RateConfig()
    if state.t <= rates.burn_in:
        return KappaEstimate(state.kappa, False)
    variance = state.x2_hat - state.mu_hat**2
    if variance <= 0:
        return KappaEstimate(state.kappa, False)
    try:
        return KappaEstimate(kappa_from_moments(variance, state.sigma, rates.kappa_range), True)
    except NoSolutionError:
        return KappaEstimate(state.kappa, False)


def kappa_gradient_step(
    state: AdaptiveState,
    x: float,
    epsilon: float,
    kappa_range: tuple[float, float] = DEFAULT_KAPPA_RANGE,
) -> float:
    """One ascent step kappa + epsilon * d/dkappa ln rho(x), clamped to ``kappa_range``."""
    if epsilon == 0:
        return state.kappa
    grad = log_pdf_grad(state.params, x)
    k = state.kappa + epsilon * grad.dkappa
    return float(min(max(k, kappa_range[0]), kappa_range[1]))


def adaptive_logpdf_terms(
    x: Sequence[float],
    kappa: float,
    rates: RateConfig,
    sigma_1: float,
    mu_1: float,
    adapt_mu: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized walk-forward log-densities for fixed kappa and fixed rates.

    Returns (terms, sigma, mu) per step; identical to ``run_stepwise`` up to
    rounding.
    """
    x = np.asarray(x, dtype=float)
    if adapt_mu:
        mu = ema_before(x, rates.mu_retention, mu_1, rates.debias)
    else:
        mu = np.full(x.shape, float(mu_1))
    g = np.abs(x - mu) ** kappa
    b = ema_before(g, rates.eta, sigma_1**kappa, rates.debias)
    with np.errstate(divide="ignore"):
        sigma = b ** (1.0 / kappa)
        terms = log_norm_const(kappa) - np.log(sigma) - (np.abs(x - mu) / sigma) ** kappa / kappa
    return terms, sigma, mu
