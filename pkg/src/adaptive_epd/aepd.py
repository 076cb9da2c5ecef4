"""Asymmetric EPD: two one-sided EPD halves glued at mu.

Left of mu the density is alpha * C(kappa_l)/sigma_l * exp(-((mu - x)/sigma_l)^kappa_l / kappa_l),
right of mu the same with (1 - alpha), kappa_r, sigma_r, where
C(kappa) = kappa^(-1/kappa) / Gamma(1 + 1/kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .adaptive import RateConfig
from .exceptions import DomainError
from .special import digamma, ln_gamma, reg_upper_gamma

__all__ = [
    "AepdParams",
    "AepdAdaptiveState",
    "log_c",
    "continuity_alpha",
    "aepd_log_pdf",
    "aepd_pdf",
    "aepd_cdf",
    "aepd_init_state",
    "aepd_adapt_step",
    "aepd_gradient_step",
    "run_aepd",
]

ALPHA_MODES = ("continuity", "frequency")


def log_c(kappa: float) -> float:
    """ln C(kappa); C(kappa)/sigma is the one-sided density at mu for unit mass."""
    return -math.log(kappa) / kappa - ln_gamma(1.0 + 1.0 / kappa)


def continuity_alpha(kappa_l: float, kappa_r: float, sigma_l: float, sigma_r: float) -> float:
    """Left mass making the density continuous at mu."""
    for name, v in (("kappa_l", kappa_l), ("kappa_r", kappa_r), ("sigma_l", sigma_l), ("sigma_r", sigma_r)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    # C(k_l) sigma_r / (C(k_r) sigma_l), in log space
    log_ratio = log_c(kappa_l) - log_c(kappa_r) + math.log(sigma_r) - math.log(sigma_l)
    return 1.0 / (math.exp(log_ratio) + 1.0)


@dataclass(frozen=True)
class AepdParams:
    kappa_l: float
    kappa_r: float
    sigma_l: float
    sigma_r: float
    mu: float = 0.0
    alpha: float = 0.5

    def __post_init__(self):
        for name in ("kappa_l", "kappa_r", "sigma_l", "sigma_r"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}")

    @classmethod
    def continuous(cls, kappa_l, kappa_r, sigma_l, sigma_r, mu=0.0) -> "AepdParams":
        """Construct with alpha chosen so the density is continuous at mu."""
        alpha = continuity_alpha(kappa_l, kappa_r, sigma_l, sigma_r)
        return cls(kappa_l, kappa_r, sigma_l, sigma_r, mu, alpha)


def _ret(out, x):
    return float(out) if np.ndim(x) == 0 else out


def aepd_log_pdf(p: AepdParams, x):
    x_arr = np.asarray(x, dtype=float)
    left = x_arr < p.mu
    with np.errstate(divide="ignore", invalid="ignore"):
        ul = np.where(left, p.mu - x_arr, 0.0) / p.sigma_l
        ur = np.where(left, 0.0, x_arr - p.mu) / p.sigma_r
        lp_l = math.log(p.alpha) + log_c(p.kappa_l) - math.log(p.sigma_l) - ul**p.kappa_l / p.kappa_l
        lp_r = math.log1p(-p.alpha) + log_c(p.kappa_r) - math.log(p.sigma_r) - ur**p.kappa_r / p.kappa_r
    return _ret(np.where(left, lp_l, lp_r), x)


def aepd_pdf(p: AepdParams, x):
    return _ret(np.exp(aepd_log_pdf(p, x)), x)


def aepd_cdf(p: AepdParams, x):
    x_arr = np.asarray(x, dtype=float)
    left = x_arr < p.mu
    ul = np.where(left, p.mu - x_arr, 0.0) / p.sigma_l
    ur = np.where(left, 0.0, x_arr - p.mu) / p.sigma_r
    tail_l = reg_upper_gamma(1.0 / p.kappa_l, ul**p.kappa_l / p.kappa_l)
    tail_r = reg_upper_gamma(1.0 / p.kappa_r, ur**p.kappa_r / p.kappa_r)
    out = np.where(left, p.alpha * tail_l, p.alpha + (1.0 - p.alpha) * (1.0 - tail_r))
    return _ret(out, x)


@dataclass(frozen=True)
class AepdAdaptiveState:
    params: AepdParams
    t: int = 1


def aepd_init_state(
    kappa_l: float,
    kappa_r: float,
    sigma_1: float,
    mu_1: float = 0.0,
    alpha_mode: str = "continuity",
) -> AepdAdaptiveState:
    if alpha_mode == "continuity":
        params = AepdParams.continuous(kappa_l, kappa_r, sigma_1, sigma_1, mu_1)
    else:
        params = AepdParams(kappa_l, kappa_r, sigma_1, sigma_1, mu_1, 0.5)
    return AepdAdaptiveState(params)


def aepd_adapt_step(
    state: AepdAdaptiveState,
    x: float,
    rates: RateConfig,
    alpha_mode: str = "continuity",
) -> AepdAdaptiveState:
    """Heuristic one-sided update.

    The side is decided against the pre-update mu; x == mu counts as right.
    Only that side's scale moves, by an EMA of |x - mu|^kappa_side.
    """
    if alpha_mode not in ALPHA_MODES:
        raise DomainError(f"alpha_mode must be one of {ALPHA_MODES}")
    p = state.params
    is_left = x < p.mu
    dev = abs(x - p.mu)
    sigma_l, sigma_r = p.sigma_l, p.sigma_r
    if is_left:
        k = p.kappa_l
        sigma_l = (rates.eta * sigma_l**k + (1.0 - rates.eta) * dev**k) ** (1.0 / k)
    else:
        k = p.kappa_r
        sigma_r = (rates.eta * sigma_r**k + (1.0 - rates.eta) * dev**k) ** (1.0 / k)
    mu = p.mu
    if rates.adapt_mu:
        r = rates.mu_retention
        mu = r * mu + (1.0 - r) * x
    if alpha_mode == "continuity":
        alpha = continuity_alpha(p.kappa_l, p.kappa_r, sigma_l, sigma_r)
    else:
        if rates.xi is None:
            raise DomainError("frequency alpha mode needs rates.xi")
        alpha = rates.xi * p.alpha + (1.0 - rates.xi) * float(is_left)
    new = AepdParams(p.kappa_l, p.kappa_r, sigma_l, sigma_r, mu, alpha)
    return AepdAdaptiveState(new, state.t + 1)


def _branch_grads(p: AepdParams, x: float) -> dict[str, float]:
    """Partials of ln rho(x) on the branch containing x."""
    left = x < p.mu
    side = "l" if left else "r"
    k = p.kappa_l if left else p.kappa_r
    s = p.sigma_l if left else p.sigma_r
    u = (p.mu - x if left else x - p.mu) / s
    uk = u**k
    dk = (math.log(k) - 1.0 + digamma(1.0 + 1.0 / k)) / k**2 + uk / k**2
    if u > 0:
        dk -= uk * math.log(u) / k
    du_dmu = (1.0 if left else -1.0) / s
    dmu = -(u ** (k - 1.0)) * du_dmu if u > 0 else 0.0
    return {
        f"kappa_{side}": dk,
        f"sigma_{side}": (uk - 1.0) / s,
        "mu": dmu,
        "alpha": 1.0 / p.alpha if left else -1.0 / (1.0 - p.alpha),
    }


def aepd_gradient_step(
    state: AepdAdaptiveState,
    x: float,
    epsilons: Mapping[str, float],
    kappa_range: tuple[float, float] = (0.3, 4.0),
) -> AepdAdaptiveState:
    """theta <- theta + epsilon_theta * d/dtheta ln rho(x), per parameter.

    ``epsilons`` maps parameter names (kappa_l, kappa_r, sigma_l, sigma_r, mu,
    alpha) to their learning rates; missing names are left unchanged.
    """
    p = state.params
    grads = _branch_grads(p, x)
    values = {
        "kappa_l": p.kappa_l, "kappa_r": p.kappa_r, "sigma_l": p.sigma_l,
        "sigma_r": p.sigma_r, "mu": p.mu, "alpha": p.alpha,
    }
    for name, eps in epsilons.items():
        if name not in values:
            raise DomainError(f"unknown AEPD parameter {name!r}")
        if eps and name in grads:
            values[name] += eps * grads[name]
    for name in ("kappa_l", "kappa_r"):
        values[name] = min(max(values[name], kappa_range[0]), kappa_range[1])
    for name in ("sigma_l", "sigma_r"):
        values[name] = max(values[name], 1e-12 * getattr(p, name))
    values["alpha"] = min(max(values["alpha"], 1e-6), 1.0 - 1e-6)
    return replace(state, params=AepdParams(**values))


def run_aepd(
    x: Sequence[float],
    state: AepdAdaptiveState,
    rates: RateConfig,
    alpha_mode: str = "continuity",
    epsilons: Mapping[str, float] | None = None,
) -> tuple[AepdAdaptiveState, np.ndarray, np.ndarray]:
    """Walk-forward pass; returns final state, log-density terms and CDF values."""
    x = np.asarray(x, dtype=float)
    terms, ys = np.empty(x.size), np.empty(x.size)
    for i, xi in enumerate(x):
        xi = float(xi)
        terms[i] = aepd_log_pdf(state.params, xi)
        ys[i] = aepd_cdf(state.params, xi)
        nxt = aepd_adapt_step(state, xi, rates, alpha_mode)
        if epsilons:
            # gradient moves, taken at the pre-update parameters, add on top
            # of the heuristic EMA update
            moved = aepd_gradient_step(state, xi, epsilons).params
            changes = {
                name: getattr(nxt.params, name) + getattr(moved, name) - getattr(state.params, name)
                for name, eps in epsilons.items()
                if eps
            }
            nxt = replace(nxt, params=_clamped(nxt.params, changes, alpha_mode))
        state = nxt
    return state, terms, ys


def _clamped(p: AepdParams, changes: dict, alpha_mode: str) -> AepdParams:
    vals = {**p.__dict__, **changes}
    for name in ("sigma_l", "sigma_r"):
        vals[name] = max(vals[name], 1e-12 * getattr(p, name))
    for name in ("kappa_l", "kappa_r"):
        vals[name] = min(max(vals[name], 0.3), 4.0)
    if alpha_mode == "continuity":
        vals["alpha"] = continuity_alpha(vals["kappa_l"], vals["kappa_r"], vals["sigma_l"], vals["sigma_r"])
    else:
        vals["alpha"] = min(max(vals["alpha"], 1e-6), 1.0 - 1e-6)
    return AepdParams(**vals)
