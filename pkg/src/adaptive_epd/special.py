"""Special functions: log-gamma, regularized incomplete gamma, its inverse, digamma.

All functions accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError

__all__ = [
    "ln_gamma",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "inv_reg_lower_gamma",
    "inv_reg_upper_gamma",
    "digamma",
]

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 2000


def _scalar_or_array(out, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def _ln_gamma_scalar(a: float) -> float:
    if not a > 0:
        raise DomainError("ln_gamma requires a > 0")
    z = a if a < 0.5 else a - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    lg = _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)
    return lg - math.log(a) if a < 0.5 else lg


def _digamma_scalar(x: float) -> float:
    if not x > 0:
        raise DomainError("digamma requires a > 0")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (
        1.0 / 12
        - inv2 * (1.0 / 120
        - inv2 * (1.0 / 252
        - inv2 * (1.0 / 240
        - inv2 * (1.0 / 132
        - inv2 * (691.0 / 32760
        - inv2 / 12.0)))))
    )
    return math.log(x) - 0.5 / x - series + shift


def ln_gamma(a):
    """Natural log of the gamma function for a > 0."""
    if isinstance(a, (float, int)):
        return _ln_gamma_scalar(float(a))
    a_arr = np.asarray(a, dtype=float)
    if np.any(~(a_arr > 0)):
        raise DomainError("ln_gamma requires a > 0")
    # ln G(a) = ln G(a + 1) - ln a keeps the Lanczos argument >= 1
    small = a_arr < 0.5
    z = np.where(small, a_arr, a_arr - 1.0)  # evaluate ln G(z + 1)
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    lg = _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)
    out = np.where(small, lg - np.log(a_arr), lg)
    return _scalar_or_array(out, a)


def digamma(a):
    """Digamma function psi(a) = d/da ln Gamma(a) for a > 0."""
    if isinstance(a, (float, int)):
        return _digamma_scalar(float(a))
    x = np.array(a, dtype=float, copy=True)
    if np.any(~(x > 0)):
        raise DomainError("digamma requires a > 0")
    shift = np.zeros_like(x)
    # recurrence psi(x) = psi(x + 1) - 1/x until x >= 10
    while True:
        low = x < 10.0
        if not np.any(low):
            break
        shift = np.where(low, shift - 1.0 / np.where(low, x, 1.0), shift)
        x = np.where(low, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = inv2 * (
        1.0 / 12
        - inv2 * (1.0 / 120
        - inv2 * (1.0 / 252
        - inv2 * (1.0 / 240
        - inv2 * (1.0 / 132
        - inv2 * (691.0 / 32760
        - inv2 / 12.0)))))
    )
    out = np.log(x) - 0.5 / x - series + shift
    return _scalar_or_array(out, a)


def _log_prefactor(a, z):
    # ln(z^a e^-z / Gamma(a)); z > 0
    return a * np.log(z) - z - ln_gamma(a)


def _series_p(a, z):
    """Lower regularized gamma by power series; good for z < a + 1."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap = ap + 1.0
        term = np.where(active, term * z / ap, term)
        total = np.where(active, total + term, total)
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return total * np.exp(_log_prefactor(a, z))


def _cf_q(a, z):
    """Upper regularized gamma by modified Lentz continued fraction; z >= a + 1."""
    b = z + 1.0 - a
    c = np.full(a.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(_log_prefactor(a, z)) * h


def _pq_scalar(a: float, z: float) -> tuple[float, float]:
    # same split and iterations as the array path, in plain floats
    if not a > 0:
        raise DomainError("incomplete gamma requires a > 0")
    if not z >= 0:
        raise DomainError("incomplete gamma requires z >= 0")
    if z == 0.0:
        return 0.0, 1.0
    if math.isinf(z):
        return 1.0, 0.0
    pref = math.exp(a * math.log(z) - z - _ln_gamma_scalar(a))
    if z < a + 1.0:
        ap, term = a, 1.0 / a
        total = term
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= z / ap
            total += term
            if abs(term) <= abs(total) * _EPS:
                break
        p = min(max(total * pref, 0.0), 1.0)
        return p, 1.0 - p
    b = z + 1.0 - a
    c, d = 1.0 / _TINY, 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            break
    q = min(max(pref * h, 0.0), 1.0)
    return 1.0 - q, q


def _pq(a, z):
    if isinstance(a, (float, int)) and isinstance(z, (float, int)):
        return _pq_scalar(float(a), float(z))
    a_arr, z_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(z, dtype=float)
    )
    if np.any(~(a_arr > 0)):
        raise DomainError("incomplete gamma requires a > 0")
    if np.any(~(z_arr >= 0)):
        raise DomainError("incomplete gamma requires z >= 0")
    a_arr = np.array(a_arr, dtype=float)
    z_arr = np.array(z_arr, dtype=float)
    p = np.zeros(a_arr.shape)
    q = np.ones(a_arr.shape)
    inf = np.isinf(z_arr)
    p[inf], q[inf] = 1.0, 0.0
    use_series = (z_arr > 0) & (z_arr < a_arr + 1.0)
    use_cf = np.isfinite(z_arr) & (z_arr >= a_arr + 1.0)
    if use_series.any():
        ps = _series_p(a_arr[use_series], z_arr[use_series])
        p[use_series] = ps
        q[use_series] = 1.0 - ps
    if use_cf.any():
        qs = _cf_q(a_arr[use_cf], z_arr[use_cf])
        q[use_cf] = qs
        p[use_cf] = 1.0 - qs
    return np.clip(p, 0.0, 1.0), np.clip(q, 0.0, 1.0)


def reg_lower_gamma(a, z):
    """Regularized lower incomplete gamma P(a, z) = gamma(a, z) / Gamma(a)."""
    p, _ = _pq(a, z)
    return _scalar_or_array(p, a, z)


def reg_upper_gamma(a, z):
    """Regularized upper incomplete gamma Q(a, z) = 1 - P(a, z).

    Computed directly in the tail, so small values keep full relative precision.
    """
    _, q = _pq(a, z)
    return _scalar_or_array(q, a, z)


_MIN_LOG_Z = math.log(5e-324)


def _invert(a: float, target: float, upper: bool) -> float:
    """Solve P(a, z) = target (or Q(a, z) = target) for z.

    Safeguarded Newton on ln P (or -ln Q) as a function of w = ln z; both are
    increasing in w and well conditioned in the tails.
    """
    log_target = math.log(target)
    lg = _ln_gamma_scalar(a)

    def resid(w):
        z = math.exp(w)
        p, q = _pq_scalar(a, z)
        # d ln P / d ln z = z rho(z) / P with rho the Gamma(a) density
        log_zdens = a * w - z - lg
        if upper:
            if q <= 0.0:
                return math.inf, math.inf
            return log_target - math.log(q), math.exp(log_zdens - math.log(q))
        if p <= 0.0:
            return -math.inf, math.inf
        return math.log(p) - log_target, math.exp(log_zdens - math.log(p))

    lo, hi = _MIN_LOG_Z, max(0.0, math.log(a))
    while resid(hi)[0] < 0.0:
        lo, hi = hi, hi + max(1.0, abs(hi))
        if hi > 700.0:
            raise DomainError("incomplete gamma inversion failed to bracket")
    if resid(lo)[0] > 0.0:
        # root below the smallest positive double
        return 0.0
    if not upper:
        # P(a, z) ~ z^a / Gamma(a + 1) for small z
        w = (log_target + lg + math.log(a)) / a
        w = w if lo < w < hi else 0.5 * (lo + hi)
    else:
        w = 0.5 * (lo + hi)
    for _ in range(200):
        f, df = resid(w)
        if f == 0.0:
            break
        if f < 0.0:
            lo = w
        else:
            hi = w
        w_new = w - f / df if math.isfinite(df) and df > 0 else 0.5 * (lo + hi)
        if not (lo < w_new < hi):
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) <= 1e-15 * max(1.0, abs(w)) or hi - lo <= 1e-15 * max(1.0, abs(w)):
            w = w_new
            break
        w = w_new
    return math.exp(w)


def _check_prob(p, name):
    if not (0.0 <= p < 1.0):
        raise DomainError(f"{name} must lie in [0, 1), got {p}")


def inv_reg_lower_gamma(a, p):
    """Return z >= 0 with P(a, z) = p, for p in [0, 1)."""
    a_arr, p_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(p, float))
    if np.any(~(a_arr > 0)):
        raise DomainError("inv_reg_lower_gamma requires a > 0")
    out = np.empty(a_arr.shape)
    for idx in np.ndindex(a_arr.shape):
        ai, pi = float(a_arr[idx]), float(p_arr[idx])
        _check_prob(pi, "p")
        if pi == 0.0:
            out[idx] = 0.0
        elif pi <= 0.5:
            out[idx] = _invert(ai, pi, upper=False)
        else:
            out[idx] = _invert(ai, 1.0 - pi, upper=True)
    return _scalar_or_array(out, a, p)


def inv_reg_upper_gamma(a, q):
    """Return z >= 0 with Q(a, z) = q, for q in (0, 1]."""
    a_arr, q_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(q, float))
    if np.any(~(a_arr > 0)):
        raise DomainError("inv_reg_upper_gamma requires a > 0")
    out = np.empty(a_arr.shape)
    for idx in np.ndindex(a_arr.shape):
        ai, qi = float(a_arr[idx]), float(q_arr[idx])
        if not (0.0 < qi <= 1.0):
            raise DomainError(f"q must lie in (0, 1], got {qi}")
        if qi == 1.0:
            out[idx] = 0.0
        elif qi <= 0.5:
            out[idx] = _invert(ai, qi, upper=True)
        else:
            out[idx] = _invert(ai, 1.0 - qi, upper=False)
    return _scalar_or_array(out, a, q)
