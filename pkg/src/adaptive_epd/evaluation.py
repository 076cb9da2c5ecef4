"""Walk-forward evaluation, kappa sweeps, model comparison and CDF normalization.

The score is the mean log-likelihood in nats per observation,
(1/n) sum_T ln rho_T(x_T), where rho_T uses parameters estimated from
x_1 .. x_{T-1} (adaptive and GARCH models) or from the whole series (static).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from ._optimize import golden_section
from .adaptive import RateConfig, adaptive_logpdf_terms, adaptive_step, init_state
from .aepd import aepd_init_state, run_aepd
from .epd import cdf, log_pdf
from .exceptions import DivergenceError, DomainError, EpdError, InsufficientDataError
from .garch import garch_filter, garch_fit
from .special import reg_upper_gamma
from .static import DEFAULT_KAPPA_RANGE, WeightedSample, fit_fixed_kappa, fit_full

__all__ = [
    "EvalReport",
    "SweepCurve",
    "ModelSpec",
    "parse_model_spec",
    "eval_static",
    "eval_adaptive",
    "eval_garch",
    "eval_aepd",
    "evaluate",
    "sweep_kappa",
    "compare_models",
    "cdf_normalize",
    "ks_statistic",
    "kappa_grid",
    "SWEEP_MODES",
]

SWEEP_MODES = ("static", "adaptive", "adaptive-optimized")
DEFAULT_ETA_RANGE = (0.85, 0.999)


@dataclass
class EvalReport:
    model_id: str
    mean_loglik: float
    params: dict[str, Any]
    n: int
    trajectories: dict[str, np.ndarray] | None = None
    terms: np.ndarray | None = field(default=None, repr=False)
    cdf_values: np.ndarray | None = field(default=None, repr=False)
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    def to_dict(self, with_trajectories: bool = False) -> dict[str, Any]:
        out = {
            "model_id": self.model_id,
            "mean_loglik": None if not math.isfinite(self.mean_loglik) else self.mean_loglik,
            "n": self.n,
            "params": _jsonable(self.params),
        }
        if self.flags:
            out["flags"] = list(self.flags)
        if self.error:
            out["error"] = self.error
        if with_trajectories and self.trajectories:
            out["trajectories"] = {k: v.tolist() for k, v in self.trajectories.items()}
        return out


@dataclass
class SweepCurve:
    kappas: np.ndarray
    logliks: np.ndarray  # NaN where the evaluation failed
    argmax_kappa: float
    max_loglik: float
    mode: str
    etas: np.ndarray | None = None  # per-kappa optimized eta (adaptive-optimized)
    failures: dict[float, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "mode": self.mode,
            "argmax_kappa": self.argmax_kappa,
            "max_loglik": self.max_loglik,
            "kappa": self.kappas.tolist(),
            "loglik": [None if not np.isfinite(v) else float(v) for v in self.logliks],
        }
        if self.etas is not None:
            out["eta"] = self.etas.tolist()
        if self.failures:
            out["failures"] = {repr(k): v for k, v in self.failures.items()}
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _values(returns) -> np.ndarray:
    return np.asarray(getattr(returns, "values", returns), dtype=float)


def kappa_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid start, start + step, ..., stop (rounded to 12 digits)."""
    if step <= 0 or stop < start:
        raise DomainError(f"invalid grid {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


# --- single-model evaluations -------------------------------------------------


def eval_static(returns, kappa: float | None = None, holdout: float | None = None,
                kappa_range=DEFAULT_KAPPA_RANGE) -> EvalReport:
    """Static MLE evaluation; in-sample unless ``holdout`` (a trailing fraction) is set.

    ``kappa=None`` fits kappa as well.
    """
    x = _values(returns)
    if x.size < 10:
        raise InsufficientDataError(f"static evaluation needs n >= 10, got {x.size}")
    fit_x, eval_x = x, x
    if holdout is not None:
        if not 0 < holdout < 1:
            raise DomainError("holdout must be a fraction in (0, 1)")
        cut = int(round(x.size * (1.0 - holdout)))
        fit_x, eval_x = x[:cut], x[cut:]
        if fit_x.size < 10 or eval_x.size < 1:
            raise InsufficientDataError("holdout split leaves too little data")
    sample = WeightedSample.uniform(fit_x)
    fit = fit_full(sample, kappa_range) if kappa is None else fit_fixed_kappa(sample, kappa)
    p = fit.params
    terms = log_pdf(p, eval_x)
    model_id = "static:kappa=" + ("mle" if kappa is None else f"{kappa:g}")
    return EvalReport(
        model_id,
        float(terms.mean()),
        {"kappa": p.kappa, "mu": p.mu, "sigma": p.sigma, "holdout": holdout},
        int(eval_x.size),
        terms=terms,
        cdf_values=cdf(p, eval_x),
    )


def _adaptive_cdf(x, kappa, sigma, mu):
    u = np.abs(x - mu) / sigma
    half_tail = 0.5 * reg_upper_gamma(1.0 / kappa, u**kappa / kappa)
    return np.where(x < mu, half_tail, 1.0 - half_tail)


def eval_adaptive(
    returns,
    kappa: float,
    rates: RateConfig | None = None,
    adapt_mu: bool = False,
    sigma_1: float = 0.01,
    mu_1: float = 0.0,
    record: bool = True,
    vectorized: bool | None = None,
) -> EvalReport:
    """One-step-ahead evaluation of the adaptive EPD.

    Fixed kappa and fixed rates use the vectorized filter; kappa or eta
    adaptation runs the stepwise engine.  Raises :class:`DivergenceError`
    when the scale collapses (the series never deviates from the location).
    """
    x = _values(returns)
    if x.size < 2:
        raise InsufficientDataError("adaptive evaluation needs n >= 2")
    rates = replace(rates or RateConfig(), adapt_mu=adapt_mu)
    simple = rates.kappa_mode == "fixed" and rates.epsilon_eta == 0
    if vectorized is None:
        vectorized = simple
    if vectorized and not simple:
        raise DomainError("kappa/eta adaptation requires the stepwise engine")

    flags: list[str] = []
    if vectorized:
        terms, sigma, mu = adaptive_logpdf_terms(x, kappa, rates, sigma_1, mu_1, adapt_mu)
        kappas = None
        final = {"eta": rates.eta, "kappa": kappa}
    else:
        state = init_state(sigma_1, mu_1, kappa, rates)
        kap = np.empty(x.size)
        terms, sigma, mu = np.empty(x.size), np.empty(x.size), np.empty(x.size)
        for i, xi in enumerate(x):
            sigma[i], mu[i], kap[i] = state.sigma, state.mu_hat, state.kappa
            state, terms[i] = adaptive_step(state, float(xi), rates)
        kappas = kap
        flags.extend(state.flags)
        final = {"eta": state.eta, "kappa": state.kappa}

    if np.all(x == mu) or not np.all(np.isfinite(terms)) or np.any(sigma <= 0):
        raise DivergenceError(
            "adaptive scale collapsed: the series does not deviate from the location estimate"
        )
    model_id = f"adaptive:kappa={kappa:g},eta={rates.eta:g}" + (
        f",nu={rates.nu:g}" if adapt_mu else ",mu=fixed"
    )
    traj = None
    if record:
        traj = {"sigma": sigma, "mu": mu}
        if kappas is not None:
            traj["kappa"] = kappas
    kap_arr = kappas if kappas is not None else kappa
    return EvalReport(
        model_id,
        float(terms.mean()),
        {
            "kappa": kappa, "eta": rates.eta, "nu": rates.nu, "adapt_mu": adapt_mu,
            "sigma_1": sigma_1, "mu_1": mu_1, "debias": rates.debias,
            "mu_convention": rates.mu_convention, "kappa_mode": rates.kappa_mode,
            "final_eta": final["eta"], "final_kappa": final["kappa"],
        },
        int(x.size),
        trajectories=traj,
        terms=terms,
        cdf_values=_adaptive_cdf(x, kap_arr, sigma, mu),
        flags=flags,
    )


def eval_garch(returns) -> EvalReport:
    x = _values(returns)
    fit = garch_fit(x)
    res = garch_filter(fit.params, x, fit.sigma2_init)
    sigma = np.sqrt(res.sigma2)
    p = fit.params
    return EvalReport(
        "garch(1,1)",
        res.mean_loglik,
        {"omega": p.omega, "alpha": p.alpha, "beta": p.beta, "mu": p.mu,
         "sigma2_init": fit.sigma2_init},
        int(x.size),
        trajectories={"sigma": sigma, "mu": np.full(x.size, p.mu)},
        terms=res.terms,
        # a Gaussian is the kappa = 2 EPD with the same sigma
        cdf_values=_adaptive_cdf(x, 2.0, sigma, p.mu),
        flags=[] if fit.converged else ["optimizer_not_converged"],
    )


def eval_aepd(
    returns,
    kappa_l: float,
    kappa_r: float,
    rates: RateConfig | None = None,
    adapt_mu: bool = False,
    sigma_1: float = 0.01,
    mu_1: float = 0.0,
    alpha_mode: str = "continuity",
) -> EvalReport:
    x = _values(returns)
    if x.size < 2:
        raise InsufficientDataError("adaptive evaluation needs n >= 2")
    rates = replace(rates or RateConfig(), adapt_mu=adapt_mu)
    state = aepd_init_state(kappa_l, kappa_r, sigma_1, mu_1, alpha_mode)
    final, terms, ys = run_aepd(x, state, rates, alpha_mode)
    if not np.all(np.isfinite(terms)):
        raise DivergenceError("AEPD log-likelihood is not finite")
    p = final.params
    return EvalReport(
        f"aepd:kappa_l={kappa_l:g},kappa_r={kappa_r:g},eta={rates.eta:g},alpha={alpha_mode}",
        float(terms.mean()),
        {"kappa_l": kappa_l, "kappa_r": kappa_r, "eta": rates.eta, "nu": rates.nu,
         "adapt_mu": adapt_mu, "alpha_mode": alpha_mode, "xi": rates.xi,
         "final_sigma_l": p.sigma_l, "final_sigma_r": p.sigma_r, "final_alpha": p.alpha},
        int(x.size),
        terms=terms,
        cdf_values=ys,
    )


# --- model specs ---------------------------------------------------------------

_KINDS = ("static", "adaptive", "garch", "aepd")


@dataclass(frozen=True)
class ModelSpec:
    """A model to evaluate: ``kind`` plus keyword options.

    String form ``kind:key=value,key=value``, e.g. ``adaptive:kappa=1.15,eta=0.94,adapt_mu=true``.
    """

    kind: str
    options: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}; expected one of {_KINDS}")

    @property
    def opts(self) -> dict[str, Any]:
        return dict(self.options)

    def __str__(self):
        if not self.options:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v}" for k, v in self.options)


def _coerce(v: str):
    low = v.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v.strip()


def parse_model_spec(text: str) -> ModelSpec:
    kind, _, rest = text.strip().partition(":")
    opts = []
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"bad option {item!r} in model spec {text!r}")
        opts.append((key.strip(), _coerce(val)))
    return ModelSpec(kind.strip(), tuple(opts))


_RATE_KEYS = ("eta", "nu", "epsilon_eta", "epsilon_kappa", "debias", "xi", "mu_convention",
              "kappa_mode", "burn_in")
_OPTION_KEYS = {
    "static": {"kappa", "holdout"},
    "adaptive": {"kappa", "adapt_mu", "sigma_1", "mu_1", *_RATE_KEYS},
    "garch": set(),
    "aepd": {"kappa_l", "kappa_r", "adapt_mu", "sigma_1", "mu_1", "alpha_mode", *_RATE_KEYS},
}


def evaluate(returns, spec: ModelSpec | str, base_rates: RateConfig | None = None) -> EvalReport:
    """Evaluate one model spec on a series."""
    if isinstance(spec, str):
        spec = parse_model_spec(spec)
    o = spec.opts
    unknown = set(o) - _OPTION_KEYS[spec.kind]
    if unknown:
        raise DomainError(f"unknown options for {spec.kind}: {sorted(unknown)}")
    rate_kw = {k: o.pop(k) for k in list(o) if k in _RATE_KEYS}
    rates = replace(base_rates or RateConfig(), **rate_kw)
    if spec.kind == "static":
        report = eval_static(returns, o.pop("kappa", None), o.pop("holdout", None))
    elif spec.kind == "adaptive":
        report = eval_adaptive(
            returns, float(o.pop("kappa", 1.0)), rates, bool(o.pop("adapt_mu", False)),
            float(o.pop("sigma_1", 0.01)), float(o.pop("mu_1", 0.0)),
        )
    elif spec.kind == "garch":
        report = eval_garch(returns)
    else:
        report = eval_aepd(
            returns, float(o.pop("kappa_l", 1.0)), float(o.pop("kappa_r", 1.0)), rates,
            bool(o.pop("adapt_mu", False)), float(o.pop("sigma_1", 0.01)),
            float(o.pop("mu_1", 0.0)), str(o.pop("alpha_mode", "continuity")),
        )
    report.model_id = str(spec)
    return report


def compare_models(returns, specs: Sequence[ModelSpec | str], threads: int = 1) -> list[EvalReport]:
    """Evaluate every spec and rank by mean log-likelihood (best first).

    Failures stay in the list with ``error`` set and are ranked last.
    """
    if not specs:
        raise DomainError("need at least one model spec")
    parsed = [parse_model_spec(s) if isinstance(s, str) else s for s in specs]

    def run(spec):
        try:
            return evaluate(returns, spec)
        except EpdError as exc:
            return EvalReport(str(spec), float("nan"), {}, len(_values(returns)),
                              error=f"{type(exc).__name__}: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            reports = list(pool.map(run, parsed))
    else:
        reports = [run(s) for s in parsed]
    return sorted(
        reports,
        key=lambda r: (not math.isfinite(r.mean_loglik),
                       -r.mean_loglik if math.isfinite(r.mean_loglik) else 0.0, r.model_id),
    )


# --- kappa sweeps ----------------------------------------------------------------


def _adaptive_score(x, kappa, rates, adapt_mu, sigma_1, mu_1) -> float:
    terms, _, _ = adaptive_logpdf_terms(x, kappa, rates, sigma_1, mu_1, adapt_mu)
    return float(terms.mean())


def sweep_kappa(
    returns,
    kappas: Sequence[float],
    mode: str = "adaptive",
    rates: RateConfig | None = None,
    adapt_mu: bool = False,
    sigma_1: float = 0.01,
    mu_1: float = 0.0,
    eta_range: tuple[float, float] = DEFAULT_ETA_RANGE,
    refine: bool = False,
    threads: int = 1,
) -> SweepCurve:
    """Mean log-likelihood as a function of kappa.

    ``adaptive-optimized`` picks eta per kappa by golden section on ``eta_range``.
    With ``refine`` the argmax is polished by golden section between the grid
    neighbours of the best grid point.
    """
    if mode not in SWEEP_MODES:
        raise DomainError(f"mode must be one of {SWEEP_MODES}")
    grid = np.asarray(kappas, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
        raise DomainError("kappa grid must be nonempty, positive and increasing")
    x = _values(returns)
    rates = rates or RateConfig()

    def cell(k: float) -> tuple[float, float | None]:
        if mode == "static":
            return eval_static(x, k).mean_loglik, None
        if mode == "adaptive":
            return eval_adaptive(x, k, rates, adapt_mu, sigma_1, mu_1, record=False).mean_loglik, None
        eta, neg = golden_section(
            lambda e: -_adaptive_score(x, k, replace(rates, eta=e), adapt_mu, sigma_1, mu_1),
            eta_range[0], eta_range[1], tol=1e-5,
        )
        return -neg, eta

    def safe(k):
        try:
            ll, eta = cell(float(k))
            if not math.isfinite(ll):
                raise DivergenceError("non-finite log-likelihood")
            return ll, eta, None
        except EpdError as exc:
            return float("nan"), None, f"{type(exc).__name__}: {exc}"

    if threads > 1 and grid.size > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(safe, grid))
    else:
        results = [safe(k) for k in grid]

    lls = np.array([r[0] for r in results])
    failures = {float(k): r[2] for k, r in zip(grid, results) if r[2]}
    etas = np.array([np.nan if r[1] is None else r[1] for r in results]) if mode == "adaptive-optimized" else None
    if np.all(np.isnan(lls)):
        return SweepCurve(grid, lls, float("nan"), float("nan"), mode, etas, failures)
    i = int(np.nanargmax(lls))
    best_k, best_ll = float(grid[i]), float(lls[i])
    if refine and grid.size > 1:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]

        def neg_ll(k):
            ll = safe(k)[0]
            return -ll if math.isfinite(ll) else np.inf

        k_ref, neg = golden_section(neg_ll, float(lo), float(hi), tol=1e-5)
        if -neg > best_ll:
            best_k, best_ll = float(k_ref), float(-neg)
    return SweepCurve(grid, lls, best_k, best_ll, mode, etas, failures)


# --- normalization and goodness of fit --------------------------------------------


def cdf_normalize(returns, spec: ModelSpec | str | EvalReport) -> np.ndarray:
    """y_T = CDF_T(x_T) under each step's pre-update parameters, clipped into (0, 1)."""
    report = spec if isinstance(spec, EvalReport) else evaluate(returns, spec)
    y = np.asarray(report.cdf_values, dtype=float)
    tiny = np.finfo(float).tiny
    return np.clip(y, tiny, np.nextafter(1.0, 0.0))


def ks_statistic(y: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``y`` and U(0, 1)."""
    y = np.sort(np.asarray(y, dtype=float))
    if y.size == 0:
        raise DomainError("ks_statistic needs a nonempty sample")
    if np.any((y <= 0) | (y >= 1)):
        raise DomainError("values must lie in the open interval (0, 1)")
    n = y.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - y), np.max(y - (i - 1) / n)))
