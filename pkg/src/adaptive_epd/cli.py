"""Command-line interface.

Every output file starts with the fully resolved run configuration, so a
result can be reproduced from the file alone.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .adaptive import RateConfig
from .data import (
    ReturnSeries,
    gen_epd_series,
    gen_garch_series,
    gen_regime_switching,
    load_price_csv,
    log_returns,
    read_returns_csv,
)
from .epd import EpdParams
from .evaluation import (
    SWEEP_MODES,
    compare_models,
    cdf_normalize,
    eval_adaptive,
    eval_garch,
    eval_static,
    evaluate,
    kappa_grid,
    ks_statistic,
    parse_model_spec,
    sweep_kappa,
)
from .exceptions import EpdError
from .garch import GarchParams

log = logging.getLogger("adaptive_epd")

THREADS_ENV = "ADAPTIVE_EPD_THREADS"
DEFAULT_SEED = 0


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _grid(text: str) -> np.ndarray:
    try:
        parts = [float(p) for p in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    try:
        return kappa_grid(*parts)
    except EpdError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _schedule(text: str) -> list[tuple[int, float]]:
    try:
        blocks = [b.split(":") for b in text.split(",") if b.strip()]
        return [(int(n), float(s)) for n, s in blocks]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected len:sigma[,len:sigma...], got {text!r}")


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _rate(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return v


# --- argument groups -------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--input", help="price CSV; log-returns are taken")
    src.add_argument("--returns", help="returns file, one value per line")
    g.add_argument("--column", help="price column name or 0-based index (default: close or last)")
    g.add_argument("--date-column", help="date column name or index")
    g.add_argument("--skip-invalid", action="store_true", help="drop unparseable price rows")


def _add_output(p: argparse.ArgumentParser, formats=("json", "csv")) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", help="output file (default: stdout)")
    g.add_argument("--format", choices=formats, default=formats[0])


def _add_rates(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("adaptive estimator")
    g.add_argument("--eta", type=_rate, default=0.94, help="scale retention rate")
    g.add_argument("--nu", type=_rate, default=0.997, help="location retention rate")
    g.add_argument("--adapt-mu", action="store_true", help="adapt the location by EMA")
    g.add_argument("--sigma1", type=_positive, default=0.01, help="initial scale")
    g.add_argument("--mu1", type=float, default=0.0, help="initial location")
    g.add_argument("--debias", action="store_true", help="renormalize EMA weights to sum to one")
    g.add_argument("--mu-convention", choices=("retention", "weight"), default="retention")


def _rates_from(args) -> RateConfig:
    kw = dict(eta=args.eta, nu=args.nu, debias=args.debias, mu_convention=args.mu_convention)
    for name in ("epsilon_eta", "epsilon_kappa", "kappa_mode", "burn_in"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    return RateConfig(**kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-epd",
        description="Static and adaptive exponential power distribution estimation",
    )
    parser.add_argument("--config", help="JSON or YAML file with option defaults")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or CPU count)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("returns", help="convert a price CSV into log-returns")
    _add_input(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("fit-static", help="static MLE at fixed kappa, or full MLE")
    _add_input(p)
    p.add_argument("--kappa", type=_positive, help="shape; omitted = fit kappa too")
    p.add_argument("--holdout", type=float, help="evaluate on this trailing fraction only")
    _add_output(p)
    p.set_defaults(func=cmd_fit_static)

    p = sub.add_parser("fit-adaptive", help="walk-forward adaptive EPD evaluation")
    _add_input(p)
    p.add_argument("--kappa", type=_positive, help="shape (required here or in --config)")
    _add_rates(p)
    p.add_argument("--kappa-mode", choices=("fixed", "moments", "gradient"), default="fixed")
    p.add_argument("--epsilon-eta", type=float, default=0.0, help="learning rate for eta")
    p.add_argument("--epsilon-kappa", type=float, default=0.0, help="learning rate for kappa")
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--trajectory", help="write per-step t,sigma,mu CSV here")
    _add_output(p)
    p.set_defaults(func=cmd_fit_adaptive)

    p = sub.add_parser("sweep", help="log-likelihood as a function of kappa")
    _add_input(p)
    p.add_argument("--mode", choices=SWEEP_MODES, default="adaptive")
    p.add_argument("--kappa", type=_grid, default=_grid("0.5:2.5:0.05"),
                   help="grid start:stop:step (default 0.5:2.5:0.05)")
    _add_rates(p)
    p.add_argument("--eta-range", type=float, nargs=2, default=(0.85, 0.999),
                   metavar=("LO", "HI"), help="eta search range for adaptive-optimized")
    p.add_argument("--refine", action="store_true", help="polish argmax kappa by golden section")
    _add_output(p, ("csv", "json"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("garch", help="fit GARCH(1,1) and report its walk-forward log-likelihood")
    _add_input(p)
    _add_output(p)
    p.set_defaults(func=cmd_garch)

    p = sub.add_parser("simulate", help="write a synthetic return series")
    p.add_argument("--model", choices=("epd", "regime", "garch"), default="epd")
    p.add_argument("--kappa", type=_positive, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=_positive, default=1.0)
    p.add_argument("--schedule", type=_schedule, default=None,
                   help="regime blocks len:sigma[,len:sigma...]")
    p.add_argument("--omega", type=_positive, default=1e-6)
    p.add_argument("--alpha", type=float, default=0.08)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("normalize", help="CDF-transform returns to (0, 1) under a model")
    _add_input(p)
    p.add_argument("--model", default="adaptive:kappa=1.15,adapt_mu=true",
                   help="model spec kind:key=value,... (static, adaptive, garch, aepd)")
    _add_output(p, ("csv", "json"))
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("compare", help="rank several models by mean log-likelihood")
    _add_input(p)
    p.add_argument("--model", action="append", dest="models",
                   help="model spec; repeatable (default: static, adaptive, garch)")
    _add_output(p, ("csv", "json"))
    p.set_defaults(func=cmd_compare)
    return parser


# --- helpers -----------------------------------------------------------------------


def _load_returns(args) -> ReturnSeries:
    if args.returns:
        return read_returns_csv(args.returns)
    if not args.input:
        raise EpdError("one of --input or --returns is required")
    column: Any = args.column
    prices = load_price_csv(args.input, column, args.date_column, args.skip_invalid)
    return log_returns(prices, Path(args.input).stem)


def _resolved(args) -> dict[str, Any]:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "config", "verbose"):
            continue
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def _config_line(args) -> str:
    return "# config: " + json.dumps(_resolved(args), sort_keys=True)


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, result: Any) -> None:
    _emit(args, json.dumps({"config": _resolved(args), "result": result}, indent=2, sort_keys=True) + "\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _csv(args, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_config_line(args) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _report_rows(report):
    return [("model_id", report.model_id), ("mean_loglik", report.mean_loglik), ("n", report.n)] + [
        (k, v) for k, v in report.params.items()
    ]


# --- commands ------------------------------------------------------------------------


def cmd_returns(args) -> None:
    series = _load_returns(args)
    buf = io.StringIO()
    buf.write(_config_line(args) + "\nx\n")
    for v in series.values:
        buf.write(f"{float(v)!r}\n")
    _emit(args, buf.getvalue())


def cmd_fit_static(args) -> None:
    report = eval_static(_load_returns(args), args.kappa, args.holdout)
    if args.format == "json":
        _emit_json(args, report.to_dict())
    else:
        _emit(args, _csv(args, ("key", "value"), _report_rows(report)))


def cmd_fit_adaptive(args) -> None:
    if args.kappa is None:
        raise EpdError("fit-adaptive needs --kappa")
    report = eval_adaptive(
        _load_returns(args), args.kappa, _rates_from(args), args.adapt_mu, args.sigma1, args.mu1
    )
    if args.trajectory:
        traj = report.trajectories
        cols = ["t", "sigma", "mu"] + (["kappa"] if "kappa" in traj else [])
        rows = zip(range(1, report.n + 1), *(traj[c] for c in cols[1:]))
        Path(args.trajectory).write_text(_csv(args, cols, rows))
    if args.format == "json":
        _emit_json(args, report.to_dict())
    else:
        _emit(args, _csv(args, ("key", "value"), _report_rows(report)))


def cmd_sweep(args) -> None:
    curve = sweep_kappa(
        _load_returns(args), args.kappa, args.mode, _rates_from(args), args.adapt_mu,
        args.sigma1, args.mu1, tuple(args.eta_range), args.refine, args.threads,
    )
    for k, msg in curve.failures.items():
        log.warning("kappa=%g failed: %s", k, msg)
    if args.format == "json":
        _emit_json(args, curve.to_dict())
        return
    header = ["kappa", "loglik"] + (["eta"] if curve.etas is not None else [])
    cols = [curve.kappas, curve.logliks] + ([curve.etas] if curve.etas is not None else [])
    rows = [[None if not np.isfinite(v) else v for v in r] for r in zip(*cols)]
    text = _csv(args, header, rows)
    text = text.replace("\n", f"\n# argmax_kappa: {curve.argmax_kappa!r}\n# max_loglik: {curve.max_loglik!r}\n", 1)
    _emit(args, text)


def cmd_garch(args) -> None:
    report = eval_garch(_load_returns(args))
    if args.format == "json":
        _emit_json(args, report.to_dict())
    else:
        _emit(args, _csv(args, ("key", "value"), _report_rows(report)))


def cmd_simulate(args) -> None:
    if args.n < 1:
        raise EpdError("--n must be >= 1")
    if args.model == "epd":
        series = gen_epd_series(EpdParams(args.kappa, args.mu, args.sigma), args.n, args.seed)
    elif args.model == "regime":
        schedule = args.schedule or [(500, 0.01), (500, 0.03)]
        series = gen_regime_switching(args.kappa, schedule, args.seed)
    else:
        series = gen_garch_series(GarchParams(args.omega, args.alpha, args.beta, args.mu), args.n, args.seed)
    buf = io.StringIO()
    buf.write(_config_line(args) + "\nx\n")
    for v in series.values:
        buf.write(f"{float(v)!r}\n")
    _emit(args, buf.getvalue())


def cmd_normalize(args) -> None:
    series = _load_returns(args)
    report = evaluate(series, parse_model_spec(args.model))
    y = cdf_normalize(series, report)
    ks = ks_statistic(y)
    if args.format == "json":
        _emit_json(args, {"model": report.to_dict(), "ks_statistic": ks, "y": y.tolist()})
        return
    text = _csv(args, ("y",), ((v,) for v in y))
    text = text.replace("\n", f"\n# ks_statistic: {ks!r}\n", 1)
    _emit(args, text)


def cmd_compare(args) -> None:
    specs = args.models or ["static", "adaptive:kappa=1", "garch"]
    reports = compare_models(_load_returns(args), specs, args.threads)
    if args.format == "json":
        _emit_json(args, [r.to_dict() for r in reports])
        return
    rows = [(i + 1, r.model_id, r.mean_loglik if r.error is None else None, r.n, r.error or "")
            for i, r in enumerate(reports)]
    _emit(args, _csv(args, ("rank", "model_id", "mean_loglik", "n", "error"), rows))


# --- entry point ------------------------------------------------------------------------


def _load_config(path: str) -> dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise EpdError(f"config file not found: {p}")
    text = p.read_text()
    if p.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise EpdError(f"config file {p} must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        try:
            cfg = _load_config(pre.config)
        except (EpdError, ValueError) as exc:
            print(f"adaptive-epd: error: {exc}", file=sys.stderr)
            return 2
        sub = parser._subparsers._group_actions[0].choices[pre.command]
        known = {a.dest: a for a in sub._actions}
        for key, val in cfg.items():
            if key not in known and key != "threads":
                print(f"adaptive-epd: error: unknown config key {key!r}", file=sys.stderr)
                return 2
            action = known.get(key)
            if action is not None and action.type is not None and isinstance(val, str):
                val = action.type(val)
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "threads"})
        if "threads" in cfg:
            parser.set_defaults(threads=cfg["threads"])
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = _default_threads()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except BrokenPipeError:
        # output piped into e.g. head
        sys.stderr.close()
        return 0
    except (EpdError, OSError) as exc:
        print(f"adaptive-epd: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
