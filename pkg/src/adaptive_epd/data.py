"""Price loading, log-returns and synthetic series generators."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .epd import EpdParams, sample
from .exceptions import DataError, DomainError, InsufficientDataError
from .garch import GarchParams, simulate_garch

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "load_price_csv",
    "log_returns",
    "gen_epd_series",
    "gen_regime_switching",
    "gen_garch_series",
    "write_returns_csv",
    "read_returns_csv",
]

log = logging.getLogger(__name__)

_DATE_NAMES = ("date", "timestamp", "time", "datetime", "day")
_PRICE_NAMES = ("close", "adj close", "adj_close", "price", "value", "close/last")


@dataclass(frozen=True)
class PriceSeries:
    values: np.ndarray
    timestamps: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(~(v > 0)):
            raise DataError("prices must be strictly positive")
        if self.timestamps is not None:
            if len(self.timestamps) != v.size:
                raise DataError("timestamps and values differ in length")
            if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
                raise DataError("timestamps must be strictly increasing")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    source_id: str = ""
    latent: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self):
        return self.values.size


def _parse_float(text: str) -> float | None:
    t = text.strip().replace("$", "").replace(",", "")
    try:
        v = float(t)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_date(text: str):
    t = text.strip()
    for fmt in ("%Y-%m-%d", "%m/%d/%Y", "%Y/%m/%d", "%d.%m.%Y", "%Y%m%d"):
        try:
            return datetime.strptime(t, fmt).date()
        except ValueError:
            pass
    try:
        return datetime.fromisoformat(t)
    except ValueError:
        return None


def _rows(path: Path) -> list[list[str]]:
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return [r for r in csv.reader(lines)]


def load_price_csv(
    path: str | Path,
    column: str | int | None = None,
    date_column: str | int | None = None,
    skip_invalid: bool = False,
) -> PriceSeries:
    """Read a price column from a comma-separated file.

    The first row is treated as a header when none of its fields is numeric.
    ``column`` is a header name or 0-based index; by default a column named like
    "close" is used, otherwise the last column.  Lines starting with ``#`` are
    ignored.  Rows whose price does not parse, or is not positive, raise
    :class:`DataError` listing the row numbers, unless ``skip_invalid`` is set.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"price file not found: {path}")
    rows = _rows(path)
    if not rows:
        raise DataError(f"{path}: no data rows")

    first = rows[0]
    header: list[str] | None = None
    if all(_parse_float(c) is None for c in first):
        header = [h.strip() for h in first]
        rows = rows[1:]

    def resolve(col, names, default_last):
        if col is None:
            if header is not None:
                lowered = [h.lower() for h in header]
                for name in names:
                    if name in lowered:
                        return lowered.index(name)
            return (len(first) - 1) if default_last else None
        if isinstance(col, str) and col.lstrip("-").isdigit() and (header is None or col not in header):
            col = int(col)
        if isinstance(col, int):
            idx = int(col)
            if not -len(first) <= idx < len(first):
                raise DataError(f"{path}: column index {idx} out of range ({len(first)} columns)")
            return idx % len(first)
        if header is None or col not in header:
            raise DataError(f"{path}: column {col!r} not found; header is {header}")
        return header.index(col)

    pidx = resolve(column, _PRICE_NAMES, True)
    didx = resolve(date_column, _DATE_NAMES, False) if header is not None or date_column is not None else None

    values, stamps, bad = [], [], []
    offset = 2 if header is not None else 1
    for i, row in enumerate(rows):
        rowno = i + offset
        v = _parse_float(row[pidx]) if pidx < len(row) else None
        if v is None or v <= 0:
            bad.append(rowno)
            continue
        values.append(v)
        if didx is not None:
            stamps.append(_parse_date(row[didx]) if didx < len(row) else None)

    if bad:
        msg = f"{path}: {len(bad)} rows with missing or non-positive prices (rows {bad[:20]})"
        if not skip_invalid:
            raise DataError(msg)
        log.warning("skipping %s", msg)
    if not values:
        raise DataError(f"{path}: no valid prices")

    timestamps = None
    if didx is not None and stamps and all(s is not None for s in stamps):
        if all(b < a for a, b in zip(stamps, stamps[1:])):
            # newest-first downloads
            stamps.reverse()
            values.reverse()
        timestamps = tuple(stamps)
    return PriceSeries(np.array(values), timestamps)


def log_returns(p: PriceSeries, source_id: str = "") -> ReturnSeries:
    """x_t = ln v_{t+1} - ln v_t."""
    if len(p) < 2:
        raise InsufficientDataError("need at least 2 prices for a return")
    return ReturnSeries(np.diff(np.log(p.values)), source_id)


def gen_epd_series(params: EpdParams, n: int, seed=None) -> ReturnSeries:
    if n < 1:
        raise DomainError("n must be >= 1")
    return ReturnSeries(sample(params, n, seed), f"epd(kappa={params.kappa},sigma={params.sigma})")


def gen_regime_switching(
    kappa: float, schedule: Sequence[tuple[int, float]], seed=None
) -> ReturnSeries:
    """Concatenated zero-mean EPD blocks; ``latent`` holds the true sigma per step."""
    if not schedule:
        raise DomainError("empty sigma schedule")
    rng = np.random.default_rng(seed)
    parts, sig = [], []
    for length, sigma in schedule:
        if sigma <= 0 or length < 1:
            raise DomainError(f"invalid block ({length}, {sigma})")
        parts.append(sample(EpdParams(kappa, 0.0, sigma), int(length), rng))
        sig.append(np.full(int(length), float(sigma)))
    return ReturnSeries(np.concatenate(parts), f"regime(kappa={kappa})", np.concatenate(sig))


def gen_garch_series(p: GarchParams, n: int, seed=None) -> ReturnSeries:
    x, s2 = simulate_garch(p, n, seed)
    return ReturnSeries(x, f"garch(omega={p.omega},alpha={p.alpha},beta={p.beta})", s2)


def write_returns_csv(
    series: ReturnSeries, path: str | Path, header: bool = True, comments: Iterable[str] = ()
) -> None:
    with Path(path).open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        if header:
            fh.write("x\n")
        for v in series.values:
            fh.write(f"{float(v)!r}\n")


def read_returns_csv(path: str | Path, source_id: str | None = None) -> ReturnSeries:
    """Read one value per line, with an optional ``x`` header and ``#`` comments."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"returns file not found: {path}")
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#") or (not values and s.lower() == "x"):
            continue
        v = _parse_float(s.split(",")[-1])
        if v is None:
            raise DataError(f"{path}: line {lineno} is not a number: {s!r}")
        values.append(v)
    return ReturnSeries(np.array(values), source_id or path.stem)
