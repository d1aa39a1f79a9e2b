"""Monthly price panels: ingestion, imputation and transformations.

A :class:`PricePanel` holds positive price levels on a regular monthly grid
together with an observation mask. Imputation fills masked cells from a
per-column structural time-series model (local level plus dummy seasonal)
estimated by maximum likelihood and evaluated with a fixed-interval smoother.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from tvmi.errors import (
    DegenerateError,
    DomainError,
    IncompleteDataError,
    InsufficientDataError,
    OrderingError,
    ParseError,
    ShapeError,
)
from tvmi.kernels import kalman_filter

Month = tuple[int, int]

_DATE_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})(?:-\d{1,2})?\s*$")


def month_ordinal(month: Month) -> int:
    year, mon = month
    return year * 12 + mon - 1


def month_from_ordinal(k: int) -> Month:
    return (k // 12, k % 12 + 1)


def shift_month(month: Month, steps: int) -> Month:
    return month_from_ordinal(month_ordinal(month) + steps)


def month_labels(start: Month, count: int) -> list[str]:
    """ISO ``YYYY-MM`` labels for ``count`` consecutive months."""
    k0 = month_ordinal(start)
    return ["%04d-%02d" % month_from_ordinal(k0 + i) for i in range(count)]


def _frozen(a, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Aligned monthly price levels with an observation mask.

    Attributes
    ----------
    names : tuple of str
    start : (year, month)
    values : ndarray, shape (T, n)
        Price levels; masked cells hold ``nan``.
    mask : ndarray of bool, shape (T, n)
        ``True`` where the cell is observed.
    """

    names: tuple[str, ...]
    start: Month
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or mask.shape != values.shape:
            raise ShapeError(f"mask shape {mask.shape} != values shape {values.shape}")
        if len(self.names) != values.shape[1]:
            raise ShapeError(f"{len(self.names)} names for {values.shape[1]} columns")
        values = np.where(mask, values, np.nan)
        obs = values[mask]
        if not np.all(np.isfinite(obs)):
            raise DomainError("observed prices must be finite")
        if np.any(obs <= 0):
            t, j = np.argwhere(mask & (np.nan_to_num(values, nan=1.0) <= 0))[0]
            raise DomainError(f"non-positive price {values[t, j]!r} at row {t}, column {self.names[j]!r}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask, dtype=bool))

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def dates(self) -> list[str]:
        return month_labels(self.start, self.nobs)

    @property
    def complete(self) -> bool:
        return bool(self.mask.all())


@dataclass(frozen=True, eq=False)
class LogPanel:
    """Fully observed natural-log price levels."""

    names: tuple[str, ...]
    start: Month
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if len(self.names) != values.shape[1]:
            raise ShapeError(f"{len(self.names)} names for {values.shape[1]} columns")
        if not np.all(np.isfinite(values)):
            raise IncompleteDataError("log panel must be fully observed and finite")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def dates(self) -> list[str]:
        return month_labels(self.start, self.nobs)


@dataclass(frozen=True, eq=False)
class DiffPanel:
    """First differences of a :class:`LogPanel`; ``start`` is one month later."""

    names: tuple[str, ...]
    start: Month
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def dates(self) -> list[str]:
        return month_labels(self.start, self.nobs)


@dataclass(frozen=True, eq=False)
class AnnualSeries:
    """Calendar-year aggregates."""

    years: np.ndarray
    values: np.ndarray
    names: tuple[str, ...] = field(default=("value",))


# ---------------------------------------------------------------- CSV I/O


def _parse_month(text: str, row: int) -> Month:
    m = _DATE_RE.match(text)
    if m is None:
        raise ParseError(f"row {row}: malformed date {text!r} (expected YYYY-MM)")
    year, mon = int(m.group(1)), int(m.group(2))
    if not 1 <= mon <= 12:
        raise ParseError(f"row {row}: month out of range in {text!r}")
    return year, mon


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    if not text:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        return math.nan
    if math.isnan(value):
        return value
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"row {row}, column {column!r}: price must be positive and finite, got {text!r}")
    return value


def ingest_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    date_column: str | None = None,
) -> PricePanel:
    """Read a monthly CSV into a :class:`PricePanel`.

    Parameters
    ----------
    path : path-like
        CSV with a header row. Dates are ISO ``YYYY-MM``; an empty or
        non-numeric cell is treated as missing.
    schema : mapping, optional
        ``{panel_name: csv_column}``. Defaults to every non-date column under
        its own name.
    date_column : str, optional
        Header of the date column; defaults to the first column.

    Raises
    ------
    ParseError
        Malformed date or header (message names the row, 1-based, header = 1).
    DomainError
        Non-positive or infinite price (message names the cell).
    OrderingError
        Dates not strictly increasing.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    date_column = date_column or header[0]
    if date_column not in header:
        raise ParseError(f"date column {date_column!r} not in header {header}")
    date_idx = header.index(date_column)
    if schema is None:
        schema = {h: h for i, h in enumerate(header) if i != date_idx}
    if not schema:
        raise ParseError("no numeric columns")
    col_idx = {}
    for name, src in schema.items():
        if src not in header:
            raise ParseError(f"column {src!r} not in header {header}")
        col_idx[name] = header.index(src)

    months: list[int] = []
    data: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            row = row + [""] * (len(header) - len(row))
        k = month_ordinal(_parse_month(row[date_idx], lineno))
        if months and k <= months[-1]:
            raise OrderingError(f"row {lineno}: date {row[date_idx].strip()!r} does not follow the previous row")
        months.append(k)
        data.append([_parse_cell(row[j], lineno, name) for name, j in col_idx.items()])
    if not months:
        raise InsufficientDataError(f"{path}: no data rows")

    T = months[-1] - months[0] + 1
    values = np.full((T, len(col_idx)), np.nan)
    for k, vals in zip(months, data):
        values[k - months[0]] = vals
    mask = ~np.isnan(values)
    return PricePanel(tuple(col_idx), month_from_ordinal(months[0]), values, mask)


def _fmt(x: float) -> str:
    return "" if x != x else repr(float(x))


def write_csv(
    panel: PricePanel | LogPanel | DiffPanel,
    path: str | Path,
    imputed: np.ndarray | None = None,
) -> None:
    """Write a panel in the ingest layout.

    Floats are written with ``repr`` so a re-ingest is bit-identical. When
    ``imputed`` (bool, shape (T, n)) is given, a sidecar ``<stem>.mask.csv``
    flags imputed cells with 1.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.names])
        for d, row in zip(panel.dates, panel.values):
            w.writerow([d, *(_fmt(v) for v in row)])
    if imputed is not None:
        imputed = np.asarray(imputed, dtype=bool)
        with open(path.with_name(path.stem + ".mask.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", *panel.names])
            for d, row in zip(panel.dates, imputed):
                w.writerow([d, *(int(v) for v in row)])


# ---------------------------------------------------------------- imputation


@dataclass(frozen=True, eq=False)
class SeasonalFit:
    """Local level + dummy seasonal model fitted to one series.

    Variances are on the scale of the input series.
    """

    period: int
    obs_var: float
    level_var: float
    seasonal_var: float
    loglik: float
    smoothed: np.ndarray


def _ucm_system(period: int, obs_var: float, level_var: float, seasonal_var: float):
    m = period
    F = np.zeros((m, m))
    F[0, 0] = 1.0
    z = np.zeros(m)
    z[0] = 1.0
    Q = np.zeros((m, m))
    Q[0, 0] = level_var
    if m > 1:
        F[1, 1:] = -1.0
        for i in range(2, m):
            F[i, i - 1] = 1.0
        z[1] = 1.0
        Q[1, 1] = seasonal_var
    return F, z, Q, obs_var


_DIFFUSE = 1e6
_LOGVAR_BOUNDS = (-30.0, 5.0)


def _ucm_run(y, period, logvars, smooth):
    F, z, Q, h = _ucm_system(period, *np.exp(logvars))
    m = F.shape[0]
    return kalman_filter(y, F, z, Q, float(h), np.zeros(m), _DIFFUSE * np.eye(m), m, smooth)


def fit_seasonal(y: np.ndarray, period: int = 12) -> SeasonalFit:
    """Maximum-likelihood local level + seasonal model with smoothed signal.

    Missing values are ``nan``. The series is standardized internally; the
    three disturbance variances are optimized on the log scale.
    """
    y = np.asarray(y, dtype=np.float64)
    obs = ~np.isnan(y)
    if np.any(np.isinf(y)):
        raise DomainError("non-finite observed value")
    if period < 1:
        raise InsufficientDataError("period must be >= 1")
    if obs.sum() < 3 * period or obs.sum() < 3:
        raise InsufficientDataError(f"need >= {3 * period} observations, have {int(obs.sum())}")
    mu = float(np.mean(y[obs]))
    sd = float(np.std(y[obs]))
    if sd == 0.0:
        return SeasonalFit(period, 0.0, 0.0, 0.0, math.inf, np.full(y.shape, mu))
    ys = (y - mu) / sd
    nvar = 3 if period > 1 else 2

    def negll(theta):
        lv = np.full(3, _LOGVAR_BOUNDS[0])
        lv[:nvar] = theta
        ll, _ = _ucm_run(ys, period, lv, False)
        return -ll if np.isfinite(ll) else 1e300

    best = None
    for start in (np.log([0.1, 0.01, 0.001]), np.log([0.01, 0.1, 0.0001])):
        res = optimize.minimize(
            negll, start[:nvar], method="L-BFGS-B", bounds=[_LOGVAR_BOUNDS] * nvar
        )
        if best is None or res.fun < best.fun:
            best = res
    lv = np.full(3, _LOGVAR_BOUNDS[0])
    lv[:nvar] = best.x
    ll, sm = _ucm_run(ys, period, lv, True)
    var = np.exp(lv) * sd * sd
    return SeasonalFit(period, var[0], var[1], var[2] if nvar == 3 else 0.0, float(ll), sm * sd + mu)


def impute(panel: PricePanel, period: int = 12) -> PricePanel:
    """Fill masked cells with smoothed means of a per-column seasonal model.

    Observed cells are returned unchanged; a fully observed panel is returned
    as is.

    Raises
    ------
    InsufficientDataError
        A column with missing cells has fewer than ``3 * period`` observations.
    DomainError
        An imputed level is not positive.
    """
    if period < 1:
        raise InsufficientDataError("period must be >= 1")
    if panel.complete:
        return panel
    values = np.array(panel.values)
    for j, name in enumerate(panel.names):
        col_mask = panel.mask[:, j]
        if col_mask.all():
            continue
        if col_mask.sum() < 3 * period:
            raise InsufficientDataError(
                f"column {name!r}: {int(col_mask.sum())} observations, need >= {3 * period}"
            )
        fit = fit_seasonal(np.where(col_mask, values[:, j], np.nan), period)
        values[~col_mask, j] = fit.smoothed[~col_mask]
    if np.any(values <= 0):
        raise DomainError("imputation produced a non-positive price")
    return PricePanel(panel.names, panel.start, values, np.ones_like(panel.mask))


# ---------------------------------------------------------------- transforms


def to_logs(panel: PricePanel) -> LogPanel:
    """Elementwise natural log of a fully observed panel."""
    if not panel.complete:
        raise IncompleteDataError(f"{int((~panel.mask).sum())} masked entries; impute first")
    return LogPanel(panel.names, panel.start, np.log(panel.values))


def difference(logs: LogPanel) -> DiffPanel:
    """First differences; row ``t`` is ``logs[t + 1] - logs[t]``."""
    if logs.nobs < 2:
        raise InsufficientDataError("need at least two observations to difference")
    v = logs.values
    return DiffPanel(logs.names, shift_month(logs.start, 1), v[1:] - v[:-1])


def annualize(
    series: LogPanel | DiffPanel | np.ndarray | Sequence[float],
    start: Month | None = None,
    rule: str = "mean",
    names: Sequence[str] | None = None,
) -> AnnualSeries:
    """Calendar-year arithmetic means of a monthly series.

    Partial years at either end are dropped.

    Parameters
    ----------
    series : LogPanel, DiffPanel or array
        Arrays may be 1-D or (T, n) and then require ``start``.
    start : (year, month), optional
    rule : {"mean"}
    """
    if rule != "mean":
        raise ValueError(f"unsupported rule {rule!r}")
    if hasattr(series, "values") and hasattr(series, "start"):
        values = np.asarray(series.values, dtype=np.float64)
        start = series.start
        names = series.names
    else:
        if start is None:
            raise ValueError("start month required for raw arrays")
        values = np.asarray(series, dtype=np.float64)
    squeeze = values.ndim == 1
    if squeeze:
        values = values[:, None]
    if names is None:
        names = ("value",) if squeeze else tuple(f"x{i}" for i in range(values.shape[1]))
    skip = (12 - (start[1] - 1)) % 12
    nyears = (values.shape[0] - skip) // 12
    if nyears < 1:
        raise InsufficientDataError("no complete calendar year")
    first_year = start[0] + (1 if skip else 0)
    block = values[skip : skip + 12 * nyears].reshape(nyears, 12, -1)
    out = block.mean(axis=1)
    years = np.arange(first_year, first_year + nyears)
    return AnnualSeries(years, out[:, 0] if squeeze else out, tuple(names))
