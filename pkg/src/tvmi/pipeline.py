"""End-to-end estimation run and the annual robustness check.

Each stage is a pure function of the configuration, the input file and the
seed. Artifacts are written to the output directory; a failed run removes the
files it created and reports the stage that failed.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, fields
from importlib import metadata
from pathlib import Path

import numpy as np

from tvmi import kernels
from tvmi.cointegration import CointegrationResult, johansen, normalize_beta
from tvmi.critical_values import ADF_GLS_CV
from tvmi.errors import AlignmentError, ConfigError, DomainError, ParseError, TvmiError
from tvmi.series import LogPanel, annualize, difference, impute, ingest_csv, to_logs
from tvmi.tvvecm import IntegrationSpeedPath, bootstrap_bands, profile_smoothing_ratio
from tvmi.unitroot import adf_gls
from tvmi.vecm import VecmFit, fit_vecm, fit_vecm_bivariate, select_lag_bic

OUTPUT_ENV = "TVMI_OUTPUT_DIR"
DEFAULT_OUTPUT = "tvmi-output"

# Exit statuses, one per stage.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CODES = {
    "ingest": 3,
    "unitroot": 4,
    "cointegration": 5,
    "vecm": 6,
    "tvvecm": 7,
    "output": 8,
}

HINTS = {
    "ingest": "check the CSV header, the YYYY-MM date column and that prices are positive",
    "unitroot": "the level series look stationary; the error-correction model needs I(1) inputs",
    "cointegration": "no cointegration found at the chosen level; try --rank or a different lag order",
    "vecm": "reduce the lag order or drop collinear series",
    "tvvecm": "raise the smoothing ratio or check the cointegrating rank",
    "output": "check that the output directory is writable",
}


class StageError(TvmiError):
    """A pipeline stage failed; carries the stage name and exit status."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = EXIT_CODES[stage]
        super().__init__(f"stage '{stage}' failed: {cause} (hint: {HINTS[stage]})")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for :func:`run_pipeline`.

    ``lags`` is ``"auto"`` (BIC over ``1..max_lags``) or a VAR order in
    levels; ``rank`` is ``"auto"`` (sequential test at ``rank_level``) or a
    fixed rank; ``smoothing_ratio`` is a positive number or ``"ml"`` for the
    likelihood-profile choice.
    """

    input: str
    output_dir: str = ""
    period: int = 12
    detrend: str = "trend"
    criterion: str = "mbic"
    lags: str = "2"
    max_lags: int = 8
    rank: str = "auto"
    rank_level: float = 0.01
    rank_test: str = "trace"
    smoothing_ratio: str = "1.0"
    reps: int = 1000
    coverage: float = 0.9
    seed: int = 42
    hac_lags: int = -1
    n_jobs: int = 1

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        conv = {}
        for key, raw in values.items():
            kind = known[key].type
            try:
                if kind == "int":
                    conv[key] = int(raw)
                elif kind == "float":
                    conv[key] = float(raw)
                else:
                    conv[key] = str(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: cannot interpret {raw!r} as {kind}") from None
        if "input" not in conv:
            raise ConfigError("config needs an input file")
        return cls(**conv)

    def resolved_output(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def validate(self) -> None:
        """Check every field before any computation."""
        if not Path(self.input).is_file():
            raise ConfigError(f"input file {self.input!r} not found")
        if self.period < 1:
            raise ConfigError("period must be >= 1 (months per seasonal cycle)")
        if self.detrend not in ADF_GLS_CV:
            raise ConfigError(f"detrend must be one of {sorted(ADF_GLS_CV)}")
        if self.criterion not in ("mbic", "maic"):
            raise ConfigError("criterion must be 'mbic' or 'maic'")
        if self.lags != "auto" and not (self.lags.isdigit() and int(self.lags) >= 1):
            raise ConfigError("lags must be 'auto' or a positive integer VAR order")
        if self.max_lags < 1:
            raise ConfigError("max_lags must be >= 1")
        if self.rank != "auto" and not (self.rank.isdigit() and int(self.rank) >= 1):
            raise ConfigError("rank must be 'auto' or a positive integer")
        if self.rank_level not in (0.01, 0.05):
            raise ConfigError("rank_level must be 0.01 or 0.05")
        if self.rank_test not in ("trace", "maxeig"):
            raise ConfigError("rank_test must be 'trace' or 'maxeig'")
        if self.smoothing_ratio != "ml":
            try:
                lam = float(self.smoothing_ratio)
            except ValueError:
                raise ConfigError("smoothing_ratio must be a positive number or 'ml'") from None
            if not (lam > 0 and np.isfinite(lam)):
                raise ConfigError("smoothing_ratio must be positive and finite")
        if self.reps < 100:
            raise ConfigError(f"bootstrap reps must be >= 100, got {self.reps}")
        if not 0.0 < self.coverage < 1.0:
            raise ConfigError("coverage must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a flat ``key = value`` file or a previous run's ``manifest.json``.

    Keys in ``overrides`` (for example from command-line flags) win.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            values = dict(json.loads(text)["config"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: not a manifest with a 'config' block ({exc})") from None
    else:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string("[pipeline]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        values = dict(parser["pipeline"])
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return PipelineConfig.from_mapping(values)


def load_logs(path: str | Path, period: int = 12) -> LogPanel:
    """Ingest a price CSV, impute gaps, and take logs."""
    return to_logs(impute(ingest_csv(path), period))


# ------------------------------------------------------------------ formatting


def fnum(x) -> str:
    """Fixed six-decimal text used in every table."""
    x = float(x)
    if x != x:
        return ""
    return f"{x:.6f}"


def _write_rows(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(rows)


def hypothesis_label(r: int) -> str:
    return "None" if r == 0 else f"At most {r}"


def table1_rows(logs: LogPanel, detrend: str, criterion: str):
    """Descriptive statistics and ADF-GLS results for levels and differences."""
    diffs = difference(logs)
    cols = [(nm, logs.values[:, j]) for j, nm in enumerate(logs.names)]
    cols += [(f"d{nm}", diffs.values[:, j]) for j, nm in enumerate(diffs.names)]
    tests = [adf_gls(v, detrend=detrend, criterion=criterion) for _, v in cols]
    rows = [["statistic", *(nm for nm, _ in cols)]]
    rows.append(["mean", *(fnum(v.mean()) for _, v in cols)])
    rows.append(["sd", *(fnum(v.std(ddof=1)) for _, v in cols)])
    rows.append(["min", *(fnum(v.min()) for _, v in cols)])
    rows.append(["max", *(fnum(v.max()) for _, v in cols)])
    rows.append(["adf_gls", *(fnum(t.statistic) for t in tests)])
    rows.append(["lags", *(str(t.lags) for t in tests)])
    rows.append(["phi_hat", *(fnum(t.phi_hat) for t in tests)])
    rows.append(["nobs", *(str(len(v)) for _, v in cols)])
    rows.append(["cv_1pct", *(fnum(t.critical_values[0.01]) for t in tests)])
    return rows, tests


def table2_rows(jo: CointegrationResult):
    rows = [["hypothesis", "eigenvalue", "maxeig_stat", "maxeig_cv_1pct", "trace_stat", "trace_cv_1pct"]]
    for r in range(len(jo.eigenvalues)):
        rows.append([
            hypothesis_label(r),
            f"{jo.eigenvalues[r]:.4f}",
            f"{jo.maxeig_stats[r]:.2f}",
            f"{jo.critical_values['maxeig'][0.01][r]:.2f}",
            f"{jo.trace_stats[r]:.2f}",
            f"{jo.critical_values['trace'][0.01][r]:.2f}",
        ])
    rows.append(["selected_rank", str(jo.selected_rank), "", "", "", ""])
    return rows


def _coef_rows(fit: VecmFit, eq_cols: int):
    m = fit.gamma.shape[1]
    rows = []
    for i, name in enumerate(fit.param_names):
        block = "difference" if i < m else "level"
        rows.append([block, name, "coef", *(fnum(c) for c in fit.params[i])])
        rows.append([block, name, "se", *(f"[{fnum(s)}]" for s in fit.hac_se[i])])
    return rows


def table3_rows(fit: VecmFit):
    n = len(fit.names)
    rows = [["block", "regressor", "stat", *(f"d{nm}" for nm in fit.names)]]
    rows += _coef_rows(fit, n)
    rows.append(["fit", "r2_adj", "value", *(fnum(v) for v in fit.r2_adj)])
    rows.append(["fit", "lc", "value", fnum(fit.lc_stat)] + [""] * (n - 1))
    rows.append(["fit", "lc_cv_5pct", "value", fnum(fit.lc_critical_value)] + [""] * (n - 1))
    rows.append(["fit", "nobs", "value", *([str(fit.nobs)] * n)])
    rows.append(["fit", "hac_lags", "value", str(fit.hac_lags)] + [""] * (n - 1))
    return rows


def zeta_rows(dates, path: IntegrationSpeedPath):
    rows = [["date", "zeta", "lo", "hi", "accel"]]
    lo = path.lower if path.lower is not None else np.full_like(path.zeta, np.nan)
    hi = path.upper if path.upper is not None else np.full_like(path.zeta, np.nan)
    for d, z, a, b, c in zip(dates, path.zeta, lo, hi, path.acceleration):
        rows.append([d, fnum(z), fnum(a), fnum(b), fnum(c)])
    return rows


def plot_zeta(dates, path: IntegrationSpeedPath, out: Path) -> None:
    """Two-panel SVG: index with bands, and its first difference."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = np.arange(len(dates))
    with matplotlib.rc_context({"svg.hashsalt": "tvmi", "svg.fonttype": "none"}):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
        if path.lower is not None:
            ax1.fill_between(x, path.lower, path.upper, color="0.85", linewidth=0, label=f"{path.coverage:.0%} band")
        ax1.plot(x, path.zeta, color="k", linewidth=1.0, label="zeta")
        ax1.set_ylabel("speed of integration")
        ax1.legend(loc="upper left", frameon=False)
        ax2.plot(x, path.acceleration, color="k", linewidth=0.8)
        ax2.axhline(0.0, color="0.5", linewidth=0.5)
        ax2.set_ylabel("acceleration")
        step = max(1, len(dates) // 8)
        ax2.set_xticks(x[::step])
        ax2.set_xticklabels([dates[i] for i in x[::step]], rotation=30, ha="right")
        fig.tight_layout()
        fig.savefig(out, format="svg", metadata={"Date": None, "Creator": "tvmi"})
        plt.close(fig)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    def ver(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return "unknown"

    return {
        "tvmi": ver("artifact"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": ver("scipy"),
        "matplotlib": ver("matplotlib"),
        "backend": kernels.BACKEND,
    }


# ------------------------------------------------------------------ pipeline


@dataclass
class PipelineResult:
    status: int
    outputs: dict
    rank: int | None = None
    k: int | None = None
    smoothing_ratio: float | None = None
    message: str = ""


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except (TvmiError, ArithmeticError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def _screen_levels(tests, nlevels: int) -> None:
    if all(t.reject_1pct for t in tests[:nlevels]):
        raise DomainError("every level series rejects a unit root at 1%")


def run_pipeline(cfg: PipelineConfig, log=None) -> PipelineResult:
    """Run every stage and write the artifacts.

    Files, in order: ``table1.csv``, ``table2.csv``, ``table3.csv``,
    ``zeta.csv``, ``zeta.svg``, ``zeta_annual.csv``, ``manifest.json``.

    Raises
    ------
    ConfigError
        Invalid configuration (before any computation).
    StageError
        A stage failed; files written by this run are removed.
    """
    cfg.validate()
    log = log or (lambda msg: None)
    out = cfg.resolved_output()
    written: list[Path] = []

    def emit(name, rows=None, writer=None):
        p = out / name
        if rows is not None:
            _write_rows(p, rows)
        else:
            writer(p)
        written.append(p)
        log(f"wrote {p}")

    try:
        _stage("output", out.mkdir, parents=True, exist_ok=True)
        logs = _stage("ingest", load_logs, cfg.input, cfg.period)
        diffs = difference(logs)
        n = len(logs.names)
        log(f"ingested {logs.nobs} months x {n} series")

        rows1, tests = _stage("unitroot", table1_rows, logs, cfg.detrend, cfg.criterion)
        _stage("unitroot", _screen_levels, tests, n)
        _stage("output", emit, "table1.csv", rows1)

        k = _stage("cointegration", lambda: select_lag_bic(diffs, logs, cfg.max_lags) if cfg.lags == "auto" else int(cfg.lags))
        jo = _stage("cointegration", johansen, diffs, logs, k, cfg.rank_level, cfg.rank_test)
        rank = jo.selected_rank if cfg.rank == "auto" else int(cfg.rank)
        if rank < 1:
            raise StageError("cointegration", DomainError("selected cointegrating rank is 0"))
        if rank > n:
            raise StageError("cointegration", ConfigError(f"rank {rank} exceeds {n} series"))
        _stage("output", emit, "table2.csv", table2_rows(jo))
        log(f"k={k}, rank={rank}")

        hac = None if cfg.hac_lags < 0 else cfg.hac_lags
        fit = _stage("vecm", fit_vecm, diffs, logs, k, None, hac)
        _stage("output", emit, "table3.csv", table3_rows(fit))

        beta = _stage("tvvecm", normalize_beta, jo.beta_for(rank))
        if cfg.smoothing_ratio == "ml":
            lam = _stage("tvvecm", profile_smoothing_ratio, diffs, logs, k, beta)[2]
        else:
            lam = float(cfg.smoothing_ratio)
        path = _stage(
            "tvvecm", bootstrap_bands, diffs, logs, k, beta, lam, cfg.reps, cfg.coverage, cfg.seed, cfg.n_jobs
        )
        dates = logs.dates[k:]
        _stage("output", emit, "zeta.csv", zeta_rows(dates, path))
        _stage("output", emit, "zeta.svg", writer=lambda p: plot_zeta(dates, path, p))
        start = tuple(int(s) for s in dates[0].split("-"))
        ann = annualize(path.zeta, start=start)
        _stage(
            "output", emit, "zeta_annual.csv",
            [["year", "zeta"]] + [[str(y), fnum(v)] for y, v in zip(ann.years, ann.values)],
        )

        manifest = {
            "status": "complete",
            "versions": _versions(),
            "seed": cfg.seed,
            "config": {
                k_: str(v)
                for k_, v in {**asdict(cfg), "input": str(Path(cfg.input).resolve()), "output_dir": str(out)}.items()
            },
            "decisions": {"k": k, "rank": rank, "smoothing_ratio": lam},
            "outputs": {p.name: _sha256(p) for p in written},
        }
        _stage(
            "output", emit, "manifest.json",
            writer=lambda p: p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n"),
        )
    except StageError:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return PipelineResult(EXIT_OK, {p.name: p for p in written}, rank, k, lam)


# ------------------------------------------------------------------ robustness


def read_annual_csv(path: str | Path):
    """Two-column ``year,value`` CSV with a header row.

    Returns
    -------
    years : ndarray of int
    values : ndarray of float
    name : str
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise ParseError(f"{path}: expected a header and 'year,value' rows")
    name = rows[0][1].strip() or Path(path).stem
    years, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            y, v = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ParseError(f"{path}: row {lineno}: cannot parse {row!r}") from None
        if not (v > 0 and np.isfinite(v)):
            raise DomainError(f"{path}: row {lineno}: value must be positive, got {row[1]!r}")
        if years and y != years[-1] + 1:
            raise ParseError(f"{path}: row {lineno}: years must be consecutive")
        years.append(y)
        values.append(v)
    return np.array(years), np.array(values), name


def table5_rows(res, names):
    jo, fit = res.coint, res.fit
    rows = [["panel", "row", "stat", "eigenvalue", "maxeig", "trace", *(f"d{nm}" for nm in names)]]
    blank = [""] * len(names)
    for r in range(len(jo.eigenvalues)):
        rows.append(["cointegration", hypothesis_label(r), "value", f"{jo.eigenvalues[r]:.4f}",
                     f"{jo.maxeig_stats[r]:.2f}", f"{jo.trace_stats[r]:.2f}", *blank])
        rows.append(["cointegration", hypothesis_label(r), "cv_1pct", "",
                     f"({jo.critical_values['maxeig'][0.01][r]:.2f})",
                     f"({jo.critical_values['trace'][0.01][r]:.2f})", *blank])
    rows.append(["cointegration", "selected_rank", "value", str(jo.selected_rank), "", "", *blank])
    for block, name, stat, *vals in _coef_rows(fit, len(names)):
        rows.append(["vecm", name, stat, "", "", "", *vals])
    rows.append(["vecm", "r2_adj", "value", "", "", "", *(fnum(v) for v in fit.r2_adj)])
    rows.append(["vecm", "nobs", "value", "", "", "", *([str(fit.nobs)] * len(names))])
    return rows


def run_robustness(zeta_csv, other_csv, out: str | Path, k: int = 2, level: float = 0.01):
    """Bivariate Johansen test and VECM on the logs of two annual series."""
    ya, a, na = read_annual_csv(zeta_csv)
    yb, b, nb = read_annual_csv(other_csv)
    if ya.shape != yb.shape or not np.array_equal(ya, yb):
        raise AlignmentError(
            f"annual spans differ: {ya[0]}-{ya[-1]} ({len(ya)}) vs {yb[0]}-{yb[-1]} ({len(yb)})"
        )
    names = (f"log_{na}", f"log_{nb}")
    res = fit_vecm_bivariate(np.log(a), np.log(b), names=names, k=k, level=level)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_rows(out, table5_rows(res, names))
    return res
