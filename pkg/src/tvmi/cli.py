"""Command-line interface: ``tvmi <command> ...``."""
from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from tvmi import pipeline as pl
from tvmi.cointegration import johansen, normalize_beta
from tvmi.errors import ConfigError, TvmiError
from tvmi.series import PricePanel, difference, impute, ingest_csv, month_labels, write_csv
from tvmi.synth import SCENARIOS, generate, scenario
from tvmi.tvvecm import bootstrap_bands, profile_smoothing_ratio
from tvmi.unitroot import adf_gls
from tvmi.vecm import fit_vecm, select_lag_bic


def _render(rows) -> str:
    widths = [max(len(str(r[i])) if i < len(r) else 0 for r in rows) for i in range(max(map(len, rows)))]
    lines = []
    for r in rows:
        cells = [str(c).rjust(w) if j else str(c).ljust(w) for j, (c, w) in enumerate(zip(r, widths))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def _fail(exc: Exception, code: int = 1):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _out_dir(out_dir: str | None) -> Path:
    p = Path(out_dir) if out_dir else pl.PipelineConfig(input="").resolved_output()
    p.mkdir(parents=True, exist_ok=True)
    return p


def _parse_lags(value: str) -> str:
    if value != "auto" and not (value.isdigit() and int(value) >= 1):
        raise click.BadParameter("use 'auto' or a positive integer")
    return value


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Time-varying VECM estimation of market-integration speed."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--period", default=12, show_default=True, help="Seasonal period in months.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the imputed panel here (plus a .mask.csv sidecar).")
def ingest(file, period, out):
    """Read a monthly price CSV and fill gaps."""
    try:
        raw = ingest_csv(file)
        filled = impute(raw, period)
    except TvmiError as exc:
        _fail(exc, pl.EXIT_CODES["ingest"])
    missing = (~raw.mask).sum(axis=0)
    click.echo(f"{raw.nobs} months from {raw.dates[0]} to {raw.dates[-1]}")
    for name, m in zip(raw.names, missing):
        click.echo(f"  {name}: {int(m)} imputed")
    if out:
        write_csv(filled, out, imputed=~raw.mask)
        click.echo(f"wrote {out}")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--period", default=12, show_default=True)
@click.option("--case", "--detrend", "detrend", type=click.Choice(["trend", "constant"]), default="trend", show_default=True)
@click.option("--criterion", type=click.Choice(["mbic", "maic"]), default="mbic", show_default=True)
@click.option("--max-lags", type=int, default=None, help="Default floor(4 (T/100)^(1/4)).")
@click.option("--column", default=None, help="Test one level series and emit a one-row result.")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV destination.")
def unitroot(file, period, detrend, criterion, max_lags, column, out):
    """ADF-GLS tests; with no --column, the full descriptive table for levels and differences."""
    try:
        logs = pl.load_logs(file, period)
        if column is None:
            rows, _ = pl.table1_rows(logs, detrend, criterion)
        else:
            if column not in logs.names:
                raise ConfigError(f"column {column!r} not in {list(logs.names)}")
            res = adf_gls(logs.values[:, logs.names.index(column)], detrend, criterion, max_lags)
            rows = [
                ["series", "statistic", "lags", "phi_hat", "detrend", "criterion", "nobs", "cv_1pct", "reject_1pct"],
                [column, pl.fnum(res.statistic), str(res.lags), pl.fnum(res.phi_hat), res.detrend,
                 res.criterion, str(res.nobs), pl.fnum(res.critical_values[0.01]), str(res.reject_1pct).lower()],
            ]
    except TvmiError as exc:
        _fail(exc, pl.EXIT_CODES["unitroot"])
    click.echo(_render(rows))
    if out:
        pl._write_rows(Path(out), rows)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--period", default=12, show_default=True)
@click.option("--lags", "k", default=2, show_default=True, help="VAR order in levels.")
@click.option("--level", type=click.Choice(["0.01", "0.05"]), default="0.01", show_default=True)
@click.option("--test", type=click.Choice(["trace", "maxeig"]), default="trace", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def coint(file, period, k, level, test, out):
    """Johansen trace and maximal-eigenvalue tests (restricted constant)."""
    try:
        logs = pl.load_logs(file, period)
        jo = johansen(difference(logs), logs, k, float(level), test)
    except TvmiError as exc:
        _fail(exc, pl.EXIT_CODES["cointegration"])
    rows = pl.table2_rows(jo)
    click.echo(_render(rows))
    if out:
        pl._write_rows(Path(out), rows)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--period", default=12, show_default=True)
@click.option("--lags", default="2", show_default=True, callback=lambda c, p, v: _parse_lags(v),
              help="VAR order in levels or 'auto' (BIC).")
@click.option("--max-lags", default=8, show_default=True, help="Upper bound for --lags auto.")
@click.option("--hac-lags", type=int, default=None, help="Newey-West truncation; default floor(4 (T/100)^(2/9)).")
@click.option("--out", type=click.Path(dir_okay=False))
def vecm(file, period, lags, max_lags, hac_lags, out):
    """Time-invariant VECM with Newey-West errors and Hansen's L_c."""
    try:
        logs = pl.load_logs(file, period)
        diffs = difference(logs)
        k = select_lag_bic(diffs, logs, max_lags) if lags == "auto" else int(lags)
        fit = fit_vecm(diffs, logs, k, None, hac_lags)
    except TvmiError as exc:
        _fail(exc, pl.EXIT_CODES["vecm"])
    rows = pl.table3_rows(fit)
    click.echo(f"k = {k}, N = {fit.nobs}")
    click.echo(_render(rows))
    if out:
        pl._write_rows(Path(out), rows)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--period", default=12, show_default=True)
@click.option("--lags", "k", default=2, show_default=True, help="VAR order in levels.")
@click.option("--rank", type=int, default=None, help="Cointegrating rank; default sequential trace test at 1%.")
@click.option("--lambda", "lam", default="1.0", show_default=True, help="Smoothing ratio, or 'ml' for the likelihood profile.")
@click.option("--bootstrap", "reps", default=1000, show_default=True)
@click.option("--coverage", default=0.9, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), help="Default: $TVMI_OUTPUT_DIR or ./tvmi-output.")
def tvvecm(file, period, k, rank, lam, reps, coverage, seed, jobs, out_dir):
    """Time-varying VECM: integration-speed path with bootstrap bands."""
    try:
        logs = pl.load_logs(file, period)
        diffs = difference(logs)
        jo = johansen(diffs, logs, k)
        r = jo.selected_rank if rank is None else rank
        if r < 1:
            raise ConfigError("cointegrating rank is 0; pass --rank to override")
        beta = normalize_beta(jo.beta_for(r))
        lam_value = profile_smoothing_ratio(diffs, logs, k, beta)[2] if lam == "ml" else float(lam)
        path = bootstrap_bands(diffs, logs, k, beta, lam_value, reps, coverage, seed, jobs)
    except (TvmiError, ValueError) as exc:
        _fail(exc, pl.EXIT_CODES["tvvecm"])
    out = _out_dir(out_dir)
    dates = logs.dates[k:]
    pl._write_rows(out / "zeta.csv", pl.zeta_rows(dates, path))
    pl.plot_zeta(dates, path, out / "zeta.svg")
    click.echo(f"rank {r}, lambda {lam_value:g}; mean zeta {np.mean(path.zeta):.4f}")
    click.echo(f"wrote {out / 'zeta.csv'} and {out / 'zeta.svg'}")


@main.command()
@click.option("--scenario", "name", type=click.Choice(SCENARIOS), default="paperlike", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--T", "T", type=int, default=None, help="Sample length (scenario default if omitted).")
@click.option("--noise-scale", default=None, type=float, help="Innovation standard deviation.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Price panel CSV (exp of log levels).")
@click.option("--truth", type=click.Path(dir_okay=False), help="CSV of the true integration-speed path.")
def synth(name, seed, T, noise_scale, out, truth):
    """Simulate a cointegrated price panel with a known loading path."""
    kw = {} if noise_scale is None else {"noise_scale": noise_scale}
    try:
        sc = scenario(name, seed=seed, T=T, **kw)
        logs, zeta = generate(sc)
    except TvmiError as exc:
        _fail(exc)
    prices = PricePanel(logs.names, logs.start, np.exp(logs.values), np.ones(logs.values.shape, dtype=bool))
    write_csv(prices, out)
    click.echo(f"wrote {out} ({logs.nobs} x {len(logs.names)})")
    if truth:
        rows = [["date", "zeta"]] + [[d, repr(float(z))] for d, z in zip(month_labels(logs.start, logs.nobs), zeta)]
        pl._write_rows(Path(truth), rows)
        click.echo(f"wrote {truth}")


@main.command()
@click.argument("file", required=False, type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Flat key=value file or a previous manifest.json.")
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
@click.option("--period", type=int, default=None)
@click.option("--lags", default=None, help="VAR order or 'auto'.")
@click.option("--rank", default=None, help="Rank or 'auto'.")
@click.option("--lambda", "lam", default=None, help="Smoothing ratio or 'ml'.")
@click.option("--bootstrap", "reps", type=int, default=None)
@click.option("--coverage", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=None)
def pipeline(file, config_path, out_dir, period, lags, rank, lam, reps, coverage, seed, jobs):
    """Run every stage and write tables, the zeta path, plot and manifest.

    Exit status is 0 on success, 2 for an invalid configuration, and 3-8 for
    a failure in ingest, unitroot, cointegration, vecm, tvvecm or output.
    """
    overrides = {
        "input": file, "output_dir": out_dir, "period": period, "lags": lags, "rank": rank,
        "smoothing_ratio": lam, "reps": reps, "coverage": coverage, "seed": seed, "n_jobs": jobs,
    }
    try:
        if config_path:
            cfg = pl.load_config(config_path, overrides)
        else:
            cfg = pl.PipelineConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})
        cfg.validate()
    except ConfigError as exc:
        _fail(exc, pl.EXIT_CONFIG)
    try:
        res = pl.run_pipeline(cfg, log=click.echo)
    except pl.StageError as exc:
        _fail(exc, exc.exit_code)
    click.echo(f"done: k={res.k}, rank={res.rank}, lambda={res.smoothing_ratio:g}")


@main.command()
@click.argument("zeta_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("other_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--lags", "k", default=2, show_default=True, help="VAR order in levels.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Default: <output dir>/table5.csv.")
def robustness(zeta_csv, other_csv, k, out):
    """Bivariate cointegration test and VECM on two annual series."""
    out = Path(out) if out else _out_dir(None) / "table5.csv"
    try:
        res = pl.run_robustness(zeta_csv, other_csv, out, k=k)
    except TvmiError as exc:
        _fail(exc)
    click.echo(_render(pl.table5_rows(res, res.fit.names)))
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
