"""Command-line front end.

Subcommands: ``estimate`` (Monte Carlo), ``oracle`` (chaos-series
quadrature), ``compare`` (both, with a z-score verdict), ``verify``
(property suites), ``bench`` (throughput).  Configuration comes from an
optional flat key = value file, overlaid by repeatable ``--set`` pairs and
direct flags; every record echoes the fully resolved configuration.

Data records go to stdout (or ``--out``); diagnostics, warnings, and wall
times go to stderr, so the data stream stays parseable.  Records are
byte-identical for identical config + seed, independent of ``--workers``
(bench is the documented exception: it reports timings).

Exit codes: 0 ok, 2 config error, 3 numeric/capability error,
4 comparison or verification failure.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
import warnings

import click

from .chaos_oracle import (
    SeriesResult,
    second_moment_series,
    truncation_tail,
    white_noise_order_term,
)
from .errors import CapabilityError, ConfigError, DomainError, NumericError
from .kernels import initial_field, warn_outside_existence_regime
from .mc_engine import (
    estimate_second_moment_fractional,
    estimate_second_moment_white,
)
from .runconfig import RunConfig, format_real, parse_config_file
from .verify import available_suites, run_suite

SCHEMA_VERSION = 1


@click.group()
def main():
    """Second-moment computations for the fractional stochastic heat equation."""


def _config_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Flat key = value configuration file.")(fn)
    fn = click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                      help="Override one configuration key (repeatable).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Estimator seed.")(fn)
    fn = click.option("--replicates", type=int, default=None, help="Replicate count.")(fn)
    fn = click.option("--mode", type=click.Choice(["uniform", "importance"]),
                      default=None, help="Point-sampling mode.")(fn)
    fn = click.option("--equation", type=click.Choice(["fractional", "white"]),
                      default=None, help="Which representation to estimate.")(fn)
    fn = click.option("--out", "out_path", default=None, help="Data output path ('-' = stdout).")(fn)
    fn = click.option("--format", "out_format", type=click.Choice(["json", "csv"]),
                      default=None, help="Record format.")(fn)
    fn = click.option("--workers", type=int, default=None,
                      help="Parallelism cap (0 = machine parallelism).")(fn)
    return fn


def _resolve(config_path, sets, seed, replicates, mode, equation, out_path, out_format, workers):
    file_values = parse_config_file(config_path) if config_path else {}
    set_layer = {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        set_layer[key.strip()] = value.strip()
    flag_layer = {}
    if seed is not None:
        flag_layer["estimator.seed"] = seed
    if replicates is not None:
        flag_layer["estimator.replicates"] = replicates
    if mode is not None:
        flag_layer["estimator.mode"] = mode
    if equation is not None:
        flag_layer["equation"] = equation
    if out_path is not None:
        flag_layer["output.path"] = out_path
    if out_format is not None:
        flag_layer["output.format"] = out_format
    if workers is not None:
        flag_layer["workers"] = workers
    return RunConfig.resolve(file_values, set_layer, flag_layer)


def _record_value(v):
    if isinstance(v, float):
        return format_real(v)
    if v is None:
        return ""
    return str(v)


def _json_safe(rec: dict) -> dict:
    # non-finite reals are not valid strict JSON; ship them as strings
    out = {}
    for key, value in rec.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = format_real(value)
        out[key] = value
    return out


def _emit(records, rc: RunConfig):
    """Write records in the configured format to the configured sink."""
    if rc.output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(records[0].keys())
        for rec in records:
            writer.writerow(_record_value(v) for v in rec.values())
        text = buf.getvalue()
    else:
        payload = [_json_safe(r) for r in records]
        payload = payload[0] if len(payload) == 1 else payload
        text = json.dumps(payload, separators=(",", ":"), allow_nan=False) + "\n"
    if rc.output_path in ("-", ""):
        click.echo(text, nl=False)
    else:
        with open(rc.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _with_config_echo(record: dict, rc: RunConfig) -> dict:
    for key, value in rc.echo().items():
        record[f"config.{key}"] = value
    return record


def _estimate_record(rc: RunConfig, est, command: str) -> dict:
    cfg = rc.estimator_config()
    rec = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "equation": rc.equation,
        "value": est.value,
        "stderr": est.stderr,
        "replicates": est.replicates_used,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "batches": cfg.batch_count,
    }
    for n in sorted(est.per_order):
        mean, stderr, count = est.per_order[n]
        rec[f"order_{n}_value"] = mean
        rec[f"order_{n}_stderr"] = stderr
        rec[f"order_{n}_count"] = count
    rec["residual"] = est.residual
    diag = est.diagnostics
    rec["stderr_naive"] = diag.get("naive_stderr", 0.0)
    rec["max_abs_replicate"] = diag.get("max_abs_replicate", 0.0)
    rec["abs_replicate_q999"] = diag.get("abs_replicate_q999", 0.0)
    rec["effective_sample_size"] = diag.get("effective_sample_size", 0.0)
    rec["singular_hits"] = diag.get("singular_hits", 0)
    return _with_config_echo(rec, rc)


def _oracle_record(rc: RunConfig, series) -> dict:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "command": "oracle",
        "zeroth_term": series.zeroth_term,
    }
    for i, term in enumerate(series.order_terms, start=1):
        rec[f"order_{i}_term"] = term
    rec["tail_estimate"] = series.tail_estimate
    rec["tail_is_heuristic"] = series.tail_is_heuristic
    rec["total"] = series.total
    rec["n_max"] = rc.oracle_n_max
    rec["tol"] = rc.oracle_tol
    return _with_config_echo(rec, rc)


def _run_estimator(rc: RunConfig):
    q = rc.query()
    kernel = rc.temporal_kernel()
    f = rc.spatial_kernel()
    u0 = rc.initial_condition()
    cfg = rc.estimator_config()
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        msg = warn_outside_existence_regime(f, kernel.hurst)
    if msg:
        click.echo(f"warning: {msg}", err=True)
    if rc.equation == "white":
        if q.t != q.s:
            raise ConfigError(
                "equation=white computes equal-time moments; set query.t == query.s"
            )
        est = estimate_second_moment_white(q.t, q.x, q.y, f, u0, cfg)
    else:
        est = estimate_second_moment_fractional(q, kernel, f, u0, cfg)
    if est.diagnostics.get("variance_warning"):
        click.echo(f"warning: {est.diagnostics['variance_warning']}", err=True)
    return est


def _run_oracle(rc: RunConfig):
    q = rc.query()
    f = rc.spatial_kernel()
    u0 = rc.initial_condition()
    if rc.equation == "white":
        if q.t != q.s:
            raise ConfigError(
                "equation=white computes equal-time moments; set query.t == query.s"
            )
        zeroth = float(initial_field(u0, q.t, q.x_arr)) * float(
            initial_field(u0, q.t, q.y_arr)
        )
        orders = [
            white_noise_order_term(n, q.t, q.x, q.y, f, u0, rc.oracle_tol)
            for n in range(1, rc.oracle_n_max + 1)
        ] if q.t > 0.0 else [0.0] * rc.oracle_n_max
        return SeriesResult(
            zeroth_term=zeroth,
            order_terms=orders,
            tail_estimate=truncation_tail(orders),
            total=zeroth + math.fsum(orders),
        )
    return second_moment_series(
        q,
        rc.temporal_kernel(),
        f,
        u0,
        rc.oracle_n_max,
        rc.oracle_tol,
    )


def _guarded(body):
    try:
        return body()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (CapabilityError, NumericError, DomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@main.command()
@_config_options
def estimate(**kwargs):
    """Monte Carlo estimate of the second moment."""

    def body():
        rc = _resolve(**kwargs)
        start = time.perf_counter()
        est = _run_estimator(rc)
        wall_ms = 1000.0 * (time.perf_counter() - start)
        _emit([_estimate_record(rc, est, "estimate")], rc)
        click.echo(f"wall_time_ms={format_real(wall_ms)}", err=True)

    _guarded(body)


@main.command()
@_config_options
def oracle(**kwargs):
    """Deterministic chaos-series value of the second moment."""

    def body():
        rc = _resolve(**kwargs)
        start = time.perf_counter()
        series = _run_oracle(rc)
        wall_ms = 1000.0 * (time.perf_counter() - start)
        _emit([_oracle_record(rc, series)], rc)
        click.echo(f"wall_time_ms={format_real(wall_ms)}", err=True)

    _guarded(body)


@main.command()
@_config_options
def compare(**kwargs):
    """Estimate and oracle side by side; verdict at |z| <= 3 plus tail."""

    def body():
        rc = _resolve(**kwargs)
        est = _run_estimator(rc)
        series = _run_oracle(rc)
        diff = est.value - series.total
        tail = series.tail_estimate
        z = diff / est.stderr if est.stderr > 0 else (0.0 if diff == 0.0 else math.inf)
        ok = abs(diff) <= 3.0 * est.stderr + tail
        rec = {
            "schema_version": SCHEMA_VERSION,
            "command": "compare",
            "value_mc": est.value,
            "stderr": est.stderr,
            "value_oracle": series.total,
            "tail_estimate": tail,
            "z_score": z,
            "verdict": "pass" if ok else "fail",
        }
        _emit([_with_config_echo(rec, rc)], rc)
        return ok

    ok = _guarded(body)
    if not ok:
        sys.exit(4)


@main.command()
@click.argument("suite", type=click.Choice(available_suites()))
@_config_options
def verify(suite, **kwargs):
    """Run a property suite; one record per check."""

    def body():
        rc = _resolve(**kwargs)
        seed = rc.estimator_config().seed
        checks = run_suite(suite, seed=seed)
        records = []
        for c in checks:
            records.append(
                {
                    "schema_version": SCHEMA_VERSION,
                    "command": "verify",
                    "suite": c.suite,
                    "check": c.name,
                    "statistic": c.statistic,
                    "comparison": c.comparison,
                    "threshold": c.threshold,
                    "passed": c.passed,
                }
            )
        _emit(records, rc)
        return all(c.passed for c in checks)

    ok = _guarded(body)
    if not ok:
        sys.exit(4)


@main.command()
@_config_options
def bench(**kwargs):
    """Measure estimator throughput for the configured run.

    The record carries wall-clock timings, so unlike the other commands it
    is not byte-reproducible.
    """

    def body():
        rc = _resolve(**kwargs)
        cfg = rc.estimator_config()
        start = time.perf_counter()
        est = _run_estimator(rc)
        elapsed = time.perf_counter() - start
        rec = {
            "schema_version": SCHEMA_VERSION,
            "command": "bench",
            "equation": rc.equation,
            "replicates": cfg.replicates,
            "wall_time_ms": 1000.0 * elapsed,
            "replicates_per_second": cfg.replicates / elapsed if elapsed > 0 else math.inf,
            "value": est.value,
            "stderr": est.stderr,
        }
        _emit([_with_config_echo(rec, rc)], rc)

    _guarded(body)


if __name__ == "__main__":
    main()
