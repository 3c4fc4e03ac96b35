import functools
import json
import sys

import click
import numpy as np
from pydantic import ValidationError

from Cli.checks import SUITES, CheckRunner
from Cli.run_config import DEFAULT_ENV_FILE, RunConfig
from Cli.trajectory_io import (
    INVARIANT_FIELDS,
    jet_lines,
    jets_to_json,
    read_trajectory,
    record_lines,
    trajectory_lines,
    versioned,
)
from Equivalence.equivalence import EquivalenceTester
from errors import GalinvError
from Group.group_core import random_element
from MovingFrame.motions import AnalyticMotion, SampledMotion
from MovingFrame.moving_frame import invariants
from log import Logger

logger = Logger("Cli").get_logger()

EQUIV_FIELDS = (
    "equivalent", "time_shift", "s", "v1", "v2", "v3",
    "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33",
    "y1", "y2", "y3", "max_signature_residual", "max_pointwise_residual",
    "ambiguous_shift", "anchor", "tol",
)
GEN_KINDS = ("circle", "helix-like", "poly", "boosted-copy")


def _fail(message):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def handle_errors(command):
    """Maps library and validation errors to a one-line message and exit code 2."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except GalinvError as e:
            logger.error("%s: %s", type(e).__name__, e)
            _fail(f"{type(e).__name__}: {e}")
        except ValidationError as e:
            messages = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()]
            _fail("invalid configuration: " + "; ".join(messages))
    return wrapper


def config_options(command):
    options = [
        click.option("--scheme", type=click.Choice(["central2", "central4"]), default=None,
                     help="Finite-difference scheme for sampled jets."),
        click.option("--smooth-window", type=int, default=None, help="Odd Savitzky-Golay window."),
        click.option("--smooth-degree", type=int, default=None, help="Smoothing polynomial degree (>= 4)."),
        click.option("--tol", type=float, default=None, help="Pointwise equivalence tolerance."),
        click.option("--tol-a", type=float, default=None, help="Acceleration regularity threshold."),
        click.option("--tol-b", type=float, default=None, help="Torsion regularity threshold."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
                     help="Output format: JSON lines or CSV."),
        click.option("--seed", type=int, default=None, help="Seed for generated data."),
        click.option("--anchor", type=float, default=None, help="Anchor time for transform recovery."),
        click.option("--shift-grid", type=int, default=None, help="Size of the coarse time-shift grid."),
        click.option("--window-margin", type=float, default=None,
                     help="Time trimmed from both ends of the first trajectory."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _config(ctx, fmt=None, **flags):
    return RunConfig.from_env(ctx.obj["env_file"], format=fmt, **flags)


def _emit(lines):
    for line in lines:
        click.echo(line)


def _sampled(path, cfg):
    ts, xs = read_trajectory(path)
    return SampledMotion(ts, xs, cfg.scheme, cfg.smooth_window, cfg.smooth_degree)


@click.group()
@click.option("--env-file", default=DEFAULT_ENV_FILE, show_default=True,
              help="Dotenv file with default settings.")
@click.pass_context
def cli(ctx, env_file):
    """Galilean differential invariants of motions in space."""
    ctx.ensure_object(dict)
    ctx.obj["env_file"] = env_file


@cli.command("invariants")
@click.argument("input_path", type=click.Path(dir_okay=False))
@config_options
@click.pass_context
@handle_errors
def cmd_invariants(ctx, input_path, **flags):
    """Per-sample invariants a1, a2, a3 and Jcurv of a trajectory CSV."""
    cfg = _config(ctx, **flags)
    m = _sampled(input_path, cfg)
    records = []
    for j in m.node_jets:
        inv = invariants(j, cfg.tol_a, cfg.tol_b).to_dict()
        inv["boundary"] = j.boundary
        records.append(inv)
    _emit(record_lines(records, cfg.format, INVARIANT_FIELDS))


@cli.command("jets")
@click.argument("input_path", type=click.Path(dir_okay=False))
@config_options
@click.pass_context
@handle_errors
def cmd_jets(ctx, input_path, **flags):
    """Estimated fourth-order jets of a trajectory CSV (CSV rows or one JSON array)."""
    cfg = _config(ctx, **flags)
    m = _sampled(input_path, cfg)
    if cfg.format == "json":
        click.echo(jets_to_json(m.node_jets))
    else:
        _emit(jet_lines(m.node_jets))


def _report_record(report):
    record = report.to_dict()
    g = report.transform
    if g is not None:
        record.update({"s": g.s, "v1": g.v[0], "v2": g.v[1], "v3": g.v[2],
                       "y1": g.y[0], "y2": g.y[1], "y3": g.y[2]})
        for r in range(3):
            for c in range(3):
                record[f"R{r + 1}{c + 1}"] = g.R[r, c]
    return record


@cli.command("equiv")
@click.argument("path_a", type=click.Path(dir_okay=False))
@click.argument("path_b", type=click.Path(dir_okay=False))
@click.option("--strict-shift", is_flag=True, help="Fail with AmbiguousShift when a1 is flat over the window.")
@config_options
@click.pass_context
@handle_errors
def cmd_equiv(ctx, path_a, path_b, strict_shift, **flags):
    """Tests whether trajectory B is a Galilean image of trajectory A (exit 0 yes, 1 no)."""
    cfg = _config(ctx, **flags)
    m1, m2 = _sampled(path_a, cfg), _sampled(path_b, cfg)
    lo, hi = m1.domain
    window = (lo + cfg.window_margin, hi - cfg.window_margin)
    tester = EquivalenceTester(tol=cfg.tol, tol_a=cfg.tol_a, tol_b=cfg.tol_b, shift_grid=cfg.shift_grid,
                                strict_shift=strict_shift)
    report = tester.test(m1, m2, window=window, anchor=cfg.anchor)
    if cfg.format == "json":
        click.echo(json.dumps(versioned(report.to_dict())))
    else:
        _emit(record_lines([_report_record(report)], "csv", EQUIV_FIELDS))
    for warning in report.warnings:
        click.echo(f"warning: {warning}", err=True)
    sys.exit(0 if report.equivalent else 1)


@cli.command("gen")
@click.argument("kind", type=click.Choice(GEN_KINDS))
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
              help="Source trajectory for boosted-copy.")
@click.option("--transform-out", type=click.Path(dir_okay=False), default=None,
              help="Write the applied transformation of boosted-copy as JSON.")
@click.option("--t0", type=float, default=0.0, show_default=True)
@click.option("--t1", type=float, default=3.0, show_default=True)
@click.option("--samples", "n", type=int, default=3001, show_default=True)
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--omega", type=float, default=1.0, show_default=True)
@click.option("--pitch", type=float, default=0.2, show_default=True)
@click.option("--degree", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=None, help="Seed; defaults to the configured seed.")
@click.pass_context
@handle_errors
def cmd_gen(ctx, kind, input_path, transform_out, t0, t1, n, radius, omega, pitch, degree, seed):
    """Writes a synthetic trajectory CSV to stdout."""
    cfg = _config(ctx, seed=seed)
    rng = np.random.default_rng(cfg.seed)
    if kind == "boosted-copy":
        if input_path is None:
            raise click.UsageError("boosted-copy needs --input")
        ts, xs = read_trajectory(input_path)
        g = random_element(rng)
        new_ts = ts + g.s
        new_xs = xs @ g.R.T + ts[:, None] * g.v + g.y
        if transform_out:
            with open(transform_out, "w", encoding="utf-8") as f:
                json.dump(g.to_dict(), f)
        _emit(trajectory_lines(new_ts, new_xs))
        return
    if n < 2 or t1 <= t0:
        raise click.UsageError("need --samples >= 2 and --t1 > --t0")
    if kind == "circle":
        m = AnalyticMotion.circle(radius, omega)
    elif kind == "helix-like":
        m = AnalyticMotion.helix_like(radius, omega, pitch)
    else:
        m = AnalyticMotion.random_polynomial(rng, degree)
    ts = np.linspace(t0, t1, n)
    _emit(trajectory_lines(ts, m.positions(ts)))


@cli.command("check")
@click.argument("suite", type=click.Choice(SUITES + ("all",)))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inject-fault", is_flag=True, hidden=True)
@handle_errors
def cmd_check(suite, seed, inject_fault):
    """Runs the self-check suites; exit 0 when every suite passes."""
    results = CheckRunner(seed=seed, inject_fault=inject_fault).run(suite)
    for result in results:
        click.echo(result.summary())
        _emit(result.lines)
    sys.exit(0 if all(r.passed for r in results) else 1)
