"""``seclink`` command line: region points, grid oracle, sweeps, simulation, leakage.

Exit status 0 on success, 2 on usage or configuration errors (including
requests above a size cap), 3 when the rates are infeasible or outside the
joint scheme's bookkeeping.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import click

from seclink import __version__
from seclink.rate_region import (
    RegionError,
    default_cardinalities,
    evaluate,
    grid_oracle,
    optimize_key_rate,
    sweep,
    witness_digest,
)
from seclink.codec.leakage import leakage_exact, leakage_plugin
from seclink.codec.rates import CapExceeded, Case2Inapplicable, CodecError, DecodabilityError
from seclink.codec.simulate import run_trials
from seclink.workbench.cache import CacheError, ResultCache, ResultRecord
from seclink.workbench.config import ConfigError, ExperimentConfig, digest, parse_config

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

SWEEP_HEADER = ["varied_rate", "joint_key_rate", "separation_key_rate", "witness_digest"]
SIMULATE_HEADER = ["n", "trials", "p_e_hat", "ci_lo", "ci_hi", "leakage", "leakage_method", "seed"]
POINT_HEADER = ["r1", "r2", "joint_key_rate", "separation_key_rate", "joint_feasible",
                "separation_feasible", "i_uy_t", "i_uz_t", "i_ux_y", "i_tx_y", "witness_digest"]
ORACLE_HEADER = ["r1", "r2", "baseline", "key_rate", "resolution", "card_t", "card_u", "witness_digest"]
LEAKAGE_HEADER = ["n", "method", "leakage_per_symbol", "leakage_bits", "size", "seed"]


class Infeasible(Exception):
    """Computation finished but the requested point is infeasible; carries the CSV."""

    def __init__(self, message: str, text: str | None = None):
        super().__init__(message)
        self.text = text


def fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.10f}"


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _load(path: str, seed: int | None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from None
    except UnicodeDecodeError:
        raise ConfigError([f"{path}: not UTF-8 text"]) from None
    return parse_config(text).with_seed(seed)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _run(ctx: click.Context, command: str, compute) -> None:
    """Load config, consult the cache, compute, emit, and map errors to exit codes."""
    p = ctx.obj
    try:
        cfg = _load(p["config"], p["seed"])
        seed = cfg.optimizer.seed
        cache = None if p["no_cache"] else ResultCache()
        key = (digest(cfg), command, seed)
        rec = cache.lookup(*key) if cache else None
        if rec is None:
            try:
                text, status = compute(cfg), 0
            except Infeasible as exc:
                if exc.text is None:
                    raise
                text, status = exc.text, EXIT_INFEASIBLE
                click.echo(f"infeasible: {exc}", err=True)
            if cache:
                cache.store(ResultRecord(*key, __version__, {"csv": text, "status": status}))
        else:
            text, status = rec.outputs["csv"], rec.outputs["status"]
        _emit(text, p["out"])
    except ConfigError as exc:
        for v in exc.violations:
            click.echo(f"config error: {v}", err=True)
        ctx.exit(EXIT_CONFIG)
    except (Infeasible, Case2Inapplicable, DecodabilityError) as exc:
        click.echo(f"infeasible: {exc}", err=True)
        ctx.exit(EXIT_INFEASIBLE)
    except (RegionError, CodecError, CacheError) as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    ctx.exit(status)


def common(f):
    f = click.option("--no-cache", is_flag=True, help="Neither read nor write the result cache.")(f)
    f = click.option("--seed", type=int, default=None, help="Override optimizer and codec seeds.")(f)
    f = click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                     help="CSV destination (default: stdout).")(f)
    f = click.option("--config", "config", required=True, type=click.Path(), help="Experiment JSON.")(f)
    return f


def rate_options(f):
    f = click.option("--r2", type=float, default=None, help="Secure link rate (bits/symbol).")(f)
    f = click.option("--r1", type=float, default=None, help="Public link rate (bits/symbol).")(f)
    return f


def _stash(ctx, **kw):
    ctx.obj = kw


@click.group()
@click.version_option(__version__, prog_name="seclink")
def main():
    """Secret-key rate region, grid oracle and finite-blocklength simulator."""


@main.command()
@common
@rate_options
@click.pass_context
def point(ctx, config, out, seed, no_cache, r1, r2):
    """Key rate at the config's auxiliary pair, or optimized when none is given."""
    _stash(ctx, config=config, out=out, seed=seed, no_cache=no_cache)

    def compute(cfg: ExperimentConfig) -> str:
        src, rc, aux = cfg.joint_source(), cfg.rates(r1, r2), cfg.aux()
        if aux is None:
            sep = optimize_key_rate(src, rc, cfg.card_t, cfg.card_u, cfg.optimizer, "separation")
            joint = optimize_key_rate(src, rc, cfg.card_t, cfg.card_u, cfg.optimizer, "joint",
                                      warm_starts=[sep.witness])
        else:
            joint, sep = evaluate(src, aux, rc, "joint"), evaluate(src, aux, rc, "separation")
        t = joint.terms
        rate = lambda pt: pt.key_rate if pt.feasible else float("nan")
        text = to_csv(POINT_HEADER, [[rc.r1, rc.r2, rate(joint), rate(sep), str(joint.feasible).lower(),
                                      str(sep.feasible).lower(), t.i_uy_t, t.i_uz_t, t.i_ux_y, t.i_tx_y,
                                      witness_digest(joint.witness)]])
        if not joint.feasible:
            raise Infeasible("auxiliary pair violates the rate constraints", text)
        return text

    _run(ctx, f"point r1={r1} r2={r2}", compute)


@main.command()
@common
@rate_options
@click.pass_context
def oracle(ctx, config, out, seed, no_cache, r1, r2):
    """Exhaustive grid maximization at the optimizer's grid resolution."""
    _stash(ctx, config=config, out=out, seed=seed, no_cache=no_cache)

    def compute(cfg: ExperimentConfig) -> str:
        src, rc = cfg.joint_source(), cfg.rates(r1, r2)
        dt, du = default_cardinalities(src)
        ct, cu = cfg.card_t or dt, cfg.card_u or du
        res = cfg.optimizer.grid_resolution
        rows = []
        for baseline in ("joint", "separation"):
            pt = grid_oracle(src, rc, ct, cu, res, baseline)
            rows.append([rc.r1, rc.r2, baseline, pt.key_rate, res, ct, cu, witness_digest(pt.witness)])
        return to_csv(ORACLE_HEADER, rows)

    _run(ctx, f"oracle r1={r1} r2={r2}", compute)


@main.command("sweep")
@common
@rate_options
@click.option("--vary", type=click.Choice(["r1", "r2"]), default=None, help="Rate to sweep.")
@click.option("--from", "start", type=float, default=None, help="First value of the swept rate.")
@click.option("--to", "stop", type=float, default=None, help="Last value of the swept rate.")
@click.option("--steps", type=click.IntRange(min=2), default=None, help="Number of points.")
@click.pass_context
def sweep_cmd(ctx, config, out, seed, no_cache, r1, r2, vary, start, stop, steps):
    """Joint and separation optimum along one rate axis."""
    _stash(ctx, config=config, out=out, seed=seed, no_cache=no_cache)

    def compute(cfg: ExperimentConfig) -> str:
        s = cfg.sweep
        v = vary or (s.vary if s else None)
        lo = start if start is not None else (s.start if s else None)
        hi = stop if stop is not None else (s.stop if s else None)
        k = steps if steps is not None else (s.steps if s else None)
        if None in (v, lo, hi, k):
            raise ConfigError(["/sweep: vary, from, to and steps are required (config or flags)"])
        other = r2 if v == "r1" else r1
        if other is None:
            other = cfg.r2 if v == "r1" else cfg.r1
        if other is None and s is not None:
            other = s.fixed
        if other is None:
            raise ConfigError([f"/rates: the fixed rate {'r2' if v == 'r1' else 'r1'} is required"])
        rows = sweep(cfg.joint_source(), v, other, lo, hi, k, cfg.card_t, cfg.card_u, cfg.optimizer)
        return to_csv(SWEEP_HEADER, [[r.varied_rate, r.joint_key_rate, r.separation_key_rate,
                                      witness_digest(r.joint.witness)] for r in rows])

    _run(ctx, f"sweep r1={r1} r2={r2} vary={vary} from={start} to={stop} steps={steps}", compute)


def _codec_aux(cfg: ExperimentConfig, rc):
    aux = cfg.aux()
    if aux is None:
        aux = optimize_key_rate(cfg.joint_source(), rc, cfg.card_t, cfg.card_u, cfg.optimizer).witness
    return aux


def _codec_params(cfg: ExperimentConfig, n: int | None, trials: int | None):
    p = cfg.codec
    return replace(p, n=p.n if n is None else n, trials=p.trials if trials is None else trials)


@main.command()
@common
@rate_options
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Blocklength.")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Monte Carlo trials.")
@click.option("--leakage-method", type=click.Choice(["auto", "exact", "plugin", "none"]), default="auto",
              help="auto: exact when enumeration fits, else plug-in (needs >= 1000 trials).")
@click.pass_context
def simulate(ctx, config, out, seed, no_cache, r1, r2, n, trials, leakage_method):
    """Key-agreement Monte Carlo plus leakage of the same codebook."""
    _stash(ctx, config=config, out=out, seed=seed, no_cache=no_cache)

    def compute(cfg: ExperimentConfig) -> str:
        src, rc = cfg.joint_source(), cfg.rates(r1, r2)
        params = _codec_params(cfg, n, trials)
        aux = _codec_aux(cfg, rc)
        rep = run_trials(src, aux, rc, params)
        leak, method = float("nan"), "none"
        if leakage_method in ("auto", "exact"):
            try:
                leak, method = leakage_exact(src, aux, rc, params).leakage_per_symbol, "exact"
            except CapExceeded:
                if leakage_method == "exact":
                    raise
        if method == "none" and leakage_method in ("auto", "plugin") and params.trials >= 1000:
            leak, method = leakage_plugin(src, aux, rc, params).leakage_per_symbol, "plugin"
        return to_csv(SIMULATE_HEADER, [[params.n, params.trials, rep.p_e_hat, rep.ci_lo, rep.ci_hi,
                                         leak, method, params.seed]])

    _run(ctx, f"simulate r1={r1} r2={r2} n={n} trials={trials} leakage={leakage_method}", compute)


@main.command()
@common
@rate_options
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Blocklength.")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Samples for the plug-in method.")
@click.option("--method", type=click.Choice(["exact", "plugin"]), default="exact")
@click.pass_context
def leakage(ctx, config, out, seed, no_cache, r1, r2, n, trials, method):
    """Per-symbol key leakage to Eve for the seeded codebook."""
    _stash(ctx, config=config, out=out, seed=seed, no_cache=no_cache)

    def compute(cfg: ExperimentConfig) -> str:
        src, rc = cfg.joint_source(), cfg.rates(r1, r2)
        params = _codec_params(cfg, n, trials)
        aux = _codec_aux(cfg, rc)
        fn = leakage_exact if method == "exact" else leakage_plugin
        r = fn(src, aux, rc, params)
        return to_csv(LEAKAGE_HEADER, [[r.n, r.method, r.leakage_per_symbol, r.leakage_bits, r.size,
                                        r.codebook_seed]])

    _run(ctx, f"leakage r1={r1} r2={r2} n={n} trials={trials} method={method}", compute)


@main.command("validate-config")
@click.option("--config", "config", required=True, type=click.Path(), help="Experiment JSON.")
@click.pass_context
def validate_config(ctx, config):
    """Check a config file; prints its digest when valid."""
    try:
        cfg = _load(config, None)
    except ConfigError as exc:
        for v in exc.violations:
            click.echo(f"config error: {v}", err=True)
        ctx.exit(EXIT_CONFIG)
    click.echo(f"ok {digest(cfg)}")


def run_command(argv) -> int:
    """Run the CLI in-process and return its exit status instead of exiting."""
    try:
        rv = main.main(args=list(argv), prog_name="seclink", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    main()
