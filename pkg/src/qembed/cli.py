"""Command line entry point: ``qembed <subcommand> [options]``.

Exit codes: 0 all verdicts pass, 2 some verdict failed, 3 usage error,
4 numerical failure.
"""

from __future__ import annotations

import functools
import math
import sys
import time

import click
import numpy as np

from . import experiments as ex
from . import verifiers as vf
from .channels import depolarizing_channel, flip_functional, flip_functional_kraus, identity_channel, random_embedding_channel
from .games import GameSpec, equality_game_simulate
from .linalg import NumericalFailure, dump_matrix
from .report import ExperimentReport
from .sampling import RngStream, parse_seed, random_density, substream

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3, 4

LEMMAS = ("twirl", "avg", "second-moment", "fourth-moment", "sandwich", "random-basis", "flip",
          "projsupp", "projconc")


class SeedType(click.ParamType):
    name = "u64"

    def convert(self, value, param, ctx):
        try:
            return parse_seed(value)
        except (TypeError, ValueError):
            self.fail(f"{value!r} is not a decimal or 0x-hex unsigned 64-bit integer", param, ctx)


def common_options(fn):
    @click.option("--seed", type=SeedType(), default=0, show_default=True, help="64-bit seed (decimal or 0x-hex).")
    @click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, help="Write report here instead of stdout.")
    @click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
    @click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
    @click.option("--dump", is_flag=True, help="Print the operators involved to stderr.")
    @click.option("--full", is_flag=True, help="Include per-trial records in JSON output.")
    @click.option("--timing", is_flag=True, help="Record wall-clock runtime (makes output non-reproducible).")
    @functools.wraps(fn)
    def wrapper(*args, seed, out, fmt, workers, dump, full, timing, **kwargs):
        start = time.perf_counter()
        dumps = []
        report = fn(*args, rng=RngStream(seed), workers=workers, dumps=dumps, **kwargs)
        if timing:
            report.runtime_seconds = time.perf_counter() - start
        if dump:
            for name, M in dumps:
                click.echo(f"# {name}", err=True)
                click.echo(dump_matrix(M), err=True)
        text = report.to_json(full=full) if fmt == "json" else report.to_csv()
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
        return EXIT_OK if report.passed else EXIT_FAIL

    return wrapper


@click.group()
def cli():
    """Numerical checks of quantum dimensionality-reduction bounds."""


# -- verify -----------------------------------------------------------------

def _random_delta(d, rng):
    return random_density(d, d, rng) - random_density(d, d, rng)


def _record(lemma, params, rng, estimate, std_error, bound, verdict):
    return {"lemma_id": lemma, "params": params, "seed": rng.seed, "stream_id": rng.stream_id,
            "estimate": estimate, "std_error": std_error, "bound": bound, "verdict": verdict}


def run_lemma(lemma, rng, dim=None, samples=None, target_dim=None, rank=None, delta_param=1.0,
              workers=1, dumps=None):
    """Run one verifier and return its JSON record."""
    dumps = [] if dumps is None else dumps
    if lemma == "twirl":
        d, N = dim or 2, samples or 200_000
        delta = np.subtract(*ex.state_pair("orthogonal-pure", d))
        dumps.append(("delta", delta))
        est = vf.twirl_estimate(delta, d, N, rng, workers)
        dev = float(np.max(np.abs(est.mean - vf.twirl_closed_form(delta, d))))
        se = float(np.max(est.std_error))
        bound = max(5e-3, 4 * se)
        return _record(lemma, {"d": d, "N": N}, rng, dev, se, bound, "pass" if dev <= bound else "fail")
    if lemma == "avg":
        d, N = dim or 8, samples or 10_000
        e = target_dim or max(1, d // 4)
        ch = random_embedding_channel(d, e, rng.spawn(1 << 40))
        rho, sigma = ex.state_pair("orthogonal-pure", d)
        dumps.extend((f"kraus[{k}]", A) for k, A in enumerate(ch.kraus_ops))
        chk = vf.avg_contraction_check(ch, rho, sigma, N, rng, workers)
        return _record(lemma, {"d": d, "e": e, "N": N}, rng, chk.estimate.mean, chk.estimate.std_error,
                       chk.bound_value, chk.verdict)
    if lemma in ("second-moment", "fourth-moment"):
        d, N = dim or 3, samples or 100_000
        delta = _random_delta(d, rng.spawn(1 << 40))
        dumps.append(("delta", delta))
        if lemma == "second-moment":
            exact = vf.second_moment_exact(delta, d)
            est = vf.second_moment_estimate(delta, d, N, rng, workers)
            ok = abs(est.mean - exact) <= 3 * est.std_error
        else:
            exact = vf.fourth_moment_exact(delta, d)
            est = vf.fourth_moment_estimate(delta, d, N, rng, workers)
            ok = abs(est.mean - exact) <= 3 * est.std_error and exact <= vf.fourth_moment_bound(delta, d)
        return _record(lemma, {"d": d, "N": N}, rng, est.mean, est.std_error, exact, "pass" if ok else "fail")
    if lemma == "sandwich":
        d, N = dim or 2, samples or 10_000
        delta = np.subtract(*ex.state_pair("orthogonal-pure", d)) if d == 2 else _random_delta(d, rng.spawn(1 << 40))
        dumps.append(("delta", delta))
        res = vf.uniform_povm_quantity(delta, d, N, rng, workers)
        rec = _record(lemma, {"d": d, "N": N}, rng, res.estimate.mean, res.estimate.std_error,
                      [res.sandwich_lower, res.sandwich_upper], res.verdict)
        rec["berger"] = {"lhs": res.berger_lhs, "rhs": res.berger_rhs, "ok": res.berger_ok}
        return rec
    if lemma == "random-basis":
        d, N = dim or 4, samples or 10_000
        delta = _random_delta(d, rng.spawn(1 << 40))
        dumps.append(("delta", delta))
        bias = vf.random_basis_bias(delta, d, N, rng.spawn(1), workers)
        q = vf.uniform_povm_quantity(delta, d, N, rng.spawn(2), workers).estimate
        sig = math.hypot(bias.std_error, q.std_error / 2)
        ok = abs(bias.mean - q.mean / 2) <= 3 * sig
        return _record(lemma, {"d": d, "N": N}, rng, bias.mean, bias.std_error, q.mean / 2, "pass" if ok else "fail")
    if lemma == "flip":
        d = dim or 8
        e = target_dim or max(1, d // 2)
        count = samples or 100
        excess, agree = -np.inf, 0.0
        channels = (random_embedding_channel(d, e, substream(rng, i)) for i in range(count))
        extra = (identity_channel(d), depolarizing_channel(d, e))
        for ch in list(channels) + list(extra):
            v = flip_functional(ch)
            agree = max(agree, abs(v - flip_functional_kraus(ch)))
            excess = max(excess, v - ch.dim_in * ch.dim_out)
        ok = excess <= 1e-6 and agree <= 1e-8
        rec = _record(lemma, {"d": d, "e": e, "channels": count}, rng, excess, 0.0, 1e-6, "pass" if ok else "fail")
        rec["two_path_max_diff"] = agree
        return rec
    if lemma == "projsupp":
        dA, dB = dim or 4, target_dim or 3
        r, N = rank or 2, samples or 10_000
        res = vf.projsupp_check(dA, dB, r, rng, trials=N)
        return _record(lemma, {"dimA": dA, "dimB": dB, "rankP": r, "N": N}, rng, res.max_violation, 0.0,
                       res.slack, res.verdict)
    if lemma == "projconc":
        d, t, N = dim or 32, rank or 4, samples or 10_000
        chk = vf.projconc_tail(d, t, delta_param, N, rng, workers)
        return _record(lemma, {"d": d, "t": t, "delta": delta_param, "N": N}, rng, chk.estimate.mean,
                       chk.estimate.std_error, chk.bound_value, chk.verdict)
    raise click.BadParameter(f"unknown lemma {lemma!r}", param_hint="--lemma")


@cli.command()
@click.option("--lemma", type=click.Choice(LEMMAS + ("all",)), default="all", show_default=True)
@click.option("--dim", type=click.IntRange(min=1), default=None, help="Dimension (per-lemma default).")
@click.option("--samples", type=click.IntRange(min=2), default=None, help="Monte Carlo samples (per-lemma default).")
@click.option("--target-dim", type=click.IntRange(min=1), default=None, help="Channel output dim, or dim of B for projsupp.")
@click.option("--rank", type=click.IntRange(min=1), default=None, help="Projector rank for projsupp/projconc.")
@click.option("--delta-param", type=click.FloatRange(min=0), default=1.0, show_default=True)
@common_options
def verify(lemma, dim, samples, target_dim, rank, delta_param, rng, workers, dumps):
    """Run lemma verifiers and emit one record per lemma."""
    chosen = LEMMAS if lemma == "all" else (lemma,)
    records = []
    for name in chosen:
        stream = substream(rng, LEMMAS.index(name))
        records.append(run_lemma(name, stream, dim, samples, target_dim, rank, delta_param, workers, dumps))
    return ExperimentReport(
        experiment_id="verify",
        params={"lemma": lemma, "dim": dim, "samples": samples, "target_dim": target_dim, "rank": rank,
                "delta_param": delta_param},
        seed=rng.seed,
        bounds={r["lemma_id"]: r["bound"] for r in records},
        aggregates={"records": records},
        trials=records,
        verdicts={r["lemma_id"]: r["verdict"] for r in records},
    )


# -- game ---------------------------------------------------------------------

@cli.command()
@click.option("--family", type=click.Choice(["orthogonal-pure", "rank-r-orthogonal-projectors", "random-rank-r-pair"]),
              default="orthogonal-pure", show_default=True)
@click.option("--dim", type=click.IntRange(min=2), default=2, show_default=True)
@click.option("--rank", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--rounds", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--strategy", type=click.Choice(["swap-test", "optimal-M"]), default="swap-test", show_default=True)
@click.option("--adversary", type=click.Choice(["haar-U", "fixed-U"]), default="haar-U", show_default=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write a per-round CSV trace here.")
@common_options
def game(family, dim, rank, rounds, strategy, adversary, trace_path, rng, workers, dumps):
    """Simulate the equality-testing game."""
    rho, sigma = ex.state_pair(family, dim, rank, rng.spawn(1 << 40))
    dumps.extend([("rho", rho), ("sigma", sigma)])
    spec = GameSpec(rho, sigma, rounds, adversary=adversary, strategy=strategy)
    res = equality_game_simulate(spec, rng, workers=workers, keep_trace=trace_path is not None)
    binom = math.sqrt(res.analytic_success * (1 - res.analytic_success) / rounds)
    ok = abs(res.success_rate - res.analytic_success) <= 4 * binom + 1e-12
    report = ExperimentReport(
        experiment_id="game",
        params={"family": family, "dim": dim, "rank": rank, "rounds": rounds, "strategy": strategy,
                "adversary": adversary},
        seed=rng.seed,
        bounds={"analytic_success": res.analytic_success},
        aggregates={"success_rate": res.success_rate, "std_error": res.std_error,
                    "analytic_success": res.analytic_success, "bias": res.bias},
        trials=res.trace,
        verdicts={"matches_analytic": "pass" if ok else "fail"},
    )
    if trace_path:
        with open(trace_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    return report


# -- embedding experiments ---------------------------------------------------------

FAMILY_CHOICE = click.Choice(["orthogonal-pure", "rank-r-orthogonal-projectors", "random-rank-r-pair"])


@cli.command()
@click.option("--dim", type=click.IntRange(min=2), default=64, show_default=True)
@click.option("--rank", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--epsilon", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.5, show_default=True)
@click.option("--target-dim", type=click.IntRange(min=1), default=None, help="Defaults to ceil(2 sqrt(r d / eps)).")
@click.option("--trials", type=click.IntRange(min=1), default=500, show_default=True)
@click.option("--family", type=FAMILY_CHOICE, default="orthogonal-pure", show_default=True)
@common_options
def embed(dim, rank, epsilon, target_dim, trials, family, rng, workers, dumps):
    """Trace-norm embedding trials with random isometry channels."""
    params = ex.EmbedParams(d=dim, r=rank, epsilon=epsilon, e=target_dim, trials=trials, state_family=family)
    rho, sigma = ex.state_pair(family, dim, rank, rng.spawn(1 << 40))
    dumps.extend([("rho", rho), ("sigma", sigma)])
    return ex.embed_experiment(params, rng, workers=workers)


@cli.command("two-norm")
@click.option("--dim", type=click.IntRange(min=2), default=16, show_default=True)
@click.option("--target-dim", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--trials", type=click.IntRange(min=2), default=10_000, show_default=True)
@click.option("--family", type=FAMILY_CHOICE, default="orthogonal-pure", show_default=True)
@click.option("--rank", type=click.IntRange(min=1), default=1, show_default=True)
@common_options
def two_norm(dim, target_dim, trials, family, rank, rng, workers, dumps):
    """Average 2-norm contraction and the (epsilon, delta) region it rules out."""
    rho, sigma = ex.state_pair(family, dim, rank, rng.spawn(1 << 40))
    dumps.extend([("rho", rho), ("sigma", sigma)])
    return ex.two_norm_experiment(dim, target_dim, trials, family, rng, r=rank, workers=workers)


@cli.command()
@click.option("--dim", type=click.IntRange(min=2), default=8, show_default=True)
@click.option("--epsilon", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--delta", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--family", type=click.Choice(["all", "orthogonal-pure", "half-projectors", "rank-r"]),
              default="all", show_default=True)
@click.option("--rank", "ranks", type=click.IntRange(min=1), multiple=True, help="Projector rank(s) for rank-r pairs.")
@common_options
def bounds(dim, epsilon, delta, family, ranks, rng, workers, dumps):
    """Target-dimension lower-bound table."""
    if family in ("all", "rank-r") and not ranks:
        ranks = tuple(range(1, dim // 2 + 1))
    pairs = ex.standard_pairs(dim, ranks if family in ("all", "rank-r") else ())
    keep = {
        "all": lambda label: True,
        "orthogonal-pure": lambda label: label == "orthogonal-pure",
        "half-projectors": lambda label: label == "orthogonal-half-projectors",
        "rank-r": lambda label: label.startswith("rank-"),
    }[family]
    pairs = [p for p in pairs if keep(p[0])]
    for label, rho, sigma, _ in pairs:
        dumps.append((f"{label}:rho-sigma", rho - sigma))
    return ex.lower_bound_report(dim, epsilon, delta, pairs, seed=rng.seed)


def _int_list(ctx, param, value):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")


@cli.command()
@click.option("--points", type=click.IntRange(min=2), default=32, show_default=True)
@click.option("--dim", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--target-dims", callback=_int_list, default="8,16,32,64", show_default=True)
@click.option("--epsilon", type=click.FloatRange(0, 1, min_open=True), default=0.5, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=10, show_default=True)
@common_options
def jl(points, dim, target_dims, epsilon, trials, rng, workers, dumps):
    """Classical Johnson-Lindenstrauss baseline."""
    return ex.jl_baseline(points, dim, target_dims, epsilon, trials, rng)


@cli.command()
@click.option("--strings", type=click.IntRange(min=2), default=64, show_default=True)
@click.option("--compressed-dim", type=click.IntRange(min=2), default=32, show_default=True)
@click.option("--rounds", type=click.IntRange(min=1), default=8, show_default=True)
@common_options
def fingerprint(strings, compressed_dim, rounds, rng, workers, dumps):
    """Quantum fingerprinting with compressed states and swap tests."""
    return ex.fingerprint_demo(strings, compressed_dim, rounds, rng)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="qembed", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except NumericalFailure as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return EXIT_NUMERICAL
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
