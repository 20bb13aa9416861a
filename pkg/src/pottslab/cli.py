"""``potts`` command-line front end.

Exit codes: 0 on success, 1 when the library raises a :class:`PottsError`,
2 on a usage error (unknown flag, missing argument).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from .errors import OptimizationFailure, PottsError
from .records import ExperimentConfig, RunRecord, emit_results

DOMAIN_NAMES = {"s": "S", "d": "D", "dsep": "D_sep"}
# fields left out when comparing payloads of two runs of the same config
VOLATILE = ("runtime_ms",)


def _default_threads() -> int:
    raw = os.environ.get("POTTS_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _beta(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("beta must be >= 0 (use 'inf' for the hard-core limit)")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("--threads", type=_positive_int, default=_default_threads(), help="worker pool size [POTTS_THREADS or 1]")
    common.add_argument("--out", help="write the result file here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="result format (default depends on command)")

    ap = argparse.ArgumentParser(prog="potts", description="Antiferromagnetic Potts model on sparse random graphs.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def cmd(name, help):
        return sub.add_parser(name, parents=[common], help=help, description=help)

    p = cmd("exact", "exact ln Z of a graph file by enumeration and/or the cluster expansion")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--method", choices=("enum", "fk", "both"), default="enum")
    p.add_argument("--balanced", action="store_true", help="restrict to balanced assignments (enum only)")

    p = cmd("moments", "exact first or second moment over G(n, m)")
    p.add_argument("--mode", choices=("first", "second"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--samples", type=int, default=0, help="also estimate the first moment from this many sampled graphs")

    p = cmd("landscape", "maximize the overlap function over S, D or D_sep")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--domain", choices=tuple(DOMAIN_NAMES), default="d")
    p.add_argument("--kappa-cap", type=float, default=0.25)
    p.add_argument("--starts", type=int, default=20, help="number of random starts")
    p.add_argument("--trace", help="write the winning run's (iteration, f, pg_norm) trace as CSV")

    p = cmd("landscape-verify", "barmax margins, monotonicity, gradient and row-surgery sweeps")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--samples", type=int, default=1000)

    p = cmd("separability", "SEP1/SEP2 pass rates on planted samples")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--kappa-cap", type=float, default=0.25)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true", help="check SEP2 against every competitor (tiny n)")
    g.add_argument("--mcmc-witnesses", type=int, default=0, help="check SEP2 against this many Glauber states")

    p = cmd("freeenergy", "(1/n) ln Z over sampled graphs against the annealed formula")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--nmin", type=int, required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--nstep", type=_positive_int, default=2)
    p.add_argument("--replicas", type=_positive_int, required=True)
    p.add_argument("--budget", type=int, default=0, help="TI sweeps per grid point; 0 means exact enumeration")

    p = cmd("ti", "thermodynamic integration estimate of ln Z for a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--points", type=int, default=33)
    p.add_argument("--sweeps", type=int, default=2000, help="sweeps per grid point")
    p.add_argument("--burn-in", type=int, default=200, help="sweeps discarded per grid point")
    p.add_argument("--kernel", choices=("heat-bath", "metropolis"), default="heat-bath")
    p.add_argument("--exact-check", action="store_true", help="also report exact ln Z (small graphs)")

    p = cmd("sample", "dump a G(n, m) or planted sample as edge list plus assignment")
    p.add_argument("--model", choices=("gnm", "planted"), default="gnm")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--graph-out", required=True)
    p.add_argument("--assignment-out")

    cmd("selftest", "run the closed-form example suite")
    return ap


def _params(args):
    from .model import ModelParams

    return ModelParams(args.k, args.n, args.d, args.beta)


def _run_exact(args, rec):
    from .exact import z_balanced, z_enumerate, z_fk
    from .io import read_graph

    G = read_graph(args.graph)
    t = time.perf_counter()
    if args.balanced and args.method != "enum":
        raise PottsError("--balanced is only available with --method enum")
    out = {"method": args.method, "n": G.n, "m": G.num_edges}
    if args.method in ("enum", "both"):
        zf = z_balanced if args.balanced else z_enumerate
        out["log_z" if args.method == "enum" else "log_z_enum"] = zf(G, args.k, args.beta, args.threads).log_z
    if args.method in ("fk", "both"):
        out["log_z" if args.method == "fk" else "log_z_fk"] = z_fk(G, args.k, args.beta).log_z
    if args.method == "both":
        a, b = out["log_z_enum"], out["log_z_fk"]
        out["difference"] = a - b
        out["relative_difference"] = abs(math.expm1(a - b))
    out["runtime_ms"] = 1000.0 * (time.perf_counter() - t)
    return out


def _run_moments(args, rec):
    from .ensembles import SeededStream
    from .moments import (
        exact_first_moment_total,
        log_second_moment,
        mc_first_moment,
        overlap_columns,
        overlap_rows,
        second_moment_by_overlap,
    )

    params = _params(args)
    if args.mode == "first":
        if args.samples:
            r = mc_first_moment(params, args.samples, SeededStream(args.seed), args.balanced)
            rec.replica_seeds = [[args.seed, 0]]
        else:
            r = exact_first_moment_total(params, args.balanced)
        out = {
            "mode": "first",
            "balanced": args.balanced,
            "log_moment": r.exact_value,
            "log_ratio_to_annealed": r.log_ratio,
        }
        if args.samples:
            out.update(mc_log_mean=r.mc_estimate, mc_rel_std_error=r.mc_std_error, samples=r.n_samples, deviation_se=r.deviation_in_se())
        return out
    groups = second_moment_by_overlap(params)
    first = exact_first_moment_total(params, True).exact_value
    second = log_second_moment(groups)
    rows = overlap_rows(groups, params)
    if rec.config.format == "csv":
        rec.columns = overlap_columns(params.k)
        return {"rows": rows}
    return {
        "mode": "second",
        "log_second_moment": second,
        "log_first_moment_bal": first,
        "log_ratio": second - 2 * first,
        "n_overlaps": len(groups),
        "rows": rows,
    }


def _result_payload(res, p):
    from .landscape import f_eval, make_rho_bar

    fb = f_eval(make_rho_bar(p.k), p)
    return {
        "maximizer": np.asarray(res.maximizer).tolist(),
        "f_value": res.f_value,
        "f_bar": fb,
        "gap_to_bar": res.f_value - fb,
        "pg_norm": res.pg_norm,
        "stability": res.stability,
        "start_label": res.start_label,
        "iterations": res.iterations,
        "converged": res.converged,
        "ties": list(res.ties),
        "runs_converged": sum(r.converged for r in res.runs),
        "runs": len(res.runs),
    }


def _run_landscape(args, rec):
    from .landscape import LandscapeParams, maximize_f

    p = LandscapeParams(args.k, args.d, args.beta, args.kappa_cap)
    try:
        res = maximize_f(p, DOMAIN_NAMES[args.domain], n_random=args.starts, seed=args.seed)
    except OptimizationFailure as e:
        if e.best is None:
            raise
        res = e.best
    trace = [{"iteration": i, "f": f, "pg_norm": g} for i, f, g in res.trace]
    if args.trace:
        tr = RunRecord(rec.config, {"rows": trace}, columns=["iteration", "f", "pg_norm"])
        emit_results(tr, "csv", path=args.trace)
    if rec.config.format == "csv":
        rec.columns = ["iteration", "f", "pg_norm"]
        return {"rows": trace}
    out = _result_payload(res, p)
    out["domain"] = DOMAIN_NAMES[args.domain]
    return out


def _run_landscape_verify(args, rec):
    from .landscape import (
        LandscapeParams,
        flatten_sweep,
        grad_f,
        make_rho_bar,
        monotonicity_check_beta,
        monotonicity_check_d,
        smoothing_sweep,
        verify_barmax,
        f_eval,
    )

    k = args.k
    p = LandscapeParams(k, args.d, args.beta)
    gen = np.random.default_rng(args.seed)
    bm = verify_barmax(k, args.d, args.beta)
    mono_b = mono_d = 0
    grad_err = 0.0
    h = 1e-6
    bar = np.asarray(make_rho_bar(k))
    for _ in range(args.samples):
        rho = gen.dirichlet(np.ones(k), size=k)
        mono_b += monotonicity_check_beta(rho, p) >= 0
        mono_d += monotonicity_check_d(rho, p) >= 0
    for _ in range(min(args.samples, 20)):
        rho = 0.5 * gen.dirichlet(np.ones(k), size=k) + 0.5 * bar
        g = grad_f(rho, p)
        fd = np.empty_like(g)
        for idx in np.ndindex(k, k):
            e = np.zeros((k, k))
            e[idx] = h
            fd[idx] = (f_eval(rho + e, p) - f_eval(rho - e, p)) / (2 * h)
        grad_err = max(grad_err, float(np.max(np.abs(fd - g) / np.maximum(np.abs(g), 1e-300))))
    sm = smoothing_sweep(k, args.d, args.beta, args.samples, gen)
    fl = flatten_sweep(k, args.d, args.beta, args.samples, gen)
    return {
        "f_bar": bm.f_bar,
        "rho_s_margins": list(bm.margins),
        "rho_stable_margin": bm.stable_margin,
        "barmax_all_positive": bm.all_positive,
        "barmax_failing_s": bm.failing_s(),
        "monotonicity_samples": args.samples,
        "beta_violations": int(mono_b),
        "d_violations": int(mono_d),
        "gradient_max_rel_error": grad_err,
        "smoothing_checked": sm.checked,
        "smoothing_violations": len(sm.violations),
        "smoothing_note": sm.note,
        "flatten_checked": fl.checked,
        "flatten_violations": len(fl.violations),
    }


def _run_separability(args, rec):
    from .ensembles import SeededStream
    from .separability import empirical_separability_rate

    params = _params(args)
    mode = "exhaustive" if args.exhaustive else ("mcmc" if args.mcmc_witnesses else "none")
    r = empirical_separability_rate(
        params, args.samples, SeededStream(args.seed), args.kappa_cap, sep2=mode, witnesses=args.mcmc_witnesses or 20
    )
    rec.replica_seeds = [[args.seed, 0]]
    return {
        "sep1_rate": r.sep1_rate,
        "sep1_passes": r.sep1_passes,
        "samples": r.samples,
        "interval": list(r.sep1_interval),
        "sep2_mode": mode,
        "sep2_rate": r.sep2_rate,
        "sep2_interval": list(r.sep2_interval),
        "sep2_checked": r.sep2_checked,
        "in_regime": r.in_regime,
        "label": r.label,
    }


def _run_freeenergy(args, rec):
    from .mcmc import TISchedule, free_energy_experiment

    grid = list(range(args.nmin, args.nmax + 1, args.nstep))
    if not grid:
        raise PottsError("empty n range")
    estimator = "ti" if args.budget else "exact"
    sched = TISchedule.uniform(args.beta, sweeps_per_point=args.budget) if args.budget else None
    rows = free_energy_experiment(
        args.k, args.d, args.beta, grid, args.replicas, args.seed, estimator, args.threads, sched
    )
    rec.replica_seeds = [[args.seed, n, i] for n in grid for i in range(args.replicas)]
    rec.columns = ["n", "mean", "std", "formula", "gap", "replicas", "estimator"]
    return {"rows": [vars(r) for r in rows]}


def _run_ti(args, rec):
    from .ensembles import SeededStream
    from .exact import z_enumerate
    from .io import read_graph
    from .mcmc import TISchedule, thermo_integrate_lnZ
    from .model import ModelParams

    G = read_graph(args.graph)
    params = ModelParams(args.k, G.n, 2 * G.num_edges / max(G.n, 1), args.beta)
    sched = TISchedule.uniform(args.beta, args.points, args.sweeps, args.burn_in)
    t = time.perf_counter()
    r = thermo_integrate_lnZ(G, params, sched, SeededStream(args.seed).generator, args.kernel)
    rec.replica_seeds = [[args.seed, 0]]
    out = {
        "log_z": r.log_z,
        "stat_error": r.stat_error,
        "quad_error": r.quad_error,
        "total_error": r.total_error,
        "points": args.points,
        "sweeps_per_point": args.sweeps,
        "kernel": args.kernel,
        "runtime_ms": 1000.0 * (time.perf_counter() - t),
    }
    if args.exact_check:
        ex = z_enumerate(G, args.k, args.beta, args.threads).log_z
        out.update(exact_log_z=ex, relative_error=abs(r.log_z - ex) / abs(ex))
    return out


def _run_sample(args, rec):
    from .ensembles import SeededStream, condition_on_balanced, sample_gnm
    from .io import write_assignment, write_graph

    params = _params(args)
    stream = SeededStream(args.seed)
    out = {"model": args.model, "n": params.n, "m_target": params.m}
    if args.model == "gnm":
        G = sample_gnm(params, stream)
    else:
        ps = condition_on_balanced(params, stream)
        G = ps.graph
        out.update(p1=ps.p1, p2=ps.p2, attempts=ps.attempts)
        if args.assignment_out:
            write_assignment(ps.sigma_hat, args.assignment_out)
    write_graph(G, args.graph_out)
    out["edges"] = G.num_edges
    return out


RUNNERS = {
    "exact": _run_exact,
    "moments": _run_moments,
    "landscape": _run_landscape,
    "landscape-verify": _run_landscape_verify,
    "separability": _run_separability,
    "freeenergy": _run_freeenergy,
    "ti": _run_ti,
    "sample": _run_sample,
}
DEFAULT_FORMAT = {"freeenergy": "csv"}
# non-parameter options kept out of ExperimentConfig.params
_META = {"command", "seed", "out", "format", "threads"}


def parse_and_dispatch(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "selftest":
        from .selftest import run_selftest

        return 0 if run_selftest(stdout) else 1
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
    params = {k: v for k, v in vars(args).items() if k not in _META}
    cfg = ExperimentConfig(args.command, params, args.seed, args.out, fmt)
    rec = RunRecord(cfg)
    try:
        rec.finish(RUNNERS[args.command](args, rec))
        emit_results(rec, fmt, stream=stdout)
    except PottsError as e:
        print(f"potts {args.command}: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"potts {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
