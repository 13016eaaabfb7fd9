"""Command-line front end: simulate, constants, chain, fixedpoint, verify.

Every run is determined by (config, seed): replicate streams are split from
the master seed by purpose and replicate index, so rerunning a command with
the same arguments reproduces output bodies byte for byte, and raising the
replicate count extends a run without perturbing earlier replicates.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 output error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import chain as chain_mod
from . import fixedpoint as fp
from . import means, verify
from ._rng import generator
from .errors import ConfigInvalid, IoError, SplitLabError
from .splitters import (
    SplitterSpec,
    bary_search_tree,
    beta_binary,
    binary_search_tree,
    dirichlet,
    median_of,
    splitter_moments,
)
from .trees import SplitTreeParams, default_params, simulate_stats

SCHEMA_VERSION = "1"

_FAMILY_ALIASES = {
    "bst": "binary_search_tree",
    "binary_search_tree": "binary_search_tree",
    "median": "median_of",
    "median_of": "median_of",
    "med3": "median_of",
    "bary": "bary_search_tree",
    "bary_search_tree": "bary_search_tree",
    "dirichlet": "dirichlet",
    "beta_binary": "beta_binary",
    "bb": "beta_binary",
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(c) for c in row])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _write_json(path: str, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _build_spec(args) -> SplitterSpec:
    family = _FAMILY_ALIASES.get(args.family)
    if family is None:
        raise ConfigInvalid(
            f"unknown family {args.family!r}; choose from {sorted(set(_FAMILY_ALIASES))}"
        )
    if family == "binary_search_tree":
        return binary_search_tree()
    if family == "median_of":
        return median_of(args.k)
    if family == "bary_search_tree":
        return bary_search_tree(args.b or 3)
    if family == "dirichlet":
        alpha = tuple(float(t) for t in args.alpha.split(","))
        if len(alpha) == 1:
            alpha = alpha * (args.b or 3)
        return dirichlet(alpha)
    return beta_binary(args.beta_a, args.beta_c)


def _build_params(args, spec: SplitterSpec) -> SplitTreeParams:
    base = default_params(spec)
    return SplitTreeParams(
        b=spec.b,
        s=base.s if args.s is None else args.s,
        s0=base.s0 if args.s0 is None else args.s0,
        s1=base.s1 if args.s1 is None else args.s1,
    )


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", default="bst", help="bst, median_of, bary, dirichlet, beta_binary")
    p.add_argument("--b", type=int, default=None, help="branch factor (bary/dirichlet)")
    p.add_argument("--k", type=int, default=1, help="median_of order parameter (splits on median of 2k+1)")
    p.add_argument("--alpha", default="1.5", help="dirichlet weights, comma separated")
    p.add_argument("--beta-a", type=float, default=2.0, dest="beta_a")
    p.add_argument("--beta-c", type=float, default=1.0, dest="beta_c")
    p.add_argument("--s", type=int, default=None, help="node capacity")
    p.add_argument("--s0", type=int, default=None, help="balls retained at a split")
    p.add_argument("--s1", type=int, default=None, help="balls handed to each child at a split")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--config", default=None, help="JSON file whose keys override these flags")


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None) is None:
        return args
    try:
        with open(args.config) as fh:
            overrides = json.load(fh)
    except OSError as e:
        raise IoError(f"cannot read config {args.config}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config {args.config} is not valid JSON: {e}") from e
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigInvalid(f"config key {key!r} is not a recognized option")
        setattr(args, dest, value)
    return args


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    spec = _build_spec(args)
    params = _build_params(args, spec)
    rows = []
    for n in args.n:
        if n < 0:
            raise ConfigInvalid(f"tree size must be >= 0, got {n}")
        sims = simulate_stats(params, spec, int(n), args.reps, args.seed)
        for r in range(args.reps):
            rows.append(
                (
                    _FAMILY_ALIASES[args.family],
                    params.b,
                    params.s,
                    params.s0,
                    params.s1,
                    int(n),
                    r,
                    int(sims["path"][r]),
                    int(sims["wiener"][r]),
                )
            )
    header = ["family", "b", "s", "s0", "s1", "n", "replicate", "path_length", "wiener_index"]
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    return 0


def _cmd_constants(args) -> int:
    spec = _build_spec(args)
    params = _build_params(args, spec)
    table = means.mean_table(args.n_max, params, spec, with_wiener=args.n_max <= 2 * 10**4)
    report = means.extract_constants(table)
    payload = {
        "family": _FAMILY_ALIASES[args.family],
        "params": {"b": params.b, "s": params.s, "s0": params.s0, "s1": params.s1},
        "n_max": table.n_max,
        "mu_inv": report.mu_inv,
        "c_p": report.c_p,
        "c_p_stderr": report.c_p_stderr,
        "c_w": report.c_w,
        "c_w_stderr": report.c_w_stderr,
        "path_slope": means.leading_coefficient(table, kind="path"),
        "wiener_slope": (
            means.leading_coefficient(table, kind="wiener") if table.ew is not None else None
        ),
        "diagnostics": _jsonable(report.diagnostics),
    }
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True))
    if args.table_out:
        ns = np.arange(table.n_max + 1)
        if table.ew is not None:
            rows = zip(ns, table.ep, table.ew)
            header = ["n", "mean_path", "mean_wiener"]
        else:
            rows = zip(ns, table.ep)
            header = ["n", "mean_path"]
        _write_csv(args.table_out, header, rows)
    return 0


def _cmd_chain(args) -> int:
    spec = _build_spec(args)
    params = _build_params(args, spec)
    if args.mode == "trajectories":
        if args.stop_size is not None:
            rule = chain_mod.stop_at_size(args.stop_size)
        elif args.stop_level is not None:
            rule = chain_mod.stop_at_level(args.stop_level)
        elif args.stop_climb is not None:
            rule = chain_mod.stop_after_climb(args.stop_climb)
        else:
            raise ConfigInvalid("pick one of --stop-size, --stop-level, --stop-climb")
        rows = []
        for r in range(args.reps):
            rng = generator(args.seed, "chain", r)
            tr = chain_mod.run_chain(args.start, rule, params, spec, rng)
            rows.append((r, tr.steps, tr.stopped_n, tr.stopped_value))
        header = ["replicate", "steps", "stopped_state", "stopped_value"]
        if args.out:
            _write_csv(args.out, header, rows)
        else:
            w = csv.writer(sys.stdout)
            w.writerow(header)
            w.writerows([[_fmt(c) for c in row] for row in rows])
        return 0
    if args.mode == "pushforward":
        if args.stop_size is None and args.stop_level is None:
            raise ConfigInvalid("pushforward needs --stop-size or --stop-level")
        pmf = chain_mod.stopped_state_pmf(
            args.start, params, spec, n1=args.stop_size, a=args.stop_level
        )
        rows = [(k, float(p)) for k, p in enumerate(pmf)]
        header = ["state", "probability"]
        if args.out:
            _write_csv(args.out, header, rows)
        else:
            w = csv.writer(sys.stdout)
            w.writerow(header)
            w.writerows([[_fmt(c) for c in row] for row in rows])
        return 0
    # increment-cdf
    y = np.linspace(0.0, 8.0, 161)
    quad = chain_mod.limit_increment_cdf(spec, y)
    emp = chain_mod.empirical_increment_cdf(
        args.start, params, spec, y, draws=max(args.reps, 10**4), master_seed=args.seed
    )
    rows = list(zip(y, emp, quad))
    header = ["increment", "empirical_cdf", "limit_cdf"]
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows([[_fmt(c) for c in row] for row in rows])
    return 0


def _cmd_fixedpoint(args) -> int:
    spec = _build_spec(args)
    cert = fp.contraction_certificate(spec)
    payload = {"certificate": _jsonable(cert), "pop_size": args.pop, "iters": args.iters}
    if args.dim == 1:
        dist, curve = fp.fixed_point_1d(
            spec,
            pop_size=args.pop,
            iters=args.iters,
            master_seed=args.seed,
            zero_toll=args.zero_toll,
            start_sd=args.start_sd,
            track_w2=True,
        )
        payload["variance"] = float(dist.variance()[0])
        payload["w2_curve"] = _jsonable(curve)
        samples = dist.samples[:, None]
    else:
        params = _build_params(args, spec)
        if args.c_p is None or args.c_w is None:
            cap = 10**4 if args.n_max is None else args.n_max
            table = means.mean_table(cap, params, spec, with_wiener=True)
            report = means.extract_constants(table)
            c_p = report.c_p if args.c_p is None else args.c_p
            c_w = report.c_w if args.c_w is None else args.c_w
        else:
            c_p, c_w = args.c_p, args.c_w
        dist = fp.fixed_point_2d(
            spec, c_p, c_w, pop_size=args.pop, iters=args.iters, master_seed=args.seed
        )
        payload["c_p"] = float(c_p)
        payload["c_w"] = float(c_w)
        payload["covariance"] = _jsonable(np.cov(dist.samples.T))
        samples = dist.samples
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **_jsonable(payload)}, indent=2, sort_keys=True))
    if args.samples_out:
        header = ["x"] if args.dim == 1 else ["wiener_coord", "path_coord"]
        _write_csv(args.samples_out, header, samples)
    return 0


def _cmd_verify(args) -> int:
    criteria = None
    if args.criteria:
        try:
            criteria = [int(t) for t in args.criteria.split(",")]
        except ValueError as e:
            raise ConfigInvalid(f"--criteria wants comma-separated integers: {e}") from e
        bad = [c for c in criteria if not 1 <= c <= len(verify.CHECKS)]
        if bad:
            raise ConfigInvalid(f"criteria out of range 1..{len(verify.CHECKS)}: {bad}")
    results = verify.run_checks(quick=args.quick, criteria=criteria, master_seed=args.seed)
    print(verify.format_report(results))
    if args.out:
        _write_json(
            args.out,
            {
                "quick": args.quick,
                "master_seed": args.seed,
                "results": [
                    {
                        "criterion": r.criterion,
                        "name": r.name,
                        "passed": r.passed,
                        "runtime_s": r.runtime_s,
                        "details": _jsonable(r.details),
                    }
                    for r in results
                ],
            },
        )
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="splitlab",
        description="Simulation and verification laboratory for random split trees",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate trees, emit per-replicate statistics")
    _add_family_flags(p_sim)
    p_sim.add_argument("--n", type=int, nargs="+", required=True, help="tree sizes (ball counts)")
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_con = sub.add_parser("constants", help="exact mean tables and expansion constants")
    _add_family_flags(p_con)
    p_con.add_argument("--n-max", type=int, default=10**4, dest="n_max")
    p_con.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    p_con.add_argument("--table-out", default=None, dest="table_out", help="CSV dump of the mean tables")
    p_con.set_defaults(fn=_cmd_constants)

    p_ch = sub.add_parser("chain", help="size-biased subtree chain experiments")
    _add_family_flags(p_ch)
    p_ch.add_argument("--mode", choices=["trajectories", "pushforward", "increment-cdf"], default="trajectories")
    p_ch.add_argument("--start", type=int, required=True, help="starting state (ball count)")
    p_ch.add_argument("--stop-size", type=int, default=None, dest="stop_size")
    p_ch.add_argument("--stop-level", type=float, default=None, dest="stop_level")
    p_ch.add_argument("--stop-climb", type=float, default=None, dest="stop_climb")
    p_ch.add_argument("--reps", type=int, default=100)
    p_ch.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p_ch.set_defaults(fn=_cmd_chain)

    p_fp = sub.add_parser("fixedpoint", help="limit-law fixed-point iteration and certificates")
    _add_family_flags(p_fp)
    p_fp.add_argument("--dim", type=int, choices=[1, 2], default=1)
    p_fp.add_argument("--pop", type=int, default=10**5)
    p_fp.add_argument("--iters", type=int, default=40)
    p_fp.add_argument("--zero-toll", action="store_true", dest="zero_toll")
    p_fp.add_argument("--start-sd", type=float, default=1.0, dest="start_sd")
    p_fp.add_argument("--c-p", type=float, default=None, dest="c_p")
    p_fp.add_argument("--c-w", type=float, default=None, dest="c_w")
    p_fp.add_argument("--n-max", type=int, default=None, dest="n_max", help="mean-table size when deriving constants")
    p_fp.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    p_fp.add_argument("--samples-out", default=None, dest="samples_out", help="CSV dump of the final population")
    p_fp.set_defaults(fn=_cmd_fixedpoint)

    p_ver = sub.add_parser("verify", help="run the acceptance checks")
    _add_family_flags(p_ver)
    mode = p_ver.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", help="reduced-scale smoke run")
    mode.add_argument("--full", action="store_false", dest="quick", help="full-scale run (default)")
    p_ver.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,2,8")
    p_ver.add_argument("--out", default=None, help="JSON report path")
    p_ver.set_defaults(fn=_cmd_verify, quick=False, seed=20260819)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args = _apply_config_file(args)
        return args.fn(args)
    except ConfigInvalid as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2
    except IoError as e:
        print(f"output error: {e}", file=sys.stderr)
        return 3
    except SplitLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
