"""Command-line interface.

Subcommands: ``project`` (run a projector on a CSV vector), ``oracle``
(brute-force certificate for one instance), ``quantum`` / ``density`` /
``portfolio`` / ``bench`` (experiment harness), and ``selftest`` (property
suite).  Exit codes: 0 success, 1 property or acceptance failure, 2 usage
or input error.

Any flag can also come from a ``key=value`` config file via ``--config``;
explicit command-line flags win.
"""

import argparse
import os
import sys

import numpy as np

from .harness import (
    ExperimentSpec,
    QUANTUM_METHODS,
    pivot_csv,
    run_experiment,
    write_records,
)
from .oracle import OracleBudgetError, oracle_project
from .projections import ConstraintSpec, gshp, gssp, project_hyperplane, project_simplex
from .selftest import run_selftest
from .storage import atomic_write_text, read_vector_csv, write_json, write_vector_csv

__all__ = ["main", "build_parser"]

_WORKERS_ENV = "SPARSESIMPLEX_WORKERS"


class CliError(Exception):
    """Usage or input error; maps to exit code 2."""


def _default_workers():
    try:
        return max(1, int(os.environ.get(_WORKERS_ENV, "1")))
    except ValueError:
        return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparsesimplex",
        description="Sparse projections onto the simplex/hyperplane and experiments",
    )
    parser.add_argument("--config", help="key=value file supplying default flags")
    sub = parser.add_subparsers(dest="command", required=True)

    proj = sub.add_parser("project", help="project a CSV vector")
    proj.add_argument("--input", required=True, help="single-column CSV vector")
    proj.add_argument("--output", required=True, help="projected vector CSV path")
    proj.add_argument("--set", dest="target_set", choices=("simplex", "hyperplane"),
                      required=True)
    proj.add_argument("--lambda", dest="level", type=float, required=True,
                      help="constraint level (sum of the projected vector)")
    proj.add_argument("--k", type=int, help="sparsity budget")
    proj.add_argument("--convex-only", action="store_true",
                      help="skip the sparsity constraint (ignores --k)")

    orc = sub.add_parser("oracle", help="brute-force projection by enumeration")
    orc.add_argument("--input", required=True)
    orc.add_argument("--output", required=True, help="JSON result path")
    orc.add_argument("--set", dest="target_set", choices=("simplex", "hyperplane"),
                     required=True)
    orc.add_argument("--lambda", dest="level", type=float, required=True)
    orc.add_argument("--k", type=int, required=True)
    orc.add_argument("--budget", type=int, default=10**6,
                     help="maximum number of supports to enumerate")

    for which in ("quantum", "density", "portfolio", "bench"):
        exp = sub.add_parser(which, help=f"run the {which} experiment")
        exp.add_argument("--out", required=True, help="JSON-lines records path")
        exp.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
        exp.add_argument("--trials", type=int, default=None)
        exp.add_argument("--no-timing", action="store_true",
                         help="omit wall-clock fields (diffable output)")
        exp.add_argument("--workers", type=int, default=_default_workers())
        exp.add_argument("--pivot-csv", help="also write a median pivot table")
        if which == "quantum":
            exp.add_argument("--qubits", type=int, default=6)
            exp.add_argument("--rank", type=int, default=2)
            exp.add_argument("--m-grid", default="2,2.8,3.6,4.4,5",
                             help="measurement multipliers of d*r")
            exp.add_argument("--snr-db", type=float, default=30.0,
                             help="measurement SNR; 'inf' or --noiseless for none")
            exp.add_argument("--noiseless", action="store_true")
            exp.add_argument("--methods", default=",".join(QUANTUM_METHODS))
            exp.add_argument("--max-iters", type=int, default=1500)
            exp.add_argument("--tol", type=float, default=1e-5)
            exp.add_argument("--paper-scale", action="store_true",
                             help="8 qubits (much slower)")
            exp.add_argument("--qubit-cap", type=int, default=8)
        elif which == "density":
            exp.add_argument("--n-samples", type=int, default=1000)
            exp.add_argument("--sigma", type=float, default=1.0)
            exp.add_argument("--k-grid", default="3,5,8,10,15")
            exp.add_argument("--max-iters", type=int, default=3000)
            exp.add_argument("--tol", type=float, default=1e-5)
        elif which == "portfolio":
            exp.add_argument("--p", type=int, default=500)
            exp.add_argument("--k", type=int, default=50)
            exp.add_argument("--m-over-p", default="0.3,0.4,0.5,0.6,0.7,0.8,0.9")
            exp.add_argument("--max-iters", type=int, default=3000)
            exp.add_argument("--tol", type=float, default=1e-5)
        else:
            exp.add_argument("--p-grid", default="10000,100000,1000000")
            exp.add_argument("--k", type=int, default=10)
            exp.add_argument("--repeats", type=int, default=20)

    st = sub.add_parser("selftest", help="oracle-equivalence property suite")
    st.add_argument("--trials", type=int, default=400)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--inject-fault", action="store_true",
                    help="test hook: flip the selection boundary to exercise "
                         "counterexample reporting")
    return parser


def _load_config(path):
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
        return values
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc


def _apply_config(parser, argv, args):
    """Overlay config-file values on flags the command line left at default."""
    if not args.config:
        return args
    values = _load_config(args.config)
    known = set(vars(args))
    unknown = set(values) - known
    if unknown:
        raise CliError(f"config keys not recognized: {sorted(unknown)}")
    # re-parse with config values as defaults; explicit flags still win
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices[args.command]
    converted = {}
    for key, text in values.items():
        action = next((a for a in subparser._actions if a.dest == key), None)
        if action is None:
            converted[key] = text
        elif isinstance(action, argparse._StoreTrueAction):
            converted[key] = text.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            converted[key] = action.type(text)
        else:
            converted[key] = text
    subparser.set_defaults(**converted)
    return parser.parse_args(argv)


def _parse_grid(text, cast=float):
    try:
        return tuple(cast(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise CliError(f"bad grid {text!r}: {exc}") from exc


def cmd_project(args):
    w = read_vector_csv(args.input)
    level = args.level
    if args.target_set == "simplex" and level <= 0:
        raise CliError("simplex projection requires --lambda > 0")
    if args.convex_only:
        if args.target_set == "simplex":
            beta, tau = project_simplex(w, level)
        else:
            beta, tau = project_hyperplane(w, level)
        support = np.flatnonzero(beta)
        distance_sq = float(np.sum((beta - w) ** 2))
        objective = None
    else:
        if args.k is None:
            raise CliError("--k is required unless --convex-only is given")
        if not 1 <= args.k <= w.size:
            raise CliError(f"--k must lie in [1, {w.size}]")
        result = (gssp if args.target_set == "simplex" else gshp)(w, args.k, level)
        beta = result.beta.to_dense()
        support, tau = result.beta.support, result.tau
        distance_sq, objective = result.distance_sq, result.objective
    write_vector_csv(args.output, beta)
    write_json(
        args.output + ".json",
        {
            "support": np.asarray(support).tolist(),
            "tau": float(tau),
            "distance_sq": float(distance_sq),
            "objective": objective,
        },
    )
    return 0


def cmd_oracle(args):
    w = read_vector_csv(args.input)
    kind = "simplex_sparse" if args.target_set == "simplex" else "hyperplane_sparse"
    if kind == "simplex_sparse" and args.level <= 0:
        raise CliError("simplex oracle requires --lambda > 0")
    if not 1 <= args.k <= w.size:
        raise CliError(f"--k must lie in [1, {w.size}]")
    spec = ConstraintSpec(kind, k=args.k, level=args.level)
    try:
        result = oracle_project(w, spec, budget=args.budget)
    except OracleBudgetError as exc:
        raise CliError(str(exc)) from exc
    write_json(
        args.output,
        {
            "best_support": result.best_support.tolist(),
            "best_distance_sq": result.best_distance_sq,
            "enumerated": result.enumerated,
            "beta_support": result.best_beta.support.tolist(),
            "beta_values": result.best_beta.values.tolist(),
        },
    )
    return 0


def _experiment_spec(args):
    kwargs = {
        "which": args.command,
        "seed": args.seed,
        "include_timing": not args.no_timing,
        "workers": max(1, args.workers),
    }
    if args.trials is not None:
        kwargs["trials"] = args.trials
    if args.command == "quantum":
        if args.paper_scale:
            kwargs["qubits"] = 8
        else:
            kwargs["qubits"] = args.qubits
        snr = None if args.noiseless or np.isinf(args.snr_db) else args.snr_db
        kwargs.update(
            rank=args.rank,
            m_multipliers=_parse_grid(args.m_grid),
            snr_db=snr,
            methods=tuple(t.strip() for t in args.methods.split(",") if t.strip()),
            max_iters=args.max_iters,
            tol=args.tol,
            qubit_cap=args.qubit_cap,
        )
        bad = set(kwargs["methods"]) - set(QUANTUM_METHODS)
        if bad:
            raise CliError(f"unknown quantum methods: {sorted(bad)}")
    elif args.command == "density":
        kwargs.update(
            n_samples=args.n_samples,
            sigma=args.sigma,
            k_grid=_parse_grid(args.k_grid, int),
            density_max_iters=args.max_iters,
            density_tol=args.tol,
        )
        if "trials" not in kwargs:
            kwargs["trials"] = 10
    elif args.command == "portfolio":
        kwargs.update(
            p=args.p,
            k=args.k,
            m_over_p=_parse_grid(args.m_over_p),
            portfolio_max_iters=args.max_iters,
            portfolio_tol=args.tol,
        )
        if "trials" not in kwargs:
            kwargs["trials"] = 30
    else:
        kwargs.update(
            bench_p_grid=_parse_grid(args.p_grid, int),
            bench_k=args.k,
            bench_repeats=args.repeats,
        )
        if "trials" not in kwargs:
            kwargs["trials"] = 1
    try:
        return ExperimentSpec(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_experiment(args):
    spec = _experiment_spec(args)
    try:
        records = run_experiment(spec)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    write_records(records, args.out, include_timing=spec.include_timing)
    if args.pivot_csv:
        metric = {"quantum": "rel_error", "density": "ise",
                  "portfolio": "rel_error", "bench": "wall_ms"}[args.command]
        atomic_write_text(args.pivot_csv, pivot_csv(records, metric))
    failures = sum(1 for r in records if r.get("status") == "error")
    if failures:
        print(f"{failures} trial(s) failed; see records", file=sys.stderr)
    return 0


def cmd_selftest(args):
    results = run_selftest(trials=args.trials, seed=args.seed,
                           inject_fault=args.inject_fault)
    all_ok = True
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}" + ("" if ok else f": {detail}"))
        all_ok &= ok
    return 0 if all_ok else 1


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, argv, args)
        if args.command == "project":
            return cmd_project(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "selftest":
            return cmd_selftest(args)
        return cmd_experiment(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
