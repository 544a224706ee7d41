"""Property suite behind the ``selftest`` CLI command.

Re-runs the oracle-equivalence certificate and the core invariants at a
configurable trial count, reporting one pass/fail line per property and the
first counterexample on failure.
"""

import numpy as np

from . import projections
from .oracle import oracle_project
from .projections import (
    ConstraintSpec,
    gshp,
    gssp,
    project_hyperplane,
    project_simplex,
    set_function_hyperplane,
    set_function_simplex,
)

__all__ = ["run_selftest", "PROPERTY_NAMES"]

_DISTRIBUTIONS = ("gaussian", "uniform", "integer", "duplicate")
_LAMBDAS_SIMPLEX = (0.5, 1.0, 10.0)
_LAMBDAS_HYPER = (0.0, 1.0, -1.0, 0.5, 10.0)

PROPERTY_NAMES = (
    "gssp-oracle-equality",
    "gshp-oracle-equality",
    "gssp-argmax-consistency",
    "gshp-argmax-consistency",
    "feasibility",
    "idempotence",
    "telescoping-identity",
    "increment-identity",
)


def _draw(rng, dist, p):
    if dist == "gaussian":
        return rng.standard_normal(p)
    if dist == "uniform":
        return rng.uniform(-2.0, 2.0, size=p)
    if dist == "integer":
        return rng.integers(-3, 4, size=p).astype(float)
    vals = rng.standard_normal(max(2, p // 3))
    return rng.choice(vals, size=p)


def _instances(trials, seed):
    rng = np.random.default_rng(seed)
    for i in range(trials):
        p = int(rng.integers(2, 13))
        k = int(rng.integers(1, min(p, 5) + 1))
        dist = _DISTRIBUTIONS[i % len(_DISTRIBUTIONS)]
        yield rng, _draw(rng, dist, p), p, k


def _fmt_instance(w, k, lam, greedy, oracle):
    return (
        f"w={np.array2string(w, precision=6, max_line_width=200)} k={k} "
        f"lam={lam} greedy={greedy!r} oracle={oracle!r}"
    )


def _check_oracle(trials, seed, kind):
    tol = 1e-9
    for rng, w, p, k in _instances(trials, seed):
        lams = _LAMBDAS_SIMPLEX if kind == "simplex" else _LAMBDAS_HYPER
        lam = float(lams[int(rng.integers(len(lams)))])
        if kind == "simplex":
            res = gssp(w, k, lam)
            spec = ConstraintSpec("simplex_sparse", k=k, level=lam)
        else:
            res = gshp(w, k, lam)
            spec = ConstraintSpec("hyperplane_sparse", k=k, level=lam)
        ora = oracle_project(w, spec)
        if abs(res.distance_sq - ora.best_distance_sq) > tol * (
            1.0 + ora.best_distance_sq
        ):
            return _fmt_instance(w, k, lam, res.distance_sq, ora.best_distance_sq)
    return None


def _check_argmax(trials, seed, kind):
    from itertools import combinations

    tol = 1e-9
    for rng, w, p, k in _instances(trials, seed):
        if kind == "simplex":
            lam = float(_LAMBDAS_SIMPLEX[int(rng.integers(len(_LAMBDAS_SIMPLEX)))])
            value_of = lambda s: set_function_simplex(w, s, lam)
            support = _selected_support_simplex(w, k)
        else:
            lam = float(_LAMBDAS_HYPER[int(rng.integers(len(_LAMBDAS_HYPER)))])
            value_of = lambda s: set_function_hyperplane(w, s, lam)
            support = gshp(w, k, lam).beta.support
        best = max(value_of(np.asarray(s)) for s in combinations(range(p), k))
        achieved = value_of(support)
        if achieved < best - tol * (1.0 + abs(best)):
            return _fmt_instance(w, k, lam, achieved, best)
    return None


def _selected_support_simplex(w, k):
    # the selected support (before the projection zeroes entries)
    return projections._select_top_k_signed(np.asarray(w, dtype=float), k)


def _check_feasibility(trials, seed):
    for rng, w, p, k in _instances(trials, seed):
        lam = float(rng.uniform(0.2, 5.0))
        res = gssp(w, k, lam)
        beta = res.beta.to_dense()
        if beta.min() < 0 or res.beta.support.size > k:
            return _fmt_instance(w, k, lam, "infeasible-gssp", None)
        if abs(beta.sum() - lam) > 1e-10 * max(1.0, lam):
            return _fmt_instance(w, k, lam, f"sum={beta.sum()}", lam)
        lam2 = float(rng.uniform(-2.0, 2.0))
        res2 = gshp(w, k, lam2)
        if abs(res2.beta.to_dense().sum() - lam2) > 1e-10 * max(1.0, abs(lam2)):
            return _fmt_instance(w, k, lam2, f"sum={res2.beta.to_dense().sum()}", lam2)
    return None


def _check_idempotence(trials, seed):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        p = int(rng.integers(2, 13))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.uniform(0.5, 3.0))
        w, _ = project_simplex(rng.standard_normal(p), lam)
        nz = np.flatnonzero(w)
        if nz.size > k:
            continue
        out = gssp(w, k, lam).beta.to_dense()
        if np.max(np.abs(out - w)) > 1e-12:
            return f"gssp moved a feasible point: w={w} out={out}"
        lam2 = float(rng.uniform(-2.0, 2.0))
        v = np.zeros(p)
        sup = rng.choice(p, size=k, replace=False)
        vals = rng.standard_normal(k)
        vals += (lam2 - vals.sum()) / k
        v[sup] = vals
        out2 = gshp(v, k, lam2).beta.to_dense()
        if np.max(np.abs(out2 - v)) > 1e-12:
            return f"gshp moved a feasible point: v={v} out={out2}"
    return None


def _check_telescoping(trials, seed):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        kk = int(rng.integers(1, 9))
        b = rng.standard_normal(kk)
        lam = float(rng.uniform(-2.0, 2.0))
        try:
            set_function_hyperplane(b, np.arange(kk), lam, check_identity=True)
        except AssertionError as exc:
            return str(exc)
    return None


def _check_increment(trials, seed):
    rng = np.random.default_rng(seed)
    tol = 1e-9
    for _ in range(trials):
        p = int(rng.integers(3, 12))
        w = rng.standard_normal(p)
        lam = float(rng.uniform(-2.0, 2.0))
        size = int(rng.integers(1, p - 1))
        s = rng.choice(p, size=size, replace=False)
        rest = np.setdiff1d(np.arange(p), s)
        i = int(rest[rng.integers(rest.size)])
        lhs = set_function_hyperplane(w, np.append(s, i), lam) - set_function_hyperplane(
            w, s, lam
        )
        mean = (w[s].sum() - lam) / size
        rhs = size / (size + 1.0) * (w[i] - mean) ** 2
        if abs(lhs - rhs) > tol * (1.0 + abs(rhs)):
            return f"increment mismatch: w={w} S={sorted(s)} i={i} lhs={lhs} rhs={rhs}"
    return None


def run_selftest(trials=400, seed=0, inject_fault=False):
    """Run every property; returns a list of (name, passed, detail) tuples."""
    previous = projections._FAULT_FLIP_SELECTION
    projections._FAULT_FLIP_SELECTION = bool(inject_fault)
    try:
        checks = (
            ("gssp-oracle-equality", lambda: _check_oracle(trials, seed + 1, "simplex")),
            ("gshp-oracle-equality", lambda: _check_oracle(trials, seed + 2, "hyper")),
            (
                "gssp-argmax-consistency",
                lambda: _check_argmax(max(trials // 4, 25), seed + 3, "simplex"),
            ),
            (
                "gshp-argmax-consistency",
                lambda: _check_argmax(max(trials // 4, 25), seed + 4, "hyper"),
            ),
            ("feasibility", lambda: _check_feasibility(trials, seed + 5)),
            ("idempotence", lambda: _check_idempotence(trials, seed + 6)),
            ("telescoping-identity", lambda: _check_telescoping(trials, seed + 7)),
            ("increment-identity", lambda: _check_increment(trials, seed + 8)),
        )
        results = []
        for name, fn in checks:
            detail = fn()
            results.append((name, detail is None, detail))
        return results
    finally:
        projections._FAULT_FLIP_SELECTION = previous
