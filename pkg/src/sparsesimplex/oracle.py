"""Brute-force certification of the sparse projections by support enumeration.

Deliberately independent of :mod:`sparsesimplex.projections`: the per-support
convex projections are re-derived here in vectorized form, so greedy and
oracle share no code path.  Enumerating only supports of size exactly k is
sufficient: for both constraint sets, a best k-support is at least as good as
any smaller one.
"""

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from ._validation import as_float_vector
from .projections import ConstraintSpec, SparseVector

__all__ = ["OracleResult", "OracleBudgetError", "oracle_project"]

_CHUNK = 65536


class OracleBudgetError(RuntimeError):
    """Raised when C(p, k) exceeds the enumeration budget."""


@dataclass(frozen=True)
class OracleResult:
    best_support: np.ndarray
    best_beta: SparseVector
    best_distance_sq: float
    enumerated: int


def _chunked_supports(p, k):
    it = combinations(range(p), k)
    while True:
        block = list(islice(it, _CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def _simplex_rows(ws, lam):
    """Row-wise simplex projection of an (n, k) matrix; returns (beta, dist_on)."""
    u = -np.sort(-ws, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, ws.shape[1] + 1)
    active = u > (css - lam) / j
    # last True per row; column 0 is always True for lam > 0
    rho = ws.shape[1] - 1 - np.argmax(active[:, ::-1], axis=1)
    tau = (css[np.arange(ws.shape[0]), rho] - lam) / (rho + 1.0)
    beta = np.maximum(ws - tau[:, None], 0.0)
    return beta, np.sum((beta - ws) ** 2, axis=1)


def _hyperplane_rows(ws, lam):
    k = ws.shape[1]
    tau = (ws.sum(axis=1) - lam) / k
    return ws - tau[:, None], k * tau * tau


def oracle_project(w, spec, budget=10**6):
    """Exhaustive minimum-distance projection over all supports of size k.

    Parameters
    ----------
    w : array_like, shape (p,)
    spec : ConstraintSpec
        Must be ``simplex_sparse`` or ``hyperplane_sparse``.
    budget : int
        Upper bound on C(p, k); exceeding it raises OracleBudgetError.

    Returns
    -------
    OracleResult with the lexicographically first optimal support.
    """
    w = as_float_vector(w)
    if not isinstance(spec, ConstraintSpec):
        raise TypeError("spec must be a ConstraintSpec")
    if spec.kind not in ("simplex_sparse", "hyperplane_sparse"):
        raise ValueError(f"oracle_project does not handle kind {spec.kind!r}")
    p = w.size
    k = int(spec.k)
    if not 1 <= k <= p:
        raise ValueError(f"k={k} out of range [1, {p}]")
    total = math.comb(p, k)
    if total > budget:
        raise OracleBudgetError(
            f"C({p}, {k}) = {total} supports exceeds the budget of {budget}"
        )

    norm_sq = float(w @ w)
    best = None  # (distance, first support array, beta row)
    for supports in _chunked_supports(p, k):
        ws = w[supports]
        if spec.kind == "simplex_sparse":
            beta, on_dist = _simplex_rows(ws, spec.level)
        else:
            beta, on_dist = _hyperplane_rows(ws, spec.level)
        dist = on_dist + (norm_sq - np.sum(ws * ws, axis=1))
        i = int(np.argmin(dist))  # first minimum: lexicographic within chunk
        if best is None or dist[i] < best[0]:
            best = (float(dist[i]), supports[i].copy(), beta[i].copy())

    distance, support, beta_row = best
    if spec.kind == "simplex_sparse":
        nz = beta_row > 0
        beta = SparseVector(p, support[nz], beta_row[nz])
    else:
        beta = SparseVector(p, support, beta_row)
    return OracleResult(support, beta, distance, total)
