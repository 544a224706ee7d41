"""Hermitian-matrix projectors for low-rank trace-constrained recovery.

The non-convex projector maps onto {B PSD, rank(B) <= r, tr(B) = 1} by
eigendecomposing and running the sparse simplex projection on the spectrum;
by the singular-value perturbation lower bound this achieves the optimal
Frobenius distance.  Two convex companions cover the trace-ball set
{B PSD, tr(B) <= 1} and the PSD nuclear-norm proximal step.
"""

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linops import operator_norm
from .projections import project_simplex, simplex_threshold
from .solver import SolverConfig, solve_pgd

__all__ = [
    "DensityMatrixEstimate",
    "check_hermitian",
    "project_rank_trace",
    "project_psd_traceball",
    "prox_nuclear_psd",
    "numerical_rank",
    "lambda_bracketing_solve",
    "random_low_rank_state",
    "save_matrix_csv",
    "load_matrix_csv",
    "save_matrix_binary",
    "load_matrix_binary",
]


@dataclass
class DensityMatrixEstimate:
    """A PSD unit-trace estimate with its retained spectrum.

    ``rank_used`` counts strictly positive retained eigenvalues.  For the
    convex bracketing path it is the numerical rank of the solution and
    ``rank_matched`` records whether the bracketing found the requested
    rank exactly.
    """

    matrix: np.ndarray
    rank_used: int
    eigenvalues: np.ndarray
    trace: float
    rank_matched: bool = True
    total_iterations: int = 0


def check_hermitian(W, tol=1e-10):
    """Validate (and return) a Hermitian matrix; raises on asymmetry."""
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {W.shape}")
    scale = np.linalg.norm(W)
    if np.linalg.norm(W - W.conj().T) > tol * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian within tolerance")
    return W


def _reconstruct(vecs, vals):
    out = (vecs * vals) @ vecs.conj().T
    return (out + out.conj().T) / 2


def project_rank_trace(W, r):
    """Project onto {B PSD, rank(B) <= r, tr(B) = 1}.

    Only the top-r eigenpairs are needed: the sparse simplex projection of
    the spectrum keeps the r largest eigenvalues and shifts them onto the
    unit simplex, so the partial decomposition suffices and the
    reconstruction costs O(d^2 r).
    """
    W = check_hermitian(W)
    d = W.shape[0]
    r = int(r)
    if not 1 <= r <= d:
        raise ValueError(f"r={r} out of range [1, {d}]")
    vals, vecs = scipy.linalg.eigh(
        W, subset_by_index=[d - r, d - 1], check_finite=False
    )
    kept, tau = project_simplex(vals, 1.0)
    matrix = _reconstruct(vecs, kept)
    nz = kept > 0
    order = np.argsort(-kept)
    return DensityMatrixEstimate(
        matrix=matrix,
        rank_used=int(nz.sum()),
        eigenvalues=kept[order],
        trace=float(kept.sum()),
    )


def project_psd_traceball(W):
    """Project onto {B PSD, tr(B) <= 1}.

    Clip the spectrum at zero; if the clipped trace exceeds one, project the
    clipped spectrum onto the unit simplex instead.
    """
    W = check_hermitian(W)
    vals, vecs = np.linalg.eigh(W)
    clipped = np.maximum(vals, 0.0)
    if clipped.sum() > 1.0:
        tau = simplex_threshold(np.sort(clipped)[::-1], 1.0)
        clipped = np.maximum(clipped - tau, 0.0)
    return _reconstruct(vecs, clipped)


def prox_nuclear_psd(W, t):
    """Proximal step of t * nuclear norm restricted to the PSD cone.

    Eigenvalues map to max(v - t, 0); eigenvectors are unchanged.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    W = check_hermitian(W)
    vals, vecs = np.linalg.eigh(W)
    return _reconstruct(vecs, np.maximum(vals - t, 0.0))


def numerical_rank(W, rel_tol=1e-6):
    """Count of eigenvalues above rel_tol times the largest eigenvalue."""
    vals = np.linalg.eigvalsh(W)
    top = vals.max() if vals.size else 0.0
    if top <= 0:
        return 0
    return int(np.sum(vals > rel_tol * top))


def lambda_bracketing_solve(
    A,
    y,
    r,
    config=None,
    grid_points=20,
    bisect_steps=6,
    rank_tol=1e-6,
    inner_max_iters=None,
):
    """Nuclear-norm-regularized PSD least squares, tuned to numerical rank r.

    Solves min_{X PSD} ||A(X) - y||^2 + lam ||X||_* by accelerated proximal
    gradient over an ascending geometric grid of lam values (warm-started),
    stopping at the first lam whose solution has numerical rank r; when the
    rank jumps past r between grid points, a geometric bisection refines the
    bracket.  The returned estimate is rescaled to unit trace.

    If no lam in the budget attains rank r exactly, the nearest-rank
    solution is returned with ``rank_matched=False``.

    Returns
    -------
    (DensityMatrixEstimate, lambda_found)
    """
    config = config or SolverConfig(step_scale=1.0, momentum=True)
    r = int(r)
    if r < 1:
        raise ValueError("r must be >= 1")
    if inner_max_iters is None:
        inner_max_iters = config.max_iters

    nrm = config.operator_norm_value
    if nrm is None:
        nrm = operator_norm(A)
    mu = config.step_scale / (2.0 * nrm * nrm)

    # lam where prox(2 mu A^T y) first vanishes bounds the useful range
    top_eig = float(np.linalg.eigvalsh(A.adjoint(y)).max())
    lam_top = 2.0 * max(top_eig, 1e-12)
    grid = lam_top * np.geomspace(1e-4, 1.0, int(grid_points))

    def solve_at(lam, warm, iters):
        cfg = SolverConfig(
            step_rule="fixed",
            step_size=mu,
            max_iters=iters,
            tol=config.tol,
            init="warm",
            warm_start=warm,
            momentum=config.momentum,
        )
        X, trace = solve_pgd(A, y, lambda W: prox_nuclear_psd(W, mu * lam), cfg)
        return X, trace

    d = A.domain_shape[0]
    warm = np.zeros((d, d), dtype=complex)
    best = None  # (|rank - r|, lam, X, rank)
    found = None
    prev_lam = None
    iters_used = 0
    for lam in grid:
        warm, tr = solve_at(lam, warm, inner_max_iters)
        iters_used += tr.iterations
        rank = numerical_rank(warm, rank_tol)
        cand = (abs(rank - r), float(lam), warm, rank)
        if best is None or cand[0] < best[0]:
            best = cand
        if rank == r:
            found = (float(lam), warm, rank)
            break
        if rank < r and prev_lam is not None:
            lo, hi = prev_lam, float(lam)  # rank(lo) > r > rank(hi)
            bis = warm
            for _ in range(int(bisect_steps)):
                mid = float(np.sqrt(lo * hi))
                bis, tr = solve_at(mid, bis, inner_max_iters)
                iters_used += tr.iterations
                rank = numerical_rank(bis, rank_tol)
                cand = (abs(rank - r), mid, bis, rank)
                if cand[0] < best[0]:
                    best = cand
                if rank == r:
                    found = (mid, bis, rank)
                    break
                if rank > r:
                    lo = mid
                else:
                    hi = mid
            break
        prev_lam = float(lam)

    if found is not None:
        lam, X, rank = found
        matched = True
    else:
        _, lam, X, rank = best
        matched = False
    X, tr = solve_at(lam, X, config.max_iters)
    iters_used += tr.iterations
    rank = numerical_rank(X, rank_tol)

    trace_val = float(np.trace(X).real)
    if trace_val > 0:
        X = X / trace_val
    vals = np.linalg.eigvalsh(X)
    est = DensityMatrixEstimate(
        matrix=X,
        rank_used=rank,
        eigenvalues=np.sort(vals)[::-1][: max(rank, 1)],
        trace=float(np.trace(X).real),
        rank_matched=matched,
        total_iterations=iters_used,
    )
    return est, lam


def random_low_rank_state(d, r, seed=None):
    """Random PSD unit-trace rank-r matrix: G G^T / tr(G G^T), G Gaussian d x r."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((int(d), int(r)))
    x = g @ g.T
    return x / np.trace(x)


# --- serialization ---------------------------------------------------------

_MAGIC = b"SSXMAT\x00\x00"
_DTYPES = {0: np.float64, 1: np.complex128}


def save_matrix_csv(path, W):
    """Dense row-major CSV; real matrices only."""
    W = np.asarray(W)
    if np.iscomplexobj(W):
        raise ValueError("CSV serialization handles real matrices only")
    np.savetxt(path, W, delimiter=",")


def load_matrix_csv(path):
    mat = np.loadtxt(path, delimiter=",", dtype=np.float64)
    return np.atleast_2d(mat)


def save_matrix_binary(path, W):
    """Little-endian blob: 8-byte magic, uint32 d, uint32 dtype code, raw data.

    dtype codes: 0 = float64, 1 = complex128.
    """
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("expected a square matrix")
    if np.iscomplexobj(W):
        code, dtype = 1, np.complex128
    else:
        code, dtype = 0, np.float64
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", W.shape[0], code))
        fh.write(np.ascontiguousarray(W, dtype=dtype).tobytes())


def load_matrix_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError("bad magic; not a matrix blob")
        d, code = struct.unpack("<II", fh.read(8))
        if code not in _DTYPES:
            raise ValueError(f"unknown dtype code {code}")
        data = np.frombuffer(fh.read(), dtype=_DTYPES[code])
    if data.size != d * d:
        raise ValueError("truncated matrix blob")
    return data.reshape(d, d).copy()
