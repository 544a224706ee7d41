"""Exact Euclidean projectors onto sparse simplex and hyperplane constraints.

The two non-convex projectors work in two stages: pick a support greedily,
then run the convex projection on that support.  ``gssp`` handles the
nonnegative case (simplex of level ``lam``), ``gshp`` the sign-free case
(hyperplane ``sum(beta) = lam``).  Both supports are provably optimal; the
test suite certifies this against exhaustive enumeration.

All tie-breaking is lexicographic (lowest index wins) so results are
deterministic and permutation-equivariant on distinct-valued input.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    as_float_vector,
    as_support,
    check_level,
    check_positive,
    check_sparsity,
)

__all__ = [
    "SparseVector",
    "ProjectionResult",
    "ConstraintSpec",
    "top_k_select",
    "hard_threshold_top_k",
    "project_simplex",
    "project_hyperplane",
    "gssp",
    "gshp",
    "set_function_simplex",
    "set_function_hyperplane",
]

# Test hook for the selftest counterexample path: when enabled, the selection
# comparison at the k-boundary is flipped, swapping the weakest selected entry
# for the strongest rejected one.  Never enable outside negative-path tests.
_FAULT_FLIP_SELECTION = False


@dataclass(frozen=True)
class SparseVector:
    """A vector of dimension ``dim`` stored as (support, values) pairs.

    ``support`` is strictly increasing; entries off the support are zero.
    """

    dim: int
    support: np.ndarray
    values: np.ndarray

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.support] = self.values
        return out

    @property
    def nnz(self):
        return int(np.count_nonzero(self.values))

    @staticmethod
    def from_dense(w):
        w = np.asarray(w, dtype=np.float64)
        support = np.flatnonzero(w)
        return SparseVector(w.size, support, w[support])


@dataclass(frozen=True)
class ProjectionResult:
    """Output of a sparse projection.

    Attributes
    ----------
    beta : SparseVector
        The projected vector.
    tau : float
        Threshold/shift used by the final convex projection.
    distance_sq : float
        Squared Euclidean distance ``||beta - w||^2`` (full vector).
    objective : float
        Support set-function value (``F+`` for the simplex, ``F`` for the
        hyperplane) of the chosen support.
    """

    beta: SparseVector
    tau: float
    distance_sq: float
    objective: float


_KINDS = (
    "simplex_sparse",
    "hyperplane_sparse",
    "simplex_convex",
    "hyperplane_convex",
    "sparsity_only",
)


@dataclass(frozen=True)
class ConstraintSpec:
    """Description of a target constraint set.

    kind selects among: ``simplex_sparse`` (k-sparse, nonnegative, sums to
    ``level``), ``hyperplane_sparse`` (k-sparse, sums to ``level``),
    ``simplex_convex`` / ``hyperplane_convex`` (no sparsity), and
    ``sparsity_only`` (k-sparse, ``level`` ignored).
    """

    kind: str
    k: int | None = None
    level: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind.startswith("simplex") and not self.level > 0:
            raise ValueError("simplex constraints require level > 0")
        if self.kind in ("simplex_sparse", "hyperplane_sparse", "sparsity_only"):
            if self.k is None or int(self.k) < 1:
                raise ValueError(f"{self.kind} requires a positive sparsity k")
        if not np.isfinite(self.level):
            raise ValueError("level must be finite")

    @property
    def is_sparse(self):
        return self.kind in ("simplex_sparse", "hyperplane_sparse", "sparsity_only")

    def project(self, w):
        """Project a dense vector onto the constraint set; returns dense."""
        w = as_float_vector(w)
        if self.kind == "simplex_sparse":
            return gssp(w, self.k, self.level).beta.to_dense()
        if self.kind == "hyperplane_sparse":
            return gshp(w, self.k, self.level).beta.to_dense()
        if self.kind == "simplex_convex":
            return project_simplex(w, self.level)[0]
        if self.kind == "hyperplane_convex":
            return project_hyperplane(w, self.level)[0]
        return hard_threshold_top_k(w, self.k).to_dense()

    def projector(self):
        """Return ``self.project`` as a bare callable for solver loops."""
        return self.project


def _partition_top_k(w, k):
    """Indices (ascending) of the k largest entries by signed value.

    Lexicographic tie-break: among equal values the lowest indices win.
    Uses partial selection when k is small relative to log2(p), a full
    stable sort otherwise.
    """
    p = w.size
    if k == p:
        return np.arange(p)
    if k <= math.log2(p):
        # value partition finds the k-th largest; the boundary is then
        # rebuilt deterministically (everything strictly above it, then the
        # lowest-index entries equal to it)
        thresh = np.partition(w, p - k)[p - k]
        above = np.flatnonzero(w > thresh)
        ties = np.flatnonzero(w == thresh)
        support = np.concatenate([above, ties[: k - above.size]])
        support.sort()
    else:
        order = np.argsort(-w, kind="stable")
        support = np.sort(order[:k])
    return support


def _select_top_k_signed(w, k):
    support = _partition_top_k(w, k)
    if _FAULT_FLIP_SELECTION and k < w.size:
        support = _flip_selection_boundary(w, support)
    return support


def _flip_selection_boundary(w, support):
    # Fault injection: exchange the weakest selected index with the strongest
    # unselected one whenever their values differ.
    mask = np.ones(w.size, dtype=bool)
    mask[support] = False
    rest = np.flatnonzero(mask)
    weakest = support[np.argmin(w[support])]
    strongest = rest[np.argmax(w[rest])]
    if w[weakest] != w[strongest]:
        support = np.sort(np.concatenate([support[support != weakest], [strongest]]))
    return support


def top_k_select(w, k):
    """Keep the k largest entries of ``w`` by signed value (not magnitude).

    Parameters
    ----------
    w : array_like, shape (p,)
    k : int, 1 <= k <= p

    Returns
    -------
    SparseVector with the selected support and the original values on it.
    """
    w = as_float_vector(w)
    k = check_sparsity(k, w.size)
    support = _select_top_k_signed(w, k)
    return SparseVector(w.size, support, w[support])


def hard_threshold_top_k(w, k):
    """Keep the k largest entries of ``w`` by magnitude (ties: lowest index)."""
    w = as_float_vector(w)
    k = check_sparsity(k, w.size)
    a = np.abs(w)
    if k == w.size:
        support = np.arange(w.size)
    else:
        cand = np.argpartition(-a, k - 1)[:k]
        thresh = a[cand].min()
        above = np.flatnonzero(a > thresh)
        ties = np.flatnonzero(a == thresh)
        support = np.sort(np.concatenate([above, ties[: k - above.size]]))
    return SparseVector(w.size, support, w[support])


def simplex_threshold(w_sorted_desc, lam):
    """Threshold tau of the simplex projection, given entries sorted descending."""
    css = np.cumsum(w_sorted_desc)
    j = np.arange(1, w_sorted_desc.size + 1)
    active = w_sorted_desc > (css - lam) / j
    rho = np.flatnonzero(active)[-1]  # nonempty for lam > 0
    return (css[rho] - lam) / (rho + 1.0)


def project_simplex(w, lam):
    """Euclidean projection onto the simplex {beta >= 0, sum(beta) = lam}.

    Sort-based O(p log p) rule: beta_i = max(w_i - tau, 0) with tau chosen
    so the positive part sums to ``lam``.

    Returns
    -------
    (beta, tau) : dense projected vector and the threshold used.
    """
    w = as_float_vector(w)
    lam = check_positive(lam, "lam")
    tau = simplex_threshold(np.sort(w)[::-1], lam)
    return np.maximum(w - tau, 0.0), float(tau)


def project_hyperplane(w, lam):
    """Euclidean projection onto the hyperplane {sum(beta) = lam}.

    Closed form: subtract the adjusted mean tau = (sum(w) - lam) / p.
    """
    w = as_float_vector(w)
    lam = check_level(lam)
    tau = (w.sum() - lam) / w.size
    return w - tau, float(tau)


def gssp(w, k, lam):
    """Greedy selector and simplex projector.

    Projects ``w`` onto the set of k-sparse nonnegative vectors summing to
    ``lam``: select the k largest entries by signed value, then run the
    simplex projection on that support.  The selected support is a global
    optimum, so the result is an exact Euclidean projection.

    Parameters
    ----------
    w : array_like, shape (p,)
    k : int
    lam : float, > 0

    Returns
    -------
    ProjectionResult.  ``beta.support`` holds the nonzero coordinates (the
    simplex projection may zero out part of the selected support, so the
    output can be sparser than k).
    """
    w = as_float_vector(w)
    k = check_sparsity(k, w.size)
    lam = check_positive(lam, "lam")
    selected = _select_top_k_signed(w, k)
    w_s = w[selected]
    beta_s, tau = project_simplex(w_s, lam)
    objective = float(np.sum(w_s[beta_s > 0] ** 2 - tau**2))
    dist = float(np.sum((beta_s - w_s) ** 2) + (w @ w - w_s @ w_s))
    nz = beta_s > 0
    beta = SparseVector(w.size, selected[nz], beta_s[nz])
    return ProjectionResult(beta, tau, dist, objective)


def _grow_support_two_sided(w, k, lam):
    """GSHP support selection in O(p + k log k).

    Seed with argmax(lam * w) (argmax(w) when lam == 0), then repeatedly add
    the index farthest from the adjusted running mean.  The farthest
    remaining element is always the current max or min of the unselected
    entries, so it suffices to keep the k largest and k smallest candidates
    (at most k picks happen in total, possibly all from one end) and walk
    two pointers over them.
    """
    p = w.size
    # candidate lists: value-desc/asc with lowest index first among ties
    hi_cand = _partition_top_k(w, k)
    order_desc = hi_cand[np.lexsort((hi_cand, -w[hi_cand]))]
    lo_cand = _select_bottom_k_signed(w, k)
    order_asc = lo_cand[np.lexsort((lo_cand, w[lo_cand]))]
    if lam < 0:
        seed = order_asc[0]
    else:
        seed = order_desc[0]
    taken = set()
    taken.add(int(seed))
    support = np.empty(k, dtype=np.int64)
    support[0] = seed
    running = w[seed]
    hi = lo = 0
    for step in range(1, k):
        mu = (running - lam) / step
        while order_desc[hi] in taken:
            hi += 1
        while order_asc[lo] in taken:
            lo += 1
        i_hi = order_desc[hi]
        i_lo = order_asc[lo]
        d_hi = abs(w[i_hi] - mu)
        d_lo = abs(w[i_lo] - mu)
        if d_hi > d_lo:
            j = i_hi
        elif d_lo > d_hi:
            j = i_lo
        else:
            j = min(i_hi, i_lo)
        taken.add(int(j))
        support[step] = j
        running += w[j]
    return np.sort(support)


def _select_bottom_k_signed(w, k):
    """Indices of the k smallest entries by signed value; ties to low index."""
    p = w.size
    if k == p:
        return np.arange(p)
    thresh = np.partition(w, k - 1)[k - 1]
    below = np.flatnonzero(w < thresh)
    ties = np.flatnonzero(w == thresh)
    support = np.concatenate([below, ties[: k - below.size]])
    support.sort()
    return support


def gshp(w, k, lam):
    """Greedy selector and hyperplane projector.

    Projects ``w`` onto the set of k-sparse vectors summing to ``lam``:
    seed the support with argmax(lam * w_i) (argmax w_i when lam == 0),
    grow it by repeatedly taking the entry farthest from the adjusted mean
    (sum(w_S) - lam) / |S|, then shift the selected entries to meet the sum
    constraint.  The support is a global optimum (exact projection).

    Returns
    -------
    ProjectionResult.  ``beta.support`` always has exactly k indices; stored
    values may include exact zeros.
    """
    w = as_float_vector(w)
    k = check_sparsity(k, w.size)
    lam = check_level(lam)
    support = _grow_support_two_sided(w, k, lam)
    w_s = w[support]
    beta_s, tau = project_hyperplane(w_s, lam)
    objective = float(w_s @ w_s - (w_s.sum() - lam) ** 2 / k)
    dist = float(k * tau * tau + (w @ w - w_s @ w_s))
    beta = SparseVector(w.size, support, beta_s)
    return ProjectionResult(beta, tau, dist, objective)


def set_function_simplex(w, support, lam):
    """Support set function F+ whose maximizer solves the sparse simplex problem.

    F+(S) = sum over the active part of the simplex projection of w|S of
    (w_i^2 - tau^2), where tau is the projection threshold.  Larger is
    better: ||w||^2 - F+(S) equals the squared projection distance for
    support S.
    """
    w = as_float_vector(w)
    lam = check_positive(lam, "lam")
    support = as_support(support, w.size)
    w_s = w[support]
    tau = simplex_threshold(np.sort(w_s)[::-1], lam)
    active = w_s > tau
    return float(np.sum(w_s[active] ** 2 - tau**2))


def set_function_hyperplane(w, support, lam, check_identity=False):
    """Support set function F for the sparse hyperplane problem.

    F(S) = sum_{i in S} w_i^2 - (sum_{i in S} w_i - lam)^2 / |S|.

    With ``check_identity=True`` the closed form is verified against its
    telescoping expansion (seeding with argmax lam*w_i, then accumulating
    the per-element increments); a mismatch beyond 1e-9 raises.
    """
    w = as_float_vector(w)
    lam = check_level(lam)
    support = as_support(support, w.size)
    w_s = w[support]
    value = float(w_s @ w_s - (w_s.sum() - lam) ** 2 / w_s.size)
    if check_identity:
        expanded = _hyperplane_telescoping(w_s, lam)
        if abs(expanded - value) > 1e-9 * (1.0 + abs(value)):
            raise AssertionError(
                f"set-function identity violated: {value} vs {expanded}"
            )
    return value


def _hyperplane_telescoping(b, lam):
    """F evaluated by its permutation-invariant telescoping expansion."""
    order = np.argsort(-(lam * b) if lam != 0 else -b, kind="stable")
    b = b[order]
    total = lam * (2 * b[0] - lam)
    run = b[0]
    for j in range(2, b.size + 1):
        total += (j - 1) / j * (b[j - 1] - (run - lam) / (j - 1)) ** 2
        run += b[j - 1]
    return float(total)
