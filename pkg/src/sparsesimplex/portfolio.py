"""Sparse portfolio updates as cardinality-and-budget constrained regression.

A portfolio adjustment delta must touch at most k assets (transaction
budget) and change the invested total by exactly ``level`` (0 keeps the
value constant).  The synthetic study recovers a planted k-sparse,
sum-constrained vector from noiseless linear measurements, comparing the
joint projection (GSHP inside projected gradient) against a baseline that
moves the sum constraint into the least-squares objective.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_vector, check_sparsity
from .linops import DenseMatrixOperator, StackedOperator
from .projections import gshp, hard_threshold_top_k
from .solver import SolverConfig, solve_pgd

__all__ = [
    "PortfolioUpdateProblem",
    "RegressionInstance",
    "generate_regression_instance",
    "solve_sparse_update",
    "solve_hyperplane_baseline",
    "markowitz_update_objective",
    "markowitz_update_gradient",
]


@dataclass
class PortfolioUpdateProblem:
    """Mean-variance update data: risk model, current holdings, and budgets."""

    covariance: np.ndarray
    expected_returns: np.ndarray
    risk_tradeoff: float
    current: np.ndarray
    k: int
    level: float

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be square")
        if np.linalg.norm(cov - cov.T) > 1e-8 * max(np.linalg.norm(cov), 1e-300):
            raise ValueError("covariance must be symmetric")
        self.covariance = cov


@dataclass
class RegressionInstance:
    """Planted recovery instance: y = X beta_star, beta_star k-sparse, sum level."""

    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    k: int
    level: float
    seed: int | None = None


def generate_regression_instance(p, m, k, seed=None, level=None):
    """Column-normalized Gaussian design with a planted feasible target.

    The nonzero values are standard normal, shifted so they sum exactly to
    ``level``; when ``level`` is omitted it is drawn uniformly from [-1, 1],
    redrawing while |level| < 1e-3 to avoid the degenerate near-zero budget.
    Measurements are noiseless.
    """
    p, m = int(p), int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    k = check_sparsity(k, p)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, p))
    X /= np.linalg.norm(X, axis=0)
    lam = float(level) if level is not None else 0.0
    while level is None and abs(lam) < 1e-3:
        lam = float(rng.uniform(-1.0, 1.0))
    while True:
        support = np.sort(rng.choice(p, size=k, replace=False))
        vals = rng.standard_normal(k)
        vals += (lam - vals.sum()) / k
        if np.all(vals != 0):
            break
    beta_star = np.zeros(p)
    beta_star[support] = vals
    return RegressionInstance(X, X @ beta_star, beta_star, k, lam, seed)


def solve_hyperplane_baseline(instance, config=None):
    """Baseline: fold the sum constraint into the objective.

    Minimizes ``|| [X; 1^T/sqrt(p)] beta - [y; level/sqrt(p)] ||^2`` over
    k-sparse beta via plain top-k-magnitude hard thresholding; the added row
    is scaled by 1/sqrt(p) to keep the stacked matrix well conditioned.  The
    sum constraint holds only approximately in the result.

    Returns (beta, trace).
    """
    p = instance.X.shape[1]
    scale = 1.0 / np.sqrt(p)
    A = StackedOperator(
        [
            DenseMatrixOperator(instance.X),
            DenseMatrixOperator(np.full((1, p), scale)),
        ]
    )
    target = np.concatenate([instance.y, [instance.level * scale]])
    config = config or SolverConfig()
    projector = lambda b: hard_threshold_top_k(b, instance.k).to_dense()
    return solve_pgd(A, target, projector, config)


def solve_sparse_update(instance, config=None, warm_start=None):
    """Joint-projection solve: GSHP keeps iterates k-sparse with exact sum.

    Warm starts from the hyperplane baseline by default (the refine-a-convex-
    solution workflow); pass ``warm_start`` to supply an external vector
    instead.  Refinement never hands back something worse than its starting
    point: if the run ends with a higher residual than the projected warm
    start (possible for aggressive steps on ill-conditioned designs), the
    projected warm start is returned instead.

    Returns (beta, trace); the estimate has at most k nonzeros and sums to
    ``level`` up to roundoff.
    """
    if warm_start is None:
        warm_start, _ = solve_hyperplane_baseline(instance, config)
    base = config or SolverConfig()
    cfg = SolverConfig(
        step_rule=base.step_rule,
        step_scale=base.step_scale,
        step_size=base.step_size,
        rip_delta=base.rip_delta,
        max_iters=base.max_iters,
        tol=base.tol,
        init="warm",
        warm_start=np.asarray(warm_start, dtype=np.float64),
        momentum=base.momentum,
        log_supports=base.log_supports,
    )
    A = DenseMatrixOperator(instance.X)
    projector = lambda b: gshp(b, instance.k, instance.level).beta.to_dense()
    beta, trace = solve_pgd(A, instance.y, projector, cfg)
    start = projector(np.asarray(warm_start, dtype=np.float64))
    start_obj = float(np.sum((A.apply(start) - instance.y) ** 2))
    if trace.objectives[-1] > start_obj:
        return start, trace
    return beta, trace


def markowitz_update_objective(problem, delta):
    """Risk-minus-return objective of the adjusted portfolio.

    (current + delta)' Cov (current + delta)
        - risk_tradeoff * returns' (current + delta)
    """
    delta = as_float_vector(delta, "delta")
    adjusted = np.asarray(problem.current, dtype=np.float64) + delta
    risk = float(adjusted @ (problem.covariance @ adjusted))
    ret = float(np.asarray(problem.expected_returns) @ adjusted)
    return risk - problem.risk_tradeoff * ret


def markowitz_update_gradient(problem, delta):
    """Gradient of :func:`markowitz_update_objective` in delta."""
    delta = as_float_vector(delta, "delta")
    adjusted = np.asarray(problem.current, dtype=np.float64) + delta
    return 2.0 * (problem.covariance @ adjusted) - problem.risk_tradeoff * np.asarray(
        problem.expected_returns, dtype=np.float64
    )
