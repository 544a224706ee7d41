"""Scikit-learn style wrappers around the projectors and solvers.

The projection transformers are stateless row-wise transforms; the
regressors fit sparse simplex/hyperplane-constrained coefficients by
projected gradient descent; the density estimator mirrors the
``KernelDensity`` interface (``fit`` + log-density ``score_samples``).
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .density import estimate_density, evaluate_pdf
from .linops import DenseMatrixOperator
from .projections import ConstraintSpec, gshp, gssp, project_hyperplane, project_simplex
from .solver import SolverConfig, solve_pgd

__all__ = [
    "SimplexProjection",
    "HyperplaneProjection",
    "SparseSimplexRegressor",
    "SparseHyperplaneRegressor",
    "SparseKernelDensity",
]


class SimplexProjection(TransformerMixin, BaseEstimator):
    """Row-wise Euclidean projection onto the (optionally k-sparse) simplex.

    Parameters
    ----------
    level : float, default=1.0
        Simplex level: projected rows are nonnegative and sum to it.
    k : int or None, default=None
        Sparsity budget; None projects onto the full simplex.
    """

    def __init__(self, level=1.0, k=None):
        self.level = level
        self.k = k

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_array(X, ensure_2d=True)
        if self.k is None:
            return np.stack([project_simplex(row, self.level)[0] for row in X])
        return np.stack(
            [gssp(row, self.k, self.level).beta.to_dense() for row in X]
        )


class HyperplaneProjection(TransformerMixin, BaseEstimator):
    """Row-wise projection onto {sum(x) = level}, optionally k-sparse."""

    def __init__(self, level=0.0, k=None):
        self.level = level
        self.k = k

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_array(X, ensure_2d=True)
        if self.k is None:
            return np.stack([project_hyperplane(row, self.level)[0] for row in X])
        return np.stack(
            [gshp(row, self.k, self.level).beta.to_dense() for row in X]
        )


class _ConstrainedRegressor(RegressorMixin, BaseEstimator):
    _kind = None

    def __init__(self, k=None, level=1.0, step_scale=3.0, max_iters=3000,
                 tol=1e-5, init="zero", random_state=0):
        self.k = k
        self.level = level
        self.step_scale = step_scale
        self.max_iters = max_iters
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def _spec(self, p):
        k = p if self.k is None else int(self.k)
        return ConstraintSpec(self._kind, k=k, level=self.level)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        spec = self._spec(X.shape[1])
        config = SolverConfig(
            step_scale=self.step_scale,
            max_iters=self.max_iters,
            tol=self.tol,
            init=self.init,
            seed=self.random_state,
        )
        beta, trace = solve_pgd(
            DenseMatrixOperator(X), y, spec.projector(), config
        )
        self.coef_ = beta
        self.trace_ = trace
        self.n_iter_ = trace.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class SparseSimplexRegressor(_ConstrainedRegressor):
    """Least squares with coefficients in the k-sparse simplex.

    Minimizes ||y - X beta||^2 subject to beta >= 0, sum(beta) = level and
    at most k nonzeros, by projected gradient descent with the greedy sparse
    simplex projection at each step.
    """

    _kind = "simplex_sparse"


class SparseHyperplaneRegressor(_ConstrainedRegressor):
    """Least squares with k-sparse coefficients summing to ``level``."""

    _kind = "hyperplane_sparse"

    def __init__(self, k=None, level=0.0, step_scale=3.0, max_iters=3000,
                 tol=1e-5, init="zero", random_state=0):
        super().__init__(k=k, level=level, step_scale=step_scale,
                         max_iters=max_iters, tol=tol, init=init,
                         random_state=random_state)


class SparseKernelDensity(BaseEstimator):
    """Kernel density estimate with simplex (optionally k-sparse) weights.

    Parameters
    ----------
    k : int or None
        Number of kernels allowed; None fits the full convex problem.
    sigma : float
        Common kernel width.
    """

    def __init__(self, k=None, sigma=1.0, max_iters=3000, tol=1e-5):
        self.k = k
        self.sigma = sigma
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("SparseKernelDensity handles 1-D samples")
            X = X[:, 0]
        if self.k is None:
            spec = ConstraintSpec("simplex_convex", level=1.0)
        else:
            spec = ConstraintSpec("simplex_sparse", k=int(self.k), level=1.0)
        model, n_iter = estimate_density(
            X, sigma=self.sigma, spec=spec, max_iters=self.max_iters, tol=self.tol
        )
        self.model_ = model
        self.weights_ = model.weights
        self.centers_ = model.centers
        self.support_ = model.support
        self.n_iter_ = n_iter
        return self

    def pdf(self, X):
        check_is_fitted(self, "model_")
        X = np.asarray(X, dtype=np.float64).ravel()
        return evaluate_pdf(self.model_, X)

    def score_samples(self, X):
        """Log density at the query points, following KernelDensity."""
        return np.log(np.maximum(self.pdf(X), 1e-300))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "model_")
        rng = np.random.default_rng(random_state)
        sup = self.support_
        probs = self.weights_[sup] / self.weights_[sup].sum()
        picks = rng.choice(sup, size=int(n_samples), p=probs)
        return self.centers_[picks] + self.sigma * rng.standard_normal(int(n_samples))
