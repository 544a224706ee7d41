import numpy as np
import pytest

from sparsesimplex import ConstraintSpec, OracleBudgetError, gshp, gssp, oracle_project
from sparsesimplex.projections import project_simplex


def test_oracle_simplex_hand_instance():
    spec = ConstraintSpec("simplex_sparse", k=2, level=1.0)
    res = oracle_project([0.5, 0.4, 0.3, -0.2], spec)
    assert res.best_support.tolist() == [0, 1]
    assert res.best_distance_sq == pytest.approx(0.135, abs=1e-12)
    assert res.enumerated == 6


def test_oracle_hyperplane_hand_instance():
    spec = ConstraintSpec("hyperplane_sparse", k=2, level=0.0)
    res = oracle_project([3.0, 1.0, -1.0], spec)
    assert res.best_support.tolist() == [0, 2]
    np.testing.assert_allclose(res.best_beta.to_dense(), [2.0, 0.0, -2.0], atol=1e-15)
    assert res.enumerated == 3


def test_oracle_degenerate_single_support():
    w = np.array([0.2, -0.4, 1.1])
    spec = ConstraintSpec("simplex_sparse", k=3, level=1.0)
    res = oracle_project(w, spec)
    beta, _ = project_simplex(w, 1.0)
    np.testing.assert_allclose(res.best_beta.to_dense(), beta, atol=1e-14)
    assert res.enumerated == 1


def test_oracle_budget_guard():
    spec = ConstraintSpec("simplex_sparse", k=10, level=1.0)
    with pytest.raises(OracleBudgetError, match="exceeds the budget"):
        oracle_project(np.ones(200), spec, budget=1000)


def test_oracle_rejects_convex_kinds():
    with pytest.raises(ValueError):
        oracle_project([1.0, 2.0], ConstraintSpec("simplex_convex", level=1.0))


def test_oracle_matches_greedy_random():
    rng = np.random.default_rng(0)
    for _ in range(150):
        p = int(rng.integers(2, 10))
        k = int(rng.integers(1, min(p, 4) + 1))
        w = rng.standard_normal(p) * 2
        lam = float(rng.uniform(0.2, 4.0))
        spec = ConstraintSpec("simplex_sparse", k=k, level=lam)
        ora = oracle_project(w, spec)
        res = gssp(w, k, lam)
        assert res.distance_sq == pytest.approx(
            ora.best_distance_sq, rel=1e-10, abs=1e-10
        )
        lam2 = float(rng.uniform(-3.0, 3.0))
        spec2 = ConstraintSpec("hyperplane_sparse", k=k, level=lam2)
        ora2 = oracle_project(w, spec2)
        res2 = gshp(w, k, lam2)
        assert res2.distance_sq == pytest.approx(
            ora2.best_distance_sq, rel=1e-10, abs=1e-10
        )


def test_oracle_monotone_in_k():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = 8
        w = rng.standard_normal(p)
        lam = float(rng.uniform(0.3, 2.0))
        prev = np.inf
        for k in range(1, p + 1):
            spec = ConstraintSpec("simplex_sparse", k=k, level=lam)
            d = oracle_project(w, spec).best_distance_sq
            assert d <= prev + 1e-12
            prev = d


def test_oracle_lexicographic_tie_break():
    # symmetric input: supports {0} and {1} tie; the first must win
    spec = ConstraintSpec("simplex_sparse", k=1, level=1.0)
    res = oracle_project([0.5, 0.5], spec)
    assert res.best_support.tolist() == [0]


def test_oracle_chunking_consistent():
    import sparsesimplex.oracle as om

    w = np.random.default_rng(9).standard_normal(10)
    spec = ConstraintSpec("hyperplane_sparse", k=4, level=0.5)
    full = oracle_project(w, spec)
    old = om._CHUNK
    try:
        om._CHUNK = 7  # force many chunks
        chunked = oracle_project(w, spec)
    finally:
        om._CHUNK = old
    assert full.best_support.tolist() == chunked.best_support.tolist()
    assert full.best_distance_sq == chunked.best_distance_sq
