import numpy as np
import pytest

from sparsesimplex import (
    ConstraintSpec,
    SparseVector,
    gshp,
    gssp,
    hard_threshold_top_k,
    project_hyperplane,
    project_simplex,
    set_function_hyperplane,
    set_function_simplex,
    top_k_select,
)
from sparsesimplex.projections import _grow_support_two_sided, _select_top_k_signed


def dense(result):
    return result.beta.to_dense()


# --- top_k_select -----------------------------------------------------------


def test_top_k_signed_not_magnitude():
    sv = top_k_select([-5.0, 1.0, 2.0], 2)
    assert sv.support.tolist() == [1, 2]
    assert sv.values.tolist() == [1.0, 2.0]


def test_top_k_tie_break_lowest_index():
    sv = top_k_select([3.0, 3.0, 1.0], 1)
    assert sv.support.tolist() == [0]
    assert sv.values.tolist() == [3.0]


def test_top_k_identity_case():
    sv = top_k_select([7.0], 1)
    assert sv.support.tolist() == [0]
    assert sv.values.tolist() == [7.0]


@pytest.mark.parametrize("k", [0, 4])
def test_top_k_out_of_range(k):
    with pytest.raises(ValueError):
        top_k_select([1.0, 2.0, 3.0], k)


def test_top_k_partial_and_sort_paths_agree():
    rng = np.random.default_rng(0)
    for trial in range(200):
        p = int(rng.integers(2, 40))
        w = rng.integers(-3, 4, size=p).astype(float)  # tie-rich
        for k in (1, 2, min(5, p), p):
            fast = _select_top_k_signed(w, k)
            order = np.argsort(-w, kind="stable")
            assert fast.tolist() == sorted(order[:k].tolist())


def test_top_k_rejects_nonfinite():
    with pytest.raises(ValueError):
        top_k_select([1.0, np.nan], 1)
    with pytest.raises(ValueError):
        top_k_select([np.inf, 0.0], 1)


def test_hard_threshold_magnitude():
    sv = hard_threshold_top_k([-5.0, 1.0, 2.0], 2)
    assert sv.support.tolist() == [0, 2]
    sv = hard_threshold_top_k([2.0, -2.0, 1.0], 1)
    assert sv.support.tolist() == [0]


# --- convex projections ------------------------------------------------------


def test_project_simplex_hand_example():
    beta, tau = project_simplex([0.5, 0.4, 0.3], 1.0)
    assert tau == pytest.approx(1.0 / 15.0, abs=1e-15)
    np.testing.assert_allclose(beta, [6.5 / 15, 5.0 / 15, 3.5 / 15], atol=1e-15)


def test_project_simplex_fixed_point():
    w = np.array([0.7, 0.3])
    beta, tau = project_simplex(w, 1.0)
    np.testing.assert_array_equal(beta, w)
    assert tau == 0.0


def test_project_simplex_rho_one():
    beta, tau = project_simplex([10.0, -10.0], 1.0)
    np.testing.assert_allclose(beta, [1.0, 0.0], atol=1e-15)
    assert tau == pytest.approx(9.0)


def test_project_simplex_rejects_bad_level():
    with pytest.raises(ValueError):
        project_simplex([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        project_simplex([1.0, 2.0], -1.0)


@pytest.mark.parametrize(
    "w,lam,expected_tau,expected",
    [
        ([1.0, 2.0, 3.0], 0.0, 2.0, [-1.0, 0.0, 1.0]),
        ([5.0], 2.0, 3.0, [2.0]),
    ],
)
def test_project_hyperplane_examples(w, lam, expected_tau, expected):
    beta, tau = project_hyperplane(w, lam)
    assert tau == pytest.approx(expected_tau)
    np.testing.assert_allclose(beta, expected, atol=1e-15)


def test_project_hyperplane_fixed_point():
    w = np.array([0.25, 0.75, 1.0])
    beta, tau = project_hyperplane(w, w.sum())
    np.testing.assert_array_equal(beta, w)
    assert tau == 0.0


def test_convex_projectors_match_cvxpy():
    cvxpy = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(7)
    for _ in range(12):
        p = int(rng.integers(2, 9))
        w = rng.standard_normal(p) * 2
        lam = float(rng.uniform(0.2, 3.0))
        x = cvxpy.Variable(p)
        prob = cvxpy.Problem(
            cvxpy.Minimize(cvxpy.sum_squares(x - w)),
            [x >= 0, cvxpy.sum(x) == lam],
        )
        prob.solve(solver="CLARABEL")
        beta, _ = project_simplex(w, lam)
        np.testing.assert_allclose(beta, x.value, atol=1e-5)

        lam2 = float(rng.uniform(-2.0, 2.0))
        x2 = cvxpy.Variable(p)
        prob2 = cvxpy.Problem(
            cvxpy.Minimize(cvxpy.sum_squares(x2 - w)), [cvxpy.sum(x2) == lam2]
        )
        prob2.solve(solver="CLARABEL")
        beta2, _ = project_hyperplane(w, lam2)
        np.testing.assert_allclose(beta2, x2.value, atol=1e-5)


def test_scale_covariance_hyperplane():
    rng = np.random.default_rng(3)
    w = rng.standard_normal(6)
    lam = 0.7
    base, _ = project_hyperplane(w, lam)
    for c in (-2.5, 0.5, 4.0):
        scaled, _ = project_hyperplane(c * w, c * lam)
        np.testing.assert_allclose(scaled, c * base, rtol=1e-12, atol=1e-12)


# --- gssp --------------------------------------------------------------------


def test_gssp_spec_example():
    res = gssp([0.5, 0.4, 0.3, -0.2], 2, 1.0)
    np.testing.assert_allclose(dense(res), [0.55, 0.45, 0.0, 0.0], atol=1e-15)
    assert res.distance_sq == pytest.approx(0.135, abs=1e-12)


def test_gssp_feasible_fixed_point():
    w = np.array([0.6, 0.4, 0.0])
    res = gssp(w, 2, 1.0)
    np.testing.assert_array_equal(dense(res), w)


def test_gssp_all_negative():
    res = gssp([-1.0, -2.0, -3.0], 2, 1.0)
    np.testing.assert_allclose(dense(res), [1.0, 0.0, 0.0], atol=1e-15)


def test_gssp_surplus_k_allows_sparser_output():
    # only one strictly positive entry; projection zeroes the rest
    res = gssp([5.0, -1.0, -2.0], 3, 1.0)
    assert dense(res).tolist() == [1.0, 0.0, 0.0]
    assert res.beta.support.size == 1


def test_gssp_feasibility_random():
    rng = np.random.default_rng(11)
    for _ in range(300):
        p = int(rng.integers(1, 15))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.uniform(0.1, 8.0))
        res = gssp(rng.standard_normal(p) * 3, k, lam)
        beta = dense(res)
        assert beta.min() >= 0.0
        assert np.count_nonzero(beta) <= k
        assert abs(beta.sum() - lam) <= 1e-10 * max(1.0, lam)
        assert res.distance_sq >= 0.0


# --- gshp --------------------------------------------------------------------


def test_gshp_spec_example_support_and_values():
    res = gshp([3.0, 1.0, -1.0], 2, 0.0)
    np.testing.assert_allclose(dense(res), [2.0, 0.0, -2.0], atol=1e-15)
    assert res.objective == pytest.approx(8.0)
    # full-vector distance includes the dropped middle coordinate
    assert res.distance_sq == pytest.approx(3.0)


def test_gshp_negative_level_seeds_argmin():
    res = gshp([1.0, 2.0], 1, 3.0)
    np.testing.assert_allclose(dense(res), [0.0, 3.0], atol=1e-15)
    assert res.distance_sq == pytest.approx(2.0)
    res_neg = gshp([1.0, 2.0], 1, -3.0)
    np.testing.assert_allclose(dense(res_neg), [-3.0, 0.0], atol=1e-15)


def test_gshp_feasible_fixed_point():
    w = np.array([4.0, -1.0, 0.0, 0.0])
    res = gshp(w, 2, 3.0)
    np.testing.assert_array_equal(dense(res), w)


def test_gshp_support_always_k():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = int(rng.integers(1, 12))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.uniform(-3.0, 3.0))
        res = gshp(rng.standard_normal(p), k, lam)
        assert res.beta.support.size == k
        assert abs(dense(res).sum() - lam) <= 1e-10 * max(1.0, abs(lam))


def _gshp_support_reference(w, k, lam):
    """Literal argmax-scan implementation of the greedy support growth."""
    p = w.size
    if lam > 0:
        seed = int(np.argmax(w))
    elif lam < 0:
        seed = int(np.argmin(w))
    else:
        seed = int(np.argmax(w))
    support = [seed]
    for _ in range(1, k):
        mean = (w[support].sum() - lam) / len(support)
        dist = np.abs(w - mean)
        dist[support] = -np.inf
        support.append(int(np.argmax(dist)))
    return np.sort(np.asarray(support))


def test_gshp_two_pointer_matches_reference():
    rng = np.random.default_rng(17)
    for trial in range(400):
        p = int(rng.integers(1, 25))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.choice([0.0, 1.0, -1.0, rng.uniform(-2, 2)]))
        if trial % 3 == 0:
            w = rng.integers(-3, 4, size=p).astype(float)  # exact ties
        else:
            w = rng.standard_normal(p)
        fast = _grow_support_two_sided(w, k, lam)
        ref = _gshp_support_reference(w, k, lam)
        assert fast.tolist() == ref.tolist(), (w, k, lam)


# --- set functions -----------------------------------------------------------


def test_set_function_simplex_hand_example():
    val = set_function_simplex([0.5, 0.4, 0.3], [0, 1], 1.0)
    assert val == pytest.approx(0.405, abs=1e-12)


def test_set_function_simplex_exact_fit():
    lam = 1.7
    assert set_function_simplex([lam, 0.0], [0], lam) == pytest.approx(lam**2)


def test_set_function_simplex_distance_identity():
    rng = np.random.default_rng(23)
    for _ in range(100):
        p = int(rng.integers(2, 10))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.uniform(0.3, 4.0))
        w = rng.standard_normal(p)
        support = np.sort(rng.choice(p, size=k, replace=False))
        beta_s, _ = project_simplex(w[support], lam)
        dist = np.sum((beta_s - w[support]) ** 2) + np.sum(
            np.delete(w, support) ** 2
        )
        f_plus = set_function_simplex(w, support, lam)
        assert f_plus + dist == pytest.approx(w @ w, rel=1e-12, abs=1e-12)


def test_set_function_hyperplane_closed_form():
    assert set_function_hyperplane([3.0, 1.0, -1.0], [0, 2], 0.0) == pytest.approx(8.0)


def test_set_function_hyperplane_singletons_zero_at_lam_zero():
    w = np.array([2.0, -3.0, 0.5])
    for i in range(3):
        assert set_function_hyperplane(w, [i], 0.0) == pytest.approx(0.0)


def test_set_function_empty_support_rejected():
    with pytest.raises(ValueError):
        set_function_simplex([1.0, 2.0], [], 1.0)
    with pytest.raises(ValueError):
        set_function_hyperplane([1.0, 2.0], [], 0.0)


def test_telescoping_identity_random():
    rng = np.random.default_rng(29)
    for _ in range(300):
        k = int(rng.integers(1, 9))
        b = rng.standard_normal(k) * 2
        lam = float(rng.uniform(-3.0, 3.0))
        # raises internally if the closed form and expansion disagree
        set_function_hyperplane(b, np.arange(k), lam, check_identity=True)


def test_increment_identity_random():
    rng = np.random.default_rng(31)
    for _ in range(300):
        p = int(rng.integers(2, 12))
        w = rng.standard_normal(p)
        lam = float(rng.uniform(-2.0, 2.0))
        size = int(rng.integers(1, p))
        s = rng.choice(p, size=size, replace=False)
        rest = np.setdiff1d(np.arange(p), s)
        if rest.size == 0:
            continue
        i = int(rest[0])
        lhs = set_function_hyperplane(w, np.append(s, i), lam)
        mean = (w[s].sum() - lam) / size
        rhs = set_function_hyperplane(w, s, lam) + size / (size + 1.0) * (
            w[i] - mean
        ) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


# --- invariants --------------------------------------------------------------


def test_permutation_equivariance():
    rng = np.random.default_rng(37)
    for _ in range(50):
        p = int(rng.integers(2, 12))
        w = rng.standard_normal(p)
        if np.unique(w).size < p:
            continue
        k = int(rng.integers(1, p + 1))
        perm = rng.permutation(p)
        lam = float(rng.uniform(0.2, 3.0))
        np.testing.assert_allclose(
            gssp(w[perm], k, lam).beta.to_dense(),
            gssp(w, k, lam).beta.to_dense()[perm],
            atol=1e-12,
        )
        lam2 = float(rng.uniform(-2.0, 2.0))
        np.testing.assert_allclose(
            gshp(w[perm], k, lam2).beta.to_dense(),
            gshp(w, k, lam2).beta.to_dense()[perm],
            atol=1e-12,
        )


def test_idempotence_componentwise():
    rng = np.random.default_rng(41)
    for _ in range(100):
        p = int(rng.integers(2, 12))
        k = int(rng.integers(1, p + 1))
        lam = float(rng.uniform(0.5, 2.0))
        feasible, _ = project_simplex(rng.standard_normal(p), lam)
        if np.count_nonzero(feasible) > k:
            continue
        again = gssp(feasible, k, lam).beta.to_dense()
        np.testing.assert_allclose(again, feasible, atol=1e-12)


# --- types -------------------------------------------------------------------


def test_sparse_vector_round_trip():
    sv = SparseVector.from_dense(np.array([0.0, 2.0, 0.0, -1.0]))
    assert sv.support.tolist() == [1, 3]
    np.testing.assert_array_equal(sv.to_dense(), [0.0, 2.0, 0.0, -1.0])
    assert sv.nnz == 2


def test_constraint_spec_validation():
    with pytest.raises(ValueError):
        ConstraintSpec("simplex_sparse", k=2, level=0.0)
    with pytest.raises(ValueError):
        ConstraintSpec("simplex_sparse", k=None, level=1.0)
    with pytest.raises(ValueError):
        ConstraintSpec("bogus", k=1, level=1.0)
    spec = ConstraintSpec("hyperplane_sparse", k=2, level=-1.0)
    assert spec.is_sparse


def test_constraint_spec_project_dispatch():
    w = np.array([0.5, 0.4, 0.3, -0.2])
    spec = ConstraintSpec("simplex_sparse", k=2, level=1.0)
    np.testing.assert_allclose(spec.project(w), [0.55, 0.45, 0.0, 0.0], atol=1e-15)
    spec2 = ConstraintSpec("sparsity_only", k=1, level=0.0)
    assert spec2.project(np.array([1.0, -3.0])).tolist() == [0.0, -3.0]
