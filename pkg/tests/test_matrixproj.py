import numpy as np
import pytest

from sparsesimplex import (
    ConstraintSpec,
    SolverConfig,
    gssp,
    lambda_bracketing_solve,
    operator_norm,
    oracle_project,
    pauli_operator,
    project_psd_traceball,
    project_rank_trace,
    prox_nuclear_psd,
    random_low_rank_state,
)
from sparsesimplex.matrixproj import (
    check_hermitian,
    load_matrix_binary,
    load_matrix_csv,
    numerical_rank,
    save_matrix_binary,
    save_matrix_csv,
)


def random_hermitian(rng, d, complex_valued=True):
    if complex_valued:
        w = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    else:
        w = rng.standard_normal((d, d))
    return (w + w.conj().T) / 2


# --- rank/trace projector ----------------------------------------------------


def test_rank_trace_diagonal_example():
    est = project_rank_trace(np.diag([0.6, 0.5, -0.1]), 2)
    np.testing.assert_allclose(est.matrix, np.diag([0.55, 0.45, 0.0]), atol=1e-15)
    assert est.rank_used == 2
    assert est.trace == pytest.approx(1.0)


def test_rank_trace_fixed_point():
    x = random_low_rank_state(6, 2, seed=0)
    est = project_rank_trace(x, 2)
    np.testing.assert_allclose(est.matrix, x, atol=1e-12)


def test_rank_trace_zero_matrix_degenerate():
    est = project_rank_trace(np.zeros((4, 4)), 1)
    assert est.rank_used == 1
    assert est.trace == pytest.approx(1.0)
    vals = np.linalg.eigvalsh(est.matrix)
    np.testing.assert_allclose(np.sort(vals), [0, 0, 0, 1.0], atol=1e-12)
    # distance^2 matches enumeration over unit-trace rank-1 diagonal candidates
    dist = np.linalg.norm(est.matrix) ** 2
    spec = ConstraintSpec("simplex_sparse", k=1, level=1.0)
    ora = oracle_project(np.zeros(4), spec)
    assert dist == pytest.approx(ora.best_distance_sq)


def test_rank_trace_output_constraints():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = int(rng.integers(2, 9))
        r = int(rng.integers(1, d + 1))
        est = project_rank_trace(random_hermitian(rng, d), r)
        vals = np.linalg.eigvalsh(est.matrix)
        assert vals.min() >= -1e-10
        assert est.matrix.trace().real == pytest.approx(1.0, abs=1e-10)
        assert np.sum(vals > 1e-12) <= r


def test_rank_trace_achieves_spectral_lower_bound():
    rng = np.random.default_rng(2)
    for trial in range(100):
        d = int(rng.integers(2, 9))
        r = int(rng.integers(1, d + 1))
        if trial % 3 == 0:
            w = random_hermitian(rng, d, complex_valued=False)
        elif trial % 3 == 1:
            w = random_hermitian(rng, d)
        else:  # degenerate spectrum
            vals = np.repeat(rng.standard_normal((d + 1) // 2), 2)[:d]
            q, _ = np.linalg.qr(random_hermitian(rng, d))
            w = q @ np.diag(vals) @ q.conj().T
            w = (w + w.conj().T) / 2
        est = project_rank_trace(w, r)
        dist = float(np.linalg.norm(est.matrix - w) ** 2)
        eigs = np.linalg.eigvalsh(w)
        expected = gssp(eigs, r, 1.0).distance_sq
        assert dist == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_rank_trace_matches_eigenvalue_enumeration_small():
    # dense search over which eigenvalues to keep, d <= 4
    rng = np.random.default_rng(3)
    for _ in range(30):
        d = int(rng.integers(2, 5))
        r = int(rng.integers(1, d + 1))
        w = random_hermitian(rng, d)
        est = project_rank_trace(w, r)
        dist = float(np.linalg.norm(est.matrix - w) ** 2)
        spec = ConstraintSpec("simplex_sparse", k=r, level=1.0)
        ora = oracle_project(np.linalg.eigvalsh(w), spec)
        assert dist == pytest.approx(ora.best_distance_sq, rel=1e-9, abs=1e-9)


def test_rank_trace_unitary_invariance():
    rng = np.random.default_rng(4)
    for _ in range(20):
        d = 6
        w = random_hermitian(rng, d)
        q, _ = np.linalg.qr(
            rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        )
        left = project_rank_trace(q @ w @ q.conj().T, 2).matrix
        right = q @ project_rank_trace(w, 2).matrix @ q.conj().T
        np.testing.assert_allclose(left, right, atol=1e-8)


def test_rank_trace_diagonal_equals_vector_gssp_exactly():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = int(rng.integers(2, 8))
        r = int(rng.integers(1, d + 1))
        diag = rng.standard_normal(d)
        est = project_rank_trace(np.diag(diag), r)
        expected = np.diag(gssp(diag, r, 1.0).beta.to_dense())
        np.testing.assert_array_equal(est.matrix, expected)


def test_rank_trace_rejects_non_hermitian():
    with pytest.raises(ValueError):
        project_rank_trace(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)
    with pytest.raises(ValueError):
        project_rank_trace(np.eye(3), 0)


# --- trace-ball projector ----------------------------------------------------


def test_traceball_inside_set_unchanged():
    w = np.diag([0.3, 0.2])
    np.testing.assert_allclose(project_psd_traceball(w), w, atol=1e-14)


def test_traceball_simplex_branch():
    np.testing.assert_allclose(
        project_psd_traceball(np.diag([2.0, 1.0])), np.diag([1.0, 0.0]), atol=1e-14
    )


def test_traceball_clip_branch():
    np.testing.assert_allclose(
        project_psd_traceball(np.diag([-1.0, 0.5])), np.diag([0.0, 0.5]), atol=1e-14
    )


def test_traceball_is_projection():
    # compare against cvxpy on small real symmetric inputs
    cvxpy = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(6)
    for _ in range(5):
        d = 4
        w = random_hermitian(rng, d, complex_valued=False)
        x = cvxpy.Variable((d, d), symmetric=True)
        prob = cvxpy.Problem(
            cvxpy.Minimize(cvxpy.sum_squares(x - w)),
            [x >> 0, cvxpy.trace(x) <= 1],
        )
        prob.solve(solver="CLARABEL")
        np.testing.assert_allclose(project_psd_traceball(w), x.value, atol=1e-5)


# --- nuclear prox ------------------------------------------------------------


def test_prox_nuclear_zeroes_small_matrices():
    w = np.diag([0.5, 0.2])
    np.testing.assert_allclose(prox_nuclear_psd(w, 0.6), np.zeros((2, 2)), atol=1e-14)


def test_prox_nuclear_soft_threshold():
    np.testing.assert_allclose(
        prox_nuclear_psd(np.diag([3.0, 1.0]), 0.5), np.diag([2.5, 0.5]), atol=1e-14
    )


def test_prox_nuclear_limit_is_psd_clip():
    rng = np.random.default_rng(7)
    w = random_hermitian(rng, 5)
    tiny = prox_nuclear_psd(w, 1e-12)
    vals, vecs = np.linalg.eigh(w)
    clip = (vecs * np.maximum(vals, 0)) @ vecs.conj().T
    np.testing.assert_allclose(tiny, clip, atol=1e-10)
    with pytest.raises(ValueError):
        prox_nuclear_psd(w, 0.0)


# --- bracketing --------------------------------------------------------------


def test_numerical_rank_relative_threshold():
    assert numerical_rank(np.diag([1.0, 1e-3, 1e-9])) == 2
    assert numerical_rank(np.diag([5.0, 5e-3, 5e-9])) == 2  # scale invariant
    assert numerical_rank(np.zeros((3, 3))) == 0


def test_bracketing_overdetermined_recovery():
    # m = d^2 distinct Paulis: fully determined system
    rng = np.random.default_rng(8)
    n = 2
    d = 2**n
    x_star = random_low_rank_state(d, 1, seed=1)
    A = pauli_operator(n, 4**n, seed=2)
    y = A.apply(x_star.astype(complex))
    cfg = SolverConfig(step_scale=1.0, momentum=True, max_iters=4000, tol=1e-9)
    est, lam = lambda_bracketing_solve(A, y, 1, cfg)
    rel = np.linalg.norm(est.matrix - x_star) / np.linalg.norm(x_star)
    assert est.rank_matched
    assert rel < 1e-3
    assert lam > 0
    assert est.matrix.trace().real == pytest.approx(1.0, abs=1e-9)


def test_bracketing_rank_monotone_probe():
    # numerical rank is non-increasing in lambda on a fixed instance (logged
    # behavior the bisection relies on; soft but stable at this scale)
    rng = np.random.default_rng(9)
    n, r = 2, 1
    d = 2**n
    x_star = random_low_rank_state(d, r, seed=3)
    A = pauli_operator(n, 12, seed=4)
    y = A.apply(x_star.astype(complex))
    nrm = operator_norm(A)
    mu = 1.0 / (2 * nrm**2)
    from sparsesimplex.solver import solve_pgd

    ranks = []
    top = 2 * np.linalg.eigvalsh(A.adjoint(y)).max()
    for lam in top * np.geomspace(1e-3, 1.0, 8):
        cfg = SolverConfig(
            step_rule="fixed", step_size=mu, momentum=True, max_iters=2000, tol=1e-8
        )
        x, _ = solve_pgd(A, y, lambda W: prox_nuclear_psd(W, mu * lam), cfg)
        ranks.append(numerical_rank(x))
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))


# --- misc --------------------------------------------------------------------


def test_check_hermitian():
    with pytest.raises(ValueError):
        check_hermitian(np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(ValueError):
        check_hermitian(np.zeros((2, 3)))


def test_random_low_rank_state_properties():
    x = random_low_rank_state(8, 3, seed=0)
    vals = np.linalg.eigvalsh(x)
    assert np.trace(x) == pytest.approx(1.0)
    assert vals.min() >= -1e-12
    assert np.sum(vals > 1e-10) == 3
    np.testing.assert_array_equal(x, random_low_rank_state(8, 3, seed=0))


def test_matrix_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    real = rng.standard_normal((5, 5))
    p_csv = tmp_path / "m.csv"
    save_matrix_csv(p_csv, real)
    np.testing.assert_allclose(load_matrix_csv(p_csv), real, atol=1e-12)

    herm = random_hermitian(rng, 4)
    p_bin = tmp_path / "m.bin"
    save_matrix_binary(p_bin, herm)
    np.testing.assert_array_equal(load_matrix_binary(p_bin), herm)

    save_matrix_binary(p_bin, real)
    np.testing.assert_array_equal(load_matrix_binary(p_bin), real)

    with pytest.raises(ValueError):
        save_matrix_csv(tmp_path / "c.csv", herm)
    (tmp_path / "bad.bin").write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        load_matrix_binary(tmp_path / "bad.bin")
