"""Linear measurement operators with apply/adjoint and norm estimation.

Operators map a parameter space (vectors in R^p, or d x d Hermitian
matrices) to a real measurement vector in R^m.  All randomness is driven by
an explicit 64-bit seed; a fixed seed reproduces every generator bit for bit.
"""

import math

import numpy as np

from ._validation import as_float_vector

__all__ = [
    "LinearOperator",
    "DenseMatrixOperator",
    "IdentityOperator",
    "StackedOperator",
    "PauliOperator",
    "gaussian_matrix",
    "pauli_operator",
    "operator_norm",
    "add_noise_snr",
    "estimate_rip_constant",
]


class LinearOperator:
    """Abstract linear map A: domain -> R^m.

    Subclasses define ``apply`` (domain array -> (m,) real vector) and
    ``adjoint`` ((m,) vector -> domain array), plus ``domain_shape`` and
    ``m``.  Adjoint consistency <A(x), y> == <x, A^T(y)> is a tested
    invariant (real inner products; matrix domains use Re trace).
    """

    domain_shape = None
    m = None

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError


class DenseMatrixOperator(LinearOperator):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        self.matrix = matrix
        self.m = matrix.shape[0]
        self.domain_shape = (matrix.shape[1],)

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y


class IdentityOperator(LinearOperator):
    def __init__(self, p):
        self.m = int(p)
        self.domain_shape = (int(p),)

    def apply(self, x):
        return np.asarray(x, dtype=np.float64).copy()

    def adjoint(self, y):
        return np.asarray(y, dtype=np.float64).copy()


class StackedOperator(LinearOperator):
    """Vertical stack of operators sharing one domain."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("need at least one operator")
        shapes = {op.domain_shape for op in parts}
        if len(shapes) != 1:
            raise ValueError(f"domain shapes differ: {shapes}")
        self.parts = parts
        self.domain_shape = parts[0].domain_shape
        self.m = sum(op.m for op in parts)

    def apply(self, x):
        return np.concatenate([op.apply(x) for op in self.parts])

    def adjoint(self, y):
        out = None
        offset = 0
        for op in self.parts:
            piece = op.adjoint(y[offset : offset + op.m])
            out = piece if out is None else out + piece
            offset += op.m
        return out


# Base-4 digit encoding of observables: 0=I, 1=X, 2=Y, 3=Z per qubit.
_PAULI_NAMES = "IXYZ"


def _observable_structure(index, n_qubits):
    """Column map and phases of a Pauli tensor observable.

    The observable is a signed-permutation matrix: row r has its single
    nonzero at column cols[r] with value phases[r].  Qubit 0 is the most
    significant base-4 digit of ``index`` and the most significant bit of
    the row index.
    """
    d = 1 << n_qubits
    rows = np.arange(d)
    cols = np.zeros(d, dtype=np.int64)
    phases = np.ones(d, dtype=np.complex128)
    for q in range(n_qubits):
        digit = (index >> (2 * (n_qubits - 1 - q))) & 3
        b = (rows >> (n_qubits - 1 - q)) & 1
        if digit == 0:  # I
            cb = b
        elif digit == 1:  # X
            cb = 1 - b
        elif digit == 2:  # Y: row 0 -> -i at col 1, row 1 -> +i at col 0
            cb = 1 - b
            phases = phases * (1j * (2 * b - 1))
        else:  # Z
            cb = b
            phases = phases * (1 - 2 * b)
        cols = 2 * cols + cb
    return cols, phases


class PauliOperator(LinearOperator):
    """Ensemble of scaled Pauli tensor observables.

    Measurement i of a Hermitian matrix X is ``scale * tr(E_i X)``, computed
    from the signed-permutation structure of each observable in O(d) rather
    than via dense d x d matrices.
    """

    def __init__(self, n_qubits, indices, scale):
        self.n_qubits = int(n_qubits)
        self.d = 1 << self.n_qubits
        self.indices = np.asarray(indices, dtype=np.int64)
        self.scale = float(scale)
        self.m = self.indices.size
        self.domain_shape = (self.d, self.d)
        cols = np.empty((self.m, self.d), dtype=np.int64)
        phases = np.empty((self.m, self.d), dtype=np.complex128)
        for i, t in enumerate(self.indices):
            cols[i], phases[i] = _observable_structure(int(t), self.n_qubits)
        self._cols = cols
        self._phases = phases
        self._row_idx = np.arange(self.d)[None, :]
        self._flat = (self._row_idx * self.d + cols).ravel()

    def apply(self, x):
        # tr(E X) = sum_r E[r, c(r)] X[c(r), r]
        vals = x[self._cols, self._row_idx]
        return self.scale * (self._phases * vals).sum(axis=1).real

    def adjoint(self, y):
        coeff = (self.scale * np.asarray(y))[:, None] * self._phases
        re = np.bincount(self._flat, weights=coeff.real.ravel(), minlength=self.d**2)
        im = np.bincount(self._flat, weights=coeff.imag.ravel(), minlength=self.d**2)
        return (re + 1j * im).reshape(self.d, self.d)

    def observable(self, i):
        """Dense matrix of the i-th (unscaled) observable; for tests/small d."""
        out = np.zeros((self.d, self.d), dtype=np.complex128)
        out[np.arange(self.d), self._cols[i]] = self._phases[i]
        return out

    def names(self):
        labels = []
        for t in self.indices:
            s = "".join(
                _PAULI_NAMES[(int(t) >> (2 * (self.n_qubits - 1 - q))) & 3]
                for q in range(self.n_qubits)
            )
            labels.append(s)
        return labels

    def dense_matrix(self):
        """The (m, d^2) matrix of the flattened map; for small-d oracles only."""
        rows = [self.scale * self.observable(i).T.ravel() for i in range(self.m)]
        return np.stack(rows)


def gaussian_matrix(m, p, column_normalized=True, seed=None, identity=False):
    """Random dense operator with iid standard normal entries.

    With ``column_normalized`` each column is scaled to unit Euclidean norm.
    ``identity=True`` overrides everything and returns the identity map
    (requires m == p); handy for solver sanity tests.
    """
    m, p = int(m), int(p)
    if m < 1 or p < 1:
        raise ValueError("m and p must be >= 1")
    if identity:
        if m != p:
            raise ValueError("identity override requires m == p")
        return IdentityOperator(p)
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((m, p))
    if column_normalized:
        mat /= np.linalg.norm(mat, axis=0)
    return DenseMatrixOperator(mat)


def pauli_operator(n_qubits, m, seed=None, scale=None):
    """Sample m distinct Pauli tensor observables uniformly (no replacement).

    ``scale`` defaults to 1/sqrt(m) so the ensemble's operator norm is
    exactly sqrt(d / m); step sizes downstream use the measured norm, so
    recovery behavior does not depend on this normalization choice.
    """
    n_qubits = int(n_qubits)
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    total = 4**n_qubits
    m = int(m)
    if not 1 <= m <= total:
        raise ValueError(f"m={m} out of range [1, {total}]")
    rng = np.random.default_rng(seed)
    indices = rng.choice(total, size=m, replace=False)
    if scale is None:
        scale = 1.0 / math.sqrt(m)
    return PauliOperator(n_qubits, indices, scale)


def _domain_random(op, rng):
    x = rng.standard_normal(op.domain_shape)
    if len(op.domain_shape) == 2:
        x = (x + x.T) / 2  # matrix-domain norms are taken over Hermitian input
    return x


def operator_norm(A, iters=200, seed=0, tol=1e-8):
    """Power-method estimate of the operator norm ||A|| via A^T A.

    Stops after ``iters`` iterations or when successive Rayleigh quotients
    agree to ``tol`` relative.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = _domain_random(A, rng)
    v = v / np.linalg.norm(v)
    prev = None
    for _ in range(iters):
        av = A.apply(v)
        lam = float(np.real(np.vdot(av, av)))
        if prev is not None and abs(lam - prev) <= tol * max(lam, 1e-300):
            break
        prev = lam
        v = A.adjoint(av)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        v = v / nv
    return math.sqrt(lam)


def add_noise_snr(y_clean, snr_db, seed=None):
    """Add white Gaussian noise at a prescribed signal-to-noise ratio.

    The noise variance is set so that the expected total noise energy
    satisfies 10 log10(||y||^2 / E||eta||^2) = snr_db.  ``snr_db = inf`` is
    the noiseless sentinel.
    """
    y = as_float_vector(y_clean, "y_clean")
    if math.isinf(snr_db) and snr_db > 0:
        return y.copy()
    energy = float(y @ y)
    if energy <= 0:
        raise ValueError("clean signal has zero energy; SNR undefined")
    sigma = math.sqrt(energy * 10 ** (-snr_db / 10.0) / y.size)
    rng = np.random.default_rng(seed)
    return y + sigma * rng.standard_normal(y.size)


def estimate_rip_constant(A, k, trials=200, seed=0):
    """Monte-Carlo lower bound on the k-RIP constant of a vector-domain map.

    Maximum of ``abs(||A x||^2 - 1)`` over random unit-norm k-sparse probes.
    Diagnostic only: a true delta_k is at least this large.
    """
    if len(A.domain_shape) != 1:
        raise ValueError("RIP estimation needs a vector-domain operator")
    p = A.domain_shape[0]
    k = int(k)
    if not 1 <= k <= p:
        raise ValueError(f"k={k} out of range [1, {p}]")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        support = rng.choice(p, size=k, replace=False)
        x = np.zeros(p)
        vals = rng.standard_normal(k)
        x[support] = vals / np.linalg.norm(vals)
        worst = max(worst, abs(float(np.sum(A.apply(x) ** 2)) - 1.0))
    return worst
