"""Input validation helpers shared across the package."""

import numpy as np


def as_float_vector(w, name="w"):
    """Coerce to a 1-D float64 array, rejecting empty and non-finite input."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {w.shape}")
    if w.size == 0:
        raise ValueError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains NaN or Inf")
    return w


def check_sparsity(k, p, name="k"):
    k = int(k)
    if not 1 <= k <= p:
        raise ValueError(f"{name}={k} out of range [1, {p}]")
    return k


def check_positive(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be positive and finite, got {x}")
    return x


def check_level(lam, name="level"):
    lam = float(lam)
    if not np.isfinite(lam):
        raise ValueError(f"{name} must be finite, got {lam}")
    return lam


def as_support(indices, p, name="support"):
    """Coerce to a sorted, duplicate-free int index array within [0, p)."""
    s = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if s.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if s[0] < 0 or s[-1] >= p:
        raise ValueError(f"{name} has indices outside [0, {p})")
    return s
