"""Dense order-3 tensor algebra and spectral primitives.

Tensors are plain numpy arrays of shape (d1, d2, d3); for multi-layer
networks the convention is (nodes, nodes, layers) so that ``t[:, :, i]``
is the adjacency matrix of layer ``i``.

The linearization contract: entry (i, j, k) of a (d1, d2, d3) tensor sits
at flat position ``i + d1*j + d1*d2*k`` (column-major in mode order, i.e.
numpy's Fortran order).  ``tensor3_from_values`` / ``tensor3_values``
pin that mapping; matricization follows the Kolda-Bader convention built
on the same ordering.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError

__all__ = [
    "tensor3_from_values",
    "tensor3_values",
    "flat_index",
    "matricize",
    "fold",
    "multilinear_product",
    "top_left_singular_vectors",
    "regularize",
    "orthonormality_defect",
    "is_slice_symmetric",
]


def flat_index(dims, i, j, k):
    """Flat position of entry (i, j, k) in the documented linearization."""
    d1, d2, _ = dims
    return i + d1 * j + d1 * d2 * k


def tensor3_from_values(values, dims):
    """Build a (d1, d2, d3) tensor from its linearized values."""
    values = np.asarray(values, dtype=float)
    d1, d2, d3 = dims
    if values.size != d1 * d2 * d3:
        raise ShapeError(f"expected {d1 * d2 * d3} values, got {values.size}")
    return values.reshape((d1, d2, d3), order="F")


def tensor3_values(t):
    """Linearized values of a tensor (inverse of ``tensor3_from_values``)."""
    return np.asarray(t).reshape(-1, order="F")


def _check_tensor3(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ShapeError(f"expected an order-3 tensor, got ndim={t.ndim}")
    return t


def matricize(t, mode):
    """Mode-k unfolding (Kolda-Bader).

    For mode k the result has shape (d_k, prod of the remaining dims) and
    column index enumerating the remaining modes in increasing order with
    the earlier mode varying fastest:  e.g. mode 3 maps entry (i, j, k)
    to row k, column i + d1*j.
    """
    t = _check_tensor3(t)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    ax = mode - 1
    return np.reshape(np.moveaxis(t, ax, 0), (t.shape[ax], -1), order="F")


def fold(m, mode, dims):
    """Inverse of ``matricize``: rebuild the (d1, d2, d3) tensor."""
    m = np.asarray(m, dtype=float)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    d1, d2, d3 = dims
    ax = mode - 1
    rest = [d for i, d in enumerate(dims) if i != ax]
    if m.shape != (dims[ax], rest[0] * rest[1]):
        raise ShapeError(f"matrix shape {m.shape} does not match dims {dims} at mode {mode}")
    t = np.reshape(m, (dims[ax], rest[0], rest[1]), order="F")
    return np.moveaxis(t, 0, ax)


def multilinear_product(t, u1=None, u2=None, u3=None):
    """Contract each mode with the transpose of the given factor.

    result(a, b, c) = sum_{i,j,m} t(i,j,m) u1(i,a) u2(j,b) u3(m,c);
    ``None`` stands for the identity factor on that mode.
    """
    t = _check_tensor3(t)
    factors = [u1, u2, u3]
    for ax, u in enumerate(factors):
        if u is None:
            continue
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[0] != t.shape[ax]:
            raise ShapeError(
                f"mode-{ax + 1} factor has shape {u.shape}, expected ({t.shape[ax]}, r)"
            )
        factors[ax] = u
    out = t
    if factors[0] is not None:
        out = np.einsum("ijm,ia->ajm", out, factors[0], optimize=True)
    if factors[1] is not None:
        out = np.einsum("ajm,jb->abm", out, factors[1], optimize=True)
    if factors[2] is not None:
        out = np.einsum("abm,mc->abc", out, factors[2], optimize=True)
    return out


def _fix_signs(u):
    # deterministic sign convention: largest-magnitude entry of each column
    # is non-negative, first occurrence winning ties
    u = u.copy()
    for c in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, c])))
        if u[idx, c] < 0:
            u[:, c] = -u[:, c]
    return u


def top_left_singular_vectors(m, r):
    """Top-r left singular vectors with the deterministic sign convention."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if not 1 <= r <= min(m.shape):
        raise ValueError(f"rank r={r} must satisfy 1 <= r <= min{m.shape}")
    try:
        u, _, _ = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return _fix_signs(u[:, :r])


def regularize(u, delta):
    """Row-clip to norm at most delta, then re-orthonormalize via SVD.

    Zero rows pass through unchanged.  The output keeps the column count
    of ``u`` and has max row norm at most sqrt(2)*delta.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={u.ndim}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    r = u.shape[1]
    norms = np.linalg.norm(u, axis=1)
    scale = np.ones_like(norms)
    hot = norms > delta
    scale[hot] = delta / norms[hot]
    clipped = u * scale[:, None]
    try:
        w, s, _ = np.linalg.svd(clipped, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    rank = int(np.sum(s > 1e-10 * max(s[0], 1e-300)))
    if rank < r:
        raise NumericError(
            f"row-clipped matrix has rank {rank} < {r}; cannot re-orthonormalize"
        )
    return _fix_signs(w[:, :r])


def orthonormality_defect(u):
    """Frobenius distance of U^T U from the identity."""
    u = np.asarray(u, dtype=float)
    g = u.T @ u
    return float(np.linalg.norm(g - np.eye(g.shape[0])))


def is_slice_symmetric(t, tol=0.0):
    """True when every mode-3 slice is symmetric (adjacency convention)."""
    t = _check_tensor3(t)
    if t.shape[0] != t.shape[1]:
        return False
    return bool(np.all(np.abs(t - t.transpose(1, 0, 2)) <= tol))
