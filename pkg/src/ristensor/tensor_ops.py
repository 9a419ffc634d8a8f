"""Dense complex multilinear-algebra kernels.

Tensors are plain numpy ndarrays (order 2 to 4, complex entries). One
linearization convention is used everywhere: the FIRST index varies fastest
(Fortran order), so ``vec(c outer b outer a) == kron(a, b, c)`` holds
literally and the mode-n unfoldings below factor through Khatri-Rao products
without permutation matrices.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateInputError

__all__ = [
    "khatri_rao",
    "kron_vec",
    "vec",
    "mode_unfold",
    "mode_fold",
    "mode_product",
    "identity_tensor",
    "parafac_tensor",
    "SvdTriple",
    "dominant_svd",
    "hosvd3",
]


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts.

    For ``a`` of shape (I, Q) and ``b`` of shape (J, Q), returns the
    (I*J, Q) matrix whose q-th column is ``kron(a[:, q], b[:, q])``; row
    block i (each J rows) equals ``b @ diag(a[i, :])``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column-count mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(
        a.shape[0] * b.shape[0], a.shape[1]
    )


def kron_vec(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Kronecker product ``a (x) b (x) c`` of three vectors.

    Equals ``vec(c outer b outer a)`` under the first-index-fastest
    convention: entry ``l + L*m + L*M*p`` is ``a[p] * b[m] * c[l]``.
    """
    return np.kron(np.kron(np.ravel(a), np.ravel(b)), np.ravel(c))


def vec(t: np.ndarray) -> np.ndarray:
    """Vectorize a tensor with the first index varying fastest."""
    return np.asarray(t).reshape(-1, order="F")


def _check_mode(t: np.ndarray, mode: int) -> None:
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")


def mode_unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Matricize a tensor with `mode` as rows (0-based).

    Columns enumerate the remaining modes with the lowest remaining mode
    varying fastest.
    """
    t = np.asarray(t)
    _check_mode(t, mode)
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1, order="F")


def mode_fold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`mode_unfold` for a tensor of the given shape."""
    shape = tuple(shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    m = np.asarray(m)
    moved = [shape[mode]] + [s for i, s in enumerate(shape) if i != mode]
    if m.shape != (moved[0], int(np.prod(moved[1:], dtype=np.int64))):
        raise ValueError(
            f"matrix of shape {m.shape} does not fold into {shape} along mode {mode}"
        )
    return np.moveaxis(m.reshape(moved, order="F"), 0, mode)


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """n-mode product: contract matrix ``m`` with tensor ``t`` along `mode`.

    Satisfies ``mode_unfold(result, mode) == m @ mode_unfold(t, mode)``.
    """
    t = np.asarray(t)
    m = np.asarray(m)
    _check_mode(t, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix of shape {m.shape} does not contract mode {mode} "
            f"of tensor with shape {t.shape}"
        )
    return np.moveaxis(np.tensordot(m, t, axes=(1, mode)), 0, mode)


def identity_tensor(order: int, n: int) -> np.ndarray:
    """Superdiagonal identity tensor of the given order and side length n."""
    if order < 2 or n < 1:
        raise ValueError("identity_tensor needs order >= 2 and n >= 1")
    t = np.zeros((n,) * order, dtype=complex)
    idx = np.arange(n)
    t[(idx,) * order] = 1.0
    return t


def parafac_tensor(factors) -> np.ndarray:
    """Tensor with the given CP factor matrices (one L_i x N matrix per mode).

    Equivalent to chaining mode products of the factors onto the identity
    tensor; computed directly as a sum of rank-one terms.
    """
    factors = [np.asarray(f) for f in factors]
    if not 2 <= len(factors) <= 4:
        raise ValueError("parafac_tensor supports 2 to 4 factor matrices")
    n = factors[0].shape[1]
    if any(f.ndim != 2 or f.shape[1] != n for f in factors):
        raise ValueError("all factor matrices must share the same column count")
    subs = ["ln", "mn", "kn", "pn"][: len(factors)]
    out = "".join(s[0] for s in subs)
    return np.einsum(",".join(subs) + "->" + out, *factors)


class SvdTriple(NamedTuple):
    """Dominant singular triple of a matrix: ``m ~ sigma * outer(u, conj(v))``."""

    u: np.ndarray
    sigma: float
    v: np.ndarray


def dominant_svd(m: np.ndarray) -> SvdTriple:
    """Best rank-one approximation of a matrix in the Frobenius norm.

    Returns unit-norm left/right singular vectors and the largest singular
    value. Raises on an all-zero matrix, since downstream scale extraction
    divides by sigma.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("dominant_svd expects a matrix")
    if not np.any(m):
        raise DegenerateInputError("dominant_svd of an all-zero matrix")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SvdTriple(u=u[:, 0], sigma=float(s[0]), v=vh[0].conj())


def hosvd3(t: np.ndarray):
    """Higher-order SVD of an order-3 tensor.

    Returns ``(core, u1, u2, u3)`` where each ``u_i`` holds the left singular
    vectors of the mode-i unfolding (decreasing singular value order) and
    ``core = t x1 u1^H x2 u2^H x3 u3^H``, so that
    ``t == core x1 u1 x2 u2 x3 u3`` exactly.
    """
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError("hosvd3 expects an order-3 tensor")
    if not np.any(t):
        raise DegenerateInputError("hosvd3 of an all-zero tensor")
    us = [
        np.linalg.svd(mode_unfold(t, mode), full_matrices=False)[0]
        for mode in range(3)
    ]
    core = t
    for mode, u in enumerate(us):
        core = mode_product(core, u.conj().T, mode)
    return core, us[0], us[1], us[2]
