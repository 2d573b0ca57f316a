"""Dense symmetric-form linear algebra, generic over smooth scalars.

Float arrays take numpy/LAPACK routes.  Object arrays (entries that are
:class:`~equiaffine.jets.Jet` or mixed) take division-free cofactor routes
for small sizes and pivoted elimination otherwise.  Forms are plain square
arrays; covariant and contravariant forms differ only in how callers use them.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ArgumentError, SingularFormError
from .jets import constant_part

DEFAULT_TOL = 1e-10
COFACTOR_MAX = 5
_LAPLACE_MAX = 7


class Inertia(NamedTuple):
    positive: int
    negative: int
    zero: int


def _square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"expected a square matrix, got shape {a.shape}")
    return a


def _generic(a):
    return a.dtype == object


def laplace_determinant(a):
    """Division-free determinant by memoized Laplace expansion along rows."""
    m = len(a)
    if m == 0:
        return 1.0
    memo = {}

    def minor(row, cols):
        if row == m:
            return 1.0
        key = cols
        if key in memo:
            return memo[key]
        total = 0.0
        sign = 1.0
        for k, c in enumerate(cols):
            entry = a[row][c]
            if not (isinstance(entry, (float, int)) and entry == 0):
                term = entry * minor(row + 1, cols[:k] + cols[k + 1 :])
                total = total + term if sign > 0 else total - term
            sign = -sign
        memo[key] = total
        return total

    return minor(0, tuple(range(m)))


def lu_factor_generic(a):
    """Partially pivoted elimination over smooth scalars.

    Returns (det, solve) where solve(b) applies the inverse.  Pivots are
    chosen by the magnitude of their constant part.
    """
    a = np.array(a, dtype=object)
    m = len(a)
    perm = list(range(m))
    det = 1.0
    for k in range(m):
        p = max(range(k, m), key=lambda r: abs(constant_part(a[r, k])))
        if constant_part(a[p, k]) == 0:
            raise SingularFormError("matrix is singular at the base point")
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[k], perm[p] = perm[p], perm[k]
            det = -det
        piv = a[k, k]
        det = det * piv
        inv = 1.0 / piv
        for r in range(k + 1, m):
            f = a[r, k] * inv
            a[r, k] = f
            for c in range(k + 1, m):
                a[r, c] = a[r, c] - f * a[k, c]

    def solve(b):
        b = np.array(b, dtype=object)
        x = b[perm].copy()
        for r in range(m):
            for c in range(r):
                x[r] = x[r] - a[r, c] * x[c]
        for r in range(m - 1, -1, -1):
            for c in range(r + 1, m):
                x[r] = x[r] - a[r, c] * x[c]
            x[r] = x[r] / a[r, r]
        return x

    return det, solve


def determinant(a):
    """Determinant of the entries in the declared (equiaffine) coordinates."""
    a = _square(a)
    if not _generic(a):
        return float(np.linalg.det(a.astype(float))) if len(a) else 1.0
    if len(a) <= _LAPLACE_MAX:
        return laplace_determinant(a)
    return lu_factor_generic(a)[0]


def adjugate(a):
    """Transpose of the signed cofactor matrix; valid at every rank."""
    a = _square(a)
    m = len(a)
    if m == 1:
        return np.ones((1, 1), dtype=a.dtype)
    if not _generic(a):
        a = a.astype(float)
        if m <= COFACTOR_MAX:
            return _cofactor_adjugate_float(a)
        return _svd_adjugate(a)
    out = np.empty((m, m), dtype=object)
    if m <= _LAPLACE_MAX:
        idx = np.arange(m)
        for i in range(m):
            for j in range(m):
                minor = a[np.ix_(idx != j, idx != i)]
                d = laplace_determinant(minor)
                out[i, j] = d if (i + j) % 2 == 0 else -d
        return out
    det, solve = lu_factor_generic(a)
    eye = np.eye(m)
    for j in range(m):
        out[:, j] = solve(np.array(list(eye[:, j]), dtype=object)) * det
    return out


def _cofactor_adjugate_float(a):
    m = len(a)
    idx = np.arange(m)
    minors = np.empty((m, m, m - 1, m - 1))
    for i in range(m):
        for j in range(m):
            minors[i, j] = a[np.ix_(idx != j, idx != i)]
    signs = (-1.0) ** np.add.outer(idx, idx)
    return signs * np.linalg.det(minors)


def _svd_adjugate(a):
    # adj(U S V^T) = det(U) det(V) V adj(S) U^T, stable at every rank
    u, s, vt = np.linalg.svd(a)
    m = len(s)
    prods = np.array([np.prod(np.delete(s, i)) for i in range(m)])
    scale = np.linalg.det(u) * np.linalg.det(vt)
    return scale * (vt.T * prods) @ u.T


def bordered_matrix(a, v):
    a = _square(a)
    v = np.asarray(v)
    m = len(a)
    dtype = object if (_generic(a) or v.dtype == object) else float
    b = np.zeros((m + 1, m + 1), dtype=dtype)
    if dtype == object:
        b[:, :] = 0.0
    b[:m, :m] = a
    b[:m, m] = v
    b[m, :m] = v
    return b


def bordered_determinant(a, v):
    """-det [[a, v], [v^T, 0]], which equals v . adj(a) . v."""
    return -determinant(bordered_matrix(a, v))


def inverse(a, tol=DEFAULT_TOL):
    a = _square(a)
    m = len(a)
    if _generic(a):
        vals = np.vectorize(constant_part, otypes=[float])(a)
        _check_invertible(vals, tol)
        det, solve = lu_factor_generic(a)
        out = np.empty((m, m), dtype=object)
        eye = np.eye(m)
        for j in range(m):
            out[:, j] = solve(np.array(list(eye[:, j]), dtype=object))
        return out
    a = a.astype(float)
    _check_invertible(a, tol)
    return np.linalg.inv(a)


def _check_invertible(a, tol):
    m = len(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    det = np.linalg.det(a) if m else 1.0
    if scale == 0 or not abs(det) > tol * scale**m:
        raise SingularFormError(f"form is singular (det = {det:.3e}, scale = {scale:.3e})")


def inertia(a, tol=DEFAULT_TOL):
    """(positive, negative, zero) pivot counts of a pivoted LDL^T factorization."""
    a = _square(a).astype(float)
    m = len(a)
    if m == 0:
        return Inertia(0, 0, 0)
    a = 0.5 * (a + a.T)
    scale = np.max(np.abs(a))
    if scale == 0:
        return Inertia(0, 0, m)
    _, d, _ = scipy.linalg.ldl(a, lower=True)
    thresh = tol * scale
    pos = neg = 0
    i = 0
    while i < m:
        if i + 1 < m and d[i + 1, i] != 0:
            ev = np.linalg.eigvalsh(d[i : i + 2, i : i + 2])
            i += 2
        else:
            ev = [d[i, i]]
            i += 1
        for e in ev:
            if e > thresh:
                pos += 1
            elif e < -thresh:
                neg += 1
    return Inertia(pos, neg, m - pos - neg)


def restrict(a, basis):
    """Matrix of the bilinear form a on the columns of ``basis``."""
    return basis.T @ a @ basis


def kernel_basis(covector):
    """Orthonormal basis (columns) of the kernel of a nonzero covector."""
    v = np.asarray(covector, dtype=float)
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(len(v))]))
    return q[:, 1 : len(v)]
