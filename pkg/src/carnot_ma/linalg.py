"""Small symmetric-matrix helpers.

Eigenvalues of 2x2 and 3x3 symmetric matrices are computed in closed form
(vectorized over leading axes) because the grid solver evaluates them in its
inner loop; larger orders fall back to LAPACK.
"""

import numpy as np

from .errors import DomainError

__all__ = [
    "eigvals_sym",
    "lambda_min",
    "lambda_max",
    "symmetrize",
    "random_spd",
    "random_psd",
]


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _eigvals_2(a):
    a00 = a[..., 0, 0]
    a11 = a[..., 1, 1]
    a01 = a[..., 0, 1]
    mid = 0.5 * (a00 + a11)
    rad = np.hypot(0.5 * (a00 - a11), a01)
    return np.stack([mid - rad, mid + rad], axis=-1)


def _eigvals_3(a):
    # Trigonometric closed form for real symmetric 3x3 matrices.
    a00, a11, a22 = a[..., 0, 0], a[..., 1, 1], a[..., 2, 2]
    a01, a12, a02 = a[..., 0, 1], a[..., 1, 2], a[..., 0, 2]
    p1 = a01 ** 2 + a12 ** 2 + a02 ** 2
    q = (a00 + a11 + a22) / 3.0
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * p1
    p = np.sqrt(np.maximum(p2, 0.0) / 6.0)
    safe = p > 0
    ps = np.where(safe, p, 1.0)
    b = (a - q[..., None, None] * np.eye(3)) / ps[..., None, None]
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * ps * np.cos(phi)
    lo = q + 2.0 * ps * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    out = np.stack([lo, mid, hi], axis=-1)
    flat = np.broadcast_to(q[..., None], out.shape)
    return np.where(safe[..., None], out, flat)


def eigvals_sym(a):
    """Eigenvalues of symmetric matrices, ascending.

    Parameters
    ----------
    a : array_like, shape (..., N, N)
        Symmetric matrices (only the upper triangle is trusted to agree with
        the lower one; no symmetry check is performed).

    Returns
    -------
    ndarray, shape (..., N)
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if a.shape[-2] != n:
        raise DomainError(f"expected square matrices, got shape {a.shape}")
    if n == 1:
        return a[..., 0, :].copy()
    if n == 2:
        return _eigvals_2(a)
    if n == 3:
        return _eigvals_3(a)
    return np.linalg.eigvalsh(a)


def lambda_min(a):
    return eigvals_sym(a)[..., 0]


def lambda_max(a):
    return eigvals_sym(a)[..., -1]


def random_spd(n, rng, count=None, eig_range=(0.1, 3.0)):
    """Random symmetric positive definite matrices with eigenvalues drawn
    uniformly from ``eig_range``."""
    shape = (n, n) if count is None else (count, n, n)
    g = rng.standard_normal(shape)
    q, _ = np.linalg.qr(g)
    lam = rng.uniform(eig_range[0], eig_range[1], shape[:-1])
    return np.einsum("...ij,...j,...kj->...ik", q, lam, q)


def random_psd(n, rng, count=None, eig_max=3.0):
    """Random symmetric positive semidefinite matrices; some eigenvalues may
    be exactly zero."""
    shape = (n, n) if count is None else (count, n, n)
    g = rng.standard_normal(shape)
    q, _ = np.linalg.qr(g)
    lam = rng.uniform(0.0, eig_max, shape[:-1])
    # zero out a random eigenvalue in roughly a quarter of the draws
    kill = rng.random(shape[:-2]) < 0.25
    if np.ndim(kill) == 0:
        if kill:
            lam[..., 0] = 0.0
    else:
        lam[kill, 0] = 0.0
    return np.einsum("...ij,...j,...kj->...ik", q, lam, q)
