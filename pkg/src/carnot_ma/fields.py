"""Vector-field families X_1..X_m on R^n and their first-order geometry.

A family is stored through its coefficient matrix sigma(x) (n x m, column j
holds the coefficients of X_j) and the Jacobians of sigma's columns.
Carnot-type families have the block shape sigma = [I_m; tau(x)] with tau of
size (n-m) x m; general families are representable but flagged, and several
constructions refuse them unless an alternative structural check passes.

Points are plain float vectors of length n.  All callables stored on a family
are expected to broadcast over leading axes: sigma_fn maps (..., n) ->
(..., n, m) and sigma_jacobian_fn maps (..., n) -> (..., n, m, n), where the
last axis indexes the differentiation coordinate.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "FieldFamily",
    "FieldValidationReport",
    "carnot_type_family",
    "general_family",
    "euclidean",
    "heisenberg",
    "finite_difference_jacobian",
    "sigma",
    "sigma_batch",
    "q_matrix",
    "q_linear_map",
    "validate_carnot_type",
]


def _as_point(x, n, what="point"):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatchError(
            f"expected {what} of dimension {n}, got shape {x.shape}"
        )
    return x


@dataclass(frozen=True)
class FieldFamily:
    n: int
    m: int
    sigma_fn: Callable[[np.ndarray], np.ndarray]
    sigma_jacobian_fn: Callable[[np.ndarray], np.ndarray]
    is_carnot_type: bool
    name: str = "custom"
    smoothness_tag: str = "C2"  # declared regularity; recorded, not verified

    def __repr__(self):
        kind = "carnot-type" if self.is_carnot_type else "general"
        return f"FieldFamily({self.name!r}, n={self.n}, m={self.m}, {kind})"


def finite_difference_jacobian(fn, step=1e-5):
    """Central-difference Jacobian fallback for a map (..., n) -> (..., *s).

    Returns a callable producing shape (..., *s, n).  Intended for
    prototyping; closed-form Jacobians should be supplied where exactness
    matters.
    """

    def jac(x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        cols = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = step
            cols.append((fn(x + e) - fn(x - e)) / (2.0 * step))
        return np.stack(cols, axis=-1)

    return jac


def carnot_type_family(n, m, tau=None, tau_jacobian=None, *, name="custom",
                       smoothness_tag="C2"):
    """Family with sigma(x) = [I_m; tau(x)].

    Parameters
    ----------
    n, m : int
        Ambient dimension and number of fields, 1 <= m <= n.
    tau : callable or None
        Maps (..., n) -> (..., n-m, m).  May be None when m == n.
    tau_jacobian : callable or None
        Maps (..., n) -> (..., n-m, m, n) with entry [i, j, k] equal to the
        derivative of tau[i, j] along coordinate k.  A central-difference
        fallback (step 1e-5) is installed when omitted.
    """
    if not (1 <= m <= n):
        raise DimensionMismatchError(f"need 1 <= m <= n, got n={n}, m={m}")
    if m < n and tau is None:
        raise DimensionMismatchError("tau is required when m < n")
    if tau_jacobian is None and m < n:
        tau_jacobian = finite_difference_jacobian(tau)

    eye = np.eye(m)

    def sigma_fn(x):
        x = np.asarray(x, dtype=float)
        base = x.shape[:-1]
        s = np.zeros(base + (n, m))
        s[..., :m, :] = eye
        if m < n:
            s[..., m:, :] = tau(x)
        return s

    def sigma_jacobian_fn(x):
        x = np.asarray(x, dtype=float)
        base = x.shape[:-1]
        j = np.zeros(base + (n, m, n))
        if m < n:
            j[..., m:, :, :] = tau_jacobian(x)
        return j

    return FieldFamily(n=n, m=m, sigma_fn=sigma_fn,
                       sigma_jacobian_fn=sigma_jacobian_fn,
                       is_carnot_type=True, name=name,
                       smoothness_tag=smoothness_tag)


def general_family(n, m, sigma_fn, sigma_jacobian=None, *, name="custom",
                   smoothness_tag="C2"):
    """Family with an arbitrary full coefficient matrix; flagged as not
    Carnot-type."""
    if not (1 <= m <= n):
        raise DimensionMismatchError(f"need 1 <= m <= n, got n={n}, m={m}")
    if sigma_jacobian is None:
        sigma_jacobian = finite_difference_jacobian(sigma_fn)
    return FieldFamily(n=n, m=m, sigma_fn=sigma_fn,
                       sigma_jacobian_fn=sigma_jacobian,
                       is_carnot_type=False, name=name,
                       smoothness_tag=smoothness_tag)


def euclidean(n):
    """Canonical basis of R^n (m = n, tau empty)."""
    eye = np.eye(n)

    def sigma_fn(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(eye, x.shape[:-1] + (n, n)).copy()

    def sigma_jacobian_fn(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, n, n))

    return FieldFamily(n=n, m=n, sigma_fn=sigma_fn,
                       sigma_jacobian_fn=sigma_jacobian_fn,
                       is_carnot_type=True, name="euclidean",
                       smoothness_tag="C2")


def heisenberg(j=1):
    """Generators of the j-th Heisenberg group on R^(2j+1).

    Coordinates are (x_1, ..., x_2j, t).  For i <= j the fields are
    X_i = d/dx_i + 2 x_{j+i} d/dt and X_{j+i} = d/dx_{j+i} - 2 x_i d/dt,
    so tau(x) is the single row (2 x_{j+1}, ..., 2 x_{2j}, -2 x_1, ..., -2 x_j).
    """
    if j < 1:
        raise DimensionMismatchError("need j >= 1")
    n = 2 * j + 1
    m = 2 * j

    def tau(x):
        x = np.asarray(x, dtype=float)
        row = np.concatenate([2.0 * x[..., j:2 * j], -2.0 * x[..., :j]],
                             axis=-1)
        return row[..., None, :]

    def tau_jacobian(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (1, m, n))
        for c in range(j):
            out[..., 0, c, j + c] = 2.0
            out[..., 0, j + c, c] = -2.0
        return out

    return carnot_type_family(n, m, tau, tau_jacobian,
                              name=f"heisenberg{j}")


def sigma(family, x):
    """Coefficient matrix sigma(x) = [I_m; tau(x)] at a single point."""
    x = _as_point(x, family.n)
    return family.sigma_fn(x)


def sigma_batch(family, points):
    """sigma at a stack of points, shape (..., n) -> (..., n, m)."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != family.n:
        raise DimensionMismatchError(
            f"points must have last dimension {family.n}, got {points.shape}")
    return family.sigma_fn(points)


def q_linear_map(family, points):
    """Linear map L(x) with Q(x, p) = sum_l L[..., :, :, l] p[..., l].

    Q is the symmetric first-order correction entering the horizontal
    Hessian: Q_ij(x, p) = ((D sigma^j) sigma^i + (D sigma^i) sigma^j) . p / 2.
    """
    points = np.asarray(points, dtype=float)
    s = family.sigma_fn(points)
    jac = family.sigma_jacobian_fn(points)
    t = np.einsum("...ljk,...ki->...ijl", jac, s)
    return 0.5 * (t + np.swapaxes(t, -3, -2))


def q_matrix(family, x, p):
    """Correction matrix Q(x, p), symmetric m x m and linear in p."""
    x = _as_point(x, family.n)
    p = _as_point(p, family.n, what="covector")
    return np.einsum("ijl,l->ij", q_linear_map(family, x), p)


@dataclass
class FieldValidationReport:
    is_carnot_type: bool
    top_block_residual: float
    max_jacobian_residual: float
    worst_point: np.ndarray
    valid: bool
    messages: list

    def __str__(self):
        status = "valid" if self.valid else "INVALID"
        return (f"field family {status}: top-block residual "
                f"{self.top_block_residual:.3e}, jacobian residual "
                f"{self.max_jacobian_residual:.3e}")


def validate_carnot_type(family, sample_points, jacobian_tol=1e-6,
                         fd_step=1e-5):
    """Check the [I; tau] block shape and Jacobian consistency at samples.

    The stored column Jacobians are compared against central finite
    differences of sigma; the report carries the maximum residual and the
    sample where it occurs.  Nothing is raised: failures live in the report.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[-1] != family.n:
        raise DimensionMismatchError(
            f"sample points must have dimension {family.n}")
    if pts.shape[0] == 0:
        raise DimensionMismatchError("need a nonempty sample set")
    messages = []

    s = sigma_batch(family, pts)
    top = s[..., :family.m, :] - np.eye(family.m)
    top_residual = float(np.max(np.abs(top)))
    if top_residual > 1e-12:
        messages.append("sigma top block differs from the identity")

    jac = family.sigma_jacobian_fn(pts)
    fd = np.zeros_like(jac)
    for k in range(family.n):
        e = np.zeros(family.n)
        e[k] = fd_step
        fd[..., k] = (family.sigma_fn(pts + e) - family.sigma_fn(pts - e)) \
            / (2.0 * fd_step)
    resid = np.abs(jac - fd).reshape(pts.shape[0], -1).max(axis=1)
    worst = int(np.argmax(resid))
    max_resid = float(resid[worst])
    if max_resid > jacobian_tol:
        messages.append(
            f"stored Jacobian disagrees with finite differences "
            f"(residual {max_resid:.3e} at sample {worst})")

    valid = (family.is_carnot_type and top_residual <= 1e-12
             and max_resid <= jacobian_tol)
    if not family.is_carnot_type:
        messages.append("family is flagged as not Carnot-type")
    return FieldValidationReport(
        is_carnot_type=family.is_carnot_type,
        top_block_residual=top_residual,
        max_jacobian_residual=max_resid,
        worst_point=pts[worst].copy(),
        valid=valid,
        messages=messages,
    )
