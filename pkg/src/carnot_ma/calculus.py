"""Horizontal jets: gradient and symmetrized Hessian along a field family.

For a C^2 function u, the first- and second-order derivatives along the
fields are

    grad_X u = sigma(x)^T Du,
    hess_X u = sigma(x)^T D^2u sigma(x) + Q(x, Du),

where Q is the symmetric correction built from the column Jacobians of
sigma.  Both are computed here exactly from user-supplied Euclidean
derivatives, and approximately by finite differences along straight chords
x +/- h sigma(x) v with the Q term restored additively (the chord gives
exactly v^T sigma^T D^2u sigma v in the smooth limit, so no ODE integration
along field trajectories is needed).
"""

from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import DimensionMismatchError
from .linalg import symmetrize

__all__ = [
    "EuclideanJet2",
    "HorizontalJet",
    "horizontal_jet_exact",
    "euclidean_fd_gradient",
    "directional_second_difference",
    "horizontal_jet_fd",
]


@dataclass(frozen=True)
class EuclideanJet2:
    """Value, gradient and symmetric Hessian of u at a point in R^n."""
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class HorizontalJet:
    """Value, horizontal gradient in R^m and horizontal Hessian in S^m."""
    value: float
    h_gradient: np.ndarray
    h_hessian: np.ndarray


def horizontal_jet_exact(family, x, jet):
    """Horizontal jet from an exact Euclidean jet.

    Parameters
    ----------
    family : FieldFamily
    x : array_like, shape (n,)
    jet : EuclideanJet2

    Returns
    -------
    HorizontalJet
    """
    s = fields.sigma(family, x)
    grad = np.asarray(jet.gradient, dtype=float)
    hess = np.asarray(jet.hessian, dtype=float)
    if grad.shape != (family.n,) or hess.shape != (family.n, family.n):
        raise DimensionMismatchError(
            f"jet has wrong dimensions for a family on R^{family.n}")
    h_grad = s.T @ grad
    h_hess = s.T @ hess @ s + fields.q_matrix(family, x, grad)
    return HorizontalJet(float(jet.value), h_grad, symmetrize(h_hess))


def euclidean_fd_gradient(u, x, h):
    """Centered finite-difference gradient of u at x, step h per axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    g = np.empty(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        g[k] = (u(x + e) - u(x - e)) / (2.0 * h)
    return g


def directional_second_difference(u, family, x, v, h, q=None):
    """Second difference of u along the chord x +/- h sigma(x) v plus the
    first-order correction.

    Returns

        [u(x + h w) - 2 u(x) + u(x - h w)] / h^2 + v^T Q(x, grad_h u) v,

    with w = sigma(x) v and grad_h u the centered Euclidean finite-difference
    gradient (step h).  For C^4 functions this converges to
    v^T hess_X u(x) v as h -> 0.  A precomputed Q matrix may be passed to
    avoid recomputing the gradient for every direction.

    Raises DomainError (propagated from u) when a chord endpoint leaves the
    function's domain.
    """
    if h <= 0:
        raise DimensionMismatchError("step h must be positive")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape != (family.m,):
        raise DimensionMismatchError(
            f"direction must live in R^{family.m}, got shape {v.shape}")
    w = fields.sigma(family, x) @ v
    chord = (u(x + h * w) - 2.0 * u(x) + u(x - h * w)) / h ** 2
    if q is None:
        q = fields.q_matrix(family, x, euclidean_fd_gradient(u, x, h))
    return float(chord + v @ q @ v)


def horizontal_jet_fd(u, family, x, h, frame=None):
    """Finite-difference horizontal jet of a scalar function.

    The gradient uses centered differences along sigma(x) e_j.  The Hessian
    is assembled from directional second differences on the frame
    {f_j, (f_i +/- f_j)/sqrt2} by polarization, where f_j are the columns of
    ``frame`` (identity by default); the result is expressed in the standard
    basis, so any orthogonal frame gives the same matrix up to truncation
    error.  Converges to the exact jet as h -> 0 for smooth u.
    """
    x = np.asarray(x, dtype=float)
    m = family.m
    if frame is None:
        frame = np.eye(m)
    else:
        frame = np.asarray(frame, dtype=float)
        if frame.shape != (m, m):
            raise DimensionMismatchError("frame must be m x m")

    s = fields.sigma(family, x)
    value = float(u(x))
    q = fields.q_matrix(family, x, euclidean_fd_gradient(u, x, h))

    def dsd(v):
        return directional_second_difference(u, family, x, v, h, q=q)

    h_grad_frame = np.empty(m)
    for j in range(m):
        w = s @ frame[:, j]
        h_grad_frame[j] = (u(x + h * w) - u(x - h * w)) / (2.0 * h)
    h_grad = frame @ h_grad_frame

    a = np.empty((m, m))
    for j in range(m):
        a[j, j] = dsd(frame[:, j])
    for i in range(m):
        for j in range(i + 1, m):
            plus = dsd((frame[:, i] + frame[:, j]) / np.sqrt(2.0))
            minus = dsd((frame[:, i] - frame[:, j]) / np.sqrt(2.0))
            a[i, j] = a[j, i] = 0.5 * (plus - minus)
    h_hess = frame @ a @ frame.T
    return HorizontalJet(value, h_grad, symmetrize(h_hess))
