"""Scalar functions carrying closed-form Euclidean jets.

Constructions and barrier checks need exact first and second derivatives of
the functions they manipulate (defining functions Phi, boundary data g,
explicit solutions).  A ClosedFormFunction bundles the value with optional
gradient/Hessian callables; polynomial data can be fitted and differentiated
exactly through PolynomialFunction.
"""

import itertools

import numpy as np

from .calculus import EuclideanJet2, horizontal_jet_exact
from .errors import DimensionMismatchError, DomainError

__all__ = [
    "ClosedFormFunction",
    "constant_function",
    "PolynomialFunction",
    "fit_polynomial",
]


class ClosedFormFunction:
    """Scalar function with optional closed-form derivatives.

    ``fn`` must broadcast over leading axes: (..., n) -> (...,).  ``gradient``
    maps (n,) -> (n,) and ``hessian`` maps (n,) -> (n, n); they are only
    required where exact jets are consumed.
    """

    def __init__(self, fn, gradient=None, hessian=None, name="f"):
        self._fn = fn
        self._gradient = gradient
        self._hessian = hessian
        self.name = name

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"ClosedFormFunction({self.name!r})"

    @property
    def has_jet(self):
        return self._gradient is not None and self._hessian is not None

    def euclidean_jet(self, x):
        x = np.asarray(x, dtype=float)
        if not self.has_jet:
            raise DomainError(
                f"function {self.name!r} carries no closed-form jets")
        return EuclideanJet2(float(self._fn(x)),
                             np.asarray(self._gradient(x), dtype=float),
                             np.asarray(self._hessian(x), dtype=float))

    def horizontal_jet(self, family, x):
        return horizontal_jet_exact(family, x, self.euclidean_jet(x))


def constant_function(c, n=None, name=None):
    c = float(c)

    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], c)

    def gradient(x):
        return np.zeros(len(np.asarray(x, dtype=float)))

    def hessian(x):
        k = len(np.asarray(x, dtype=float))
        return np.zeros((k, k))

    return ClosedFormFunction(fn, gradient, hessian,
                              name=name or f"const({c})")


def _monomial_exponents(n, degree):
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            e = [0] * n
            for idx in combo:
                e[idx] += 1
            out.append(tuple(e))
    return out


class PolynomialFunction(ClosedFormFunction):
    """Multivariate polynomial with exact derivatives.

    Parameters
    ----------
    exponents : sequence of tuples, each of length n
    coefficients : sequence of floats, same length
    """

    def __init__(self, exponents, coefficients, name="poly"):
        self.exponents = [tuple(int(v) for v in e) for e in exponents]
        self.coefficients = np.asarray(coefficients, dtype=float)
        if len(self.exponents) != len(self.coefficients):
            raise DimensionMismatchError(
                "exponents and coefficients must have equal length")
        self.n = len(self.exponents[0]) if self.exponents else 0
        super().__init__(self._value, self._grad, self._hess, name=name)

    def _value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in zip(self.exponents, self.coefficients):
            term = np.full(x.shape[:-1], c)
            for k, p in enumerate(e):
                if p:
                    term = term * x[..., k] ** p
            out = out + term
        return out

    def _grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        for e, c in zip(self.exponents, self.coefficients):
            for k, p in enumerate(e):
                if p == 0:
                    continue
                term = c * p
                for k2, p2 in enumerate(e):
                    pw = p2 - (1 if k2 == k else 0)
                    if pw:
                        term = term * x[k2] ** pw
                g[k] += term
        return g

    def _hess(self, x):
        x = np.asarray(x, dtype=float)
        hmat = np.zeros((self.n, self.n))
        for e, c in zip(self.exponents, self.coefficients):
            for k in range(self.n):
                for k2 in range(k, self.n):
                    e2 = list(e)
                    factor = c
                    for kk in (k, k2):
                        if e2[kk] == 0:
                            factor = 0.0
                            break
                        factor *= e2[kk]
                        e2[kk] -= 1
                    if factor == 0.0:
                        continue
                    term = factor
                    for kk, p2 in enumerate(e2):
                        if p2:
                            term = term * x[kk] ** p2
                    hmat[k, k2] += term
                    if k2 != k:
                        hmat[k2, k] += term
        return hmat


def fit_polynomial(points, values, degree, name="poly-fit"):
    """Least-squares polynomial of total degree <= degree through samples.

    Returns (PolynomialFunction, max_abs_error_on_samples).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    n = points.shape[1]
    exps = _monomial_exponents(n, degree)
    design = np.empty((points.shape[0], len(exps)))
    for col, e in enumerate(exps):
        term = np.ones(points.shape[0])
        for k, p in enumerate(e):
            if p:
                term = term * points[:, k] ** p
        design[:, col] = term
    coeffs, *_ = np.linalg.lstsq(design, values, rcond=None)
    poly = PolynomialFunction(exps, coeffs, name=name)
    err = float(np.max(np.abs(design @ coeffs - values)))
    return poly, err
