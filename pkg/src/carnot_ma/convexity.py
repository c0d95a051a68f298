"""Sampled certification of convexity along a vector-field family.

A function is convex along the fields when its horizontal Hessian is PSD;
uniformly so when hess_X u >= gamma I for some gamma > 0.  The viscosity
inequalities quantify over all smooth test functions, which is not
computable, so the checks here evaluate the smallest sampled eigenvalue of
the horizontal Hessian (exact jets when the function carries them, finite
differences otherwise) together with refinement stability.  For C^2
functions this surrogate is exact in the h -> 0 limit.
"""

from dataclasses import dataclass, field

import numpy as np

from .calculus import horizontal_jet_exact, horizontal_jet_fd
from .errors import DomainError
from .linalg import eigvals_sym

__all__ = [
    "ConvexityReport",
    "evaluate_horizontal_jet",
    "check_x_convex",
    "NormCheckReport",
    "x_convexity_of_norm_check",
    "GradientBoundReport",
    "horizontal_gradient_bound",
]


def evaluate_horizontal_jet(u, family, x, h):
    """Horizontal jet of u at x: exact when u carries closed-form jets,
    centered finite differences (step h) otherwise."""
    if getattr(u, "has_jet", False):
        return horizontal_jet_exact(family, x, u.euclidean_jet(x))
    return horizontal_jet_fd(u, family, x, h)


@dataclass
class ConvexityReport:
    gamma_lower: float
    worst_point: np.ndarray
    samples_checked: int
    samples_skipped: int = 0

    @property
    def is_convex(self):
        return self.gamma_lower >= 0.0

    def __str__(self):
        return (f"gamma_lower = {self.gamma_lower:.6g} over "
                f"{self.samples_checked} samples "
                f"({self.samples_skipped} skipped), worst at "
                f"{np.array2string(self.worst_point, precision=4)}")


def check_x_convex(u, family, samples, h=1e-2):
    """Largest gamma with hess_X u >= gamma I over the sampled points.

    Samples whose finite-difference stencil leaves the function's domain are
    skipped and counted.  gamma_lower is negative when convexity fails.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    gamma = np.inf
    worst = samples[0]
    checked = 0
    skipped = 0
    for x in samples:
        try:
            jet = evaluate_horizontal_jet(u, family, x, h)
        except DomainError:
            skipped += 1
            continue
        lam = float(eigvals_sym(jet.h_hessian)[0])
        checked += 1
        if lam < gamma:
            gamma = lam
            worst = x
    if checked == 0:
        raise DomainError("every sample was skipped; nothing was checked")
    return ConvexityReport(gamma_lower=float(gamma), worst_point=worst.copy(),
                           samples_checked=checked, samples_skipped=skipped)


@dataclass
class NormCheckReport:
    checked: int
    skipped: int
    min_eigenvalue: float
    max_abs_det: float
    max_kernel_residual: float
    tolerance: float
    violations: int

    @property
    def passed(self):
        return self.violations == 0

    def __str__(self):
        return (f"norm convexity check: {self.checked} samples, "
                f"min eig {self.min_eigenvalue:.3e}, max |det| "
                f"{self.max_abs_det:.3e}, kernel residual "
                f"{self.max_kernel_residual:.3e}, "
                f"{self.violations} violations")


def x_convexity_of_norm_check(samples, tol=1e-10, axis_margin=1e-3):
    """Degenerate-convexity facts for the Heisenberg homogeneous norm.

    With g(x) = (x1^2+x2^2)^2 + t^2 the norm is g^(1/4) and, off the t-axis,

        hess_X g^(1/4) = [hess_X g - (3/(4g)) grad_X g (x) grad_X g] / (4 g^(3/4)).

    At every sample the matrix must be PSD with zero determinant, and the
    bracketed matrix must annihilate grad_X g.  Samples within ``axis_margin``
    of the t-axis are skipped (the formula degenerates there; the Hessian of
    the norm is zero on the axis).
    """
    from .constructions import explicit_heisenberg_oracle
    from . import fields as _fields

    family = _fields.heisenberg(1)
    w = explicit_heisenberg_oracle("w_quartic")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    checked = skipped = violations = 0
    min_eig = np.inf
    max_det = 0.0
    max_kernel = 0.0
    for x in samples:
        psi = x[0] ** 2 + x[1] ** 2
        wx = float(w(x))
        if psi <= axis_margin ** 2 or wx == 0.0:
            skipped += 1
            continue
        jet = horizontal_jet_exact(family, x, w.euclidean_jet(x))
        grad = jet.h_gradient
        bracket = jet.h_hessian - (3.0 / (4.0 * wx)) * np.outer(grad, grad)
        norm_hess = bracket / (4.0 * wx ** 0.75)
        lam = float(eigvals_sym(norm_hess)[0])
        det = float(np.linalg.det(norm_hess))
        kernel = float(np.linalg.norm(bracket @ grad))
        min_eig = min(min_eig, lam)
        max_det = max(max_det, abs(det))
        max_kernel = max(max_kernel, kernel)
        checked += 1
        if lam < -tol or abs(det) > tol or kernel > tol:
            violations += 1
    return NormCheckReport(checked=checked, skipped=skipped,
                           min_eigenvalue=float(min_eig),
                           max_abs_det=float(max_det),
                           max_kernel_residual=float(max_kernel),
                           tolerance=tol, violations=violations)


@dataclass
class GradientBoundReport:
    C: float
    bound_holds: bool
    refinement_ratio: float
    samples_checked: int
    samples_skipped: int

    def __str__(self):
        verdict = "holds" if self.bound_holds else "UNSTABLE"
        return (f"interior horizontal gradient bound {verdict}: "
                f"C = {self.C:.6g}, refinement ratio "
                f"{self.refinement_ratio:.4f}")


def horizontal_gradient_bound(u, family, inner_samples, h=1e-2,
                              stability_ratio=1.1):
    """Empirical interior bound |grad_X u| <= C on the inner samples.

    C is the sampled maximum of the horizontal gradient magnitude; the bound
    is reported as holding when C is finite and stable under halving of the
    finite-difference step (ratio of the two maxima <= ``stability_ratio``).
    Functions with exact jets short-circuit the refinement comparison.
    """
    samples = np.atleast_2d(np.asarray(inner_samples, dtype=float))
    exact = getattr(u, "has_jet", False)
    steps = (h,) if exact else (h, 0.5 * h)
    maxima = []
    checked = skipped = 0
    for step in steps:
        top = 0.0
        checked = skipped = 0
        for x in samples:
            try:
                jet = evaluate_horizontal_jet(u, family, x, step)
            except DomainError:
                skipped += 1
                continue
            top = max(top, float(np.linalg.norm(jet.h_gradient)))
            checked += 1
        maxima.append(top)
    if checked == 0:
        raise DomainError("every sample was skipped; nothing was checked")
    if exact:
        ratio = 1.0
        c = maxima[0]
    else:
        lo, hi = min(maxima), max(maxima)
        ratio = hi / lo if lo > 0 else (1.0 if hi == 0 else np.inf)
        c = maxima[-1]
    holds = bool(np.isfinite(c) and ratio <= stability_ratio)
    return GradientBoundReport(C=float(c), bound_holds=holds,
                               refinement_ratio=float(ratio),
                               samples_checked=checked,
                               samples_skipped=skipped)
