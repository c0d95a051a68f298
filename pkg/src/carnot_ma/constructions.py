"""Certified constructions: strict subsolution perturbations and barriers.

Both constructions follow the same pattern: parameters are selected from the
structure of the problem (Lipschitz data of the Hamiltonian root, gradient
bounds, domain convexity constants), then enlarged by doubling until sampled
certification passes.  The sampled checks use exact jets whenever the inputs
carry them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import fields as _fields
from .calculus import horizontal_jet_exact
from .convexity import (check_x_convex, evaluate_horizontal_jet,
                        horizontal_gradient_bound)
from .errors import (ConstructionError, DimensionMismatchError, DomainError,
                     UnsupportedFamilyError)
from .functions import ClosedFormFunction, constant_function
from .linalg import eigvals_sym
from .operators import growth_check, lipschitz_root_check, ma_residual

__all__ = [
    "explicit_heisenberg_oracle",
    "xsquare_check",
    "PerturbParams",
    "perturb_to_strict",
    "BarrierParams",
    "lower_barrier",
    "UpperBarrierResult",
    "upper_barrier",
]


# ---------------------------------------------------------------------------
# explicit Heisenberg-group solutions with exact jets
# ---------------------------------------------------------------------------

def _quartic_value(x):
    x = np.asarray(x, dtype=float)
    psi = x[..., 0] ** 2 + x[..., 1] ** 2
    return psi ** 2 + x[..., 2] ** 2


def _quartic_grad(x):
    x = np.asarray(x, dtype=float)
    psi = x[0] ** 2 + x[1] ** 2
    return np.array([4.0 * psi * x[0], 4.0 * psi * x[1], 2.0 * x[2]])


def _quartic_hess(x):
    x = np.asarray(x, dtype=float)
    psi = x[0] ** 2 + x[1] ** 2
    return np.array([
        [4.0 * psi + 8.0 * x[0] ** 2, 8.0 * x[0] * x[1], 0.0],
        [8.0 * x[0] * x[1], 4.0 * psi + 8.0 * x[1] ** 2, 0.0],
        [0.0, 0.0, 2.0],
    ])


def explicit_heisenberg_oracle(which, family=None):
    """Closed-form ground-truth functions on the first Heisenberg group.

    Parameters
    ----------
    which : str
        "w_quartic"     the gauge fourth power (x1^2+x2^2)^2 + t^2,
        "koranyi_norm"  its fourth root (jets defined off the origin),
        "k_H"           the horizontal Gauss curvature of the gauge graph,
        "f_144"         the source term 144 (x1^2+x2^2)^2.
    family : FieldFamily, optional
        When given, must be the n = 3 Heisenberg family.

    The quartic and the norm carry exact Euclidean jets, so their horizontal
    jets reproduce the known closed forms identically.
    """
    if family is not None and not (family.n == 3 and family.m == 2
                                   and family.name == "heisenberg1"):
        raise DimensionMismatchError(
            "explicit solutions require the first Heisenberg group family")

    if which == "w_quartic":
        return ClosedFormFunction(_quartic_value, _quartic_grad,
                                  _quartic_hess, name="w_quartic")

    if which == "koranyi_norm":
        def value(x):
            return _quartic_value(x) ** 0.25

        def gradient(x):
            w = float(_quartic_value(x))
            if w == 0.0:
                raise DomainError("norm jets are undefined at the origin")
            return 0.25 * w ** -0.75 * _quartic_grad(x)

        def hessian(x):
            w = float(_quartic_value(x))
            if w == 0.0:
                raise DomainError("norm jets are undefined at the origin")
            g = _quartic_grad(x)
            return (0.25 * w ** -0.75 * _quartic_hess(x)
                    - 0.1875 * w ** -1.75 * np.outer(g, g))

        return ClosedFormFunction(value, gradient, hessian,
                                  name="koranyi_norm")

    if which == "k_H":
        def value(x):
            x = np.asarray(x, dtype=float)
            psi = x[..., 0] ** 2 + x[..., 1] ** 2
            return (12.0 * psi / (1.0 + 16.0 * psi * _quartic_value(x))) ** 2

        return ClosedFormFunction(value, name="k_H")

    if which == "f_144":
        def value(x):
            x = np.asarray(x, dtype=float)
            return 144.0 * (x[..., 0] ** 2 + x[..., 1] ** 2) ** 2

        return ClosedFormFunction(value, name="f_144")

    raise DomainError(f"unknown oracle {which!r}")


# ---------------------------------------------------------------------------
# structural alternative to the block shape: |x|^2 uniformly convex
# ---------------------------------------------------------------------------

def xsquare_check(family, samples, eta_tol=1e-10):
    """Smallest sampled eigenvalue of sigma^T sigma + Q(x, x).

    Positivity of this matrix says |x|^2 is uniformly convex along the
    fields, the alternative structural hypothesis accepted by the
    constructions.  Returns (holds, eta).
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    eta = np.inf
    for x in samples:
        s = _fields.sigma(family, x)
        mat = s.T @ s + _fields.q_matrix(family, x, x)
        eta = min(eta, float(eigvals_sym(mat)[0]))
    return bool(eta > eta_tol), float(eta)


# ---------------------------------------------------------------------------
# strict uniformly convex subsolutions by exponential perturbation
# ---------------------------------------------------------------------------

@dataclass
class PerturbParams:
    epsilon: float
    mu: float
    lam: float            # shift making the perturbed function <= original
    epsilon0: float       # admissibility cap on epsilon
    alpha: float          # achieved sampled strictness margin, >= 0
    convexity_modulus: float = 0.0
    mode: str = "carnot"  # weight uses the first m coordinates ("carnot")
                          # or the full norm ("xsquare")

    def __str__(self):
        return (f"PerturbParams(eps={self.epsilon:g}, mu={self.mu:g}, "
                f"lam={self.lam:.6g}, eps0={self.epsilon0:.4g}, "
                f"alpha={self.alpha:.4g})")


def _perturbation(family, mode, epsilon, mu, lam):
    """epsilon * (exp(mu W(x) / 2) - lam) with W the squared length of the
    first m coordinates (Carnot mode) or of the full point (xsquare mode),
    returned with exact jets."""
    n, m = family.n, family.m
    active = n if mode == "xsquare" else m

    def weight(x):
        return np.sum(np.asarray(x, dtype=float)[..., :active] ** 2, axis=-1)

    def value(x):
        return epsilon * (np.exp(0.5 * mu * weight(x)) - lam)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        e = math.exp(0.5 * mu * float(weight(x)))
        g = np.zeros(n)
        g[:active] = epsilon * mu * e * x[:active]
        return g

    def hessian(x):
        x = np.asarray(x, dtype=float)
        e = math.exp(0.5 * mu * float(weight(x)))
        h = np.zeros((n, n))
        xa = x[:active]
        h[:active, :active] = epsilon * e * (
            mu * np.eye(active) + mu ** 2 * np.outer(xa, xa))
        return h

    return ClosedFormFunction(value, gradient, hessian,
                              name=f"exp-perturbation(mu={mu:g})")


def _sum_functions(u, v, name):
    """u + v, with jets when both carry them."""
    if getattr(u, "has_jet", False) and v.has_jet:
        def gradient(x):
            return u.euclidean_jet(x).gradient + v.euclidean_jet(x).gradient

        def hessian(x):
            return u.euclidean_jet(x).hessian + v.euclidean_jet(x).hessian

        return ClosedFormFunction(lambda x: u(x) + v(x), gradient, hessian,
                                  name=name)
    return ClosedFormFunction(lambda x: u(x) + v(x), name=name)


def perturb_to_strict(u, family, hamiltonian, inner_samples, epsilon,
                      domain_samples=None, mu=None, h=1e-2,
                      convexity_tol=1e-8, max_doublings=20, rng=None):
    """Perturb a convex subsolution into a strict, uniformly convex one.

    The perturbed function is u + epsilon (exp(mu W/2) - lam) with W the
    squared length of the first m coordinates, lam the sampled maximum of the
    exponential (so the perturbation is <= 0), and mu selected from the
    Lipschitz constant of H^(1/m) and the interior gradient bound, then
    doubled until the sampled checks pass: uniform convexity with modulus at
    least epsilon * mu * min exp(.), and equation residual <= -alpha < 0 on
    the inner samples.

    Families that are not Carnot-type are accepted only when |x|^2 is
    uniformly convex along the fields (then the full-norm weight is used);
    otherwise UnsupportedFamilyError is raised.

    Returns (perturbed function, PerturbParams).
    """
    inner = np.atleast_2d(np.asarray(inner_samples, dtype=float))
    domain = inner if domain_samples is None \
        else np.atleast_2d(np.asarray(domain_samples, dtype=float))
    rng = rng or np.random.default_rng(0)

    if family.is_carnot_type:
        mode = "carnot"
    else:
        holds, _eta = xsquare_check(family, domain)
        if not holds:
            raise UnsupportedFamilyError(
                "family is neither Carnot-type nor makes |x|^2 uniformly "
                "convex along the fields")
        mode = "xsquare"
    active = family.n if mode == "xsquare" else family.m

    convexity = check_x_convex(u, family, inner, h=h)
    if convexity.gamma_lower < -convexity_tol:
        raise ConstructionError(
            f"input is not convex along the fields "
            f"(gamma_lower = {convexity.gamma_lower:.3e})",
            worst_point=convexity.worst_point)

    grad_bound = horizontal_gradient_bound(u, family, inner, h=h)
    r_box = max(grad_bound.C, float(np.max(np.abs(
        [u(x) for x in inner])))) + 1.0
    lip = lipschitz_root_check(hamiltonian, r_box, domain, family.m, rng=rng)
    big_l = lip.L_R

    w_norms = np.linalg.norm(domain[:, :active], axis=1)
    if mu is None:
        mu0 = max(1.0, (big_l ** family.m * float(np.max(w_norms))
                        ** family.m - 1.0) * big_l ** 2)
        schedule = [mu0 * 2 ** k for k in range(max_doublings + 1)]
    else:
        schedule = [float(mu)]

    last_error = None
    for mu_try in schedule:
        weights = 0.5 * mu_try * np.sum(domain[:, :active] ** 2, axis=1)
        lam = float(np.max(np.exp(weights)))
        nonzero = w_norms > 0
        if np.any(nonzero):
            eps0 = float(np.min(np.exp(-weights[nonzero])
                                / (mu_try * w_norms[nonzero])))
        else:
            eps0 = np.inf
        if epsilon > eps0:
            last_error = ConstructionError(
                f"epsilon = {epsilon:g} exceeds the admissible cap "
                f"epsilon0 = {eps0:.4g} at mu = {mu_try:g}")
            continue

        pert = _perturbation(family, mode, epsilon, mu_try, lam)
        u_eps = _sum_functions(u, pert, name=f"{getattr(u, 'name', 'u')}+pert")

        nu_min = epsilon * mu_try * float(np.min(np.exp(
            0.5 * mu_try * np.sum(inner[:, :active] ** 2, axis=1))))
        worst_resid = -np.inf
        worst_lam = np.inf
        worst_pt = inner[0]
        for x in inner:
            jet = evaluate_horizontal_jet(u_eps, family, x, h)
            lam_min = float(eigvals_sym(jet.h_hessian)[0])
            resid = ma_residual("det", x, jet.value, jet, hamiltonian)
            if resid > worst_resid:
                worst_resid = resid
                worst_pt = x
            worst_lam = min(worst_lam, lam_min)
        alpha = -worst_resid
        modulus_ok = (epsilon == 0.0
                      or worst_lam >= nu_min - convexity_tol)
        strict_ok = alpha > 0.0 or epsilon == 0.0
        if modulus_ok and strict_ok:
            params = PerturbParams(epsilon=float(epsilon), mu=float(mu_try),
                                   lam=lam, epsilon0=float(eps0),
                                   alpha=float(max(alpha, 0.0)
                                               if epsilon == 0.0 else alpha),
                                   convexity_modulus=float(worst_lam),
                                   mode=mode)
            return u_eps, params
        last_error = ConstructionError(
            f"sampled strictness failed at mu = {mu_try:g} "
            f"(alpha = {alpha:.3e}, modulus = {worst_lam:.3e}, "
            f"required {nu_min:.3e})", worst_point=worst_pt)
    raise last_error


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------

@dataclass
class BarrierParams:
    mu: float
    lam: float
    c: float        # lower bound constant: -c I <= hess_X g
    gamma: float    # uniform convexity constant of the domain
    K: float        # fitted bound constant for the Hamiltonian term
    growth_L: float = 0.0
    growth_M: float = 0.0

    def __str__(self):
        return (f"BarrierParams(mu={self.mu:g}, lam={self.lam:.6g}, "
                f"c={self.c:.4g}, gamma={self.gamma:.4g}, K={self.K:.4g})")


def _barrier_function(domain, g, mu, lam):
    """lam (exp(-mu Phi) - 1) + g with exact jets."""
    phi = domain.phi

    def value(x):
        return lam * (np.exp(-mu * phi(x)) - 1.0) + g(x)

    def gradient(x):
        jet = phi.euclidean_jet(x)
        e = math.exp(-mu * jet.value)
        return -lam * mu * e * jet.gradient + g.euclidean_jet(x).gradient

    def hessian(x):
        jet = phi.euclidean_jet(x)
        e = math.exp(-mu * jet.value)
        return (lam * mu * e * (mu * np.outer(jet.gradient, jet.gradient)
                                - jet.hessian)
                + g.euclidean_jet(x).hessian)

    return ClosedFormFunction(value, gradient, hessian,
                              name=f"lower-barrier(mu={mu:g})")


def _hess_x(fn, family, x):
    return horizontal_jet_exact(family, x, fn.euclidean_jet(x)).h_hessian


def _certification_points(domain, rng, n_samples):
    """Interior samples plus the anchor and points along the coordinate
    axes.  Symmetric degeneracies (domains losing uniform convexity exactly
    on an axis) are caught deterministically this way."""
    pts = [domain.sample_interior(n_samples, rng)]
    anchor = domain._interior_anchor()
    pts.append(anchor[None, :])
    for crossing in domain.axis_boundary_points():
        for frac in (0.25, 0.5, 0.75, 0.95):
            cand = anchor + frac * (crossing - anchor)
            if domain.phi(cand) > 0:
                pts.append(cand[None, :])
    return np.vstack(pts)


def lower_barrier(domain, g, family, hamiltonian, n_samples=400,
                  n_boundary=200, rng=None, check_tol=1e-8,
                  boundary_tol=1e-12, max_doublings=20):
    """Convex subsolution matching the boundary data on a uniformly convex
    domain:  w = lam (exp(-mu Phi) - 1) + g.

    Preconditions (sampled): hess_X Phi <= -gamma I with gamma > 0, and the
    growth check of H^(1/m) at the level R = max boundary g passes (the
    prescribed-Gauss-curvature Hamiltonian fails it and is rejected).  mu is
    chosen to dominate the |sigma^T DPhi|^m Hamiltonian term and lam to make
    the Hessian bound kick in, both doubled until the sampled certification
    passes: hess_X w >= 0, determinant-form residual <= 0 inside, and w = g
    on boundary samples.

    Returns (w, BarrierParams); raises ConstructionError when rejected.
    """
    rng = rng or np.random.default_rng(0)
    if not g.has_jet:
        raise ConstructionError("boundary extension g must carry exact jets")
    m = family.m
    interior = _certification_points(domain, rng, n_samples)
    boundary = domain.sample_boundary(n_boundary, rng, tol=1e-15)
    everything = np.vstack([interior, boundary])

    # uniform convexity of the domain
    lam_max_phi = max(float(eigvals_sym(_hess_x(domain.phi, family, x))[-1])
                      for x in everything)
    gamma = -lam_max_phi
    if gamma <= 1e-8:
        raise ConstructionError(
            f"domain is not uniformly convex along the fields "
            f"(sampled hess_X Phi reaches {lam_max_phi:.3e})")

    # growth of the Hamiltonian root at the boundary level
    r_level = float(np.max(g(boundary)))
    growth = growth_check(hamiltonian, r_level, everything, m, rng=rng)
    if not growth.passes:
        raise ConstructionError(
            "Hamiltonian rejected: H^(1/m) grows superlinearly in the "
            f"gradient (exponent {growth.exponent:.2f}); prescribed-curvature "
            "data needs a compatibility condition instead",
            diagnostics={"growth_exponent": growth.exponent})

    # structure constants
    g_hessians = [_hess_x(g, family, x) for x in everything]
    c_const = max(0.0, -min(float(eigvals_sym(hx)[0]) for hx in g_hessians))
    g_grad = max(float(np.linalg.norm(
        horizontal_jet_exact(family, x, g.euclidean_jet(x)).h_gradient))
        for x in everything)
    sdphi = max(float(np.linalg.norm(
        _fields.sigma(family, x).T @ domain.phi.euclidean_jet(x).gradient))
        for x in everything)
    big_k = 2.0 ** (m - 1) * max((growth.M + growth.L * g_grad) ** m,
                                 growth.L ** m)
    mu0 = max(1.0, 0.5 * m * gamma * (2.0 / gamma) ** m * big_k
              * max(sdphi, 1e-12) ** max(m - 2, 0))

    phi_interior = domain.phi_values(interior)
    last_error = None
    for k in range(max_doublings + 1):
        mu = mu0 * 2 ** k
        exp_max = float(np.max(np.exp(mu * np.concatenate(
            [phi_interior, np.zeros(len(boundary))]))))
        lam = 2.0 / (mu * gamma) * max(c_const, big_k ** (1.0 / m)) * exp_max
        lam = max(lam, 1e-8)
        w = _barrier_function(domain, g, mu, lam)

        ok = True
        worst_pt = None
        for x in interior:
            jet = horizontal_jet_exact(family, x, w.euclidean_jet(x))
            lam_min = float(eigvals_sym(jet.h_hessian)[0])
            resid = ma_residual("det", x, jet.value, jet, hamiltonian)
            if not (np.isfinite(lam_min) and np.isfinite(resid)
                    and lam_min >= -check_tol and resid <= check_tol):
                ok = False
                worst_pt = x
                break
        if ok:
            bvals = np.abs(np.asarray(w(boundary)) - np.asarray(g(boundary)))
            if float(np.max(bvals)) > boundary_tol:
                ok = False
                worst_pt = boundary[int(np.argmax(bvals))]
        if ok:
            params = BarrierParams(mu=float(mu), lam=float(lam),
                                   c=float(c_const), gamma=float(gamma),
                                   K=float(big_k), growth_L=growth.L,
                                   growth_M=growth.M)
            return w, params
        last_error = ConstructionError(
            f"barrier certification failed at mu = {mu:g}",
            worst_point=worst_pt)
    raise last_error


@dataclass
class UpperBarrierResult:
    function: ClosedFormFunction
    case: str               # "zero", "xconvex", "uniform", or "constant"
    lam: float = 0.0
    certified_by: str = "sampled"

    def __str__(self):
        return (f"upper barrier [{self.case}] lam={self.lam:g} "
                f"({self.certified_by})")


def upper_barrier(domain, g, family, mode="auto", n_samples=400,
                  n_boundary=200, rng=None, tol=1e-8, max_doublings=20):
    """Supersolution lying above the boundary data.

    mode="constant" returns the constant max of g over boundary samples
    (a supersolution for every nonnegative Hamiltonian; certified by
    convention, no sampling).  mode="auto" tries, in order: W = 0 when
    g vanishes; W = lam Phi - g with any lam when the domain and g are both
    convex along the fields; W = lam Phi - g with lam large when the domain
    is uniformly convex.  Sampled certification checks hess_X W <= 0; when no
    case applies ConstructionError is raised.
    """
    rng = rng or np.random.default_rng(0)
    boundary = domain.sample_boundary(n_boundary, rng)

    if mode == "constant":
        top = float(np.max(g(boundary)))
        return UpperBarrierResult(constant_function(top, domain.n),
                                  case="constant", lam=0.0,
                                  certified_by="convention")
    if mode != "auto":
        raise DomainError(f"unknown upper-barrier mode {mode!r}")

    if float(np.max(np.abs(np.asarray(g(boundary))))) <= 1e-14:
        return UpperBarrierResult(constant_function(0.0, domain.n),
                                  case="zero", lam=0.0)

    if not g.has_jet:
        raise ConstructionError(
            "upper barrier from boundary data needs g with exact jets "
            "(or use mode='constant')")

    interior = _certification_points(domain, rng, n_samples)
    everything = np.vstack([interior, boundary])
    phi_hess = [_hess_x(domain.phi, family, x) for x in everything]
    g_hess = [_hess_x(g, family, x) for x in everything]
    phi_lam_max = max(float(eigvals_sym(hx)[-1]) for hx in phi_hess)
    g_lam_min = min(float(eigvals_sym(hx)[0]) for hx in g_hess)
    g_lam_max = max(float(eigvals_sym(hx)[-1]) for hx in g_hess)
    gamma = -phi_lam_max

    def certify(lam):
        for x in everything:
            hw = lam * _hess_x(domain.phi, family, x) \
                - _hess_x(g, family, x)
            if float(eigvals_sym(hw)[-1]) > tol:
                return False
        return True

    def build(lam, case):
        def value(x):
            return lam * domain.phi(x) - g(x)

        def gradient(x):
            return lam * domain.phi.euclidean_jet(x).gradient \
                - g.euclidean_jet(x).gradient

        def hessian(x):
            return lam * domain.phi.euclidean_jet(x).hessian \
                - g.euclidean_jet(x).hessian

        fn = ClosedFormFunction(value, gradient, hessian,
                                name=f"upper-barrier(lam={lam:g})")
        return UpperBarrierResult(fn, case=case, lam=float(lam))

    if phi_lam_max <= tol and g_lam_min >= -tol:
        lam = 1.0
        if certify(lam):
            return build(lam, "xconvex")

    if gamma > 1e-8:
        lam = max(g_lam_max, -g_lam_min, 0.0) / gamma + 1.0
        for _ in range(max_doublings + 1):
            if certify(lam):
                return build(lam, "uniform")
            lam *= 2.0

    raise ConstructionError(
        "no upper-barrier case applies (domain not convex along the fields "
        "and boundary data nonzero)")
