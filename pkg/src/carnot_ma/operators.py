"""Monge-Ampere operator forms, Hamiltonians, and determinant identities.

The equation family is  -det(hess_X u) + H(x, u, grad_X u) = 0  with H >= 0
nondecreasing in u.  Four residual variants are exposed: the raw determinant
form, the m-th-root form, the log-determinant form (positive-definite
Hessians and H > 0 only), and the max-form

    max( -lambda_min(hess_X u), -detplus(hess_X u)^(1/m) + H^(1/m) )

which is degenerate elliptic on all symmetric matrices and is the basis of
the grid scheme; detplus clamps negative eigenvalues at zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .linalg import eigvals_sym, random_spd, random_psd

__all__ = [
    "OPERATOR_FORMS",
    "Hamiltonian",
    "ma_residual",
    "gauss_curvature",
    "DetrootRepresentation",
    "detroot_min_representation",
    "random_detroot_feasible",
    "LogdetRepresentation",
    "logdet_min_representation",
    "random_logdet_feasible",
    "InequalityReport",
    "matrix_inequality_suite",
    "GrowthReport",
    "growth_check",
    "LipschitzReport",
    "lipschitz_root_check",
]

OPERATOR_FORMS = ("det", "root", "logdet", "maxform")


class Hamiltonian:
    """Nonnegative Hamiltonian H(x, r, q), nondecreasing in r.

    Instances broadcast: x of shape (..., n), r scalar or (...,), q of shape
    (..., m) produce values of shape (...,).  ``root`` evaluates H^(1/m)
    with m read off the last axis of q.

    Attributes
    ----------
    kind : str
        One of {"constant", "source", "separable", "gauss", "transport"}.
    depends_on_r, monotone_in_r : bool
    growth : tuple or None
        Optional declared (L, M, R) data for the sublinear-root growth bound
        H^(1/m)(x, R, q) <= L|q| + M.
    """

    def __init__(self, kind, fn, *, depends_on_r, monotone_in_r=True,
                 growth=None, describe=""):
        if kind not in ("constant", "source", "separable", "gauss",
                        "transport", "custom"):
            raise DomainError(f"unknown Hamiltonian kind {kind!r}")
        self.kind = kind
        self._fn = fn
        self.depends_on_r = depends_on_r
        self.monotone_in_r = monotone_in_r
        self.growth = growth
        self.describe = describe

    def __call__(self, x, r, q):
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=float)
        r = np.asarray(r, dtype=float)
        return self._fn(x, r, q)

    def root(self, x, r, q):
        q = np.asarray(q, dtype=float)
        m = q.shape[-1]
        h = self(x, r, q)
        return np.power(np.maximum(h, 0.0), 1.0 / m)

    @property
    def depends_on_q(self):
        return self.kind not in ("constant", "source")

    def __repr__(self):
        return f"Hamiltonian({self.kind}{', ' + self.describe if self.describe else ''})"

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c):
        c = float(c)
        if c < 0:
            raise DomainError("Hamiltonian must be nonnegative")

        def fn(x, r, q):
            return np.broadcast_to(
                c, np.broadcast_shapes(x.shape[:-1], np.shape(r),
                                       q.shape[:-1])).copy()

        return cls("constant", fn, depends_on_r=False,
                   describe=f"H = {c}")

    @classmethod
    def source(cls, f, describe="H = f(x)"):
        """Pure source term H = f(x); f broadcasts (..., n) -> (...,)."""

        def fn(x, r, q):
            return np.broadcast_to(
                f(x), np.broadcast_shapes(x.shape[:-1], np.shape(r),
                                          q.shape[:-1])).copy()

        return cls("source", fn, depends_on_r=False, describe=describe)

    @classmethod
    def separable(cls, k, alpha, k_takes_r=False,
                  describe="H = k (1+|q|^2)^alpha"):
        """H = k(x[, r]) (1 + |q|^2)^alpha."""
        alpha = float(alpha)

        def fn(x, r, q):
            amp = k(x, r) if k_takes_r else k(x)
            return amp * (1.0 + np.sum(q * q, axis=-1)) ** alpha

        return cls("separable", fn, depends_on_r=k_takes_r,
                   describe=describe)

    @classmethod
    def gauss(cls, k, m, describe="prescribed horizontal Gauss curvature"):
        """H = k(x) (1 + |q|^2)^((m+2)/2); k >= 0 is the target curvature."""
        h = cls.separable(k, (m + 2) / 2.0, describe=describe)
        h.kind = "gauss"
        return h

    @classmethod
    def transport_power(cls, f, alpha,
                        describe="H = f(x) |q|^alpha"):
        """H = f(x) / h(q) with h(q) = |q|^(-alpha), i.e. f(x)|q|^alpha."""
        alpha = float(alpha)

        def fn(x, r, q):
            return f(x) * np.sum(q * q, axis=-1) ** (alpha / 2.0)

        return cls("transport", fn, depends_on_r=False, describe=describe)


def _det_plus_root(eigs):
    m = eigs.shape[-1]
    return np.prod(np.maximum(eigs, 0.0), axis=-1) ** (1.0 / m)


def ma_residual(form, x, r, jet, hamiltonian):
    """Residual of the equation at a point, for one of the four forms.

    Parameters
    ----------
    form : str
        "det", "root", "logdet" or "maxform".
    x : point in R^n
    r : value of the unknown at x (enters H)
    jet : HorizontalJet
    hamiltonian : Hamiltonian

    Notes
    -----
    The sign convention is residual <= 0 for subsolutions.  "root" treats the
    m-th root of the determinant of a non-PSD matrix as 0 (the max-form is
    the recommended variant for nonconvex inputs); "logdet" requires a
    positive-definite Hessian and H > 0.
    """
    if form not in OPERATOR_FORMS:
        raise DomainError(f"unknown operator form {form!r}; "
                          f"expected one of {OPERATOR_FORMS}")
    a = np.asarray(jet.h_hessian, dtype=float)
    q = np.asarray(jet.h_gradient, dtype=float)
    m = q.shape[0]
    if a.shape != (m, m):
        raise DimensionMismatchError("jet gradient/Hessian sizes disagree")
    hval = float(hamiltonian(np.asarray(x, dtype=float), float(r), q))

    if form == "det":
        return float(-np.linalg.det(a) + hval)

    eigs = eigvals_sym(a)
    if form == "root":
        detroot = float(np.prod(eigs)) ** (1.0 / m) if eigs[0] >= 0 else 0.0
        return float(-detroot + hval ** (1.0 / m))
    if form == "maxform":
        return float(max(-eigs[0], -_det_plus_root(eigs) + hval ** (1.0 / m)))
    # logdet
    if eigs[0] <= 0:
        raise DomainError("logdet form needs a positive definite Hessian")
    if hval <= 0:
        raise DomainError("logdet form needs H > 0")
    return float(-np.sum(np.log(eigs)) + np.log(hval))


def gauss_curvature(family, x, jet):
    """Horizontal Gauss curvature det(hess_X u) (1+|grad_X u|^2)^(-(m+2)/2)."""
    a = np.asarray(jet.h_hessian, dtype=float)
    q = np.asarray(jet.h_gradient, dtype=float)
    m = q.shape[0]
    return float(np.linalg.det(a)
                 * (1.0 + float(q @ q)) ** (-(m + 2) / 2.0))


# ---------------------------------------------------------------------------
# determinant minimum representations
# ---------------------------------------------------------------------------

@dataclass
class DetrootRepresentation:
    """det(A)^(1/N) as min of tr(A B) over B >= 0 with det B = N^-N."""
    value: float
    minimizer: np.ndarray


def detroot_min_representation(a, feasible=None, psd_tol=1e-10):
    """Evaluate det(A)^(1/N) through its trace minimum representation.

    For positive definite A the analytic minimizer
    B = det(A)^(1/N) A^(-1) / N is included and attains the value exactly.
    For singular PSD A the infimum 0 is approached through the built-in
    family B_eps built from (A + eps I)^(-1); optional user-supplied feasible
    competitors are also scanned.

    Returns a DetrootRepresentation; raises DomainError for non-PSD input.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    eigs = np.linalg.eigvalsh(a)
    scale = max(1.0, float(np.abs(eigs).max()))
    if eigs[0] < -psd_tol * scale:
        raise DomainError("matrix must be positive semidefinite")

    candidates = []
    if eigs[0] > psd_tol * scale:
        detroot = float(np.exp(np.mean(np.log(eigs))))
        candidates.append(detroot / n * np.linalg.inv(a))
    for eps in 10.0 ** -np.arange(2.0, 15.0):
        shifted = a + eps * scale * np.eye(n)
        detroot_eps = float(np.exp(np.mean(np.log(
            np.linalg.eigvalsh(shifted)))))
        candidates.append(detroot_eps / n * np.linalg.inv(shifted))
    if feasible is not None:
        candidates.extend(np.asarray(b, dtype=float) for b in feasible)

    traces = [float(np.trace(a @ b)) for b in candidates]
    best = int(np.argmin(traces))
    return DetrootRepresentation(value=traces[best],
                                 minimizer=candidates[best])


def random_detroot_feasible(n, count, rng):
    """Random feasible competitors: B >= 0 with det B = N^-N."""
    c = random_spd(n, rng, count=count)
    det = np.linalg.det(c) ** (1.0 / n)
    return c / (n * det[:, None, None])


@dataclass
class LogdetRepresentation:
    """log det(A) as min of N log a - N + tr(A M) over the feasible pairs
    (a, M) with 0 <= M <= I/gamma and det M = a^-N."""
    value: float
    a: float
    minimizer: np.ndarray


def logdet_min_representation(a_mat, gamma):
    """Evaluate log det(A) through its minimum representation, A >= gamma I.

    The minimum is attained at a = det(A)^(1/N), M = A^(-1); the returned
    value is the objective evaluated there and equals log det A up to
    rounding.  Raises DomainError when lambda_min(A) < gamma.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    a_mat = np.asarray(a_mat, dtype=float)
    n = a_mat.shape[-1]
    eigs = np.linalg.eigvalsh(a_mat)
    if eigs[0] < gamma * (1.0 - 1e-12):
        raise DomainError(
            f"matrix violates A >= gamma I (lambda_min = {eigs[0]:.6g}, "
            f"gamma = {gamma:.6g})")
    a_opt = float(np.exp(np.mean(np.log(eigs))))
    m_opt = np.linalg.inv(a_mat)
    value = n * np.log(a_opt) - n + float(np.trace(a_mat @ m_opt))
    return LogdetRepresentation(value=value, a=a_opt, minimizer=m_opt)


def random_logdet_feasible(n, gamma, count, rng):
    """Random feasible pairs (a, M): 0 <= M <= I/gamma, det M = a^-N."""
    out = []
    for _ in range(count):
        c = random_spd(n, rng)
        lam_max = float(np.linalg.eigvalsh(c)[-1])
        m = c * (rng.uniform(0.05, 1.0) / (gamma * lam_max))
        a = float(np.linalg.det(m)) ** (-1.0 / n)
        out.append((a, m))
    return out


# ---------------------------------------------------------------------------
# matrix identities / inequalities used by the constructions
# ---------------------------------------------------------------------------

@dataclass
class InequalityReport:
    trials: int
    seed: int
    worst_margins: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    tolerance: float = 1e-10

    @property
    def passed(self):
        return all(v == 0 for v in self.violations.values())

    def __str__(self):
        lines = [f"matrix inequality suite: {self.trials} trials, "
                 f"seed {self.seed}"]
        for name, margin in self.worst_margins.items():
            lines.append(f"  {name:10s} worst margin {margin:+.3e} "
                         f"violations {self.violations[name]}")
        return "\n".join(lines)


def matrix_inequality_suite(trials, rng_seed=0, orders=(2, 3),
                            tolerance=1e-10):
    """Randomized verification of the four determinant facts driving the
    subsolution constructions:

    - superadditivity of det^(1/m) on PSD matrices (A > 0, B >= 0),
    - det(I + q q^T) = 1 + |q|^2,
    - det(K^T (I + mu v v^T) K) = det(K^T K)(1 + mu |v|^2),
    - det(A + mu q q^T) >= eta^N (1 + mu |q|^2 / (N eta)) for A >= eta I.

    Margins are normalized by the magnitude of the dominant side; a margin
    below -tolerance counts as a violation.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    rng = np.random.default_rng(rng_seed)
    report = InequalityReport(trials=trials, seed=rng_seed,
                              tolerance=tolerance)

    names = ("minkowski", "rank_one_det", "congruence_det", "shifted_det")
    margins = {name: np.inf for name in names}
    counts = {name: 0 for name in names}

    for _ in range(trials):
        n = int(rng.choice(orders))

        # det^(1/m)(A+B) >= det^(1/m)A + det^(1/m)B
        a = random_spd(n, rng)
        b = random_psd(n, rng)
        lhs = np.linalg.det(a + b) ** (1.0 / n)
        rhs = np.linalg.det(a) ** (1.0 / n) \
            + max(np.linalg.det(b), 0.0) ** (1.0 / n)
        margin = (lhs - rhs) / max(1.0, abs(lhs))
        margins["minkowski"] = min(margins["minkowski"], margin)
        counts["minkowski"] += margin < -tolerance

        # det(I + q q^T) = 1 + |q|^2
        q = rng.uniform(-10.0, 10.0, n)
        lhs = np.linalg.det(np.eye(n) + np.outer(q, q))
        rhs = 1.0 + q @ q
        margin = -abs(lhs - rhs) / max(1.0, abs(rhs))
        margins["rank_one_det"] = min(margins["rank_one_det"], margin)
        counts["rank_one_det"] += margin < -tolerance

        # det(K^T (I + mu v v^T) K) = det(K^T K)(1 + mu |v|^2)
        k = rng.standard_normal((n, n))
        while abs(np.linalg.det(k)) < 0.1:
            k = rng.standard_normal((n, n))
        mu = rng.uniform(0.0, 5.0)
        v = rng.standard_normal(n)
        lhs = np.linalg.det(k.T @ (np.eye(n) + mu * np.outer(v, v)) @ k)
        rhs = np.linalg.det(k.T @ k) * (1.0 + mu * (v @ v))
        margin = -abs(lhs - rhs) / max(1.0, abs(rhs))
        margins["congruence_det"] = min(margins["congruence_det"], margin)
        counts["congruence_det"] += margin < -tolerance

        # det(A + mu q q^T) >= eta^N (1 + mu |q|^2 / (N eta)), A >= eta I
        eta = rng.uniform(0.1, 2.0)
        a = eta * np.eye(n) + random_psd(n, rng)
        mu = rng.uniform(0.0, 5.0)
        q = rng.uniform(-3.0, 3.0, n)
        lhs = np.linalg.det(a + mu * np.outer(q, q))
        rhs = eta ** n * (1.0 + mu * (q @ q) / (n * eta))
        margin = (lhs - rhs) / max(1.0, abs(rhs))
        margins["shifted_det"] = min(margins["shifted_det"], margin)
        counts["shifted_det"] += margin < -tolerance

    report.worst_margins = {k: float(v) for k, v in margins.items()}
    report.violations = {k: int(v) for k, v in counts.items()}
    return report


# ---------------------------------------------------------------------------
# growth and Lipschitz diagnostics of H^(1/m)
# ---------------------------------------------------------------------------

@dataclass
class GrowthReport:
    passes: bool
    L: float
    M: float
    exponent: float
    radii: np.ndarray
    sup_values: np.ndarray

    def __str__(self):
        verdict = "passes" if self.passes else "FAILS"
        return (f"growth check {verdict}: exponent {self.exponent:.3f}, "
                f"fitted L = {self.L:.4g}, M = {self.M:.4g}")


def growth_check(hamiltonian, r_level, x_samples, m, radii=None,
                 n_directions=16, rng=None, exponent_tol=0.02):
    """Empirical check of the sublinear-root growth bound
    H^(1/m)(x, R, q) <= L|q| + M.

    sup_x H^(1/m) is sampled over a geometric radius schedule for |q| and the
    log-log growth exponent is fitted on the tail; the check passes when the
    exponent stays at or below 1, in which case (L, M) making the bound hold
    on all sampled radii are returned.  The prescribed-Gauss-curvature
    Hamiltonian has exponent (m+2)/m > 1 and fails.
    """
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    if radii is None:
        radii = 2.0 ** np.arange(0, 15)
    radii = np.asarray(radii, dtype=float)
    rng = rng or np.random.default_rng(0)
    if m == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = rng.standard_normal((n_directions, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    sup = np.empty(len(radii))
    for i, rho in enumerate(radii):
        vals = hamiltonian.root(x[:, None, :], r_level, rho * dirs[None, :, :])
        sup[i] = float(np.max(vals))

    if np.max(sup) <= 0.0:
        return GrowthReport(True, 0.0, 0.0, 0.0, radii, sup)

    tail = slice(len(radii) // 2, None)
    logs = np.log(np.maximum(sup[tail], 1e-300))
    logr = np.log(radii[tail])
    exponent = float(np.polyfit(logr, logs, 1)[0])
    passes = exponent <= 1.0 + exponent_tol
    if passes:
        slopes = np.diff(sup) / np.diff(radii)
        l_fit = float(max(0.0, np.max(slopes)))
        m_fit = float(max(0.0, np.max(sup - l_fit * radii)))
    else:
        l_fit = float("inf")
        m_fit = float("inf")
    return GrowthReport(passes, l_fit, m_fit, exponent, radii, sup)


@dataclass
class LipschitzReport:
    passes: bool
    L_R: float
    samples: int

    def __str__(self):
        verdict = "passes" if self.passes else "FAILS"
        return f"Lipschitz-root check {verdict}: L_R = {self.L_R:.4g}"


def lipschitz_root_check(hamiltonian, r_bound, x_samples, m, n_trials=2000,
                         rng=None):
    """Empirical Lipschitz constant of H^(1/m) in q on a bounded box.

    Difference quotients |H^(1/m)(x, r, q+q1) - H^(1/m)(x, r, q)| / |q1| are
    sampled with |r| <= R, |q| <= R, |q1| <= 1; passes when every quotient is
    finite.
    """
    rng = rng or np.random.default_rng(0)
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    worst = 0.0
    for _ in range(n_trials):
        xi = x[rng.integers(len(x))]
        r = rng.uniform(-r_bound, r_bound)
        q = rng.standard_normal(m)
        norm = np.linalg.norm(q)
        if norm > 0:
            q *= rng.uniform(0.0, r_bound) / norm
        q1 = rng.standard_normal(m)
        q1 *= rng.uniform(1e-6, 1.0) / max(np.linalg.norm(q1), 1e-300)
        delta = abs(float(hamiltonian.root(xi, r, q + q1))
                    - float(hamiltonian.root(xi, r, q)))
        worst = max(worst, delta / np.linalg.norm(q1))
    return LipschitzReport(bool(np.isfinite(worst)), float(worst), n_trials)
