"""Monotone wide-stencil solver for the Dirichlet problem.

The scheme residual at a node combines the two branches of the max-form:

    max(  max_v ( -D2_v u ),
          -min_F [ prod_j (D2_{v_j} u)+ ]^(1/m) + H^(1/m)(x, u, grad) )

where D2_v is the chord second difference along sigma(x) v (with the
first-order correction), v ranges over the sampled directions, and F over the
orthonormal frames.  The first branch discretizes the smallest-eigenvalue
constraint, the second discretizes the m-th root of the determinant through
its representation as a minimum of products over orthonormal frames.

The residual is nondecreasing in the node's own value and nonincreasing in
every neighbor value (the correction gradient is lagged one sweep to keep
this exact), so starting from a discrete subsolution the nonlinear Jacobi
iteration is pointwise nondecreasing and converges to the discrete solution.
Each scalar node equation is solved exactly: in closed form for m = 2 with
an r-independent Hamiltonian, by safeguarded bisection otherwise.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, PerronEmptyError
from .grids import GridFunction

__all__ = [
    "SolveReport",
    "scheme_residual",
    "scheme_detroot_term",
    "default_subsolution",
    "solve",
    "solve_dirichlet",
    "characteristic_points",
    "ComparisonResult",
    "comparison_check",
]


# ---------------------------------------------------------------------------
# scheme assembly
# ---------------------------------------------------------------------------

def _boundary_values(grid, g):
    bpts = grid.boundary_points
    if len(bpts) == 0:
        return np.zeros(0)
    try:
        vals = np.asarray(g(bpts), dtype=float)
        if vals.shape != (len(bpts),):
            raise TypeError
    except (TypeError, ValueError, IndexError):
        vals = np.array([float(g(p)) for p in bpts])
    return vals


def _euclidean_gradient(grid, values, bvals):
    """Lattice gradient from the axis arms (unequal-arm 3-point formula)."""
    g = np.empty((grid.n_nodes, grid.n))
    for a, (ap, am) in enumerate(grid.axis_arms):
        vp = ap.endpoint_values(values, bvals) + ap.self_weight * values
        vm = am.endpoint_values(values, bvals) + am.self_weight * values
        sp, sm = ap.s, am.s
        g[:, a] = (sm ** 2 * vp - sp ** 2 * vm
                   + (sp ** 2 - sm ** 2) * values) / (sp * sm * (sp + sm))
    return g


def _assemble_alpha(grid, values, bvals, grad):
    """Neighbor part of every directional second difference.

    D2_d(t) = alpha[:, d] - beta[:, d] * t  with t the node's own value;
    alpha includes the boundary closure and the lagged correction term.
    """
    npts = grid.n_nodes
    ndir = len(grid.directions)
    alpha = np.empty((npts, ndir))
    for d, (ap, am) in enumerate(grid.dir_arms):
        vp = ap.endpoint_values(values, bvals)
        vm = am.endpoint_values(values, bvals)
        sp, sm = ap.s, am.s
        alpha[:, d] = 2.0 * (sm * vp + sp * vm) / (sp * sm * (sp + sm))
    if grad is not None and grid.q_maps is not None:
        qn = np.einsum("nijl,nl->nij", grid.q_maps, grad)
        alpha += np.einsum("nij,di,dj->nd", qn, grid.directions,
                           grid.directions)
    return alpha


class _SweepContext:
    def __init__(self, grid, hamiltonian, bvals, threads=1):
        self.grid = grid
        self.h = hamiltonian
        self.bvals = bvals
        self.m = grid.m
        self.need_grad = (grid.q_maps is not None) or hamiltonian.depends_on_q
        self.closed_form = (grid.m == 2 and not hamiltonian.depends_on_r)
        self.h_static = None
        if not hamiltonian.depends_on_q and not hamiltonian.depends_on_r:
            zeros_q = np.zeros((grid.n_nodes, grid.m))
            self.h_static = np.asarray(
                hamiltonian(grid.points, 0.0, zeros_q), dtype=float)
        self.chunks = None
        if threads > 1:
            self.chunks = np.array_split(np.arange(grid.n_nodes), threads)
        self.threads = threads

    def hamiltonian_values(self, r, qh):
        if self.h_static is not None:
            return self.h_static
        q = qh if qh is not None else np.zeros((self.grid.n_nodes, self.m))
        return np.asarray(self.h(self.grid.points, r, q), dtype=float)

    def prepare(self, values):
        grad = _euclidean_gradient(self.grid, values, self.bvals) \
            if self.need_grad else None
        alpha = _assemble_alpha(self.grid, values, self.bvals, grad)
        qh = None
        if self.h.depends_on_q and grad is not None:
            qh = np.einsum("nim,ni->nm", self.grid.sigma_nodes, grad)
        return alpha, qh


def _roots_closed_form(alpha, beta, frame_dirs, hvals):
    """Exact per-node root of the scheme equation for m = 2 and H
    independent of the unknown."""
    t_best = np.min(alpha / beta, axis=1)
    for i, j in frame_dirs:
        a1, b1 = alpha[:, i], beta[:, i]
        a2, b2 = alpha[:, j], beta[:, j]
        s = a1 * b2 + a2 * b1
        p = b1 * b2
        disc = (a1 * b2 - a2 * b1) ** 2 + 4.0 * p * hvals
        sq = np.sqrt(np.maximum(disc, 0.0))
        c = a1 * a2 - hvals
        with np.errstate(divide="ignore", invalid="ignore"):
            stable_pos = 2.0 * c / (s + sq)
            stable_neg = (s - sq) / (2.0 * p)
        t_frame = np.where(s > 0.0, stable_pos, stable_neg)
        t_best = np.minimum(t_best, t_frame)
    return t_best


def _residual_values(alpha, beta, frame_dirs, m, t, hroots):
    branch_a = np.max(beta * t[:, None] - alpha, axis=1)
    best = None
    for fd in frame_dirs:
        prod = np.ones_like(t)
        for i in fd:
            prod = prod * np.clip(alpha[:, i] - beta[:, i] * t, 0.0, None)
        best = prod if best is None else np.minimum(best, prod)
    branch_b = -best ** (1.0 / m) + hroots
    return np.maximum(branch_a, branch_b)


def _roots_bisection(ctx, alpha, qh, t_start):
    grid = ctx.grid
    beta = grid.beta
    frame_dirs = grid.frame_dirs
    m = ctx.m

    def hroots(t):
        if ctx.h_static is not None:
            hv = ctx.h_static
        else:
            q = qh if qh is not None else np.zeros((grid.n_nodes, m))
            hv = np.asarray(ctx.h(grid.points, t, q), dtype=float)
        return np.power(np.maximum(hv, 0.0), 1.0 / m)

    def resid(t):
        return _residual_values(alpha, beta, frame_dirs, m, t, hroots(t))

    hi = np.min(alpha / beta, axis=1)   # residual >= 0 there
    lo = np.minimum(t_start, hi)
    step = np.maximum(1.0, np.abs(lo))
    for _ in range(80):
        bad = resid(lo) > 0.0
        if not bad.any():
            break
        lo = np.where(bad, lo - step, lo)
        step = np.where(bad, 2.0 * step, step)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = resid(mid) <= 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _sweep_jacobi(ctx, values):
    grid = ctx.grid
    alpha, qh = ctx.prepare(values)
    if ctx.closed_form:
        hvals = ctx.hamiltonian_values(values, qh)
        if ctx.chunks is None:
            return _roots_closed_form(alpha, grid.beta, grid.frame_dirs,
                                      hvals)
        out = np.empty_like(values)

        def work(rows):
            out[rows] = _roots_closed_form(alpha[rows], grid.beta[rows],
                                           grid.frame_dirs, hvals[rows])

        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            list(pool.map(work, ctx.chunks))
        return out
    return _roots_bisection(ctx, alpha, qh, values)


def _sweep_gauss_seidel(ctx, values, block_size=256):
    """Block Gauss-Seidel: nodes are visited in index order in fixed blocks,
    each block update seeing all previous updates.  Single-threaded."""
    grid = ctx.grid
    u = values.copy()
    nblocks = int(np.ceil(grid.n_nodes / block_size))
    for b in range(nblocks):
        rows = np.arange(b * block_size,
                         min((b + 1) * block_size, grid.n_nodes))
        alpha, qh = ctx.prepare(u)
        if ctx.closed_form:
            hvals = ctx.hamiltonian_values(u, qh)
            u[rows] = _roots_closed_form(alpha[rows], grid.beta[rows],
                                         grid.frame_dirs, hvals[rows])
        else:
            u[rows] = _roots_bisection(ctx, alpha, qh, u)[rows]
    return u


# ---------------------------------------------------------------------------
# public scheme evaluation
# ---------------------------------------------------------------------------

def scheme_residual(grid_function, hamiltonian, node=None, grad_values=None):
    """Residual of the discrete equation at every node (or one node).

    ``grad_values`` freezes the lagged-gradient argument at another set of
    node values (the convention used inside the iteration); by default the
    function's own values are used.
    """
    grid = grid_function.grid
    values = grid_function.values
    bvals = grid_function.boundary_values
    gv = values if grad_values is None else np.asarray(grad_values,
                                                       dtype=float)
    need_grad = (grid.q_maps is not None) or hamiltonian.depends_on_q
    grad = _euclidean_gradient(grid, gv, bvals) if need_grad else None
    alpha = _assemble_alpha(grid, values, bvals, grad)
    if hamiltonian.depends_on_q and grad is not None:
        qh = np.einsum("nim,ni->nm", grid.sigma_nodes, grad)
    else:
        qh = np.zeros((grid.n_nodes, grid.m))
    hroots = np.asarray(hamiltonian.root(grid.points, values, qh),
                        dtype=float)
    res = _residual_values(alpha, grid.beta, grid.frame_dirs, grid.m,
                           values, hroots)
    return res if node is None else float(res[node])


def scheme_detroot_term(grid_function, grad_values=None):
    """Frame-minimized clamped product [min_F prod_j (D2_j u)+]^(1/m).

    Enlarging the frame set can only decrease this term (minimum over a
    superset); exposed for diagnostics.
    """
    grid = grid_function.grid
    values = grid_function.values
    bvals = grid_function.boundary_values
    gv = values if grad_values is None else np.asarray(grad_values,
                                                       dtype=float)
    grad = _euclidean_gradient(grid, gv, bvals) \
        if grid.q_maps is not None else None
    alpha = _assemble_alpha(grid, values, bvals, grad)
    best = None
    for fd in grid.frame_dirs:
        prod = np.ones(grid.n_nodes)
        for i in fd:
            prod = prod * np.clip(alpha[:, i] - grid.beta[:, i] * values,
                                  0.0, None)
        best = prod if best is None else np.minimum(best, prod)
    return best ** (1.0 / grid.m)


# ---------------------------------------------------------------------------
# starting subsolutions
# ---------------------------------------------------------------------------

def _certified(grid, hamiltonian, values, bvals, slack=1e-11):
    gf = GridFunction(grid, values, bvals)
    res = scheme_residual(gf, hamiltonian)
    scale = max(1.0, float(np.max(np.abs(values))),
                float(np.max(np.abs(bvals))) if len(bvals) else 0.0)
    return float(np.max(res)) <= slack * scale


def default_subsolution(grid, hamiltonian, bvals, max_doublings=14):
    """Discrete subsolution below the boundary data.

    Tries the constant min g (valid when H vanishes at that level), then the
    exponential bump  exp(mu W/2) - max exp(mu W/2) + min g  with W the
    squared length of the first m coordinates, doubling mu until the sampled
    discrete residual is nonpositive.  Raises PerronEmptyError when no
    candidate certifies (e.g. when the Hamiltonian root grows superlinearly).
    """
    from .constructions import xsquare_check

    if len(bvals) == 0:
        raise DomainError("grid has no boundary closure")
    gmin = float(np.min(bvals))
    const = np.full(grid.n_nodes, gmin)
    if _certified(grid, hamiltonian, const, bvals):
        return const

    family = grid.family
    if family.is_carnot_type:
        active = grid.m
    else:
        holds, _ = xsquare_check(family, grid.points[::max(
            1, grid.n_nodes // 200)])
        if not holds:
            raise PerronEmptyError(
                "no starting subsolution: family is neither Carnot-type nor "
                "makes |x|^2 uniformly convex")
        active = grid.n

    w_pts = np.sum(grid.points[:, :active] ** 2, axis=1)
    w_bnd = np.sum(grid.boundary_points[:, :active] ** 2, axis=1)
    mu = 1.0
    for _ in range(max_doublings + 1):
        top = float(max(np.max(np.exp(0.5 * mu * w_pts)),
                        np.max(np.exp(0.5 * mu * w_bnd))))
        vals = np.exp(0.5 * mu * w_pts) - top + gmin
        if _certified(grid, hamiltonian, vals, bvals):
            return vals
        mu *= 2.0
    raise PerronEmptyError(
        "no starting subsolution certified; the Hamiltonian likely violates "
        "the gradient growth bound (compatibility data needed)")


# ---------------------------------------------------------------------------
# the solve loop
# ---------------------------------------------------------------------------

@dataclass
class SolveReport:
    iterations: int
    converged: bool
    final_max_update: float
    final_max_residual: float
    monotonicity_violations: int
    oracle_error: float = None
    characteristic_points: np.ndarray = None
    mode: str = "jacobi"
    h: float = 0.0
    n_nodes: int = 0
    runtime_seconds: float = 0.0
    start: str = "auto"

    def summary(self):
        lines = [
            f"solve: {self.mode}, h = {self.h:g}, {self.n_nodes} nodes",
            f"  iterations          {self.iterations}"
            f"{'' if self.converged else '  (NOT converged)'}",
            f"  final max update    {self.final_max_update:.3e}",
            f"  final max residual  {self.final_max_residual:.3e}",
            f"  monotonicity violations {self.monotonicity_violations}",
        ]
        if self.oracle_error is not None:
            lines.append(f"  error vs oracle     {self.oracle_error:.6e}")
        if self.characteristic_points is not None \
                and len(self.characteristic_points):
            lines.append(f"  characteristic boundary points: "
                         f"{len(self.characteristic_points)}")
        lines.append(f"  runtime             {self.runtime_seconds:.2f} s")
        return "\n".join(lines)


def solve(grid, hamiltonian, g, u0="auto", mode="jacobi", tol_update=1e-8,
          tol_res=1e-6, max_iters=20000, threads=1, oracle=None,
          monotone_tol=1e-12, residual_check_every=25,
          record_iterates=False):
    """Solve the Dirichlet problem on a prepared grid.

    Parameters
    ----------
    grid : Grid
    hamiltonian : Hamiltonian  (must be nondecreasing in the unknown)
    g : callable
        Boundary data, evaluated on the boundary closure points.
    u0 : "auto" | callable | ndarray
        Starting subsolution.  "auto" builds one (see default_subsolution);
        callables and arrays are certified before use.
    oracle : callable, optional
        Known exact solution; the report then carries the max-norm error.

    Returns
    -------
    (GridFunction, SolveReport)
    """
    t_start = time.perf_counter()
    bvals = _boundary_values(grid, g)

    start_kind = "auto"
    if isinstance(u0, str) and u0 == "auto":
        values = default_subsolution(grid, hamiltonian, bvals)
    elif callable(u0):
        values = np.array([float(u0(p)) for p in grid.points])
        if not _certified(grid, hamiltonian, values, bvals):
            raise ConstructionError(
                "supplied start is not a discrete subsolution")
        start_kind = "user"
    else:
        values = np.asarray(u0, dtype=float).copy()
        if not _certified(grid, hamiltonian, values, bvals):
            raise ConstructionError(
                "supplied start is not a discrete subsolution")
        start_kind = "user"

    ctx = _SweepContext(grid, hamiltonian, bvals, threads=threads)
    scale = max(1.0, float(np.max(np.abs(values))),
                float(np.max(np.abs(bvals))) if len(bvals) else 0.0)

    violations = 0
    converged = False
    iterations = 0
    last_update = np.inf
    iterates = [values.copy()] if record_iterates else None

    for it in range(max_iters):
        if mode == "jacobi":
            new_values = _sweep_jacobi(ctx, values)
        elif mode == "gauss_seidel":
            new_values = _sweep_gauss_seidel(ctx, values)
        else:
            raise DomainError(f"unknown solver mode {mode!r}")
        violations += int(np.count_nonzero(
            new_values < values - monotone_tol * scale))
        last_update = float(np.max(np.abs(new_values - values)))
        values = new_values
        iterations = it + 1
        if record_iterates:
            iterates.append(values.copy())
        if last_update < tol_update:
            converged = True
            break
        if (it + 1) % residual_check_every == 0:
            gf_tmp = GridFunction(grid, values, bvals)
            if float(np.max(np.abs(scheme_residual(gf_tmp, hamiltonian)))) \
                    < tol_res:
                converged = True
                break

    gf = GridFunction(grid, values, bvals)
    final_res = float(np.max(np.abs(scheme_residual(gf, hamiltonian))))
    err = None
    if oracle is not None:
        try:
            target = np.asarray(oracle(grid.points), dtype=float)
            if target.shape != (grid.n_nodes,):
                raise TypeError
        except (TypeError, ValueError, IndexError):
            target = np.array([float(oracle(p)) for p in grid.points])
        err = float(np.max(np.abs(values - target)))

    report = SolveReport(
        iterations=iterations, converged=converged,
        final_max_update=last_update, final_max_residual=final_res,
        monotonicity_violations=violations, oracle_error=err,
        characteristic_points=None, mode=mode, h=grid.h_base,
        n_nodes=grid.n_nodes,
        runtime_seconds=time.perf_counter() - t_start, start=start_kind)
    if record_iterates:
        report.iterates = iterates
    return gf, report


def solve_dirichlet(problem):
    """Solve a configured problem (see carnot_ma.config.ProblemSpec)."""
    grid = problem.build_grid()
    opts = problem.solver_options
    gf, report = solve(
        grid, problem.hamiltonian, problem.boundary_g,
        u0=problem.subsolution if problem.subsolution is not None else "auto",
        mode=opts.mode, tol_update=opts.tol_update, tol_res=opts.tol_res,
        max_iters=opts.max_iters, threads=opts.threads,
        oracle=problem.oracle_callable())
    report.characteristic_points = characteristic_points(
        problem.domain, problem.family)
    return gf, report


# ---------------------------------------------------------------------------
# boundary diagnostics
# ---------------------------------------------------------------------------

def characteristic_points(domain, family, boundary_samples=None,
                          tol_char=1e-8, n_samples=400, rng=None):
    """Boundary points where the fields lose transversality.

    Detects samples z with |sigma(z)^T n(z)| <= tol_char, n the outward unit
    normal -DPhi/|DPhi|.  The sample set always includes the crossings of the
    coordinate rays with the boundary, so isolated symmetric characteristic
    points are found exactly; duplicates are merged.
    """
    from . import fields as _fields

    rng = rng or np.random.default_rng(0)
    if boundary_samples is None:
        parts = [domain.axis_boundary_points()]
        if n_samples > 0:
            parts.append(domain.sample_boundary(n_samples, rng))
        boundary_samples = np.vstack(parts)
    else:
        boundary_samples = np.atleast_2d(
            np.asarray(boundary_samples, dtype=float))
    normals = domain.boundary_normals(boundary_samples)
    sn = np.stack([_fields.sigma(family, z).T @ nv
                   for z, nv in zip(boundary_samples, normals)])
    norms = np.linalg.norm(sn, axis=1)
    hits = boundary_samples[norms <= tol_char]
    if len(hits) == 0:
        return hits
    rounded = np.round(hits / 1e-9) * 1e-9
    _, keep = np.unique(rounded, axis=0, return_index=True)
    return hits[np.sort(keep)]


@dataclass
class ComparisonResult:
    interior_gap: float
    boundary_gap: float
    holds: bool
    tol: float

    def __str__(self):
        verdict = "holds" if self.holds else "FAILS"
        return (f"comparison {verdict}: sup interior gap "
                f"{self.interior_gap:.3e} vs boundary gap+ "
                f"{self.boundary_gap:.3e} (tol {self.tol:.1e})")


def comparison_check(u, v, tol_cmp=0.0):
    """sup of (u - v) over the mask against the positive boundary gap.

    Both functions must live on the same grid; their boundary closure values
    are compared on the shared closure points.
    """
    if u.grid is not v.grid:
        raise DomainError("comparison needs a common grid")
    interior = float(np.max(u.values - v.values))
    if len(u.boundary_values):
        boundary = float(np.max(np.clip(
            u.boundary_values - v.boundary_values, 0.0, None)))
    else:
        boundary = 0.0
    return ComparisonResult(interior_gap=interior, boundary_gap=boundary,
                            holds=bool(interior <= boundary + tol_cmp),
                            tol=tol_cmp)
