"""Masked lattices with precomputed wide-stencil chord arms.

Nodes are the lattice points with Phi > 0.  For every node and every
direction v of the frame set the grid precomputes the two chord arms
x +/- s sigma(x) v.  Arms are evaluated by multilinear interpolation (all
weights nonnegative, so the scheme built on them is monotone); an arm whose
endpoint leaves the domain, or whose interpolation cell is not fully covered
by interior nodes, is replaced by the exact crossing of the ray with
{Phi = 0}, located by bisection, where the boundary datum applies.

The full arm parameter is s = arm_scale * sqrt(h): consistency of the
interpolated second difference requires arms much longer than the lattice
spacing (the interpolation error is O(h^2) and is divided by s^2), and the
sqrt scaling balances it against the O(s^2) chord truncation error.
"""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from . import fields as _fields
from .errors import DimensionMismatchError, DomainError

__all__ = [
    "rotation_frames_2d",
    "icosahedral_frames",
    "frame_set",
    "ArmSet",
    "Grid",
    "GridFunction",
    "build_grid",
    "grid_function_from_callable",
    "write_csv",
    "read_csv",
]

_WEIGHT_TOL = 1e-14


# ---------------------------------------------------------------------------
# orthonormal direction frames
# ---------------------------------------------------------------------------

def rotation_frames_2d(k=8):
    """k orthonormal frames at angles i pi / (2k); columns are the frame
    vectors.  The frames for k' dividing k are a subset of those for k."""
    frames = []
    for i in range(k):
        th = i * np.pi / (2 * k)
        c, s = np.cos(th), np.sin(th)
        frames.append(np.array([[c, -s], [s, c]]))
    return frames


def icosahedral_frames():
    """The five orthonormal triples formed by the fifteen two-fold symmetry
    axes of the icosahedron."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    axes = [np.eye(3)[i] for i in range(3)]
    base = np.array([1.0, phi, 1.0 / phi]) / 2.0
    for cyc in range(3):
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                v = np.roll(base * np.array([1.0, s1, s2]), cyc)
                axes.append(v)
    axes = np.asarray(axes)
    used = set()
    frames = []
    for i in range(len(axes)):
        if i in used:
            continue
        for j in range(i + 1, len(axes)):
            if j in used or abs(axes[i] @ axes[j]) > 1e-12:
                continue
            for k in range(j + 1, len(axes)):
                if k in used or abs(axes[i] @ axes[k]) > 1e-12 \
                        or abs(axes[j] @ axes[k]) > 1e-12:
                    continue
                frames.append(np.stack([axes[i], axes[j], axes[k]], axis=1))
                used.update((i, j, k))
                break
            else:
                continue
            break
    if len(frames) != 5:
        raise DomainError("icosahedral frame construction failed")
    return frames


def frame_set(m, k=8, rng_seed=0):
    """Orthonormal frames in R^m: angle ladder for m = 2, icosahedral axes
    for m = 3, seeded random orthonormal frames otherwise."""
    if m == 1:
        return [np.ones((1, 1))]
    if m == 2:
        return rotation_frames_2d(k)
    if m == 3:
        return icosahedral_frames()
    rng = np.random.default_rng(rng_seed)
    frames = []
    for _ in range(k):
        q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        frames.append(q)
    return frames


# ---------------------------------------------------------------------------
# arms
# ---------------------------------------------------------------------------

@dataclass
class ArmSet:
    """One arm (a sign of one direction) for every node."""
    s: np.ndarray            # (N,) arm parameter
    weights: sparse.csr_matrix  # (N, N) interpolation, self column removed
    self_weight: np.ndarray  # (N,)
    bmap: np.ndarray         # (N,) index into boundary points, -1 interior

    def endpoint_values(self, values, boundary_values):
        """Interpolated arm values, excluding the self contribution."""
        out = self.weights @ values
        hit = self.bmap >= 0
        if hit.any():
            out[hit] = boundary_values[self.bmap[hit]]
        return out


class _Interpolator:
    """Multilinear interpolation weights on the masked lattice."""

    def __init__(self, origin, h_axes, counts, ids_flat):
        self.origin = origin
        self.h_axes = h_axes
        self.counts = counts
        self.ids_flat = ids_flat
        self.n = len(origin)
        self.offsets = np.array(list(itertools.product((0, 1),
                                                       repeat=self.n)))

    def weights(self, pts, own_ids=None):
        """Returns (ok, corner_ids, weights, self_weight).

        ok marks points whose (nonzero-weight) interpolation corners are all
        interior mask nodes; corner ids are compact node ids (-1 where the
        corner is unusable).  When own_ids is given, weight landing on the
        point's own node is diverted into self_weight.
        """
        pts = np.atleast_2d(pts)
        k = len(pts)
        rel = (pts - self.origin) / self.h_axes
        inside = np.all((rel >= -1e-9) & (rel <= self.counts - 1 + 1e-9),
                        axis=1)
        idx = np.clip(np.floor(rel).astype(int), 0, self.counts - 2)
        frac = np.clip(rel - idx, 0.0, 1.0)

        ncorners = len(self.offsets)
        cids = np.full((k, ncorners), -1, dtype=np.int64)
        wts = np.zeros((k, ncorners))
        ok = inside.copy()
        for c, off in enumerate(self.offsets):
            corner = idx + off
            flat = np.ravel_multi_index(corner.T, self.counts)
            w = np.ones(k)
            for a in range(self.n):
                w *= np.where(off[a] == 1, frac[:, a], 1.0 - frac[:, a])
            cid = self.ids_flat[flat]
            cids[:, c] = cid
            wts[:, c] = w
            ok &= (w <= _WEIGHT_TOL) | (cid >= 0)
        wts[cids < 0] = 0.0

        self_w = np.zeros(k)
        if own_ids is not None:
            own = cids == own_ids[:, None]
            self_w = np.sum(np.where(own, wts, 0.0), axis=1)
            wts = np.where(own, 0.0, wts)
        return ok, cids, wts, self_w


def _first_crossings(phi_fn, starts, units, arc_step, arc_max):
    """Arc length of the first {Phi = 0} crossing along each ray."""
    k = len(starts)
    lo = np.zeros(k)
    hi = np.full(k, np.nan)
    active = np.ones(k, dtype=bool)
    s = 0.0
    while active.any():
        s_next = s + arc_step
        if s_next > arc_max:
            raise DomainError(
                "a stencil ray failed to leave the domain; is the bounding "
                "box consistent with the defining function?")
        gidx = np.where(active)[0]
        vals = phi_fn(starts[gidx] + s_next * units[gidx])
        crossed = vals <= 0
        hit = gidx[crossed]
        hi[hit] = s_next
        active[hit] = False
        lo[gidx[~crossed]] = s_next
        s = s_next
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pos = phi_fn(starts + mid[:, None] * units) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

class Grid:
    """Geometry and stencil data; carries no solution values."""

    def __init__(self, domain, family, h_base, h_axes, counts, origin,
                 mask_flat, points, frames, directions, frame_dirs,
                 dir_arms, axis_arms, boundary_points, sigma_nodes,
                 q_maps, arm_s_full):
        self.domain = domain
        self.family = family
        self.h_base = h_base
        self.h_axes = h_axes
        self.counts = counts
        self.origin = origin
        self.mask_flat = mask_flat
        self.points = points
        self.frames = frames
        self.directions = directions
        self.frame_dirs = frame_dirs
        self.dir_arms = dir_arms
        self.axis_arms = axis_arms
        self.boundary_points = boundary_points
        self.sigma_nodes = sigma_nodes
        self.q_maps = q_maps
        self.arm_s_full = arm_s_full
        self.n_nodes = len(points)
        self.q_is_zero = q_maps is None or not np.any(q_maps)

        # direction-arm coefficient of the node's own value in the second
        # difference; positive, so the scheme is monotone in u(node)
        self.beta = np.empty((self.n_nodes, len(directions)))
        for d, (ap, am) in enumerate(dir_arms):
            sp, sm = ap.s, am.s
            self.beta[:, d] = 2.0 * (sp + sm - sm * ap.self_weight
                                     - sp * am.self_weight) \
                / (sp * sm * (sp + sm))

        short = np.zeros(self.n_nodes, dtype=bool)
        for ap, am in dir_arms:
            short |= (ap.bmap >= 0) | (am.bmap >= 0)
        self.has_boundary_arm = short

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def m(self):
        return self.family.m

    def __repr__(self):
        return (f"Grid({self.domain.name}, h={self.h_base:g}, "
                f"{self.n_nodes} nodes, {len(self.directions)} directions)")

    def interpolator(self):
        ids_flat = np.full(int(np.prod(self.counts)), -1, dtype=np.int64)
        ids_flat[np.flatnonzero(self.mask_flat)] = np.arange(self.n_nodes)
        return _Interpolator(self.origin, self.h_axes, self.counts, ids_flat)


class GridFunction:
    """Values on the interior mask plus values on the boundary closure."""

    def __init__(self, grid, values, boundary_values=None):
        self.grid = grid
        self.values = np.asarray(values, dtype=float).copy()
        if self.values.shape != (grid.n_nodes,):
            raise DimensionMismatchError(
                f"expected {grid.n_nodes} node values, got "
                f"{self.values.shape}")
        if boundary_values is None:
            boundary_values = np.zeros(len(grid.boundary_points))
        self.boundary_values = np.asarray(boundary_values,
                                          dtype=float).copy()
        if self.boundary_values.shape != (len(grid.boundary_points),):
            raise DimensionMismatchError("boundary values have wrong length")
        self._interp = None

    def copy(self):
        return GridFunction(self.grid, self.values, self.boundary_values)

    def __call__(self, x):
        """Multilinear interpolation from mask nodes; DomainError outside."""
        if self._interp is None:
            self._interp = self.grid.interpolator()
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        ok, cids, wts, _ = self._interp.weights(np.atleast_2d(x))
        if not np.all(ok):
            raise DomainError("evaluation outside the gridded domain")
        vals = np.sum(np.where(cids >= 0, self.values[np.maximum(cids, 0)],
                               0.0) * wts, axis=1)
        return float(vals[0]) if single else vals


def grid_function_from_callable(grid, u, boundary_from=None):
    """Sample a callable on the mask nodes and the boundary closure."""
    pts = grid.points
    try:
        vals = np.asarray(u(pts), dtype=float)
        if vals.shape != (grid.n_nodes,):
            raise TypeError
    except (TypeError, ValueError, IndexError):
        vals = np.array([float(u(p)) for p in pts])
    bsource = boundary_from if boundary_from is not None else u
    bpts = grid.boundary_points
    if len(bpts):
        try:
            bvals = np.asarray(bsource(bpts), dtype=float)
            if bvals.shape != (len(bpts),):
                raise TypeError
        except (TypeError, ValueError, IndexError):
            bvals = np.array([float(bsource(p)) for p in bpts])
    else:
        bvals = np.zeros(0)
    return GridFunction(grid, vals, bvals)


def build_grid(domain, h, family, frames_k=8, anisotropic_t=False,
               arm_scale=1.0):
    """Build the masked lattice and its stencil arms.

    Parameters
    ----------
    domain : DomainSpec
    h : float
        Base lattice spacing (all axes; the last axis uses h^2 when
        ``anisotropic_t`` is set, matching the parabolic dilation scaling).
    family : FieldFamily
    frames_k : int
        Number of orthonormal frames for m = 2 (angle resolution pi/(2K)).
    arm_scale : float
        Full arm parameter is arm_scale * sqrt(h).
    """
    if h <= 0:
        raise DomainError("spacing h must be positive")
    n = domain.n
    if family.n != n:
        raise DimensionMismatchError(
            f"family dimension {family.n} != domain dimension {n}")

    h_axes = np.full(n, float(h))
    if anisotropic_t and family.m < n:
        h_axes[-1] = float(h) ** 2
    box = domain.bounding_box
    counts = np.maximum(
        np.floor((box[:, 1] - box[:, 0]) / h_axes + 1e-9).astype(int) + 1, 2)
    origin = box[:, 0]

    axes = [origin[a] + h_axes[a] * np.arange(counts[a]) for a in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([g.ravel() for g in mesh], axis=-1)
    mask_flat = domain.phi_values(lattice) > 0.0
    if not mask_flat.any():
        raise DomainError("empty grid mask: no lattice node lies inside "
                          "the domain at this spacing")
    points = lattice[mask_flat]
    npts = len(points)
    ids_flat = np.full(len(lattice), -1, dtype=np.int64)
    ids_flat[np.flatnonzero(mask_flat)] = np.arange(npts)
    interp = _Interpolator(origin, h_axes, counts, ids_flat)

    frames = frame_set(family.m, k=frames_k)
    directions, frame_dirs = _collect_directions(frames)

    sigma_nodes = _fields.sigma_batch(family, points)
    q_maps = _fields.q_linear_map(family, points)
    if not np.any(q_maps):
        q_maps_stored = None
    else:
        q_maps_stored = q_maps

    s_full = arm_scale * np.sqrt(float(h))
    diam = float(np.linalg.norm(box[:, 1] - box[:, 0]))
    arc_step = float(np.min(h_axes)) / 2.0
    own = np.arange(npts)

    boundary_pts = []

    def make_armset(chords, sign):
        arc = np.linalg.norm(chords, axis=1)
        if np.any(arc == 0):
            raise DomainError("a stencil direction has zero length")
        units = sign * chords / arc[:, None]
        endpoint = points + s_full * sign * chords
        ok, cids, wts, selfw = interp.weights(endpoint, own_ids=own)
        interior = ok & (domain.phi_values(endpoint) > 0.0)
        bidx = np.flatnonzero(~interior)

        s_arr = np.full(npts, s_full)
        bmap = np.full(npts, -1, dtype=np.int64)
        if len(bidx):
            arcs = _first_crossings(domain.phi_values, points[bidx],
                                    units[bidx], arc_step,
                                    2.0 * diam + s_full * arc.max())
            s_arr[bidx] = arcs / arc[bidx]
            crossing = points[bidx] + arcs[:, None] * units[bidx]
            base = len(boundary_pts)
            boundary_pts.extend(crossing)
            bmap[bidx] = base + np.arange(len(bidx))
            wts[bidx] = 0.0
            selfw[bidx] = 0.0

        rows = np.repeat(own, cids.shape[1])
        cols = cids.ravel()
        data = wts.ravel()
        keep = (cols >= 0) & (data > _WEIGHT_TOL)
        mat = sparse.csr_matrix(
            (data[keep], (rows[keep], cols[keep])), shape=(npts, npts))
        return ArmSet(s=s_arr, weights=mat, self_weight=selfw, bmap=bmap)

    dir_arms = []
    for d in range(len(directions)):
        chords = np.einsum("nij,j->ni", sigma_nodes, directions[d])
        dir_arms.append((make_armset(chords, +1.0), make_armset(chords, -1.0)))

    axis_arms = []
    for a in range(n):
        e = np.zeros(n)
        e[a] = 1.0
        chords = np.broadcast_to(e * h_axes[a], (npts, n))
        # axis arms use the parameter s in [0, 1] measured in units of the
        # single-cell chord h_a e_a, so s = 1 reaches the lattice neighbor
        plus = _axis_armset(domain, interp, points, chords, +1.0, own,
                            boundary_pts, arc_step)
        minus = _axis_armset(domain, interp, points, chords, -1.0, own,
                             boundary_pts, arc_step)
        axis_arms.append((plus, minus))

    boundary_points = np.asarray(boundary_pts) if boundary_pts \
        else np.zeros((0, n))

    return Grid(domain=domain, family=family, h_base=float(h),
                h_axes=h_axes, counts=counts, origin=origin,
                mask_flat=mask_flat, points=points, frames=frames,
                directions=directions, frame_dirs=frame_dirs,
                dir_arms=dir_arms, axis_arms=axis_arms,
                boundary_points=boundary_points, sigma_nodes=sigma_nodes,
                q_maps=q_maps_stored, arm_s_full=s_full)


def _axis_armset(domain, interp, points, chords, sign, own, boundary_pts,
                 arc_step):
    npts = len(points)
    arc = np.linalg.norm(chords, axis=1)
    units = sign * chords / arc[:, None]
    endpoint = points + sign * chords
    ok, cids, wts, selfw = interp.weights(endpoint, own_ids=own)
    interior = ok & (domain.phi_values(endpoint) > 0.0)
    bidx = np.flatnonzero(~interior)

    s_arr = np.full(npts, float(arc[0]))
    bmap = np.full(npts, -1, dtype=np.int64)
    if len(bidx):
        arcs = _first_crossings(domain.phi_values, points[bidx], units[bidx],
                                min(arc_step, float(arc[0]) / 4.0),
                                4.0 * float(arc[0]))
        s_arr[bidx] = arcs
        crossing = points[bidx] + arcs[:, None] * units[bidx]
        base = len(boundary_pts)
        boundary_pts.extend(crossing)
        bmap[bidx] = base + np.arange(len(bidx))
        wts[bidx] = 0.0
        selfw[bidx] = 0.0

    rows = np.repeat(own, cids.shape[1])
    cols = cids.ravel()
    data = wts.ravel()
    keep = (cols >= 0) & (data > _WEIGHT_TOL)
    mat = sparse.csr_matrix((data[keep], (rows[keep], cols[keep])),
                            shape=(npts, npts))
    return ArmSet(s=s_arr, weights=mat, self_weight=selfw, bmap=bmap)


def _collect_directions(frames):
    dirs = []
    frame_dirs = []
    for f in frames:
        idx = []
        for j in range(f.shape[1]):
            v = f[:, j]
            found = None
            for i, u in enumerate(dirs):
                if np.allclose(u, v, atol=1e-12) \
                        or np.allclose(u, -v, atol=1e-12):
                    found = i
                    break
            if found is None:
                dirs.append(v.copy())
                found = len(dirs) - 1
            idx.append(found)
        frame_dirs.append(tuple(idx))
    return np.asarray(dirs), frame_dirs


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def write_csv(grid_function, path):
    """Coordinates-then-value rows for every mask node, one-line header."""
    grid = grid_function.grid
    n = grid.n
    header = ",".join([f"x{a + 1}" for a in range(n)] + ["value"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for p, v in zip(grid.points, grid_function.values):
            coords = ",".join(f"{c:.17g}" for c in p)
            fh.write(f"{coords},{v:.17g}\n")


def read_csv(grid, path, g=None):
    """Reload a CSV written by write_csv onto the same grid skeleton.

    Boundary closure values are resampled from ``g`` when given (NaN
    otherwise); interior values are matched to nodes through their lattice
    indices, so a write/read round trip is bit-identical."""
    values = np.full(grid.n_nodes, np.nan)
    ids_flat = np.full(int(np.prod(grid.counts)), -1, dtype=np.int64)
    ids_flat[np.flatnonzero(grid.mask_flat)] = np.arange(grid.n_nodes)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if len(header) != grid.n + 1:
            raise DomainError(f"CSV has {len(header)} columns, expected "
                              f"{grid.n + 1}")
        for line in fh:
            parts = line.strip().split(",")
            coords = np.array([float(c) for c in parts[:-1]])
            idx = np.round((coords - grid.origin) / grid.h_axes).astype(int)
            flat = np.ravel_multi_index(idx, grid.counts)
            node = ids_flat[flat]
            if node < 0:
                raise DomainError("CSV row does not match a mask node")
            values[node] = float(parts[-1])
    if np.any(np.isnan(values)):
        raise DomainError("CSV does not cover the grid mask")
    if g is not None and len(grid.boundary_points):
        bvals = np.asarray(g(grid.boundary_points), dtype=float)
    else:
        bvals = np.full(len(grid.boundary_points), np.nan)
    return GridFunction(grid, values, bvals)
