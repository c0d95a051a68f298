"""Bounded domains given as superlevel sets of a C^2 defining function.

A domain is Omega = {x : Phi(x) > 0} with DPhi != 0 on the boundary; the
defining function carries closed-form jets for the preset shapes (Koranyi
and Euclidean balls) so barrier constructions can differentiate it exactly.
"""

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .functions import ClosedFormFunction

__all__ = [
    "DomainSpec",
    "koranyi_ball",
    "euclidean_ball",
]


class DomainSpec:
    """Domain {Phi > 0} inside an axis-aligned bounding box.

    Parameters
    ----------
    phi : ClosedFormFunction
        Defining function; jets are needed by barrier constructions but not
        by plain membership tests.
    bounding_box : array_like, shape (n, 2)
        Must contain {Phi >= 0}.
    name : str
    """

    def __init__(self, phi, bounding_box, name="custom"):
        self.phi = phi
        self.bounding_box = np.asarray(bounding_box, dtype=float)
        if self.bounding_box.ndim != 2 or self.bounding_box.shape[1] != 2:
            raise DimensionMismatchError("bounding_box must have shape (n, 2)")
        if np.any(self.bounding_box[:, 1] <= self.bounding_box[:, 0]):
            raise DomainError("bounding box has empty extent on some axis")
        self.name = name

    @property
    def n(self):
        return self.bounding_box.shape[0]

    def __repr__(self):
        return f"DomainSpec({self.name!r}, n={self.n})"

    def phi_values(self, points):
        return np.asarray(self.phi(points), dtype=float)

    def contains(self, points):
        return self.phi_values(points) > 0.0

    def _interior_anchor(self):
        center = self.bounding_box.mean(axis=1)
        if self.phi(center) > 0:
            return center
        rng = np.random.default_rng(0)
        for _ in range(10000):
            x = rng.uniform(self.bounding_box[:, 0], self.bounding_box[:, 1])
            if self.phi(x) > 0:
                return x
        raise DomainError(f"could not locate an interior point of {self.name}")

    def sample_interior(self, count, rng, phi_margin=0.0, max_tries=200):
        """Rejection-sample points with Phi > phi_margin."""
        out = np.empty((count, self.n))
        filled = 0
        for _ in range(max_tries):
            cand = rng.uniform(self.bounding_box[:, 0],
                               self.bounding_box[:, 1],
                               size=(max(count, 256), self.n))
            good = cand[self.phi_values(cand) > phi_margin]
            take = min(count - filled, len(good))
            out[filled:filled + take] = good[:take]
            filled += take
            if filled == count:
                return out
        raise DomainError(
            f"interior sampling of {self.name} failed (margin too large?)")

    def bisect_boundary(self, inside, outside, tol=1e-13, max_iter=200):
        """Point on {Phi = 0} along the segment [inside, outside]."""
        lo = np.asarray(inside, dtype=float)
        hi = np.asarray(outside, dtype=float)
        if not (self.phi(lo) > 0 >= self.phi(hi)):
            raise DomainError("bisection needs Phi(inside) > 0 >= Phi(outside)")
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            val = self.phi(mid)
            if abs(val) <= tol:
                return mid
            if val > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def sample_boundary(self, count, rng, tol=1e-13):
        """Random boundary points found by bisecting interior/exterior pairs."""
        anchor = self._interior_anchor()
        pts = np.empty((count, self.n))
        filled = 0
        while filled < count:
            inner = self.sample_interior(1, rng)[0]
            direction = rng.standard_normal(self.n)
            direction /= np.linalg.norm(direction)
            step = np.max(self.bounding_box[:, 1] - self.bounding_box[:, 0])
            outer = inner + direction * step
            tries = 0
            while self.phi(outer) > 0 and tries < 60:
                outer = anchor + (outer - anchor) * 2.0
                tries += 1
            if self.phi(outer) > 0:
                continue
            pts[filled] = self.bisect_boundary(inner, outer, tol=tol)
            filled += 1
        return pts

    def axis_boundary_points(self, tol=1e-13):
        """Deterministic boundary points: crossings of {Phi = 0} along the
        coordinate rays from an interior anchor."""
        anchor = self._interior_anchor()
        pts = []
        span = np.max(self.bounding_box[:, 1] - self.bounding_box[:, 0])
        for axis in range(self.n):
            for sgn in (+1.0, -1.0):
                e = np.zeros(self.n)
                e[axis] = sgn
                outer = anchor + e * span
                tries = 0
                while self.phi(outer) > 0 and tries < 60:
                    outer = anchor + (outer - anchor) * 2.0
                    tries += 1
                if self.phi(outer) > 0:
                    continue
                pts.append(self.bisect_boundary(anchor, outer, tol=tol))
        return np.asarray(pts)

    def boundary_normals(self, points):
        """Outward unit normals -DPhi/|DPhi| at (approximate) boundary points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        grads = np.stack([self.phi.euclidean_jet(p).gradient for p in points])
        norms = np.linalg.norm(grads, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise DomainError("DPhi vanishes at a boundary sample")
        return -grads / norms


def koranyi_ball(radius=1.0):
    """Koranyi ball {(x1^2+x2^2)^2 + t^2 < R^4} of the Heisenberg group,
    with defining function Phi = R^4 - (x1^2+x2^2)^2 - t^2."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    r4 = float(radius) ** 4

    def fn(x):
        x = np.asarray(x, dtype=float)
        psi = x[..., 0] ** 2 + x[..., 1] ** 2
        return r4 - psi ** 2 - x[..., 2] ** 2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        psi = x[0] ** 2 + x[1] ** 2
        return np.array([-4.0 * psi * x[0], -4.0 * psi * x[1], -2.0 * x[2]])

    def hessian(x):
        x = np.asarray(x, dtype=float)
        psi = x[0] ** 2 + x[1] ** 2
        return -np.array([
            [4.0 * psi + 8.0 * x[0] ** 2, 8.0 * x[0] * x[1], 0.0],
            [8.0 * x[0] * x[1], 4.0 * psi + 8.0 * x[1] ** 2, 0.0],
            [0.0, 0.0, 2.0],
        ])

    phi = ClosedFormFunction(fn, gradient, hessian, name="koranyi-phi")
    box = np.array([[-radius, radius],
                    [-radius, radius],
                    [-radius ** 2, radius ** 2]])
    return DomainSpec(phi, box, name=f"koranyi_ball(R={radius})")


def euclidean_ball(radius=1.0, center=None, n=3):
    """Euclidean ball {|x - c| < R} with Phi = R^2 - |x - c|^2."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    n = len(center)
    r2 = float(radius) ** 2

    def fn(x):
        x = np.asarray(x, dtype=float)
        return r2 - np.sum((x - center) ** 2, axis=-1)

    def gradient(x):
        return -2.0 * (np.asarray(x, dtype=float) - center)

    def hessian(x):
        return -2.0 * np.eye(n)

    phi = ClosedFormFunction(fn, gradient, hessian, name="ball-phi")
    box = np.stack([center - radius, center + radius], axis=1)
    return DomainSpec(phi, box, name=f"euclidean_ball(R={radius})")
