"""Low-dimensional polyhedral primitives: feasibility, extreme points, vertex enumeration.

Everything here works on small dense systems (dimension <= 4, a few dozen
rows), so the tools favour robustness over asymptotics: LP-based extreme
point tests instead of raw qhull, affine-hull reduction before vertex
enumeration so that segments, points and empty sets come out exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError


_FEAS_TOL = 1e-9


def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    return res


def feasible_point(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Return a point with A x <= b, or None if the system is infeasible."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    dim = A.shape[1]
    res = _lp(np.zeros(dim), A_ub=A, b_ub=b, bounds=[(None, None)] * dim)
    if not res.success:
        return None
    return res.x


def chebyshev_center(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Chebyshev center of {x : A x <= b}: the deepest point and its margin.

    Returns (center, radius); radius ~ 0 means the polytope is lower
    dimensional. None means infeasible. Rows of A need not be normalized.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, dim = A.shape
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    # variables (x, r); maximize r subject to A x + r*||a_i|| <= b
    A_ext = np.hstack([A, norms[:, None]])
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    # radius capped so unbounded polytopes still yield a center
    bounds = [(None, None)] * dim + [(0.0, 1e8)]
    res = _lp(c, A_ub=A_ext, b_ub=b, bounds=bounds)
    if not res.success:
        return None
    return res.x[:dim], float(res.x[dim])


def implicit_equalities(A: np.ndarray, b: np.ndarray, tol: float = _FEAS_TOL) -> list[int] | None:
    """Indices of rows satisfied with equality on the whole feasible set.

    None if infeasible. Row i is implicit iff min{a_i x : A x <= b} >= b_i - tol,
    i.e. its slack is ~0 everywhere, not just somewhere.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    cc = chebyshev_center(A, b)
    if cc is None:
        return None
    center, radius = cc
    if radius > tol:
        return []  # interior point exists: every slack is positive there
    out = []
    for i in range(A.shape[0]):
        res = _lp(A[i], A_ub=A, b_ub=b, bounds=[(None, None)] * A.shape[1])
        if res.success and res.fun >= b[i] - tol * (1.0 + abs(b[i])):
            out.append(i)
    return out


def extreme_points(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Hull-irredundant subset of a point cloud, robust to degeneracy.

    Uses qhull when the cloud is full dimensional, and falls back to the
    LP test (p extreme iff p not in conv(others)) when it is flat.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if n <= 1:
        return pts.copy()
    # drop duplicates first
    keep = []
    for i in range(n):
        if not any(np.linalg.norm(pts[i] - pts[j]) <= tol for j in keep):
            keep.append(i)
    pts = pts[keep]
    n = pts.shape[0]
    if n <= 2:
        return pts
    try:
        hull = ConvexHull(pts)
        return pts[np.sort(hull.vertices)]
    except QhullError:
        pass
    # degenerate cloud: keep p iff it is not a convex combination of the rest
    out = []
    for i in range(n):
        others = np.delete(pts, i, axis=0)
        k = others.shape[0]
        A_eq = np.vstack([others.T, np.ones((1, k))])
        b_eq = np.append(pts[i], 1.0)
        res = _lp(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0.0, None)] * k)
        if not res.success:
            out.append(i)
        else:
            resid = np.linalg.norm(A_eq @ res.x - b_eq)
            if resid > tol:
                out.append(i)
    return pts[out]


def in_hull(point: np.ndarray, vertices: np.ndarray, tol: float = 1e-9) -> bool:
    """Convex-hull membership by LP over the barycentric weights."""
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    point = np.asarray(point, dtype=float)
    k = vertices.shape[0]
    if k == 0:
        return False
    A_eq = np.vstack([vertices.T, np.ones((1, k))])
    b_eq = np.append(point, 1.0)
    res = _lp(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0.0, None)] * k)
    if not res.success:
        return False
    return bool(np.linalg.norm(A_eq @ res.x - b_eq) <= tol * (1.0 + np.linalg.norm(b_eq)))


@dataclass
class HPolytope:
    """Bounded solution set of A x <= b with cached vertex list.

    `vertices` is empty iff the set is empty. The set may be lower
    dimensional (a face, a segment, a point); vertex enumeration reduces
    to the affine hull first so those cases stay exact.
    """

    A: np.ndarray
    b: np.ndarray
    vertices: np.ndarray

    @property
    def is_empty(self) -> bool:
        return self.vertices.shape[0] == 0

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        if self.is_empty:
            return False
        scale = 1.0 + np.abs(self.b)
        return bool(np.all(self.A @ np.asarray(x, dtype=float) - self.b <= tol * scale))


def _dedupe_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-12):
    """Normalize rows, drop duplicates, flag a contradictory zero row.

    Returns (A2, b2, infeasible); a row 0 <= b with b < 0 makes the whole
    system empty.
    """
    norms = np.linalg.norm(A, axis=1)
    rows: dict[tuple, float] = {}
    infeasible = False
    for i in range(A.shape[0]):
        if norms[i] <= tol:
            if b[i] < -tol:
                infeasible = True
            continue
        key = tuple(np.round(A[i] / norms[i], 12))
        val = b[i] / norms[i]
        if key not in rows or val < rows[key]:
            rows[key] = val
    if not rows:
        return np.zeros((0, A.shape[1])), np.zeros(0), infeasible
    A2 = np.array([list(k) for k in rows.keys()])
    b2 = np.array(list(rows.values()))
    return A2, b2, infeasible


def _enumerate_full_dim(A: np.ndarray, b: np.ndarray, interior: np.ndarray) -> np.ndarray:
    """Vertices of a full-dimensional A x <= b via halfspace intersection."""
    from scipy.spatial import HalfspaceIntersection

    if A.shape[1] == 1:
        a = A[:, 0]
        hi = np.min(b[a > 0] / a[a > 0])
        lo = np.max(b[a < 0] / a[a < 0])
        if hi - lo <= 1e-12 * (1.0 + abs(hi)):
            return np.array([[0.5 * (lo + hi)]])
        return np.array([[lo], [hi]])
    halfspaces = np.hstack([A, -b[:, None]])
    hs = HalfspaceIntersection(halfspaces, interior)
    verts = hs.intersections
    return extreme_points(verts)


def vertex_enumeration(A: np.ndarray, b: np.ndarray, tol: float = _FEAS_TOL) -> HPolytope:
    """Enumerate the vertices of a (possibly lower-dimensional) bounded polytope.

    Strategy: detect implicit equalities, restrict to the affine hull,
    then run halfspace intersection in the reduced full-dimensional space.
    Unbounded input is the caller's bug; qhull will raise on it.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    dim = A.shape[1]
    A, b, contradictory = _dedupe_rows(A, b)
    if contradictory:
        return HPolytope(A, b, np.zeros((0, dim)))
    if A.shape[0] == 0:
        raise ValueError("no constraints: unbounded set")

    eq_idx = implicit_equalities(A, b, tol)
    if eq_idx is None:
        return HPolytope(A, b, np.zeros((0, dim)))

    if len(eq_idx) == 0:
        cc = chebyshev_center(A, b)
        verts = _enumerate_full_dim(A, b, cc[0])
        return HPolytope(A, b, verts)

    # affine hull: E x = f from the implicit rows
    E = A[eq_idx]
    f = b[eq_idx]
    # particular solution + null-space basis
    x0, *_ = np.linalg.lstsq(E, f, rcond=None)
    _, sing, Vt = np.linalg.svd(E)
    rank = int(np.sum(sing > 1e-10 * max(1.0, sing[0] if len(sing) else 1.0)))
    N = Vt[rank:].T  # dim x k
    k = N.shape[1]
    if k == 0:
        # zero-dimensional: the single point, if feasible
        if np.all(A @ x0 - b <= tol * (1.0 + np.abs(b))):
            return HPolytope(A, b, x0[None, :])
        return HPolytope(A, b, np.zeros((0, dim)))

    mask = np.ones(A.shape[0], dtype=bool)
    mask[eq_idx] = False
    A_red = A[mask] @ N
    b_red = b[mask] - A[mask] @ x0
    A_red, b_red, contradictory = _dedupe_rows(A_red, b_red)
    if contradictory:
        return HPolytope(A, b, np.zeros((0, dim)))
    if A_red.shape[0] == 0:
        raise ValueError("affine hull reduction left no constraints: unbounded set")
    sub = vertex_enumeration(A_red, b_red, tol)
    verts = x0[None, :] + sub.vertices @ N.T if not sub.is_empty else np.zeros((0, dim))
    return HPolytope(A, b, extreme_points(verts) if verts.shape[0] else verts)


def cone_box_generators(rows: np.ndarray, box_half: float = 1.0, tol: float = _FEAS_TOL) -> np.ndarray:
    """Conic generating set of K = {d : rows @ d >= 0} from K cut by a box.

    Returns the nonzero vertices of K intersected with [-h, h]^dim. Any
    point of K is a conic combination of these, which is all downstream
    constraints need (they are linear in the direction).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    dim = rows.shape[1]
    A = np.vstack([-rows, np.eye(dim), -np.eye(dim)])
    b = np.concatenate([np.zeros(rows.shape[0]),
                        np.full(dim, box_half), np.full(dim, box_half)])
    poly = vertex_enumeration(A, b, tol)
    verts = poly.vertices
    if verts.shape[0] == 0:
        return np.zeros((0, dim))
    keep = np.linalg.norm(verts, axis=1) > tol
    return verts[keep]


def polytope_interior_samples(vertices: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points of conv(vertices) via Dirichlet weights (vertices included upstream)."""
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    k = vertices.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    if k == 1:
        return np.repeat(vertices, min(count, 1), axis=0)
    w = rng.dirichlet(np.ones(k), size=count)
    return w @ vertices
