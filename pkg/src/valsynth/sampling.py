"""Position samplers: kink strata and smooth lattices inside the working box.

The membership conditions quantify over all positions; the samplers make
the tested density an explicit, reported parameter. Strata are the affine
intersections of up to three kink hyperplanes, sampled on a lattice at a
fixed set of interior times.
"""

from __future__ import annotations

import itertools

import numpy as np

from .expr import Position
from .piecewise import PiecewiseForm


def interior_times(frame, count: int, floor_frac: float) -> np.ndarray:
    """Evenly spaced times keeping floor_frac * span away from both ends."""
    span = frame.theta0 - frame.t0
    lo = frame.t0 + floor_frac * span
    hi = frame.theta0 - floor_frac * span
    return np.linspace(lo, hi, count)


def _stratum_points_at_time(rows: np.ndarray, t: float, box: np.ndarray,
                            per_dim: int, tol: float = 1e-9) -> np.ndarray:
    """Lattice on the affine set {g_j(t, x) = 0} inside the box, x-space."""
    n = box.shape[0]
    # c0 + ct*t + cx.x = 0  ->  cx.x = -(c0 + ct*t)
    Cx = rows[:, 2:]
    rhs = -(rows[:, 0] + rows[:, 1] * t)
    nz = np.linalg.norm(Cx, axis=1) > tol
    if not np.any(nz):
        # purely temporal forms: either the whole slice or nothing
        if np.all(np.abs(rhs) <= tol):
            return _box_lattice(box, per_dim)
        return np.zeros((0, n))
    Cx_nz, rhs_nz = Cx[nz], rhs[nz]
    x0, *_ = np.linalg.lstsq(Cx_nz, rhs_nz, rcond=None)
    if np.linalg.norm(Cx_nz @ x0 - rhs_nz) > 1e-7:
        return np.zeros((0, n))
    if np.any(np.abs(rhs[~nz]) > tol):
        return np.zeros((0, n))
    _, sing, Vt = np.linalg.svd(Cx_nz)
    rank = int(np.sum(sing > 1e-10 * max(1.0, sing[0])))
    N = Vt[rank:].T
    k = N.shape[1]
    if k == 0:
        pts = x0[None, :]
    else:
        half = float(np.max(box[:, 1] - box[:, 0])) / 2.0
        axes = [np.linspace(-half, half, per_dim)] * k
        coefs = np.array(list(itertools.product(*axes)))
        pts = x0[None, :] + coefs @ N.T
    inside = np.all((pts >= box[:, 0] - tol) & (pts <= box[:, 1] + tol), axis=1)
    return pts[inside]


def _box_lattice(box: np.ndarray, per_dim: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in box]
    return np.array(list(itertools.product(*axes)))


def strata_positions(pw: PiecewiseForm, times: np.ndarray, per_dim: int,
                     max_subset: int = 3) -> list[Position]:
    """Sampled positions on every kink stratum and their <=3-fold intersections."""
    m = pw.boundaries.shape[0]
    if m == 0:
        return []
    seen: set[tuple] = set()
    out: list[Position] = []
    for size in range(1, min(max_subset, m) + 1):
        for subset in itertools.combinations(range(m), size):
            rows = pw.boundaries[list(subset)]
            for t in times:
                for x in _stratum_points_at_time(rows, float(t), pw.box, per_dim):
                    key = (round(float(t), 12), *np.round(x, 12))
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(Position(float(t), tuple(float(v) for v in x)))
    return out


def smooth_lattice_positions(pw: PiecewiseForm, times: np.ndarray,
                             per_dim: int) -> list[Position]:
    """Box-lattice positions that land strictly off every kink."""
    pts = _box_lattice(pw.box, per_dim)
    out = []
    for t in times:
        for x in pts:
            p = Position(float(t), tuple(float(v) for v in x))
            d = pw.boundary_distances(p)
            if d.size == 0 or np.min(d) > pw.snap_tol:
                out.append(p)
    return out
