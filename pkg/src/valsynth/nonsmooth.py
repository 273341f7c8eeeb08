"""Limiting gradients, directional derivatives, and sub/superdifferentials.

At a kink the candidate is still piecewise polynomial over polyhedral
regions, so every limit object is finite linear algebra:

* limiting spatial gradients come from the active pieces;
* the one-sided directional derivative picks the piece whose region the
  ray enters;
* the Dini subdifferential is cut out by (a,s).d <= d_phi(p;d) imposed on
  a conic generating set of each active piece's tangent cone (the
  superdifferential with >=), then vertex-enumerated;
* the Clarke set is the convex hull of (-h, s) over limiting gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .expr import Position
from .geometry import (HPolytope, cone_box_generators, extreme_points,
                       vertex_enumeration)
from .piecewise import PiecewiseForm

MERGE_TOL = 1e-9     # gradients closer than this are the same limit
MAX_EXACT_DIM = 3    # vertex enumeration works in (a,s) dimension n+1


class CJClass(Enum):
    SMOOTH = "smooth"
    CJ_MINUS = "cj_minus"    # subdifferential nonempty at a kink
    CJ_PLUS = "cj_plus"      # superdifferential nonempty at a kink
    NEITHER = "neither"


class DimensionError(ValueError):
    """Spatial dimension above the exact-enumeration cap."""


@dataclass
class GradientEntry:
    s: np.ndarray                  # limiting spatial gradient
    h: float                       # forced value -d(piece)/dt
    piece_indices: list[int]
    h_conflict: float = 0.0        # spread of h over merged pieces, if any

    @property
    def inconsistent(self) -> bool:
        return self.h_conflict > MERGE_TOL


@dataclass
class LimitingData:
    """Per-position limiting gradient set with its forced h values."""

    position: Position
    entries: list[GradientEntry]
    smooth: bool

    @property
    def gradients(self) -> np.ndarray:
        return np.array([e.s for e in self.entries])

    @property
    def h_values(self) -> np.ndarray:
        return np.array([e.h for e in self.entries])

    def conflicts(self) -> list[GradientEntry]:
        return [e for e in self.entries if e.inconsistent]


@dataclass
class DiniPolytope:
    kind: str                      # "sub" | "super"
    poly: HPolytope

    @property
    def is_empty(self) -> bool:
        return self.poly.is_empty

    @property
    def vertices(self) -> np.ndarray:
        return self.poly.vertices


@dataclass
class ClarkePolytope:
    vertices: np.ndarray           # rows (a, s) = (-h, s)


@dataclass
class PositionAnalysis:
    """Everything the condition checks need at one position."""

    position: Position
    limiting: LimitingData
    dini_sub: DiniPolytope
    dini_super: DiniPolytope
    clarke: ClarkePolytope
    cj_class: CJClass
    e2_projection: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    inconsistent_dini: bool = False


def limiting_gradients(pw: PiecewiseForm, p: Position) -> LimitingData:
    """Limiting spatial gradients at p with the h value each one forces.

    Entries with equal gradients are merged; a merge whose h values spread
    by more than MERGE_TOL is recorded on the entry (that spread is what
    the gradient-consistency check looks for), not raised here.
    """
    cls = pw.classify(p)
    entries: list[GradientEntry] = []
    for idx in cls.active:
        dt, grad = pw.pieces[idx].poly.gradient_at(p.t, np.asarray(p.x))
        h = -dt
        for e in entries:
            if np.linalg.norm(e.s - grad) <= MERGE_TOL:
                e.piece_indices.append(idx)
                spread = abs(e.h - h)
                if spread > e.h_conflict:
                    e.h_conflict = spread
                break
        else:
            entries.append(GradientEntry(grad, h, [idx]))
    return LimitingData(p, entries, cls.smooth)


def directional_derivative(pw: PiecewiseForm, p: Position, d: np.ndarray) -> float:
    """One-sided derivative of the candidate at p in direction d = (tau, g).

    Picks the active piece whose tangent cone the ray enters most robustly;
    on shared faces all candidates agree by continuity.
    """
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d) == 0.0:
        raise ValueError("direction must be nonzero")
    frame = pw.frame
    if not (frame.t0 < p.t < frame.theta0):
        raise ValueError("directional derivatives need t strictly inside the interval")
    active = pw.active_pieces(p)
    vals = pw.boundary_values(p)
    best, best_margin = None, -np.inf
    for idx in active:
        rows = pw.pieces[idx].region_rows(pw.boundaries)
        # constraints active at p: their gradient row must not point out of the cone
        margin = np.inf
        for j, row in enumerate(rows):
            if abs(vals[j]) <= pw.snap_tol * max(pw._grad_norms[j], 1.0):
                margin = min(margin, float(row[1:] @ d))
        if margin > best_margin:
            best, best_margin = idx, margin
    dt, grad = pw.pieces[best].poly.gradient_at(p.t, np.asarray(p.x))
    return float(dt * d[0] + grad @ d[1:])


def directional_derivative_batch(pw: PiecewiseForm, p: Position,
                                 D: np.ndarray) -> np.ndarray:
    """directional_derivative over many directions d = (tau, g); D is (K, n+1).

    Same entered-piece selection as the scalar path, vectorized: for each
    direction the active piece whose tight constraints it satisfies most
    robustly wins, and continuity makes ties value-equal.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    frame = pw.frame
    if not (frame.t0 < p.t < frame.theta0):
        raise ValueError("directional derivatives need t strictly inside the interval")
    active = pw.active_pieces(p)
    vals = pw.boundary_values(p)
    K = D.shape[0]
    margins = np.full((len(active), K), np.inf)
    grads = np.empty((len(active), pw.frame.n + 1))
    for a_idx, idx in enumerate(active):
        rows = pw.pieces[idx].region_rows(pw.boundaries)
        tight = [rows[j][1:] for j in range(rows.shape[0])
                 if abs(vals[j]) <= pw.snap_tol * max(pw._grad_norms[j], 1.0)]
        if tight:
            margins[a_idx] = np.min(np.array(tight) @ D.T, axis=0)
        dt, grad = pw.pieces[idx].poly.gradient_at(p.t, np.asarray(p.x))
        grads[a_idx] = np.concatenate([[dt], grad])
    best = np.argmax(margins, axis=0)
    return np.einsum("kj,kj->k", grads[best], D)


def _piece_cone_halfspaces(pw: PiecewiseForm, p: Position, sign: float):
    """Rows (d, bound) with sign * [(a,s).d - grad_piece.d] <= 0 for generators d."""
    active = pw.active_pieces(p)
    vals = pw.boundary_values(p)
    A_rows, b_vals = [], []
    for idx in active:
        rows = pw.pieces[idx].region_rows(pw.boundaries)
        tight = [rows[j][1:] for j in range(rows.shape[0])
                 if abs(vals[j]) <= pw.snap_tol * max(pw._grad_norms[j], 1.0)]
        dim = pw.frame.n + 1
        gens = cone_box_generators(np.array(tight)) if tight else \
            cone_box_generators(np.zeros((0, dim)))
        if tight and gens.shape[0] == 0:
            continue  # degenerate cone (should not happen for full-dim pieces)
        dt, grad = pw.pieces[idx].poly.gradient_at(p.t, np.asarray(p.x))
        G = np.concatenate([[dt], grad])
        for d in gens:
            A_rows.append(sign * d)
            b_vals.append(sign * float(G @ d))
    return np.array(A_rows), np.array(b_vals)


def dini_polytope(pw: PiecewiseForm, p: Position, kind: str) -> DiniPolytope:
    """Exact sub- or superdifferential of the candidate at p as a polytope.

    kind "sub": {(a,s) : (a,s).d <= d_phi(p;d) for all d}, imposed on conic
    generators of each active tangent cone; "super" flips the inequality.
    The active cones cover every direction, so the polytope is bounded.
    """
    if pw.frame.n > MAX_EXACT_DIM:
        raise DimensionError(
            f"exact enumeration supports n <= {MAX_EXACT_DIM}, got n = {pw.frame.n}")
    if kind not in ("sub", "super"):
        raise ValueError("kind must be 'sub' or 'super'")
    sign = 1.0 if kind == "sub" else -1.0
    A, b = _piece_cone_halfspaces(pw, p, sign)
    poly = vertex_enumeration(A, b)
    return DiniPolytope(kind, poly)


def clarke(ld: LimitingData) -> ClarkePolytope:
    """Convex hull of (-h, s) over the limiting gradient set."""
    pts = np.array([np.concatenate([[-e.h], e.s]) for e in ld.entries])
    return ClarkePolytope(extreme_points(pts))


def classify_cj(pw: PiecewiseForm, p: Position) -> PositionAnalysis:
    """Full nonsmooth workup of one position.

    The projection polytope of the nonempty Dini set onto s-space stands in
    for the complement gradient set: that complement is a continuum, and
    the projection (with limiting gradients marked by the caller) is its
    finite description.
    """
    ld = limiting_gradients(pw, p)
    if ld.smooth:
        dt, grad = pw.pieces[pw.active_pieces(p)[0]].poly.gradient_at(p.t, np.asarray(p.x))
        point = np.concatenate([[dt], grad])[None, :]
        single = HPolytope(np.zeros((0, pw.frame.n + 1)), np.zeros(0), point)
        return PositionAnalysis(
            position=p, limiting=ld,
            dini_sub=DiniPolytope("sub", single),
            dini_super=DiniPolytope("super", single),
            clarke=clarke(ld), cj_class=CJClass.SMOOTH,
            e2_projection=np.zeros((0, pw.frame.n)))
    dsub = dini_polytope(pw, p, "sub")
    dsup = dini_polytope(pw, p, "super")
    inconsistent = (not dsub.is_empty) and (not dsup.is_empty)
    if not dsub.is_empty and dsup.is_empty:
        cj = CJClass.CJ_MINUS
        proj = extreme_points(dsub.vertices[:, 1:])
    elif not dsup.is_empty and dsub.is_empty:
        cj = CJClass.CJ_PLUS
        proj = extreme_points(dsup.vertices[:, 1:])
    else:
        cj = CJClass.NEITHER
        proj = np.zeros((0, pw.frame.n))
    return PositionAnalysis(
        position=p, limiting=ld, dini_sub=dsub, dini_super=dsup,
        clarke=clarke(ld), cj_class=cj, e2_projection=proj,
        inconsistent_dini=inconsistent)


def unit_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit directions for membership spot checks."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # include the axis directions: they catch axis-aligned violations exactly
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    return np.vstack([axes, v])


def dini_membership_residuals(pw: PiecewiseForm, p: Position, point: np.ndarray,
                              directions: np.ndarray, kind: str) -> np.ndarray:
    """Residuals d_phi(p;d) - (a,s).d over directions (>= 0 means inside, sub case)."""
    point = np.asarray(point, dtype=float)
    out = np.empty(directions.shape[0])
    for i, d in enumerate(directions):
        dd = directional_derivative(pw, p, d)
        r = dd - float(point @ d)
        out[i] = r if kind == "sub" else -r
    return out
