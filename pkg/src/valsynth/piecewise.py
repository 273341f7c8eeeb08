"""Exact decomposition of a candidate into polynomial pieces over sign regions.

Each abs argument is an affine form g_j(t,x); a sign vector sigma in
{-1,+1}^m picks the closed region {sigma_j g_j >= 0} and the polynomial
obtained by substituting abs(g_j) -> sigma_j g_j. Sign vectors whose region
has empty interior inside the working box are pruned by linear programming,
so no phantom pieces survive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .expr import CandidateValue, CandidateError, ExprAst, Poly, Position, to_poly

SNAP_TOL = 1e-9          # points closer than this to a kink count as on it
INTERIOR_MARGIN = 1e-7   # minimal LP margin for a region to count as full-dim


@dataclass(frozen=True)
class Piece:
    """One smooth polynomial piece and its sign region."""

    signs: tuple[int, ...]
    poly: Poly

    def region_rows(self, boundaries: np.ndarray) -> np.ndarray:
        """Rows r_j with region = {r_j . (1,t,x) >= 0}."""
        return boundaries * np.array(self.signs)[:, None]


@dataclass(frozen=True)
class PointClass:
    """Classification of a position against the kink set."""

    smooth: bool
    active: tuple[int, ...]              # indices of pieces whose closure holds the point
    time_derivative: float | None = None
    gradient: np.ndarray | None = None


@dataclass
class PiecewiseForm:
    candidate: CandidateValue
    boundaries: np.ndarray               # m x (n+2) affine coefficient rows (c0, ct, cx..)
    pieces: list[Piece]
    box: np.ndarray                      # n x 2 working box used for pruning
    snap_tol: float = SNAP_TOL
    _grad_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.boundaries.size:
            self._grad_norms = np.linalg.norm(self.boundaries[:, 1:], axis=1)
        else:
            self._grad_norms = np.zeros(0)

    @property
    def frame(self):
        return self.candidate.frame

    def boundary_values(self, p: Position) -> np.ndarray:
        if not self.boundaries.size:
            return np.zeros(0)
        v = np.concatenate([[1.0], p.tx])
        return self.boundaries @ v

    def boundary_distances(self, p: Position) -> np.ndarray:
        vals = self.boundary_values(p)
        return np.abs(vals) / np.where(self._grad_norms > 0, self._grad_norms, 1.0)

    def active_pieces(self, p: Position) -> list[int]:
        """Pieces whose region closure contains p (snap-tolerant)."""
        vals = self.boundary_values(p)
        out = []
        for i, piece in enumerate(self.pieces):
            signed = vals * np.array(piece.signs)
            if np.all(signed >= -self.snap_tol * np.maximum(self._grad_norms, 1.0)):
                out.append(i)
        return out

    def classify(self, p: Position) -> PointClass:
        active = self.active_pieces(p)
        if not active:
            raise CandidateError(f"position {p} not covered by any piece (outside box?)")
        d = self.boundary_distances(p)
        on_kink = bool(d.size) and bool(np.any(d <= self.snap_tol))
        if on_kink or len(active) > 1:
            return PointClass(smooth=False, active=tuple(active))
        dt, grad = self.pieces[active[0]].poly.gradient_at(p.t, np.asarray(p.x))
        return PointClass(smooth=True, active=tuple(active),
                          time_derivative=dt, gradient=grad)

    def piece_value(self, index: int, p: Position) -> float:
        return self.pieces[index].poly(p.t, np.asarray(p.x))

    def evaluate(self, p: Position) -> float:
        return self.candidate.evaluate(p)


def _canonical_affine(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
    """Flip an affine form so its first nonzero coefficient is positive.

    abs(g) == abs(-g), so canonicalizing merges mirror duplicates.
    """
    for c in coeffs:
        if c != 0.0:
            return (coeffs if c > 0 else -coeffs), (1.0 if c > 0 else -1.0)
    return coeffs, 1.0


def _region_feasible(rows: np.ndarray, frame, box: np.ndarray) -> bool:
    """True if {rows.(1,t,x) >= 0} has interior within [t0,theta0] x box.

    Maximizes the common margin m with rows.(1,t,x) >= m; the region is
    kept when the optimum exceeds INTERIOR_MARGIN.
    """
    m_rows, width = rows.shape
    n = width - 2
    # variables: (t, x_1..x_n, m); constraints -ct*t - cx.x + m <= c0
    A = np.hstack([-rows[:, 1:], np.ones((m_rows, 1))])
    b = rows[:, 0]
    bounds = [(frame.t0, frame.theta0)]
    bounds += [(box[i, 0], box[i, 1]) for i in range(n)]
    bounds += [(None, 1.0)]
    c = np.zeros(n + 2)
    c[-1] = -1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    return bool(res.success) and float(res.x[-1]) > INTERIOR_MARGIN


def decompose(candidate: CandidateValue, box=None,
              snap_tol: float = SNAP_TOL) -> PiecewiseForm:
    """Split a candidate into polynomial pieces over feasible sign regions.

    box: n x 2 spatial window (default [-1,1]^n) used only for feasibility
    pruning; pieces are valid wherever their sign region extends.
    """
    frame = candidate.frame
    n = frame.n
    if box is None:
        box = np.tile([-1.0, 1.0], (n, 1))
    box = np.asarray(box, dtype=float).reshape(n, 2)

    abs_nodes = candidate.ast.abs_nodes()
    # canonical affine form per distinct boundary; remember each node's flip
    forms: list[np.ndarray] = []
    node_map: list[tuple[ExprAst, int, float]] = []  # (node, form index, flip)
    for node in abs_nodes:
        coeffs = to_poly(node.children[0], n).affine_coeffs()
        canon, flip = _canonical_affine(coeffs)
        for j, known in enumerate(forms):
            if np.array_equal(known, canon):
                node_map.append((node, j, flip))
                break
        else:
            forms.append(canon)
            node_map.append((node, len(forms) - 1, flip))
    boundaries = np.array(forms) if forms else np.zeros((0, n + 2))
    m = len(forms)

    pieces: list[Piece] = []
    for signs in itertools.product((1, -1), repeat=m):
        if m:
            rows = boundaries * np.array(signs, dtype=float)[:, None]
            if not _region_feasible(rows, frame, box):
                continue
        subst = {id(node): signs[j] * flip for node, j, flip in node_map}
        poly = to_poly(candidate.ast, n, subst)
        pieces.append(Piece(tuple(signs), poly))
    if not pieces:
        raise CandidateError("no feasible sign region found (degenerate candidate)")
    return PiecewiseForm(candidate, boundaries, pieces, box, snap_tol=snap_tol)


def sublinear_growth_report(candidate: CandidateValue, box=None, factors=(1, 2, 4, 8)) -> dict:
    """Check the terminal slice for sublinear growth, |phi(theta0,x)| <= C(1+||x||).

    There is no finite test for the true condition; this samples the ratio
    on expanding boxes and flags growth. Spatial degree > 1 is a structural
    warning on its own.
    """
    frame = candidate.frame
    n = frame.n
    if box is None:
        box = np.tile([-1.0, 1.0], (n, 1))
    box = np.asarray(box, dtype=float).reshape(n, 2)
    rng = np.random.default_rng(0)
    ratios = []
    for f in factors:
        pts = rng.uniform(box[:, 0] * f, box[:, 1] * f, size=(256, n))
        vals = np.array([abs(candidate.terminal_payoff(x)) for x in pts])
        ratios.append(float(np.max(vals / (1.0 + np.linalg.norm(pts, axis=1)))))
    growing = ratios[-1] > 2.0 * ratios[0] + 1e-12
    # spatial degree over all sign substitutions (degree is sign independent)
    subst = {id(a): 1.0 for a in candidate.ast.abs_nodes()}
    deg_x = to_poly(candidate.ast, n, subst).degree_in_x()
    return {
        "ratios": ratios,
        "box_factors": list(factors),
        "max_ratio": max(ratios),
        "growing": bool(growing),
        "degree_in_x": deg_x,
        "warning": "spatial degree exceeds 1; sublinear growth is doubtful" if deg_x > 1 else None,
    }
