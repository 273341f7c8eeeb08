"""Game dynamics realizing a Hamiltonian, and brute-force identity checks.

Three constructions, each with control pairs u = (y, y') and v = (z, z')
and beta = Upsilon (1 + |x|):

* max-min over unit-ball products:
      f  = (H(t,x,z) + beta) z' + beta y + beta (1 + <y,z>) y'
  giving H = max_v min_u <s, f>.
* min-max over unit-ball products (mirrored through the min-formula
  H = |s| min_y [H(y) + beta |s/|s| - y|]; the naive role swap of the
  max-min dynamics is wrong for Hamiltonians that are not odd in s):
      f' = (H(t,x,y) - beta) y' + beta z + beta (1 - <y,z>) z'
  giving H = min_u max_v <s, f'>. This formula is derived, not quoted,
  so synthesis refuses to emit it until the identity check passes.
* n = 1 with finite controls {-1,1}^2 per player:
      g  = (H(t,x,z) + beta) z' + beta y + beta (<y,z> + 1) y'
  where max-min and min-max agree exactly (16 tuples, same table).

The verifier discretizes each ball as {0} + {1/2, 1} x directions and
computes the iterated optimum over the product grids. Reductions use only
per-grid extremes of linear slices (exact for any sign pattern) and are
cross-checked against literally materialized <s, f> slices.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import HamiltonianModel


class SynthesisError(RuntimeError):
    """A derived construction failed its mandatory identity gate."""


@dataclass
class GameDynamics:
    kind: str                      # "maxmin" | "minmax" | "isaacs-1d"
    n: int
    upsilon: float
    hamiltonian: HamiltonianModel
    control_sets: dict = field(default_factory=dict)
    growth_constant: float = 0.0   # Lambda_f with |f| <= Lambda_f (1 + |x|)
    gate_report: dict | None = None

    def beta(self, x) -> float:
        return self.upsilon * (1.0 + float(np.linalg.norm(np.atleast_1d(x))))

    def dynamics(self, t: float, x, u, v) -> np.ndarray:
        """Pointwise f(t, x, u, v); u = (y, y'), v = (z, z')."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y, yp = (np.atleast_1d(np.asarray(a, dtype=float)) for a in u)
        z, zp = (np.atleast_1d(np.asarray(a, dtype=float)) for a in v)
        b = self.beta(x)
        if self.kind in ("maxmin", "isaacs-1d"):
            hz = self.hamiltonian(t, x, z)
            return (hz + b) * zp + b * y + b * (1.0 + float(y @ z)) * yp
        if self.kind == "minmax":
            hy = self.hamiltonian(t, x, y)
            return (hy - b) * yp + b * z + b * (1.0 - float(y @ z)) * zp
        raise ValueError(f"unknown game kind {self.kind!r}")

    def dynamics_batch(self, t: float, X: np.ndarray, u, v) -> np.ndarray:
        """f(t, x_q, u, v) over a batch of states; shapes (Q,n) -> (Q,n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y, yp = (np.atleast_1d(np.asarray(a, dtype=float)) for a in u)
        z, zp = (np.atleast_1d(np.asarray(a, dtype=float)) for a in v)
        q = X.shape[0]
        b = self.upsilon * (1.0 + np.linalg.norm(X, axis=1))      # (Q,)
        T = np.full(q, t)
        if self.kind in ("maxmin", "isaacs-1d"):
            hz = self.hamiltonian.evaluate(T, X, np.tile(z, (q, 1)))
            return ((hz + b)[:, None] * zp[None, :]
                    + b[:, None] * y[None, :]
                    + (b * (1.0 + float(y @ z)))[:, None] * yp[None, :])
        if self.kind == "minmax":
            hy = self.hamiltonian.evaluate(T, X, np.tile(y, (q, 1)))
            return ((hy - b)[:, None] * yp[None, :]
                    + b[:, None] * z[None, :]
                    + (b * (1.0 - float(y @ z)))[:, None] * zp[None, :])
        raise ValueError(f"unknown game kind {self.kind!r}")

    def to_dict(self, hamiltonian_hash: str = "") -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "upsilon": self.upsilon,
            "control_sets": self.control_sets,
            "growth_constant": self.growth_constant,
            "hamiltonian_hash": hamiltonian_hash,
            "gate_report": self.gate_report,
        }


# ---------------------------------------------------------------------------
# control-set discretization

def sphere_directions(n: int, delta: float) -> np.ndarray:
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        count = max(8, int(math.ceil(2.0 * math.pi / delta)))
        ang = 2.0 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        count = max(32, int(math.ceil((3.2 / delta) ** 2)))
        k = np.arange(count) + 0.5
        phi = np.arccos(1.0 - 2.0 * k / count)
        theta = math.pi * (1.0 + math.sqrt(5.0)) * k
        return np.column_stack([np.sin(phi) * np.cos(theta),
                                np.sin(phi) * np.sin(theta),
                                np.cos(phi)])
    raise ValueError("ball discretization supports n <= 3")


def ball_grid(n: int, delta: float) -> np.ndarray:
    """{0} plus radial shells {1/2, 1} of a near-delta direction set."""
    dirs = sphere_directions(n, delta)
    return np.vstack([np.zeros((1, n)), 0.5 * dirs, 1.0 * dirs])


def direction_covering_radius(dirs: np.ndarray, seed: int = 5, probes: int = 4000) -> float:
    """Seeded estimate of the direction set's covering radius on the sphere."""
    n = dirs.shape[1]
    if n == 1:
        return 0.0
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((probes, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    worst = 0.0
    for i0 in range(0, probes, 512):
        chunk = u[i0:i0 + 512]
        d = np.linalg.norm(chunk[:, None, :] - dirs[None, :, :], axis=2)
        worst = max(worst, float(np.max(np.min(d, axis=1))))
    return worst


# ---------------------------------------------------------------------------
# synthesis

def synth_maxmin(model: HamiltonianModel) -> GameDynamics:
    """Max-min ball-product game for a verified Hamiltonian."""
    return GameDynamics(
        kind="maxmin", n=model.n, upsilon=model.upsilon, hamiltonian=model,
        control_sets={"P": {"type": "ball-product", "dim": model.n, "radius": 1.0},
                      "Q": {"type": "ball-product", "dim": model.n, "radius": 1.0}},
        growth_constant=5.0 * model.upsilon)


def synth_minmax(model: HamiltonianModel, gate_samples: int = 60,
                 gate_delta: float = 0.1, seed: int = 17,
                 box_half: float = 1.0, frame=None) -> GameDynamics:
    """Min-max ball-product game; the derived formula must pass its gate."""
    game = GameDynamics(
        kind="minmax", n=model.n, upsilon=model.upsilon, hamiltonian=model,
        control_sets={"P": {"type": "ball-product", "dim": model.n, "radius": 1.0},
                      "Q": {"type": "ball-product", "dim": model.n, "radius": 1.0}},
        growth_constant=5.0 * model.upsilon)
    samples = _random_samples(model.n, gate_samples, seed, box_half, frame)
    rep = verify_hamiltonian_identity(game, model, samples, gate_delta,
                                      opposite_order_count=8)
    if not rep["within_tolerance"]:
        raise SynthesisError(
            "derived min-max dynamics failed the identity gate: "
            f"max error {rep['max_abs_error']:.3e} over tolerance "
            f"{rep['tolerance_bound']:.3e}")
    game.gate_report = {k: rep[k] for k in
                        ("max_abs_error", "tolerance_bound", "delta", "samples")}
    return game


def synth_isaacs_1d(model: HamiltonianModel, gate_samples: int = 200,
                    seed: int = 19, box_half: float = 1.0, frame=None) -> GameDynamics:
    """Finite-control dynamics for n = 1 where both orders agree exactly."""
    if model.n != 1:
        raise SynthesisError(f"finite-control synthesis needs n = 1, got {model.n}")
    game = GameDynamics(
        kind="isaacs-1d", n=1, upsilon=model.upsilon, hamiltonian=model,
        control_sets={"P": {"type": "pm-one-pairs"}, "Q": {"type": "pm-one-pairs"}},
        growth_constant=5.0 * model.upsilon)
    samples = _random_samples(1, gate_samples, seed, box_half, frame)
    rep = verify_hamiltonian_identity(game, model, samples, delta=0.0)
    if rep["max_abs_error"] > 1e-9:
        raise SynthesisError(
            f"finite-control identity failed: max error {rep['max_abs_error']:.3e}")
    game.gate_report = {k: rep[k] for k in ("max_abs_error", "samples")}
    return game


def _random_samples(n: int, count: int, seed: int, box_half: float, frame):
    rng = np.random.default_rng(seed)
    t0, theta0 = (frame.t0, frame.theta0) if frame is not None else (0.0, 1.0)
    T = rng.uniform(t0, theta0, count)
    X = rng.uniform(-box_half, box_half, (count, n))
    S = rng.uniform(-2.0, 2.0, (count, n))
    return list(zip(T, X, S))


# ---------------------------------------------------------------------------
# grid optima

def _grid_optimum_maxmin_form(hz: np.ndarray, b: float, ps: np.ndarray,
                              qs: np.ndarray, yz: np.ndarray, rs: np.ndarray,
                              order: str):
    """Iterated optimum of A[iz]*P[izp] + Q[iy] + C[iy,iz]*R[iyp] on grids.

    A = hz + b (per z), P = <z',s>, Q = b <y,s>, C = b (1 + <y,z>),
    R = <y',s>. Every inner reduction takes per-grid extremes of a linear
    slice, exact regardless of coefficient signs.
    """
    A = hz + b
    C = b * (1.0 + yz)                     # (ny, nz)
    p_lo, p_hi = float(np.min(ps)), float(np.max(ps))
    r_lo, r_hi = float(np.min(rs)), float(np.max(rs))
    if order == "maxmin":
        # min over (y,y') for each z, then max over (z,z')
        inner = qs[:, None] + np.minimum(C * r_lo, C * r_hi)   # (ny, nz)
        m_u = np.min(inner, axis=0)                            # per z
        outer = m_u + np.maximum(A * p_lo, A * p_hi)
        return float(np.max(outer))
    # opposite order: min over (y,y') of max over (z,z')
    # for fixed (y, y'): max_z [ max_{z'} A[iz] P[izp] + C[iy,iz] R[iyp] ]
    zpart = np.maximum(A * p_lo, A * p_hi)                     # per z
    best = np.inf
    for iy in range(qs.shape[0]):
        col = zpart[None, :] + np.outer(rs, C[iy])             # (nyp, nz)
        mv = np.max(col, axis=1)                               # per y'
        best = min(best, float(qs[iy] + np.min(mv)))
    return best


def _grid_optimum_minmax_form(hy: np.ndarray, b: float, rs: np.ndarray,
                              qs: np.ndarray, yz: np.ndarray, ps: np.ndarray,
                              order: str):
    """Iterated optimum of A[iy]*R[iyp] + Q[iz] + C[iy,iz]*P[izp] on grids.

    A = hy - b (per y), R = <y',s>, Q = b <z,s>, C = b (1 - <y,z>),
    P = <z',s>.
    """
    A = hy - b
    C = b * (1.0 - yz)                     # (ny, nz)
    p_lo, p_hi = float(np.min(ps)), float(np.max(ps))
    r_lo, r_hi = float(np.min(rs)), float(np.max(rs))
    if order == "minmax":
        # max over (z,z') for each y, then min over (y,y')
        inner = qs[None, :] + np.maximum(C * p_lo, C * p_hi)   # (ny, nz)
        m_v = np.max(inner, axis=1)                            # per y
        outer = m_v + np.minimum(A * r_lo, A * r_hi)
        return float(np.min(outer))
    # opposite order: max over (z,z') of min over (y,y')
    ypart = np.minimum(A * r_lo, A * r_hi)                     # per y
    best = -np.inf
    for iz in range(qs.shape[0]):
        col = ypart[None, :] + np.outer(ps, C[:, iz])          # (nzp, ny)
        mu = np.min(col, axis=1)                               # per z'
        best = max(best, float(qs[iz] + np.max(mu)))
    return best


def grid_optimum(game: GameDynamics, model: HamiltonianModel, t: float, x,
                 s, delta: float, order: str | None = None) -> float:
    """Iterated optimum of <s, f> over the discretized control sets."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    order = order or _declared_order(game)
    b = game.beta(x)
    if game.kind == "isaacs-1d":
        table = _isaacs_table(game, model, t, x, s)
        if order == "maxmin":
            return float(np.max(np.min(table, axis=0)))
        return float(np.min(np.max(table, axis=1)))
    grid = ball_grid(game.n, delta)
    T = np.full(grid.shape[0], t)
    X = np.tile(x, (grid.shape[0], 1))
    proj = grid @ s
    yz = grid @ grid.T
    if game.kind == "maxmin":
        hz = model.evaluate(T, X, grid)
        return _grid_optimum_maxmin_form(hz, b, proj, b * proj, yz, proj, order)
    if game.kind == "minmax":
        hy = model.evaluate(T, X, grid)
        return _grid_optimum_minmax_form(hy, b, proj, b * proj, yz, proj, order)
    raise ValueError(f"unknown game kind {game.kind!r}")


def _declared_order(game: GameDynamics) -> str:
    return {"maxmin": "maxmin", "minmax": "minmax", "isaacs-1d": "maxmin"}[game.kind]


def _isaacs_table(game, model, t, x, s) -> np.ndarray:
    """<s, g> over the 16 control tuples: rows u-pairs, columns v-pairs."""
    pm = [-1.0, 1.0]
    us = [(y, yp) for y in pm for yp in pm]
    vs = [(z, zp) for z in pm for zp in pm]
    table = np.empty((4, 4))
    for i, (y, yp) in enumerate(us):
        for j, (z, zp) in enumerate(vs):
            f = game.dynamics(t, x, (np.array([y]), np.array([yp])),
                              (np.array([z]), np.array([zp])))
            table[i, j] = float(s @ f)
    return table


# ---------------------------------------------------------------------------
# verification

def _crosscheck_tuples(game, model, t, x, s, grid, rng, count=64) -> float:
    """Pointwise <s, f(u,v)> against the factored grid value at random tuples.

    The reductions trust component arrays (A, Q, C, and the projections);
    this confirms they reproduce the literal dynamics, so a drift between
    formula and arrays cannot silently bias the optimum.
    """
    x = np.atleast_1d(x)
    s = np.atleast_1d(s)
    b = game.beta(x)
    P = grid.shape[0]
    proj = grid @ s
    yz = grid @ grid.T
    idx = rng.integers(0, P, size=(count, 4))
    worst = 0.0
    for iy, iyp, iz, izp in idx:
        u = (grid[iy], grid[iyp])
        v = (grid[iz], grid[izp])
        direct = float(s @ game.dynamics(t, x, u, v))
        if game.kind in ("maxmin", "isaacs-1d"):
            hz = model(t, x, grid[iz])
            fact = ((hz + b) * proj[izp] + b * proj[iy]
                    + b * (1.0 + yz[iy, iz]) * proj[iyp])
        else:
            hy = model(t, x, grid[iy])
            fact = ((hy - b) * proj[iyp] + b * proj[iz]
                    + b * (1.0 - yz[iy, iz]) * proj[izp])
        worst = max(worst, abs(direct - fact))
    return worst


def verify_hamiltonian_identity(game: GameDynamics, model: HamiltonianModel,
                                samples: list, delta: float,
                                opposite_order_count: int = 12,
                                seed: int = 23) -> dict:
    """Compare the discretized iterated optimum with H over sample triples.

    Reports the worst error, the theoretical mesh bound
    C(delta) = Upsilon (1+|x|) (2+|s|) delta_cover, weak duality between the
    two orders on a sample subset, and the crosscheck residual between the
    factored grids and the literal dynamics.
    """
    rng = np.random.default_rng(seed)
    declared = _declared_order(game)
    opposite = "minmax" if declared == "maxmin" else "maxmin"
    if game.kind == "isaacs-1d":
        covering = 0.0
    else:
        covering = direction_covering_radius(sphere_directions(game.n, delta))
    errors = []
    bounds = []
    gaps = []
    duality_ok = True
    crosscheck = 0.0
    grid = ball_grid(game.n, delta) if game.kind != "isaacs-1d" else None
    for idx, (t, x, s) in enumerate(samples):
        v_decl = grid_optimum(game, model, t, x, s, delta, declared)
        h_ref = model(t, x, s)
        errors.append(abs(v_decl - h_ref))
        xn = float(np.linalg.norm(np.atleast_1d(x)))
        sn = float(np.linalg.norm(np.atleast_1d(s)))
        tol_i = game.upsilon * (1.0 + xn) * (2.0 + sn) * max(covering, 1e-12)
        bounds.append(tol_i)
        if game.kind == "isaacs-1d" or idx < opposite_order_count:
            v_opp = grid_optimum(game, model, t, x, s, delta, opposite)
            v_maxmin = v_decl if declared == "maxmin" else v_opp
            v_minmax = v_opp if declared == "maxmin" else v_decl
            gaps.append(v_minmax - v_maxmin)
            if v_maxmin > v_minmax + 1e-9 * (1.0 + abs(v_maxmin)):
                duality_ok = False
        if grid is not None and idx < 4:
            crosscheck = max(crosscheck,
                             _crosscheck_tuples(game, model, t, x, s, grid, rng))
    max_err = float(np.max(errors)) if errors else 0.0
    if game.kind == "isaacs-1d":
        within = max_err <= 1e-9
        tol_bound = 1e-12
    else:
        tol_bound = float(np.max(bounds))
        within = all(e <= b for e, b in zip(errors, bounds))
    return {
        "samples": len(samples),
        "delta": delta,
        "covering_radius": covering,
        "max_abs_error": max_err,
        "mean_abs_error": float(np.mean(errors)) if errors else 0.0,
        "tolerance_bound": tol_bound,
        "within_tolerance": bool(within),
        "weak_duality_ok": bool(duality_ok),
        "max_order_gap": float(np.max(gaps)) if gaps else 0.0,
        "min_order_gap": float(np.min(gaps)) if gaps else 0.0,
        "crosscheck_residual": float(crosscheck),
        "order": declared,
        "errors": [float(e) for e in errors],
    }


def sampled_growth_check(game: GameDynamics, count: int = 200, seed: int = 29,
                         box_half: float = 1.0, frame=None) -> dict:
    """Spot-check |f| <= Lambda_f (1 + |x|) over random controls and states."""
    rng = np.random.default_rng(seed)
    t0, theta0 = (frame.t0, frame.theta0) if frame is not None else (0.0, 1.0)
    worst = 0.0
    for _ in range(count):
        t = float(rng.uniform(t0, theta0))
        x = rng.uniform(-box_half, box_half, game.n)
        if game.kind == "isaacs-1d":
            draw = lambda: np.array([rng.choice([-1.0, 1.0])])
        else:
            def draw():
                w = rng.standard_normal(game.n)
                w /= max(np.linalg.norm(w), 1e-12)
                return w * rng.uniform(0.0, 1.0)
        u = (draw(), draw())
        v = (draw(), draw())
        f = game.dynamics(t, x, u, v)
        ratio = float(np.linalg.norm(f)) / (1.0 + float(np.linalg.norm(x)))
        worst = max(worst, ratio)
    return {"max_ratio": worst, "growth_constant": game.growth_constant,
            "ok": worst <= game.growth_constant + 1e-9}


def game_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]
