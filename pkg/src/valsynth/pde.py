"""Numerical certificates: monotone grid solve, game dynamic programming,
and generalized-solution inequality spot checks.

The primary certificate marches the terminal-value problem

    d(phi)/dt + H(t, x, grad phi) = 0,   phi(theta0, x) = sigma(x)

backward with an explicit monotone scheme (central Hamiltonian term plus
per-axis dissipation at the slope bound of H). The secondary certificate
runs dynamic programming on the synthesized game over the same grid and
compares both against the candidate. Comparison regions shed a margin that
grows with the characteristic speed, so artificial box boundaries never
contaminate the reported errors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .expr import CandidateValue, Position
from .games import GameDynamics, ball_grid
from .hamiltonian import HamiltonianModel
from .nonsmooth import CJClass, classify_cj
from .piecewise import PiecewiseForm


class SolveError(RuntimeError):
    """Scheme blow-up or configuration error."""


@dataclass
class GridSpec:
    box_half: float = 1.0
    points_per_axis: int = 81
    dt: float | None = None        # None: from the CFL bound with safety 0.9
    cfl_safety: float = 0.9
    snapshot_count: int = 5
    # "local": per-node secant slopes (sharp, more H queries);
    # "global": metadata bound everywhere; "auto": local only when H is
    # cheap to query (closed form), global for sampled models
    dissipation: str = "auto"
    dissipation_probes: int = 5

    def axes(self, n: int) -> list[np.ndarray]:
        return [np.linspace(-self.box_half, self.box_half, self.points_per_axis)
                for _ in range(n)]


@dataclass
class ErrorStats:
    max_error: float
    mean_error: float
    compared: int
    per_level: list = field(default_factory=list)
    margin_speed: float = 0.0
    tolerance: float | None = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_error <= self.tolerance

    def to_dict(self) -> dict:
        return {"max_error": self.max_error, "mean_error": self.mean_error,
                "compared": self.compared, "margin_speed": self.margin_speed,
                "tolerance": self.tolerance, "passed": self.passed,
                "per_level": self.per_level}


@dataclass
class ValueField:
    scheme: str                      # "lax-friedrichs" | "dynamic-programming"
    axes: list[np.ndarray]
    times: np.ndarray                # snapshot times, descending from theta0
    values: list[np.ndarray]         # snapshot fields, same order as times
    dt: float
    dissipation: float
    stats: ErrorStats | None = None
    meta: dict = field(default_factory=dict)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[0]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def _mesh(axes: list[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _sigma_on_grid(candidate: CandidateValue, axes) -> np.ndarray:
    pts = _mesh(axes)
    T = np.full(pts.shape[0], candidate.frame.theta0)
    vals = candidate.ast.evaluate_batch(T, pts)
    return vals.reshape([len(a) for a in axes])


def _interior_mask(axes, margin: float) -> np.ndarray:
    masks = [(np.abs(a) <= a[-1] - margin) for a in axes]
    out = masks[0]
    for m in masks[1:]:
        out = np.multiply.outer(out, m)
    return out


def _analytic_on_grid(candidate: CandidateValue, axes, t: float) -> np.ndarray:
    pts = _mesh(axes)
    vals = candidate.ast.evaluate_batch(np.full(pts.shape[0], t), pts)
    return vals.reshape([len(a) for a in axes])


class _LevelErrors:
    """Accumulates interior errors level by level without storing fields."""

    def __init__(self, candidate, axes, theta0, speed, keep_levels=12,
                 reference=None):
        self.candidate = candidate
        self.axes = axes
        self.theta0 = theta0
        self.speed = speed
        self.reference = reference
        self.max_error = 0.0
        self.sum_error = 0.0
        self.count = 0
        self.per_level = []
        self.keep = keep_levels

    def add(self, t, V):
        margin = (self.theta0 - t) * self.speed
        mask = _interior_mask(self.axes, margin)
        if not np.any(mask):
            return
        if self.reference is not None:
            pts = _mesh(self.axes)
            ana = self.reference(t, pts).reshape(V.shape)
        else:
            ana = _analytic_on_grid(self.candidate, self.axes, t)
        err = np.abs(V - ana)[mask]
        lvl_max = float(np.max(err))
        self.max_error = max(self.max_error, lvl_max)
        self.sum_error += float(np.sum(err))
        self.count += int(err.size)
        if len(self.per_level) < self.keep or lvl_max >= self.max_error:
            self.per_level.append({"t": float(t), "max_error": lvl_max,
                                   "points": int(err.size)})

    def stats(self, tolerance=None) -> ErrorStats:
        mean = self.sum_error / self.count if self.count else 0.0
        return ErrorStats(self.max_error, mean, self.count,
                          per_level=self.per_level[-self.keep:],
                          margin_speed=self.speed, tolerance=tolerance)


def _local_slope(model, T, pts, S, axis, lo, hi, probes) -> np.ndarray:
    """Per-node secant slope of H along one gradient axis over [lo, hi].

    The max secant over probe subintervals bounds the local characteristic
    speed; where H is flat across the interval (contact-type kinks) it is
    zero and the scheme adds no smearing there. Degenerate intervals give
    zero as well: no slope, no advection in that axis.
    """
    width = hi - lo
    vals = []
    for j in range(probes):
        Sj = S.copy()
        Sj[:, axis] = lo + width * (j / (probes - 1))
        vals.append(model.evaluate(T, pts, Sj))
    slope = np.zeros(lo.shape[0])
    step = width / (probes - 1)
    safe = np.where(step > 0, step, 1.0)
    for j in range(probes - 1):
        sec = np.abs(vals[j + 1] - vals[j]) / safe
        slope = np.maximum(slope, np.where(step > 0, sec, 0.0))
    return slope


def solve_monotone_grid(model: HamiltonianModel, candidate: CandidateValue,
                        grid: GridSpec, error_tolerance: float | None = None,
                        compare: bool = True, reference=None) -> ValueField:
    """Backward monotone solve of the terminal-value problem on a box.

    The CFL step uses the model's global slope bound at the box's largest
    |x|. The dissipation coefficient is per node and axis by default: the
    largest secant slope of H across the local one-sided gradient interval,
    clamped by the global bound ("local" mode, the classical local
    Lax-Friedrichs choice); "global" mode applies the metadata bound
    everywhere and over-smears contact kinks. Every level updates interior
    error statistics against the candidate, margin (theta0 - t) * alpha.
    """
    frame = candidate.frame
    n = frame.n
    axes = grid.axes(n)
    dx = [float(a[1] - a[0]) for a in axes]
    x_max = grid.box_half * np.sqrt(n)
    diss_mode = grid.dissipation
    if diss_mode == "auto":
        diss_mode = "local" if model.kind == "closed-form" else "global"
    alpha = model.dissipation_bound(x_max)
    if alpha <= 0:
        alpha = 1e-12
    dt_cfl = grid.cfl_safety / (alpha * sum(1.0 / d for d in dx))
    dt = grid.dt if grid.dt is not None else dt_cfl
    if dt > dt_cfl * (1.0 + 1e-12):
        raise SolveError(f"dt {dt} violates the CFL bound {dt_cfl}")
    span = frame.theta0 - frame.t0
    steps = int(np.ceil(span / dt - 1e-12))
    dt = span / steps

    V = _sigma_on_grid(candidate, axes)
    pts = _mesh(axes)
    snap_times = np.linspace(frame.theta0, frame.t0, grid.snapshot_count)
    snaps = [V.copy()]
    snap_recorded = [frame.theta0]
    acc = _LevelErrors(candidate, axes, frame.theta0, alpha,
                       reference=reference) if compare else None
    if acc:
        acc.add(frame.theta0, V)

    max_principle_excess = 0.0
    lo0, hi0 = float(np.min(V)), float(np.max(V))
    growth_budget = 0.0
    query_cache = model.prepare_queries(pts) if hasattr(model, "prepare_queries") else None
    t = frame.theta0
    for k in range(steps):
        grads = []
        onesided = []
        for ax in range(n):
            vp = np.roll(V, -1, axis=ax)
            vm = np.roll(V, 1, axis=ax)
            # one-sided copies at the box faces
            sl_lo = [slice(None)] * n; sl_lo[ax] = 0
            sl_hi = [slice(None)] * n; sl_hi[ax] = -1
            vm[tuple(sl_lo)] = (2 * V[tuple(sl_lo)] - vp[tuple(sl_lo)])
            vp[tuple(sl_hi)] = (2 * V[tuple(sl_hi)] - vm[tuple(sl_hi)])
            grads.append((vp - vm) / (2 * dx[ax]))
            onesided.append((vp, vm))
        S = np.stack([g.ravel() for g in grads], axis=1)
        T = np.full(S.shape[0], t)
        diss = np.zeros_like(V)
        for ax in range(n):
            vp, vm = onesided[ax]
            dp = (vp - V) / dx[ax]
            dm = (V - vm) / dx[ax]
            if diss_mode == "global":
                a_loc = alpha
            else:
                a_loc = _local_slope(model, T, pts, S, ax,
                                     np.minimum(dp, dm).ravel(),
                                     np.maximum(dp, dm).ravel(),
                                     grid.dissipation_probes)
                a_loc = np.minimum(a_loc, alpha).reshape(V.shape)
            diss += a_loc * (vp - 2 * V + vm) / (2 * dx[ax])
        if query_cache is not None:
            Hval = model.evaluate_cached(query_cache, t, pts, S).reshape(V.shape)
        else:
            Hval = model.evaluate(T, pts, S).reshape(V.shape)
        V = V + dt * (Hval + diss)
        if not np.all(np.isfinite(V)):
            raise SolveError(f"non-finite values at level {k + 1} (t={t - dt:.6f})")
        growth_budget += dt * float(np.max(np.abs(Hval)))
        excess = max(float(np.max(V)) - (hi0 + growth_budget),
                     (lo0 - growth_budget) - float(np.min(V)))
        max_principle_excess = max(max_principle_excess, excess)
        t -= dt
        if acc:
            acc.add(t, V)
        if len(snaps) < grid.snapshot_count and \
                t <= snap_times[len(snaps)] + 1e-12:
            snaps.append(V.copy())
            snap_recorded.append(t)

    if len(snaps) < grid.snapshot_count:
        snaps.append(V.copy())
        snap_recorded.append(t)
    field = ValueField("lax-friedrichs", axes, np.array(snap_recorded), snaps,
                       dt, alpha,
                       stats=acc.stats(error_tolerance) if acc else None)
    field.meta = {"steps": steps, "cfl_dt": dt_cfl, "alpha": alpha,
                  "dissipation_mode": diss_mode,
                  "max_principle_excess": max_principle_excess,
                  "points_per_axis": grid.points_per_axis}
    return field


# ---------------------------------------------------------------------------
# dynamic programming on the game

def interp_multilinear(values: np.ndarray, axes, pts: np.ndarray) -> np.ndarray:
    """Clamped multilinear interpolation on a tensor grid (n <= 3)."""
    n = len(axes)
    pts = np.atleast_2d(pts)
    idx = []
    w = []
    for ax in range(n):
        a = axes[ax]
        x = np.clip(pts[:, ax], a[0], a[-1])
        i = np.clip(np.searchsorted(a, x) - 1, 0, len(a) - 2)
        idx.append(i)
        w.append((x - a[i]) / (a[i + 1] - a[i]))
    out = np.zeros(pts.shape[0])
    for corner in itertools.product((0, 1), repeat=n):
        weight = np.ones(pts.shape[0])
        ind = []
        for ax, c in enumerate(corner):
            weight = weight * (w[ax] if c else 1.0 - w[ax])
            ind.append(idx[ax] + c)
        out += weight * values[tuple(ind)]
    return out


def _control_tuples(game: GameDynamics, mesh: float) -> tuple[list, list]:
    if game.kind == "isaacs-1d":
        pm = [-1.0, 1.0]
        pairs = [(np.array([a]), np.array([b])) for a in pm for b in pm]
        return pairs, pairs
    g = ball_grid(game.n, mesh)
    pairs = [(g[i], g[j]) for i in range(g.shape[0]) for j in range(g.shape[0])]
    return pairs, pairs


def solve_dp(game: GameDynamics, candidate: CandidateValue, grid: GridSpec,
             control_mesh: float = 0.5, order: str | None = None,
             error_tolerance: float | None = None, compare: bool = True,
             reference=None) -> ValueField:
    """Grid dynamic programming for the game value, backward from sigma.

    V(t, x) = opt_v opt_u V(t + dt, x + dt f(t, x, u, v)) with clamped
    multilinear interpolation; the optimization order follows the game kind
    unless overridden. Ball-product control sets get discretized at
    control_mesh; the finite-control game enumerates its 16 tuples exactly.
    """
    frame = candidate.frame
    n = frame.n
    if n != game.n:
        raise SolveError("game and candidate dimensions differ")
    axes = grid.axes(n)
    dt = grid.dt if grid.dt is not None else 0.01
    span = frame.theta0 - frame.t0
    steps = int(np.ceil(span / dt - 1e-12))
    dt = span / steps
    order = order or {"maxmin": "maxmin", "minmax": "minmax",
                      "isaacs-1d": "maxmin"}[game.kind]

    u_set, v_set = _control_tuples(game, control_mesh)
    if len(u_set) * len(v_set) * grid.points_per_axis ** n > 2e8:
        raise SolveError("control discretization too fine for this grid; "
                         "coarsen control_mesh or the spatial grid")
    pts = _mesh(axes)
    V = _sigma_on_grid(candidate, axes)
    speed = game.hamiltonian.dissipation_bound(grid.box_half * np.sqrt(n))
    acc = _LevelErrors(candidate, axes, frame.theta0, speed,
                       reference=reference) if compare else None
    if acc:
        acc.add(frame.theta0, V)
    snaps = [V.copy()]
    snap_times = np.linspace(frame.theta0, frame.t0, grid.snapshot_count)
    snap_recorded = [frame.theta0]

    t = frame.theta0
    for k in range(steps):
        t = t - dt
        # outer loop over the player committing first: v for max-min
        # (max over v of min over u), u for min-max (min over u of max over v)
        outer_set, inner_set = (v_set, u_set) if order == "maxmin" else (u_set, v_set)
        outer_vals = np.full((len(outer_set), pts.shape[0]), np.nan)
        for j, w in enumerate(outer_set):
            best = None
            for c in inner_set:
                u, v = (c, w) if order == "maxmin" else (w, c)
                nxt = pts + dt * game.dynamics_batch(t, pts, u, v)
                cand = interp_multilinear(V, axes, nxt)
                if best is None:
                    best = cand
                elif order == "maxmin":
                    best = np.minimum(best, cand)
                else:
                    best = np.maximum(best, cand)
            outer_vals[j] = best
        V = (np.max(outer_vals, axis=0) if order == "maxmin"
             else np.min(outer_vals, axis=0)).reshape(V.shape)
        if not np.all(np.isfinite(V)):
            raise SolveError(f"non-finite values at level {k + 1}")
        if acc:
            acc.add(t, V)
        if len(snaps) < grid.snapshot_count and t <= snap_times[len(snaps)] + 1e-12:
            snaps.append(V.copy())
            snap_recorded.append(t)
    if len(snaps) < grid.snapshot_count:
        snaps.append(V.copy())
        snap_recorded.append(t)
    field = ValueField("dynamic-programming", axes, np.array(snap_recorded),
                       snaps, dt, 0.0,
                       stats=acc.stats(error_tolerance) if acc else None)
    field.meta = {"steps": steps, "order": order, "control_mesh": control_mesh,
                  "controls_per_player": len(u_set),
                  "margin_speed": speed,
                  "points_per_axis": grid.points_per_axis}
    return field


# ---------------------------------------------------------------------------
# generalized-solution inequality spot checks

def minimax_spot_check(pw: PiecewiseForm, model: HamiltonianModel,
                       positions: list[Position], interior_samples: int = 20,
                       seed: int = 31) -> dict:
    """Residuals of the upper/lower solution inequalities at sample positions.

    Smooth points report |d(phi)/dt + H(t, x, grad phi)|. Kink points check
    a + H(t, x, s) <= 0 over the subdifferential (>= 0 over the
    superdifferential) at its vertices plus interior points. Report-only.
    """
    rng = np.random.default_rng(seed)
    smooth_resid = 0.0
    sub_slack = -np.inf
    super_slack = np.inf
    checked_smooth = 0
    checked_kink = 0
    details = []
    for p in positions:
        cls = pw.classify(p)
        if cls.smooth:
            resid = abs(cls.time_derivative
                        + model(p.t, np.asarray(p.x), cls.gradient))
            smooth_resid = max(smooth_resid, resid)
            checked_smooth += 1
            continue
        an = classify_cj(pw, p)
        checked_kink += 1
        for dini, kind in ((an.dini_sub, "sub"), (an.dini_super, "super")):
            if dini.is_empty:
                continue
            verts = dini.vertices
            test_pts = [verts[i] for i in range(verts.shape[0])]
            if verts.shape[0] > 1:
                wts = rng.dirichlet(np.ones(verts.shape[0]), interior_samples)
                test_pts.extend(wts @ verts)
            for y in test_pts:
                a, s = float(y[0]), y[1:]
                val = a + model(p.t, np.asarray(p.x), s)
                if kind == "sub":
                    sub_slack = max(sub_slack, val)    # must stay <= 0
                else:
                    super_slack = min(super_slack, val)  # must stay >= 0
        if an.cj_class in (CJClass.CJ_MINUS, CJClass.CJ_PLUS) and len(details) < 8:
            details.append({"position": {"t": p.t, "x": list(p.x)},
                            "cj_class": an.cj_class.value})
    return {
        "smooth_checked": checked_smooth,
        "kink_checked": checked_kink,
        "max_smooth_residual": smooth_resid,
        "max_upper_violation": max(sub_slack, 0.0) if checked_kink else 0.0,
        "max_lower_violation": max(-super_slack, 0.0)
                               if (checked_kink and super_slack < np.inf) else 0.0,
        "sub_slack": sub_slack if sub_slack > -np.inf else None,
        "super_slack": super_slack if super_slack < np.inf else None,
        "examples": details,
    }
