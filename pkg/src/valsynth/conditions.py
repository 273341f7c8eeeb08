"""Membership conditions for the value-function test, plus the canonical extension.

Four conditions decide whether the forced data h (minus the time
derivative along limiting gradients) extends to a Hamiltonian:

* E1 - gradient consistency: equal limiting gradients force equal h;
* E2 - convex-combination inequalities against the sub/superdifferential;
* E3 - positive homogeneity of h over codirectional gradients;
* E4 - sublinear growth and joint regularity of the normalized h.

The sufficiency route uses the canonical extension: on the complement
polytope the value at s must agree across every hull representation of s
by limiting gradients. Certifying max == min at the polytope vertices and
at one relative-interior point forces the extension to be affine there
(a nonnegative concave gap vanishing at an interior point vanishes
identically), which is what makes the checks finite.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import RunConfig
from .expr import CandidateValue, Position
from .geometry import polytope_interior_samples
from .nonsmooth import CJClass, PositionAnalysis, classify_cj, limiting_gradients
from .piecewise import PiecewiseForm, decompose, sublinear_growth_report
from .sampling import interior_times, smooth_lattice_positions, strata_positions

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
IN_VALF, NOT_IN_VALF = "IN_VALF", "NOT_IN_VALF"


@dataclass
class HSample:
    """One sampled value of the partial Hamiltonian."""

    position: Position
    s: np.ndarray
    h: float
    origin: str            # "e1" (forced by gradients) | "e2" (canonical extension)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.s))

    def normalized(self) -> tuple[np.ndarray, float] | None:
        n = self.norm
        if n <= 1e-9:
            return None
        return self.s / n, self.h / n


@dataclass
class ExtensionModel:
    """Canonical extension of h on one position's complement polytope.

    Well defined iff every hull representation of each tested point gives
    the same value; then the extension is affine: value(s) = w0 + w . s.
    """

    position: Position
    well_defined: bool
    w0: float = 0.0
    w: np.ndarray | None = None
    witness: dict | None = None
    tested: list = field(default_factory=list)   # (s, value) pairs certified by LP

    def value(self, s: np.ndarray) -> float:
        if not self.well_defined:
            raise ValueError("extension is not well defined at this position")
        return float(self.w0 + self.w @ np.asarray(s, dtype=float))


@dataclass
class ConditionReport:
    cid: str
    status: str
    witnesses: list = field(default_factory=list)
    estimates: dict | None = None
    notes: list = field(default_factory=list)
    refinement: list | None = None   # growth/modulus table across windows

    def to_dict(self) -> dict:
        out = {
            "id": self.cid,
            "status": self.status,
            "witnesses": self.witnesses,
            "estimates": self.estimates,
            "notes": self.notes,
        }
        if self.refinement is not None:
            out["refinement"] = self.refinement
        return out


@dataclass
class VerdictReport:
    candidate_id: str
    conditions: list[ConditionReport]
    overall: str
    sampling: dict
    strata: list = field(default_factory=list)
    growth: dict | None = None
    meta: dict = field(default_factory=dict)

    def condition(self, cid: str) -> ConditionReport:
        for c in self.conditions:
            if c.cid == cid:
                return c
        raise KeyError(cid)

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate_id,
            "conditions": [c.to_dict() for c in self.conditions],
            "overall": self.overall,
            "sampling": self.sampling,
            "strata": self.strata,
            "growth": self.growth,
            "meta": self.meta,
        }


def _pos_key(p: Position) -> tuple:
    return (round(p.t, 12), *np.round(np.asarray(p.x), 12))


def _pos_dict(p: Position) -> dict:
    return {"t": p.t, "x": list(p.x)}


# ---------------------------------------------------------------------------
# E1: gradient consistency

def check_e1(pw: PiecewiseForm, positions: list[Position],
             cfg: RunConfig) -> ConditionReport:
    """Equal limiting gradients at a kink must force equal h values."""
    if not positions:
        raise ValueError("gradient-consistency check needs a nonempty sample set")
    witnesses = []
    for p in positions:
        ld = limiting_gradients(pw, p)
        for e in ld.conflicts():
            witnesses.append({
                "position": _pos_dict(p),
                "s": [float(v) for v in e.s],
                "h_spread": float(e.h_conflict),
                "pieces": list(e.piece_indices),
                "origin": "e1",
            })
    return ConditionReport("E1", FAIL if witnesses else PASS, witnesses)


# ---------------------------------------------------------------------------
# canonical extension

def _extension_lp(gradients: np.ndarray, h: np.ndarray, s: np.ndarray,
                  sense: float):
    """Optimize sum(lam * h) over hull representations of s; sense=+1 max."""
    k = gradients.shape[0]
    A_eq = np.vstack([gradients.T, np.ones((1, k))])
    b_eq = np.append(s, 1.0)
    res = linprog(-sense * h, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0.0, None)] * k, method="highs")
    if not res.success:
        return None, None
    return float(sense * -res.fun), res.x


def representation_vertices(gradients: np.ndarray, s: np.ndarray,
                            tol: float = 1e-9) -> list[np.ndarray]:
    """Vertices of {lam >= 0, sum lam = 1, sum lam s_k = s} by basic solutions."""
    k = gradients.shape[0]
    B = np.vstack([gradients.T, np.ones((1, k))])
    rhs = np.append(s, 1.0)
    rank = np.linalg.matrix_rank(B, tol=1e-10)
    out: list[np.ndarray] = []
    for cols in itertools.combinations(range(k), min(rank, k)):
        sub = B[:, cols]
        sol, residual, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        if np.linalg.norm(sub @ sol - rhs) > tol * (1.0 + np.linalg.norm(rhs)):
            continue
        if np.any(sol < -tol):
            continue
        lam = np.zeros(k)
        lam[list(cols)] = np.clip(sol, 0.0, None)
        if not any(np.linalg.norm(lam - q) <= tol for q in out):
            out.append(lam)
    return out


def extend_canonical(an: PositionAnalysis, cfg: RunConfig) -> ExtensionModel:
    """Canonical extension on the complement polytope of one position.

    Runs the max/min pair at the projection vertices and at the barycenter;
    a spread anywhere is an ill-defined witness, agreement everywhere makes
    the extension affine and the model stores its coefficients.
    """
    tol = cfg.tol.extension
    grads = an.limiting.gradients
    hvals = an.limiting.h_values
    proj = an.e2_projection
    if proj.shape[0] == 0:
        raise ValueError("position has no complement polytope to extend onto")
    probes = [proj[i] for i in range(proj.shape[0])]
    probes.append(np.mean(proj, axis=0))
    tested = []
    for s in probes:
        hi, lam_hi = _extension_lp(grads, hvals, s, +1.0)
        lo, lam_lo = _extension_lp(grads, hvals, s, -1.0)
        if hi is None or lo is None:
            return ExtensionModel(an.position, False, witness={
                "position": _pos_dict(an.position),
                "s": [float(v) for v in s],
                "reason": "no hull representation (numerical)",
            })
        if hi - lo > tol * (1.0 + abs(hi)):
            return ExtensionModel(an.position, False, witness={
                "position": _pos_dict(an.position),
                "s": [float(v) for v in s],
                "max_value": hi, "min_value": lo,
                "lambda_max": [float(v) for v in lam_hi],
                "lambda_min": [float(v) for v in lam_lo],
            })
        tested.append((np.asarray(s, dtype=float), 0.5 * (hi + lo)))
    # agreement at vertices + barycenter forces the extension affine
    S = np.array([s for s, _ in tested])
    vals = np.array([v for _, v in tested])
    A = np.hstack([np.ones((S.shape[0], 1)), S])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = float(np.max(np.abs(A @ coef - vals)))
    if resid > 10 * tol * (1.0 + float(np.max(np.abs(vals)))):
        return ExtensionModel(an.position, False, witness={
            "position": _pos_dict(an.position),
            "reason": "certified values are not affine-consistent",
            "residual": resid,
        })
    return ExtensionModel(an.position, True, w0=float(coef[0]),
                          w=coef[1:].copy(), tested=tested)


# ---------------------------------------------------------------------------
# E2: convexity inequalities on the sub/superdifferential

def check_e2(pw: PiecewiseForm, analyses: list[PositionAnalysis],
             extensions: dict[tuple, ExtensionModel],
             cfg: RunConfig) -> ConditionReport:
    """Test the convex-combination inequalities at every kink position.

    Tested points: complement-polytope vertices, interior samples, and the
    limiting gradients themselves. Tested representations: vertices of the
    representation polytope plus interior mixtures; only representations
    landing inside the relevant Dini polytope constrain anything.
    """
    tol = cfg.tol.check
    rng = cfg.rng()
    witnesses = []
    tested_positions = 0
    for an in analyses:
        if an.cj_class not in (CJClass.CJ_MINUS, CJClass.CJ_PLUS):
            continue
        tested_positions += 1
        ext = extensions.get(_pos_key(an.position))
        if ext is None:
            raise ValueError("missing extension for a kink position")
        if not ext.well_defined:
            w = dict(ext.witness or {})
            w["kind"] = "ill_defined_extension"
            w["origin"] = _ill_defined_origin(an, w, tol)
            witnesses.append(w)
            continue
        sign = 1.0 if an.cj_class == CJClass.CJ_MINUS else -1.0
        dini = an.dini_sub if an.cj_class == CJClass.CJ_MINUS else an.dini_super
        grads = an.limiting.gradients
        hvals = an.limiting.h_values
        proj = an.e2_projection
        pts = [proj[i] for i in range(proj.shape[0])]
        pts.append(np.mean(proj, axis=0))
        pts.extend(polytope_interior_samples(proj, cfg.e2_interior_samples, rng))
        pts.extend(grads[i] for i in range(grads.shape[0]))
        for s in pts:
            reps = representation_vertices(grads, s)
            if len(reps) > 1:
                mix = rng.dirichlet(np.ones(len(reps)),
                                    size=cfg.lambda_interior_samples)
                reps = reps + [w @ np.array(reps) for w in mix]
            hs = ext.value(s)
            near_e1 = bool(grads.shape[0]) and \
                float(np.min(np.linalg.norm(grads - s, axis=1))) <= cfg.tol.merge
            if near_e1:
                idx = int(np.argmin(np.linalg.norm(grads - s, axis=1)))
                hs = float(hvals[idx])
            for lam in reps:
                y = np.concatenate([[-float(lam @ hvals)], s])
                if not dini.poly.contains(y, tol):
                    continue
                viol = sign * (hs - float(lam @ hvals))
                if viol > tol * (1.0 + abs(hs)):
                    witnesses.append({
                        "kind": "inequality",
                        "position": _pos_dict(an.position),
                        "s": [float(v) for v in s],
                        "h_extension": hs,
                        "h_combination": float(lam @ hvals),
                        "lambda": [float(v) for v in lam],
                        "origin": "e1" if near_e1 else "e2",
                    })
    if tested_positions == 0:
        return ConditionReport("E2", PASS, [],
                               notes=["no kink positions with one-sided "
                                      "differentials: vacuously true"])
    return ConditionReport("E2", FAIL if witnesses else PASS, witnesses)


def _ill_defined_origin(an: PositionAnalysis, witness: dict, tol: float) -> str:
    """'e1' when the conflict already violates the inequality at a forced point."""
    s = np.asarray(witness.get("s", []), dtype=float)
    if s.size == 0:
        return "e2"
    grads = an.limiting.gradients
    hvals = an.limiting.h_values
    d = np.linalg.norm(grads - s, axis=1)
    if float(np.min(d)) > tol:
        return "e2"
    forced = float(hvals[int(np.argmin(d))])
    dini = an.dini_sub if an.cj_class == CJClass.CJ_MINUS else an.dini_super
    sign = 1.0 if an.cj_class == CJClass.CJ_MINUS else -1.0
    for key in ("lambda_max", "lambda_min"):
        lam = np.asarray(witness.get(key, []), dtype=float)
        if lam.size == 0:
            continue
        y = np.concatenate([[-float(lam @ hvals)], s])
        if dini.poly.contains(y, tol) and sign * (forced - float(lam @ hvals)) > tol:
            return "e1"
    return "e2"


# ---------------------------------------------------------------------------
# E3: positive homogeneity over codirectional samples

def check_e3(samples: list[HSample], cfg: RunConfig) -> ConditionReport:
    """Codirectional gradients at one position must scale h linearly."""
    tol = cfg.tol.check
    witnesses = []
    groups: dict[tuple, list[HSample]] = {}
    for smp in samples:
        groups.setdefault(_pos_key(smp.position), []).append(smp)
    for group in groups.values():
        for smp in group:
            if smp.norm <= tol and abs(smp.h) > tol:
                witnesses.append({
                    "kind": "zero_gradient",
                    "position": _pos_dict(smp.position),
                    "h": smp.h,
                    "origin": smp.origin,
                })
        for a, b in itertools.combinations(group, 2):
            na, nb = a.norm, b.norm
            if na <= tol or nb <= tol:
                continue
            # codirectional = equal unit vectors; the first-order form keeps
            # the detector consistent with the identity tolerance below
            if float(np.linalg.norm(a.s / na - b.s / nb)) > tol:
                continue
            lhs = nb * a.h
            rhs = na * b.h
            if abs(lhs - rhs) > tol * (1.0 + abs(lhs)):
                witnesses.append({
                    "kind": "homogeneity",
                    "position": _pos_dict(a.position),
                    "s1": [float(v) for v in a.s], "h1": a.h,
                    "s2": [float(v) for v in b.s], "h2": b.h,
                    "origin": "e1" if (a.origin == "e1" and b.origin == "e1") else "e2",
                })
    return ConditionReport("E3", FAIL if witnesses else PASS, witnesses)


# ---------------------------------------------------------------------------
# E4: growth and regularity of the normalized data

def _window_stats(samples: list[HSample]) -> dict:
    """Growth and modulus estimates over one refinement window."""
    normed = []
    for smp in samples:
        nv = smp.normalized()
        if nv is None:
            continue
        u, hn = nv
        normed.append((smp.position.t, np.asarray(smp.position.x, dtype=float),
                       u, hn, smp))
    if not normed:
        return {"count": 0, "gamma": 0.0, "lip_x": 0.0, "mod_t": 0.0, "argmax": None}
    T = np.array([r[0] for r in normed])
    X = np.array([r[1] for r in normed])
    U = np.array([r[2] for r in normed])
    HN = np.array([r[3] for r in normed])
    xnorm = np.linalg.norm(X, axis=1)
    ratios = np.abs(HN) / (1.0 + xnorm)
    iax = int(np.argmax(ratios))
    gamma = float(ratios[iax])
    arg = normed[iax][4]
    argmax = {"position": _pos_dict(arg.position), "s": [float(v) for v in arg.s],
              "h": arg.h, "h_normalized": float(HN[iax]), "origin": arg.origin}
    # pairwise moduli in blocks
    mod_t = 0.0
    lip_x = 0.0
    N = len(normed)
    block = 512
    eps = 1e-9
    # first sweep: time modulus from spatially matched pairs
    for i0 in range(0, N, block):
        sl = slice(i0, min(i0 + block, N))
        dT = np.abs(T[sl][:, None] - T[None, :])
        dX = np.linalg.norm(X[sl][:, None, :] - X[None, :, :], axis=2)
        dU = np.linalg.norm(U[sl][:, None, :] - U[None, :, :], axis=2)
        dH = np.abs(HN[sl][:, None] - HN[None, :])
        minx = np.minimum(xnorm[sl][:, None], xnorm[None, :])
        r = dH - gamma * (1.0 + minx) * dU
        m = (dX <= eps) & (dT > eps)
        if np.any(m):
            mod_t = max(mod_t, float(np.max(np.where(m, r / np.where(dT > eps, dT, 1.0), -np.inf))))
    mod_t = max(mod_t, 0.0)
    for i0 in range(0, N, block):
        sl = slice(i0, min(i0 + block, N))
        dT = np.abs(T[sl][:, None] - T[None, :])
        dX = np.linalg.norm(X[sl][:, None, :] - X[None, :, :], axis=2)
        dU = np.linalg.norm(U[sl][:, None, :] - U[None, :, :], axis=2)
        dH = np.abs(HN[sl][:, None] - HN[None, :])
        minx = np.minimum(xnorm[sl][:, None], xnorm[None, :])
        r = dH - gamma * (1.0 + minx) * dU - mod_t * dT
        m = dX > eps
        if np.any(m):
            lip_x = max(lip_x, float(np.max(np.where(m, r / np.where(m, dX, 1.0), -np.inf))))
    lip_x = max(lip_x, 0.0)
    return {"count": N, "gamma": gamma, "lip_x": lip_x, "mod_t": mod_t,
            "argmax": argmax}


def check_e4(windows: list[dict], cfg: RunConfig) -> ConditionReport:
    """Stability of the growth/modulus estimates across refinement windows.

    windows: [{"floor": f, "e1": [HSample...], "e2": [HSample...]}] with the
    time floor shrinking. Divergence on forced (e1) data is a hard failure;
    divergence only on extension data leaves the verdict open.
    """
    if not windows:
        raise ValueError("empty refinement schedule")
    thr = cfg.e4_growth_threshold
    e1_stats = [_window_stats(w["e1"]) for w in windows]
    e2_stats = [_window_stats(w.get("e2", [])) for w in windows]
    table = []
    for w, s1, s2 in zip(windows, e1_stats, e2_stats):
        table.append({"floor": w["floor"], "count": s1["count"],
                      "gamma": s1["gamma"], "lip_x": s1["lip_x"],
                      "mod_t": s1["mod_t"], "gamma_extension": s2["gamma"]})

    def diverges(values, floor=1e-6):
        for prev, new in zip(values, values[1:]):
            if new > floor and new >= thr * max(prev, 1e-12):
                return True
        return False

    witnesses = []
    status = PASS
    notes = []
    if diverges([s["gamma"] for s in e1_stats]):
        status = FAIL
        witnesses = [{"window_floor": w["floor"], **s["argmax"],
                      "gamma": s["gamma"]}
                     for w, s in zip(windows, e1_stats) if s["argmax"]]
        notes.append("growth estimate diverges on forced gradient data")
    elif diverges([s["gamma"] for s in e2_stats]):
        status = INCONCLUSIVE
        witnesses = [{"window_floor": w["floor"], **s["argmax"],
                      "gamma_extension": s["gamma"]}
                     for w, s in zip(windows, e2_stats) if s["argmax"]]
        notes.append("growth estimate diverges only on canonically extended data; "
                     "another extension might avoid it")
    else:
        last, prev = e1_stats[-1], e1_stats[-2] if len(e1_stats) > 1 else e1_stats[-1]
        stable = all(
            abs(last[k] - prev[k]) <= cfg.e4_stability_rel * max(abs(prev[k]), 1e-12)
            or (abs(last[k]) < 1e-9 and abs(prev[k]) < 1e-9)
            for k in ("gamma", "lip_x", "mod_t"))
        status = PASS if stable else INCONCLUSIVE
        if not stable:
            notes.append("estimates did not stabilize across the last two windows")
    estimates = None
    if status != FAIL:
        estimates = {"Gamma": e1_stats[-1]["gamma"], "L": e1_stats[-1]["lip_x"],
                     "W": e1_stats[-1]["mod_t"],
                     "Gamma_extension": e2_stats[-1]["gamma"]}
    return ConditionReport("E4", status, witnesses, estimates, notes,
                           refinement=table)


# ---------------------------------------------------------------------------
# orchestration

@dataclass
class CheckWorkspace:
    """Intermediate products of a full check, reused by the synthesis stage."""

    pw: PiecewiseForm
    analyses: list[PositionAnalysis]
    extensions: dict[tuple, ExtensionModel]
    e1_samples: list[HSample]
    e2_samples: list[HSample]
    base_times: np.ndarray


def collect_e1_samples(pw: PiecewiseForm, positions: list[Position]) -> list[HSample]:
    out = []
    for p in positions:
        ld = limiting_gradients(pw, p)
        for e in ld.entries:
            out.append(HSample(p, e.s.copy(), e.h, "e1"))
    return out


def collect_extension_samples(an: PositionAnalysis, ext: ExtensionModel,
                              cfg: RunConfig, rng, cap: int | None = None) -> list[HSample]:
    if not ext.well_defined:
        return []
    proj = an.e2_projection
    pts = [proj[i] for i in range(proj.shape[0])]
    pts.append(np.mean(proj, axis=0))
    count = cap if cap is not None else cfg.e2_interior_samples
    pts.extend(polytope_interior_samples(proj, count, rng))
    return [HSample(an.position, np.asarray(s, dtype=float), ext.value(s), "e2")
            for s in pts]


def full_check(candidate: CandidateValue, cfg: RunConfig | None = None) -> VerdictReport:
    """Run the complete membership test and aggregate the verdict.

    The necessary conditions are exactly the ones that do not depend on a
    choice of extension (gradient consistency, and growth on the forced
    data); failures that involve only the canonical extension end in
    INCONCLUSIVE since another extension could exist.
    """
    cfg = cfg or RunConfig()
    frame = candidate.frame
    pw = decompose(candidate, cfg.box(frame.n), snap_tol=cfg.tol.snap)
    base_times = interior_times(frame, cfg.interior_times, cfg.time_floor_frac)
    strata = strata_positions(pw, base_times, cfg.lattice_per_dim)
    smooth = smooth_lattice_positions(pw, base_times, cfg.lattice_per_dim)
    rng = cfg.rng()

    e1_report = check_e1(pw, strata if strata else smooth, cfg)

    analyses = [classify_cj(pw, p) for p in strata]
    extensions: dict[tuple, ExtensionModel] = {}
    for an in analyses:
        if an.cj_class in (CJClass.CJ_MINUS, CJClass.CJ_PLUS):
            extensions[_pos_key(an.position)] = extend_canonical(an, cfg)

    e2_report = check_e2(pw, analyses, extensions, cfg)

    e1_samples = collect_e1_samples(pw, strata + smooth)
    e2_samples = []
    for an in analyses:
        ext = extensions.get(_pos_key(an.position))
        if ext is not None and ext.well_defined:
            e2_samples.extend(collect_extension_samples(
                an, ext, cfg, rng, cap=cfg.extension_interior_samples))
    e3_report = check_e3(e1_samples + e2_samples, cfg)

    windows = []
    for frac in cfg.e4_floor_fracs:
        times = interior_times(frame, cfg.interior_times, frac)
        w_strata = strata_positions(pw, times, cfg.lattice_per_dim)
        w_smooth = smooth_lattice_positions(pw, times, cfg.lattice_per_dim)
        w_e1 = collect_e1_samples(pw, w_strata + w_smooth)
        w_e2 = []
        sub = w_strata[:cfg.e4_strata_cap]
        for p in sub:
            an = classify_cj(pw, p)
            if an.cj_class in (CJClass.CJ_MINUS, CJClass.CJ_PLUS):
                ext = extend_canonical(an, cfg)
                if ext.well_defined:
                    w_e2.extend(collect_extension_samples(an, ext, cfg, rng, cap=8))
        windows.append({"floor": frac, "e1": w_e1, "e2": w_e2})
    e4_report = check_e4(windows, cfg)

    # aggregation: extension-dependent failures leave membership open
    e4_e1_failed = e4_report.status == FAIL
    for rep in (e2_report, e3_report):
        if rep.status == FAIL:
            ext_only = all(w.get("origin") == "e2" for w in rep.witnesses)
            if ext_only and e1_report.status == PASS and not e4_e1_failed:
                rep.status = INCONCLUSIVE
                rep.notes.append(
                    "all witnesses involve the canonical extension; membership "
                    "undecided because other extensions were not searched")

    conditions = [e1_report, e2_report, e3_report, e4_report]
    statuses = [c.status for c in conditions]
    if any(s == FAIL for s in statuses):
        overall = NOT_IN_VALF
    elif all(s == PASS for s in statuses):
        overall = IN_VALF
    else:
        overall = INCONCLUSIVE

    strata_entries = [_stratum_entry(an, extensions) for an in analyses]
    sampling = {
        "strata_positions": len(strata),
        "smooth_positions": len(smooth),
        "base_times": [float(t) for t in base_times],
        "e4_floor_fracs": list(cfg.e4_floor_fracs),
        "lattice_per_dim": cfg.lattice_per_dim,
        "e2_interior_samples": cfg.e2_interior_samples,
        "seed": cfg.seed,
        "sufficiency_path": "canonical-extension",
    }
    growth = sublinear_growth_report(candidate, cfg.box(frame.n))
    report = VerdictReport(
        candidate_id=candidate_digest(candidate),
        conditions=conditions, overall=overall, sampling=sampling,
        strata=strata_entries, growth=growth)
    report.workspace = CheckWorkspace(pw, analyses, extensions,
                                      e1_samples, e2_samples, base_times)
    return report


def _sorted_vertex_list(arr: np.ndarray) -> list[list[float]]:
    if arr is None or arr.size == 0:
        return []
    rows = sorted(tuple(float(v) for v in row) for row in np.asarray(arr))
    return [list(r) for r in rows]


def _stratum_entry(an: PositionAnalysis, extensions) -> dict:
    ext = extensions.get(_pos_key(an.position))
    ext_info = None
    if ext is not None:
        if ext.well_defined:
            ext_info = {"status": "well_defined", "w0": ext.w0,
                        "w": [float(v) for v in ext.w]}
        else:
            ext_info = {"status": "ill_defined", "witness": ext.witness}
    return {
        "position": _pos_dict(an.position),
        "cj_class": an.cj_class.value,
        "e1": [{"s": [float(v) for v in e.s], "h": e.h}
               for e in sorted(an.limiting.entries, key=lambda e: tuple(e.s))],
        "dini_sub_vertices": _sorted_vertex_list(an.dini_sub.vertices),
        "dini_super_vertices": _sorted_vertex_list(an.dini_super.vertices),
        "clarke_vertices": _sorted_vertex_list(an.clarke.vertices),
        "e2_projection_vertices": _sorted_vertex_list(an.e2_projection),
        "extension": ext_info,
        "inconsistent_dini": an.inconsistent_dini,
    }


def candidate_digest(candidate: CandidateValue) -> str:
    src = candidate.source or ""
    return hashlib.sha256(src.encode("utf-8")).hexdigest()[:16]


def report_to_json(report: VerdictReport, indent: int = 2) -> str:
    return json.dumps(report.to_dict(), indent=indent, sort_keys=True)
