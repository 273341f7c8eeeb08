"""File formats: verdict/Hamiltonian/game dumps, grid CSVs, content hashes.

Every artifact is a sorted-keys JSON document (plus CSV tables for bulk
numbers), so identical runs produce byte-identical files; run timestamps
live in a separate meta field that comparisons may strip.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from datetime import datetime, timezone

import numpy as np

from .conditions import VerdictReport
from .hamiltonian import ENatSamples, HamiltonianModel
from .games import GameDynamics
from .pde import ValueField


def _canon(obj):
    """JSON-safe copy with numpy scalars/arrays unwrapped."""
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dump_json(obj, path, meta: dict | None = None) -> None:
    doc = _canon(obj)
    if meta is not None:
        doc = dict(doc)
        doc["meta"] = _canon(meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_meta(seed: int, extra: dict | None = None) -> dict:
    meta = {"timestamp": datetime.now(timezone.utc).isoformat(), "seed": seed}
    if extra:
        meta.update(extra)
    return meta


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def content_hash(doc: dict) -> str:
    """Hash of the canonical JSON content, run metadata excluded."""
    doc = {k: v for k, v in doc.items() if k != "meta"}
    payload = json.dumps(_canon(doc), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def strip_timestamp(doc: dict) -> dict:
    doc = dict(doc)
    if "meta" in doc and isinstance(doc["meta"], dict):
        meta = dict(doc["meta"])
        meta.pop("timestamp", None)
        doc["meta"] = meta
    return doc


# ---------------------------------------------------------------------------
# verdict

def write_verdict(report: VerdictReport, path, seed: int) -> None:
    dump_json(report.to_dict(), path, meta=run_meta(seed))


def read_verdict(path) -> dict:
    return load_json(path)


# ---------------------------------------------------------------------------
# Hamiltonian dumps

def write_hamiltonian(model: HamiltonianModel, out_dir, seed: int) -> str:
    """Header JSON plus a CSV sample table (sampled route only).

    Returns the content hash binding the game dump to this Hamiltonian.
    """
    os.makedirs(out_dir, exist_ok=True)
    header = {
        "kind": model.kind,
        "n": model.n,
        "gamma": model.gamma,
        "upsilon": model.upsilon,
        "lip_s_axis": model.lip_s_axis,
        "x_dependent": model.x_dependent,
        "covering_radius": model.covering_radius,
        "expr": model.expr,
        "details": model.meta,
    }
    csv_path = os.path.join(out_dir, "hamiltonian_samples.csv")
    if model.kind == "mcshane":
        s = model.samples
        header["sample_count"] = s.count
        header["constants"] = {"Gamma": s.gamma, "L": s.lip_x, "W": s.mod_t}
        header["box_half"] = s.box_half
        header["t_window"] = list(s.t_window)
        header["zero_gradient_entries"] = s.zero_entries
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i+1}" for i in range(s.n)]
                       + [f"u{i+1}" for i in range(s.n)] + ["h_normalized", "origin"])
            for i in range(s.count):
                w.writerow([repr(float(s.T[i]))]
                           + [repr(float(v)) for v in s.X[i]]
                           + [repr(float(v)) for v in s.U[i]]
                           + [repr(float(s.HN[i])), s.origin[i]])
    elif os.path.exists(csv_path):
        os.remove(csv_path)
    json_path = os.path.join(out_dir, "hamiltonian.json")
    dump_json(header, json_path, meta=run_meta(seed))
    h = content_hash(header)
    if model.kind == "mcshane":
        h = hashlib.sha256((h + file_hash(csv_path)).encode()).hexdigest()[:16]
    return h


def read_hamiltonian(out_dir) -> tuple[HamiltonianModel, str]:
    json_path = os.path.join(out_dir, "hamiltonian.json")
    header = load_json(json_path)
    h = content_hash(header)
    if header["kind"] == "closed-form":
        model = HamiltonianModel(
            kind="closed-form", n=header["n"], gamma=header["gamma"],
            upsilon=header["upsilon"], lip_s_axis=header["lip_s_axis"],
            expr=header["expr"], x_dependent=header["x_dependent"],
            meta=header.get("details") or {})
        return model, h
    csv_path = os.path.join(out_dir, "hamiltonian_samples.csv")
    rows = []
    with open(csv_path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        cols = next(reader)
        n = sum(1 for c in cols if c.startswith("x"))
        for row in reader:
            rows.append(row)
    T = np.array([float(r[0]) for r in rows])
    X = np.array([[float(v) for v in r[1:1 + n]] for r in rows])
    U = np.array([[float(v) for v in r[1 + n:1 + 2 * n]] for r in rows])
    HN = np.array([float(r[1 + 2 * n]) for r in rows])
    origin = np.array([r[2 + 2 * n] for r in rows])
    consts = header["constants"]
    samples = ENatSamples(T, X, U, HN, origin, consts["Gamma"], consts["L"],
                          consts["W"], header["box_half"],
                          tuple(header["t_window"]),
                          header.get("zero_gradient_entries", 0))
    model = HamiltonianModel(
        kind="mcshane", n=header["n"], gamma=header["gamma"],
        upsilon=header["upsilon"], lip_s_axis=header["lip_s_axis"],
        samples=samples, covering_radius=header.get("covering_radius"),
        meta=header.get("details") or {})
    h = hashlib.sha256((h + file_hash(csv_path)).encode()).hexdigest()[:16]
    return model, h


# ---------------------------------------------------------------------------
# game dumps

def write_game(game: GameDynamics, out_dir, hamiltonian_hash: str, seed: int,
               name: str | None = None, flags: dict | None = None) -> str:
    os.makedirs(out_dir, exist_ok=True)
    doc = game.to_dict(hamiltonian_hash)
    if flags:
        doc["flags"] = flags
    name = name or f"game_{game.kind.replace('-', '_')}.json"
    path = os.path.join(out_dir, name)
    dump_json(doc, path, meta=run_meta(seed))
    return path


def read_game(path, model: HamiltonianModel, expected_hash: str) -> GameDynamics:
    doc = load_json(path)
    if doc["hamiltonian_hash"] != expected_hash:
        raise ValueError(
            "game dump references a different Hamiltonian "
            f"({doc['hamiltonian_hash']} != {expected_hash}); refusing to run")
    return GameDynamics(
        kind=doc["kind"], n=doc["n"], upsilon=doc["upsilon"],
        hamiltonian=model, control_sets=doc["control_sets"],
        growth_constant=doc["growth_constant"],
        gate_report=doc.get("gate_report"))


# ---------------------------------------------------------------------------
# grid dumps

def write_grid_csv(field: ValueField, candidate, path) -> None:
    """Snapshot levels as rows: t, coordinates, numeric, analytic, abs error."""
    n = len(field.axes)
    grids = np.meshgrid(*field.axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i+1}" for i in range(n)]
                   + ["numeric", "analytic", "abs_error"])
        for t, V in zip(field.times, field.values):
            ana = candidate.ast.evaluate_batch(np.full(pts.shape[0], float(t)), pts)
            num = V.ravel()
            for i in range(pts.shape[0]):
                w.writerow([repr(float(t))]
                           + [repr(float(v)) for v in pts[i]]
                           + [repr(float(num[i])), repr(float(ana[i])),
                              repr(abs(float(num[i]) - float(ana[i])))])


def write_error_stats(field: ValueField, path, seed: int, extra: dict | None = None) -> None:
    doc = {"scheme": field.scheme, "dt": field.dt,
           "dissipation": field.dissipation,
           "stats": field.stats.to_dict() if field.stats else None,
           "details": field.meta}
    if extra:
        doc.update(extra)
    dump_json(doc, path, meta=run_meta(seed))
