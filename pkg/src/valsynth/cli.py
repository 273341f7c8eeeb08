"""Command line: check -> synth -> verify -> report.

check   decide membership for a candidate, emit the verdict JSON
synth   build the Hamiltonian extension and game dynamics for a member
verify  certify the game numerically (grid solve and/or dynamic programming)
report  merge everything in a directory into a summary with figures

Exit codes: 0 member / success, 1 non-member / tolerance exceeded,
2 inconclusive, 3 configuration or input errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import RunConfig
from .conditions import full_check, IN_VALF, NOT_IN_VALF
from .expr import CandidateError, load_candidate
from .games import (SynthesisError, sampled_growth_check, synth_isaacs_1d,
                    synth_maxmin, synth_minmax, verify_hamiltonian_identity,
                    _random_samples)
from .hamiltonian import (ExtensionDataError, build_sample_set,
                          closed_form_hamiltonian, extend_mcshane,
                          verify_regularity)
from .pde import GridSpec, SolveError, minimax_spot_check, solve_dp, \
    solve_monotone_grid
from .piecewise import decompose
from .sampling import interior_times, smooth_lattice_positions, strata_positions
from . import reporting

EXIT = {IN_VALF: 0, NOT_IN_VALF: 1, "INCONCLUSIVE": 2}


def _add_common(p):
    p.add_argument("--seed", type=int, default=RunConfig.seed)
    p.add_argument("--box", type=float, nargs=2, metavar=("A", "B"),
                   help="spatial box [a, b] per axis (must be symmetric: a = -b)")


def _config_from(args) -> RunConfig:
    cfg = RunConfig(seed=args.seed)
    if args.box is not None:
        a, b = args.box
        if abs(a + b) > 1e-12 or b <= 0:
            raise CandidateError("only symmetric boxes [-h, h] are supported")
        cfg.box_half = b
    if getattr(args, "samples", None):
        cfg.lattice_per_dim = args.samples
    return cfg


def cmd_check(args) -> int:
    cfg = _config_from(args)
    candidate = load_candidate(args.candidate)
    report = full_check(candidate, cfg)
    out = args.out or "verdict.json"
    doc = report.to_dict()
    doc["candidate_path"] = os.path.abspath(args.candidate)
    reporting.dump_json(doc, out, meta=reporting.run_meta(cfg.seed))
    print(f"overall: {report.overall}")
    for c in report.conditions:
        extra = f" witnesses={len(c.witnesses)}" if c.witnesses else ""
        print(f"  {c.cid}: {c.status}{extra}")
    print(f"verdict written to {out}")
    return EXIT[report.overall]


def cmd_synth(args) -> int:
    cfg = _config_from(args)
    src = args.source
    doc = reporting.load_json(src)
    if "expr" in doc:
        candidate_path = src
    elif "candidate_path" in doc:
        candidate_path = doc["candidate_path"]
    else:
        print("synth needs a candidate file or a verdict carrying its path",
              file=sys.stderr)
        return 3
    candidate = load_candidate(candidate_path)
    report = full_check(candidate, cfg)
    forced = False
    if report.overall != IN_VALF:
        if not args.force:
            print(f"candidate is {report.overall}; use --force to synthesize anyway")
            return EXIT[report.overall]
        forced = True
    out_dir = args.out or "gamedir"
    os.makedirs(out_dir, exist_ok=True)
    try:
        samples = build_sample_set(report, cfg, force=forced)
    except ExtensionDataError as e:
        print(f"cannot build the extension: {e}", file=sys.stderr)
        return 3
    model = extend_mcshane(samples, cfg)
    regularity = verify_regularity(model, frame=candidate.frame,
                                   box_half=cfg.box_half)
    ham_hash = reporting.write_hamiltonian(model, out_dir, cfg.seed)
    with open(candidate_path, "r", encoding="utf-8") as fh:
        cand_text = fh.read()
    with open(os.path.join(out_dir, "candidate.json"), "w", encoding="utf-8") as fh:
        fh.write(cand_text)
    verdict_doc = report.to_dict()
    verdict_doc["candidate_path"] = os.path.abspath(candidate_path)
    reporting.dump_json(verdict_doc, os.path.join(out_dir, "verdict.json"),
                        meta=reporting.run_meta(cfg.seed))

    kinds = [args.kind] if args.kind != "all" else (
        ["maxmin", "minmax"] + (["isaacs1d"] if candidate.frame.n == 1 else []))
    flags = {"unverified_premise": forced}
    summary = {"hamiltonian_hash": ham_hash, "regularity": regularity,
               "flags": flags, "games": {}}
    emitted = 0
    for kind in kinds:
        try:
            if kind == "maxmin":
                game = synth_maxmin(model)
            elif kind == "minmax":
                game = synth_minmax(model, seed=cfg.seed, box_half=cfg.box_half,
                                    frame=candidate.frame)
            elif kind == "isaacs1d":
                game = synth_isaacs_1d(model, seed=cfg.seed,
                                       box_half=cfg.box_half,
                                       frame=candidate.frame)
            else:
                print(f"unknown kind {kind!r}", file=sys.stderr)
                return 3
        except SynthesisError as e:
            summary["games"][kind] = {"emitted": False, "error": str(e)}
            print(f"{kind}: rejected ({e})", file=sys.stderr)
            continue
        id_samples = _random_samples(game.n, args.id_samples, cfg.seed + 3,
                                     cfg.box_half, candidate.frame)
        id_report = verify_hamiltonian_identity(game, model, id_samples,
                                                args.delta)
        growth = sampled_growth_check(game, box_half=cfg.box_half,
                                      frame=candidate.frame)
        path = reporting.write_game(game, out_dir, ham_hash, cfg.seed,
                                    flags=flags)
        summary["games"][kind] = {"emitted": True, "path": os.path.basename(path),
                                  "identity": id_report, "growth": growth}
        emitted += 1
        print(f"{kind}: emitted ({os.path.basename(path)}), identity max error "
              f"{id_report['max_abs_error']:.3g}")
    reporting.dump_json(summary, os.path.join(out_dir, "synth_summary.json"),
                        meta=reporting.run_meta(cfg.seed))
    if emitted == 0:
        return 3
    print(f"artifacts written to {out_dir}/")
    return 0


def cmd_verify(args) -> int:
    cfg = _config_from(args)
    gamedir = args.gamedir
    candidate = load_candidate(os.path.join(gamedir, "candidate.json"))
    model, ham_hash = reporting.read_hamiltonian(gamedir)
    game_files = sorted(f for f in os.listdir(gamedir)
                        if f.startswith("game_") and f.endswith(".json"))
    if args.game:
        game_files = [args.game]
    if not game_files and args.scheme in ("dp", "both"):
        print("no game dump found for dynamic programming", file=sys.stderr)
        return 3
    pde_model = model
    if args.closed_form:
        pde_model = closed_form_hamiltonian(
            reporting.load_json(args.closed_form), candidate.frame.n,
            frame=candidate.frame, box_half=cfg.box_half)
    grid = GridSpec(box_half=cfg.box_half, points_per_axis=args.grid,
                    dt=None if args.dt == "auto" else float(args.dt))
    ok = True
    if args.scheme in ("lf", "both"):
        field = solve_monotone_grid(pde_model, candidate, grid,
                                    error_tolerance=args.tol)
        reporting.write_error_stats(field, os.path.join(gamedir, "errorstats_lf.json"),
                                    cfg.seed, {"hamiltonian_hash": ham_hash})
        reporting.write_grid_csv(field, candidate,
                                 os.path.join(gamedir, "grid_lf.csv"))
        print(f"lf: max interior error {field.stats.max_error:.4g} "
              f"(tolerance {args.tol})")
        ok = ok and field.stats.passed
    if args.scheme in ("dp", "both"):
        game = reporting.read_game(os.path.join(gamedir, game_files[0]),
                                   model, ham_hash)
        try:
            dp_field = solve_dp(game, candidate,
                                GridSpec(box_half=cfg.box_half,
                                         points_per_axis=args.grid,
                                         dt=0.01 if args.dt == "auto" else float(args.dt)),
                                control_mesh=args.control_mesh,
                                error_tolerance=args.tol)
        except SolveError as e:
            print(f"dp: {e}", file=sys.stderr)
            return 3
        reporting.write_error_stats(dp_field,
                                    os.path.join(gamedir, "errorstats_dp.json"),
                                    cfg.seed, {"hamiltonian_hash": ham_hash,
                                               "game": game_files[0]})
        reporting.write_grid_csv(dp_field, candidate,
                                 os.path.join(gamedir, "grid_dp.csv"))
        print(f"dp: max interior error {dp_field.stats.max_error:.4g} "
              f"(tolerance {args.tol})")
        ok = ok and dp_field.stats.passed
    # inequality spot check against the verification model
    pw = decompose(candidate, cfg.box(candidate.frame.n))
    times = interior_times(candidate.frame, 3, 0.2)
    pos = strata_positions(pw, times, 5)[:40] + \
        smooth_lattice_positions(pw, times, 3)[:20]
    spot = minimax_spot_check(pw, pde_model, pos)
    reporting.dump_json(spot, os.path.join(gamedir, "spotcheck.json"),
                        meta=reporting.run_meta(cfg.seed))
    print(f"spot check: smooth residual {spot['max_smooth_residual']:.3g}, "
          f"upper violation {spot['max_upper_violation']:.3g}, "
          f"lower violation {spot['max_lower_violation']:.3g}")
    return 0 if ok else 1


def cmd_report(args) -> int:
    from . import figures
    d = args.dir
    fig_dir = os.path.join(d, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    merged = {"figures": []}
    lines = ["# Run summary", ""]

    verdict_path = os.path.join(d, "verdict.json")
    if os.path.exists(verdict_path):
        verdict = reporting.load_json(verdict_path)
        merged["verdict"] = reporting.strip_timestamp(verdict)
        lines.append(f"## Membership: {verdict['overall']}")
        lines.append("")
        lines.append("| condition | status | witnesses |")
        lines.append("|---|---|---|")
        for c in verdict["conditions"]:
            lines.append(f"| {c['id']} | {c['status']} | {len(c['witnesses'])} |")
            if c["id"] == "E4" and c.get("refinement"):
                p = figures.save_refinement_curve(
                    c["refinement"], os.path.join(fig_dir, "refinement.png"))
                merged["figures"].append(p)
        lines.append("")
        e4 = next(c for c in verdict["conditions"] if c["id"] == "E4")
        if e4.get("estimates"):
            lines.append(f"Growth/modulus estimates: {e4['estimates']}")
            lines.append("")
        if verdict.get("strata"):
            p = figures.save_strata_map(verdict["strata"],
                                        os.path.join(fig_dir, "strata.png"))
            if p:
                merged["figures"].append(p)

    synth_path = os.path.join(d, "synth_summary.json")
    if os.path.exists(synth_path):
        synth = reporting.load_json(synth_path)
        merged["synth"] = reporting.strip_timestamp(synth)
        lines.append("## Synthesis")
        lines.append("")
        for kind, info in synth["games"].items():
            if info.get("emitted"):
                ident = info["identity"]
                lines.append(
                    f"- {kind}: identity max error {ident['max_abs_error']:.3g} "
                    f"(mesh bound {ident['tolerance_bound']:.3g}, "
                    f"weak duality {'ok' if ident['weak_duality_ok'] else 'VIOLATED'})")
                if ident.get("errors"):
                    p = figures.save_identity_errors(
                        ident["errors"], ident["tolerance_bound"],
                        os.path.join(fig_dir, f"identity_{kind}.png"))
                    merged["figures"].append(p)
            else:
                lines.append(f"- {kind}: rejected: {info.get('error')}")
        lines.append("")

    for scheme in ("lf", "dp"):
        stats_path = os.path.join(d, f"errorstats_{scheme}.json")
        if not os.path.exists(stats_path):
            continue
        stats = reporting.load_json(stats_path)
        merged[f"errorstats_{scheme}"] = reporting.strip_timestamp(stats)
        st = stats.get("stats") or {}
        lines.append(f"## Certificate ({scheme})")
        lines.append("")
        lines.append(f"- max interior error: {st.get('max_error')}")
        lines.append(f"- mean interior error: {st.get('mean_error')}")
        lines.append(f"- tolerance: {st.get('tolerance')} -> "
                     f"{'PASS' if st.get('passed') else 'FAIL'}")
        lines.append("")
        csv_path = os.path.join(d, f"grid_{scheme}.csv")
        if os.path.exists(csv_path):
            fig = _field_figure_from_csv(csv_path, fig_dir, scheme)
            if fig:
                merged["figures"].append(fig)

    spot_path = os.path.join(d, "spotcheck.json")
    if os.path.exists(spot_path):
        spot = reporting.load_json(spot_path)
        merged["spotcheck"] = reporting.strip_timestamp(spot)
        lines.append("## Inequality spot check")
        lines.append("")
        lines.append(f"- max smooth residual: {spot['max_smooth_residual']:.4g}")
        lines.append(f"- upper/lower violations: {spot['max_upper_violation']:.4g} / "
                     f"{spot['max_lower_violation']:.4g}")
        lines.append("")

    merged["figures"] = [os.path.relpath(p, d) for p in merged["figures"]]
    if merged["figures"]:
        lines.append("## Figures")
        lines.append("")
        for p in merged["figures"]:
            lines.append(f"![figure]({p})")
        lines.append("")

    md_path = os.path.join(d, "report.md")
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    reporting.dump_json(merged, os.path.join(d, "report.json"),
                        meta=reporting.run_meta(args.seed))
    print(f"report written to {md_path} ({len(merged['figures'])} figures)")
    return 0


def _field_figure_from_csv(csv_path, fig_dir, scheme):
    import csv as _csv
    from . import figures
    with open(csv_path, "r", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if i < len(header) - 0 else v
                 for i, v in enumerate(r)] for r in reader]
    n = sum(1 for c in header if c.startswith("x"))
    arr = np.array(rows, dtype=float)
    t_final = np.min(arr[:, 0])
    sel = arr[np.abs(arr[:, 0] - t_final) < 1e-12]
    axes = [np.unique(sel[:, 1 + i]) for i in range(n)]
    shape = [len(a) for a in axes]
    if int(np.prod(shape)) != sel.shape[0]:
        return None
    order = np.lexsort(tuple(sel[:, 1 + i] for i in reversed(range(n))))
    sel = sel[order]
    numeric = sel[:, 1 + n].reshape(shape)
    analytic = sel[:, 2 + n].reshape(shape)
    return figures.save_field_figure(
        t_final, axes, numeric, analytic,
        os.path.join(fig_dir, f"field_{scheme}.png"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="valsynth",
        description="decide value-function membership, synthesize the game, "
                    "certify it numerically")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the membership conditions")
    p.add_argument("candidate")
    p.add_argument("--samples", type=int, help="lattice points per dimension")
    p.add_argument("--out", help="verdict output path")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="build Hamiltonian and game dynamics")
    p.add_argument("source", help="candidate file or verdict report")
    p.add_argument("--kind", default="all",
                   choices=["maxmin", "minmax", "isaacs1d", "all"])
    p.add_argument("--samples", type=int, help="lattice points per dimension")
    p.add_argument("--out", help="output directory")
    p.add_argument("--force", action="store_true",
                   help="synthesize even from a non-member verdict")
    p.add_argument("--delta", type=float, default=0.1,
                   help="ball mesh for the identity check")
    p.add_argument("--id-samples", type=int, default=40)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="numerically certify a synthesized game")
    p.add_argument("gamedir")
    p.add_argument("--scheme", default="lf", choices=["lf", "dp", "both"])
    p.add_argument("--grid", type=int, default=81)
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--dt", default="auto")
    p.add_argument("--game", help="specific game dump to verify")
    p.add_argument("--control-mesh", type=float, default=0.5)
    p.add_argument("--closed-form",
                   help="closed-form Hamiltonian JSON for comparison runs")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="merge artifacts into a summary")
    p.add_argument("dir")
    p.add_argument("--seed", type=int, default=RunConfig.seed)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is the inconclusive verdict here
        return 0 if e.code in (0, None) else 3
    try:
        return args.func(args)
    except (CandidateError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
