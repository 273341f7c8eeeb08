import numpy as np
import pytest

from valsynth.expr import Position, parse_candidate
from valsynth.piecewise import decompose, sublinear_growth_report


def _piece_by_signs(pw, signs):
    for piece in pw.pieces:
        if piece.signs == signs:
            return piece
    raise AssertionError(f"no piece with signs {signs}")


def test_phi1_four_pieces(phi1_pw):
    assert len(phi1_pw.pieces) == 4
    # region {x1>0, x2>0}: t + x1 - x2
    poly = _piece_by_signs(phi1_pw, (1, 1)).poly
    assert poly.coeffs == {(1, 0, 0): 1.0, (0, 1, 0): 1.0, (0, 0, 1): -1.0}


def test_phi2_piece_expansion(phi2, phi2_pw):
    # region {x1>0, x2<0}: t*x1 + t*x2
    poly = _piece_by_signs(phi2_pw, (1, -1)).poly
    assert poly.coeffs == {(1, 1, 0): 1.0, (1, 0, 1): 1.0}
    # cross-check against the tree at random interior points of that region
    rng = np.random.default_rng(1)
    for _ in range(100):
        t = rng.uniform(0.01, 0.99)
        x = (rng.uniform(0.05, 1.0), rng.uniform(-1.0, -0.05))
        assert poly(t, x) == pytest.approx(phi2.evaluate(Position(t, x)), abs=1e-12)


def test_smooth_candidate_single_piece():
    c = parse_candidate({"n": 1, "t0": 0.0, "theta0": 1.0,
                         "expr": {"op": "mul", "args": [{"var": "t"}, {"var": "t"}]}})
    pw = decompose(c)
    assert len(pw.pieces) == 1
    assert pw.boundaries.shape[0] == 0


def test_tree_matches_active_piece_everywhere(phi1, phi1_pw, phi2, phi2_pw):
    rng = np.random.default_rng(2)
    for cand, pw in ((phi1, phi1_pw), (phi2, phi2_pw)):
        for _ in range(500):
            p = Position(rng.uniform(0, 1), tuple(rng.uniform(-1, 1, 2)))
            active = pw.active_pieces(p)
            assert len(active) >= 1
            for idx in active:
                assert abs(pw.piece_value(idx, p) - cand.evaluate(p)) <= 1e-12


def test_interior_points_have_one_active_piece(phi1_pw):
    rng = np.random.default_rng(3)
    count = 0
    for _ in range(500):
        p = Position(rng.uniform(0, 1), tuple(rng.uniform(-1, 1, 2)))
        if np.min(phi1_pw.boundary_distances(p)) > 1e-7:
            assert len(phi1_pw.active_pieces(p)) == 1
            count += 1
    assert count > 400


def test_gradient_matches_finite_differences(phi2, phi2_pw):
    rng = np.random.default_rng(4)
    step = 1e-5
    checked = 0
    for _ in range(200):
        p = Position(rng.uniform(0.1, 0.9), tuple(rng.uniform(-1, 1, 2)))
        cls = phi2_pw.classify(p)
        if not cls.smooth:
            continue
        checked += 1
        fd_t = (phi2.evaluate(Position(p.t + step, p.x))
                - phi2.evaluate(Position(p.t - step, p.x))) / (2 * step)
        scale = max(1.0, abs(cls.time_derivative))
        assert abs(fd_t - cls.time_derivative) <= 1e-6 * scale
        for i in range(2):
            xp = list(p.x); xp[i] += step
            xm = list(p.x); xm[i] -= step
            fd = (phi2.evaluate(Position(p.t, tuple(xp)))
                  - phi2.evaluate(Position(p.t, tuple(xm)))) / (2 * step)
            assert abs(fd - cls.gradient[i]) <= 1e-6 * max(1.0, abs(cls.gradient[i]))
    assert checked > 100


def test_continuity_across_boundaries(phi1_pw):
    rng = np.random.default_rng(5)
    for _ in range(100):
        # points on the x1 = 0 kink
        p = Position(rng.uniform(0, 1), (0.0, rng.uniform(-1, 1)))
        active = phi1_pw.active_pieces(p)
        vals = [phi1_pw.piece_value(i, p) for i in active]
        assert max(vals) - min(vals) <= 1e-12


def test_classification_examples(phi1_pw):
    cls = phi1_pw.classify(Position(0.5, (0.3, -0.2)))
    assert cls.smooth
    assert cls.time_derivative == pytest.approx(1.0)
    np.testing.assert_allclose(cls.gradient, [1.0, 1.0])

    cls = phi1_pw.classify(Position(0.5, (0.0, 0.7)))
    assert not cls.smooth
    assert len(cls.active) == 2

    cls = phi1_pw.classify(Position(0.5, (0.0, 0.0)))
    assert not cls.smooth
    assert len(cls.active) == 4


def test_snap_tolerance_treats_near_kink_as_kink(phi1_pw):
    cls = phi1_pw.classify(Position(0.5, (1e-12, 0.7)))
    assert not cls.smooth


def test_growth_report_flags_quadratic():
    c = parse_candidate({"n": 1, "t0": 0.0, "theta0": 1.0,
                         "expr": {"op": "mul", "args": [
                             {"var": "x", "i": 1}, {"var": "x", "i": 1}]}})
    rep = sublinear_growth_report(c)
    assert rep["degree_in_x"] == 2
    assert rep["warning"] is not None
    assert rep["growing"]


def test_growth_report_accepts_phi1(phi1):
    rep = sublinear_growth_report(phi1)
    assert rep["degree_in_x"] == 1
    assert rep["warning"] is None
    assert not rep["growing"]
