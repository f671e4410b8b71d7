import random
from fractions import Fraction

import numpy as np
import pytest

from lvdiff.algebra.mpoly import MPoly
from lvdiff.algebra.ratfunc import RatFunc
from lvdiff.algebra.scalar import Scalar
from lvdiff.brestovski import (Degenerate, conservation_residual, first_integral, first_integral_zform,
                               lv_params, lv_system, normalize_system, qratio_check, ratio_probe,
                               to_brestovski)
from lvdiff.diffstruct import LogLinearExpr, loglinear_derive
from lvdiff.numerics import integrate

GENS = ("X", "Y")
X, Y = MPoly.var("X", GENS), MPoly.var("Y", GENS)


def test_normalize_examples():
    sys, rec = normalize_system(2, 3, 5, 7)
    assert rec.normalized["alpha"] == Scalar(Fraction(7, 3))
    assert lv_params(sys) == (Scalar(1), Scalar(1), Scalar(1), Scalar(Fraction(7, 3)))
    assert rec.verify()

    sys, rec = normalize_system("a", "b", "c", "d")
    assert rec.normalized["alpha"] == Scalar.symbol("d") / Scalar.symbol("b")
    assert rec.verify()

    _, rec = normalize_system(2, 3, 5, 7, family="twod")
    assert rec.normalized["gamma"] == Scalar(Fraction(7, 2))
    assert rec.verify()

    for bad in [(0, 1, 1, 1), (1, 1, 0, 1)]:
        with pytest.raises(ValueError):
            normalize_system(*bad)


def test_normalization_round_trip_on_points():
    _, rec = normalize_system(2, 3, 5, 7)
    for x, y in [(0.5, 0.25), (-1.5, 3.0)]:
        assert rec.backward(*rec.forward(x, y)) == pytest.approx((x, y))


def test_normalization_maps_solutions():
    # a solution of the original system, pushed forward and reparametrized in time, solves the normalized one
    a, b, c, d = 2.0, 3.0, 5.0, 7.0
    sys, rec = normalize_system(2, 3, 5, 7)
    orig = integrate(lv_system(2, 3, 5, 7), {}, (0.1, 0.05), 0.3, rtol=1e-12)
    x0, y0 = rec.forward(0.1, 0.05)
    norm = integrate(sys, {}, (x0, y0), 0.3 * b, rtol=1e-12)
    assert orig.termination == norm.termination == "HorizonReached"
    mapped = np.array([rec.forward(x, y) for x, y in orig.states])
    assert np.allclose(mapped[-1], norm.states[-1], rtol=1e-8)


def test_to_brestovski_symbolic():
    form = to_brestovski()
    assert all(form.identities.values())
    assert set(form.identities) >= {"(b-d)*X = Z' - d*Z", "(b-d)*Y = Z' - b*Z", "X' - Y' = b*Y'/Y - d*X'/X"}
    assert form.residual().is_zero()
    assert [str(a) for a, _ in form.terms] == ["b", "-d"]
    assert str(form.independence) == "IrrationalGeneric"


def test_to_brestovski_numeric_and_degenerate():
    form = to_brestovski(2, 5)
    assert form.residual().is_zero()
    assert str(form.independence) == "Rational(5/2)"
    with pytest.raises(Degenerate):
        to_brestovski("b", "b")
    with pytest.raises(Degenerate):
        to_brestovski(3, 3)


def test_first_integral_symbolic():
    H = first_integral()
    assert loglinear_derive(H, lv_system(1, "b", 1, "d")).is_zero()
    zf = first_integral_zform()
    assert "log" in zf and zf.startswith("Z")


def test_first_integral_equal_rates():
    sys = lv_system(1, "b", 1, "b")
    H = first_integral(sys)
    assert loglinear_derive(H, sys).is_zero()


def test_first_integral_random_rational_pairs():
    rng = random.Random(17)
    for _ in range(100):
        b = Fraction(rng.randint(-40, 40) or 1, rng.randint(1, 12))
        d = Fraction(rng.randint(-40, 40) or 1, rng.randint(1, 12))
        sys = lv_system(1, b, 1, d)
        assert loglinear_derive(first_integral(sys), sys).is_zero()


def test_first_integral_rejects_non_lv():
    sys = lv_system(1, "b", 1, "d")
    from lvdiff.diffstruct import PlanarSystem
    bent = PlanarSystem("X", "Y", sys.f + X * X, sys.g)
    with pytest.raises(ValueError):
        first_integral(bent)


def test_wrong_candidate_residual():
    sys = lv_system(1, "b", 1, "d")
    H = LogLinearExpr(RatFunc.from_poly(X + Y), [])
    res = conservation_residual(H, sys)
    assert not res.is_zero()
    b, d = Scalar.symbol("b"), Scalar.symbol("d")
    assert res == RatFunc.from_poly((X * Y).scale(Scalar(2)) + X.scale(b) + Y.scale(d))


def test_qratio_examples():
    assert str(qratio_check("b", "d")) == "IrrationalGeneric"
    v = qratio_check(2, 3)
    assert v.name == "Rational" and v.value == Fraction(3, 2)
    v = qratio_check(1.0, 0.5000000000001)
    assert v.name == "LikelyRational" and v.value == Fraction(1, 2)
    assert qratio_check(1.0, 2 ** 0.5).name == "Unknown"
    with pytest.raises(ZeroDivisionError):
        qratio_check(0, 1)


def _lv_traj(ic, d=2 ** 0.5, horizon=0.5):
    return integrate(lv_system(1, 1, 1, "d"), {"d": d}, ic, horizon, rtol=1e-10)


def test_ratio_probe_self_comparison():
    for ic in [(0.5, 0.25), (0.6, 0.3), (2.0, 0.1)]:
        tr = _lv_traj(ic)
        res = ratio_probe(tr, tr)
        assert res.name == "DependenceCandidate"
        assert res.epsilon == pytest.approx(1.0, abs=1e-6)


def test_ratio_probe_independent_trajectories():
    res = ratio_probe(_lv_traj((0.5, 0.25)), _lv_traj((0.6, 0.3)))
    assert res.name == "IndependentEvidence"
    other = integrate(lv_system(1, 1, 1, "d"), {"d": 3.0}, (0.6, 0.1), 0.5, rtol=1e-10)
    assert ratio_probe(_lv_traj((0.5, 0.25)), other).name == "IndependentEvidence"


def test_ratio_probe_denominator_through_zero():
    # x - y changes sign along this trajectory
    tr = _lv_traj((0.3, 0.25), horizon=1.0)
    diff = tr.x - tr.y
    assert diff.min() < 0 < diff.max()
    res = ratio_probe(_lv_traj((0.5, 0.25)), tr)
    assert res.name == "Inconclusive" and res.diagnostic
