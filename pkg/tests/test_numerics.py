import math

import numpy as np
import pytest

from lvdiff.algebra.mpoly import MPoly
from lvdiff.algebra.ratfunc import RatFunc
from lvdiff.algebra.scalar import Scalar
from lvdiff.brestovski import first_integral, lv_system
from lvdiff.diffstruct import LogLinearExpr, PlanarSystem
from lvdiff.exprio import SymbolTable, parse_poly
from lvdiff.numerics import (BLOW_UP, HORIZON_REACHED, closed_form_error_exp, common_grid,
                             conservation_drift, integrate, read_csv, relation_probe, write_csv)

TAB = SymbolTable(("X", "Y"), ())
GENS = ("X", "Y")
SQRT2 = math.sqrt(2)


def system(f, g):
    return PlanarSystem("X", "Y", parse_poly(f, TAB), parse_poly(g, TAB))


def lv(ic, horizon=1.0, rtol=1e-10):
    return integrate(lv_system(1, 1, 1, "d"), {"d": SQRT2}, ic, horizon, rtol=rtol)


def test_exponential_closed_form():
    tr = integrate(system("X", "Y"), {}, (1.0, 1.0), 1.0, rtol=1e-10)
    assert tr.termination == HORIZON_REACHED
    assert abs(tr.x[-1] - math.e) < 1e-8
    assert np.allclose(tr.x, np.exp(tr.t), rtol=1e-8)
    assert len(tr.t) >= 201
    assert np.all(np.diff(tr.t) > 0)


def test_blow_up_guard():
    tr = integrate(system("X^2", "0"), {}, (1.0, 0.5), 2.0)
    assert tr.termination == BLOW_UP
    assert tr.final_time < 1.0
    assert np.all(np.isfinite(tr.states))


def test_lv_trajectory_contract():
    tr = lv((0.5, 0.25))
    assert tr.termination in (HORIZON_REACHED, BLOW_UP)
    assert np.all(np.isfinite(tr.states))
    assert np.all(np.diff(tr.t) > 0)


def test_argument_validation():
    sys = system("X", "Y")
    for rtol in (1e-2, 1e-15):
        with pytest.raises(ValueError):
            integrate(sys, {}, (1.0, 1.0), 1.0, rtol=rtol)
    with pytest.raises(ValueError):
        integrate(sys, {}, (1.0, 1.0), -1.0)
    with pytest.raises(ValueError):
        integrate(sys, {}, (1.0, 1.0), 1.0, n_out=50)


def test_fifth_order_convergence():
    # halving the step should cut the error by about 2^5
    errs = [closed_form_error_exp(fixed_step=h) for h in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 16 <= coarse / fine <= 64


def test_error_shrinks_with_tolerance():
    errs = [closed_form_error_exp(rtol=10.0 ** -k) for k in (4, 6, 8, 10)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_conservation_drift_examples():
    tr = lv((0.5, 0.25))
    H = first_integral(lv_system(1, 1, 1, "d"))
    assert conservation_drift(H, tr) <= 1e-6
    XpY = LogLinearExpr(RatFunc.from_poly(MPoly.var("X", GENS) + MPoly.var("Y", GENS)), [])
    assert conservation_drift(XpY, tr) > 1e-3
    const = LogLinearExpr(RatFunc.from_poly(MPoly.const(Scalar(5), GENS)), [])
    assert conservation_drift(const, tr) == 0.0


def test_conservation_drift_scales_with_rtol():
    H = first_integral(lv_system(1, 1, 1, "d"))
    loose = conservation_drift(H, lv((0.5, 0.25), rtol=1e-8))
    tight = conservation_drift(H, lv((0.5, 0.25), rtol=1e-12))
    assert loose > tight


def test_conservation_drift_rejects_sign_change():
    tr = integrate(system("-1", "Y"), {}, (0.5, 1.0), 1.0)
    H = LogLinearExpr(RatFunc.from_poly(MPoly.const(Scalar(0), GENS)),
                      [(Scalar(1), RatFunc.from_poly(MPoly.var("X", GENS)))])
    with pytest.raises(ValueError):
        conservation_drift(H, tr)


def test_relation_probe_examples():
    tr = lv((0.5, 0.25))
    assert relation_probe([tr, tr], 1).ratio < 1e-10
    single = relation_probe([tr], 2)
    assert len(single.monomials) == 6
    assert single.verdict == "NoRelationEvidence"
    assert single.spectrum == sorted(single.spectrum, reverse=True)
    assert all(v >= 0 for v in single.spectrum)


def test_relation_probe_planted_relations():
    tr = lv((0.5, 0.25))
    grid = common_grid([tr])
    x, y = tr.x, tr.y
    for planted in (x * y + 3 * x, y ** 2 - x + 1, 2 * x - 5 * y):
        for maxdeg in (2, 3):
            rep = relation_probe([tr], maxdeg, columns=[planted])
            assert len(grid) == len(planted)
            assert rep.ratio < 1e-8, (maxdeg, rep.ratio)
            assert rep.verdict == "RelationEvidence"


def test_relation_probe_errors():
    tr = lv((0.5, 0.25))
    with pytest.raises(ValueError):
        relation_probe([], 2)
    with pytest.raises(ValueError):
        relation_probe([tr], 0)
    with pytest.raises(ValueError):
        relation_probe([tr, tr, tr], 4)


def test_csv_round_trip(tmp_path):
    tr = lv((0.5, 0.25))
    path = tmp_path / "traj.csv"
    write_csv(tr, path)
    t, states = read_csv(path)
    assert np.array_equal(t, tr.t)
    assert np.array_equal(states, tr.states)
