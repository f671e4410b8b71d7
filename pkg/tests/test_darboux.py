import random

import pytest

import _gen
from lvdiff.algebra.linalg import Condition, kernel, vanishes_on_branch
from lvdiff.algebra.mpoly import MPoly
from lvdiff.algebra.scalar import Scalar
from lvdiff.darboux import NotInvariant, darboux_search, ds_apply, invariant_check
from lvdiff.diffstruct import DiffTower, PlanarSystem, _deg_in
from lvdiff.exprio import SymbolTable, parse_poly, parse_system

XY = SymbolTable(("X", "Y"), ("a", "b", "c", "d"))
XYZ = SymbolTable(("X", "Y", "z"), ("b",))
LV = PlanarSystem.from_spec(parse_system("lv-classical"))
LV_BD = LV.subs_params({"a": Scalar(1), "c": Scalar(1)})
LV_BB = LV_BD.subs_params({"d": Scalar.symbol("b")})


def P(text, ctx=XY):
    return parse_poly(text, ctx)


def system(f, g, ctx=XY):
    return PlanarSystem("X", "Y", P(f, ctx), P(g, ctx))


def test_ds_apply_examples():
    assert ds_apply(LV, P("X*Y")) == P("a*X*Y^2 + c*X^2*Y + (b + d)*X*Y")
    assert ds_apply(LV, P("X")) == P("a*X*Y + b*X")
    assert ds_apply(LV, P("1")).is_zero()


def test_invariant_check_examples():
    assert invariant_check(LV, P("X*Y")) == P("a*Y + c*X + b + d")
    assert invariant_check(LV_BB, P("X - Y")) == P("b")
    res = invariant_check(LV_BD, P("X + Y"))
    assert isinstance(res, NotInvariant) and not res.remainder.is_zero()
    with pytest.raises(ValueError):
        invariant_check(LV, P("0"))


def test_generic_search_finds_only_axes():
    cert = darboux_search(LV_BD, 2)
    assert sorted(str(f.polynomial) for f in cert.irreducible) == ["X", "Y"]
    reducible = sorted(str(f.polynomial) for f in cert.families if f.reducible)
    assert reducible == ["X*Y", "X^2", "Y^2"]
    axes = {"X", "Y", "X*Y", "X^2", "Y^2"}
    assert {str(f.polynomial) for f in cert.families} == axes


def test_degenerate_search_finds_difference():
    cert = darboux_search(LV_BB, 1)
    fams = {str(f.polynomial): f for f in cert.families}
    assert set(fams) == {"X", "Y", "X - Y"}
    assert fams["X - Y"].cofactor == P("b")


def test_tower_search_finds_pencil():
    tower = DiffTower.build([("z", P("b*z", XYZ))])
    sys_ = PlanarSystem("X", "Y", P("X*Y + b*X", XYZ), P("X*Y + b*Y", XYZ), tower)
    cert = darboux_search(sys_, 1, basis=[P("1", XYZ), P("z", XYZ)])
    pencil = [f for f in cert.families if f.free_constants]
    assert len(pencil) == 1
    fam = pencil[0]
    lam = fam.free_constants[0]
    assert str(fam.polynomial) == f"{lam}*z + X - Y"
    assert fam.cofactor == P("b", XYZ)


def test_derivation_law():
    rng = random.Random(31)
    for _ in range(200):
        p = _gen.poly(rng, ("X", "Y"), params=("a", "b"))
        r = _gen.poly(rng, ("X", "Y"), params=("c", "d"))
        assert ds_apply(LV, p * r) == p * ds_apply(LV, r) + r * ds_apply(LV, p)


def test_cofactor_additivity():
    rng = random.Random(37)
    for _ in range(500):
        A = _gen.poly(rng, ("X", "Y"), maxdeg=1, params=("a", "b"))
        B = _gen.poly(rng, ("X", "Y"), maxdeg=1, params=("c", "d"))
        X, Y = MPoly.var("X", ("X", "Y")), MPoly.var("Y", ("X", "Y"))
        sys_ = PlanarSystem("X", "Y", X * A, Y * B)
        i, j, k, l = (rng.randint(0, 2) for _ in range(4))
        P1, P2 = X ** i * Y ** j, X ** k * Y ** l
        if rng.random() < 0.2:
            sys_, P1 = LV_BB, P("X - Y")
        q1, q2 = invariant_check(sys_, P1), invariant_check(sys_, P2)
        assert not isinstance(q1, NotInvariant) and not isinstance(q2, NotInvariant)
        assert invariant_check(sys_, P1 * P2) == q1 + q2


@pytest.mark.parametrize("sys_, N", [
    (LV, 1), (LV_BB, 2),
    (system("3*X + X*Y", "3*Y - 3 - X*Y"), 1),
    (system("-Y", "X"), 2),
])
def test_soundness_and_degree_bound(sys_, N):
    cert = darboux_search(sys_, N)
    for fam in cert.families:
        if fam.extension:
            resid = ds_apply(sys_, fam.polynomial) - fam.cofactor * fam.polynomial
            eqs = [Condition("eq", e) for e in fam.extension]
            assert all(vanishes_on_branch(c, eqs, cert.case_params) for c in resid.terms.values())
            continue
        assert invariant_check(sys_, fam.polynomial) == fam.cofactor
        assert _deg_in(fam.cofactor.num if hasattr(fam.cofactor, "num") else fam.cofactor, sys_.vars) \
            <= sys_.max_degree - 1


def _matches_family(fam, target: MPoly) -> bool:
    """Some choice of the free constants turns the family into a multiple of target."""
    poly = fam.polynomial
    lams = list(fam.free_constants)
    lead = max(target.terms, key=lambda m: (sum(m), m))
    target = target.scale(target.terms[lead].inverse())
    diff = poly - target
    if not lams:
        return diff.is_zero()
    # coefficients of diff are affine in the constants: solve [A | b] for a point
    rows = []
    for c in diff.terms.values():
        row = [c.diff(n) for n in lams]
        const = c.subs({n: Scalar(0) for n in lams})
        rows.append(row + [const])
    ker = kernel(rows)
    return any(not v[-1].is_zero() for v in ker)


@pytest.mark.parametrize("f, g, planted, N", [
    ("3*X + X*Y", "3*Y - 3 - X*Y", "X + Y - 1", 1),
    ("-Y", "X", "X^2 + Y^2 - 1", 2),
    ("X*(1 - Y)", "Y*(X - 2)", "X", 1),
    ("X + Y^2", "Y", "X - Y^2", 2),
    ("X^2 - 1", "2*X*Y", "X^2 - 1", 2),
])
def test_planted_invariants_recovered(f, g, planted, N):
    sys_ = system(f, g)
    target = P(planted)
    assert not isinstance(invariant_check(sys_, target), NotInvariant)
    cert = darboux_search(sys_, N)
    assert any(_matches_family(fam, target) for fam in cert.families), [str(x.polynomial) for x in cert.families]


def test_rotation_reports_complex_lines():
    cert = darboux_search(system("-Y", "X"), 1)
    assert cert.irreducible == []
    ext = cert.over_extensions
    assert ext and all(str(e) == "_q0^2 + 1" for f in ext for e in f.extension)


def test_bad_arguments():
    with pytest.raises(ValueError):
        darboux_search(LV, 0)
    with pytest.raises(ValueError):
        darboux_search(LV, 1, basis=[P("X")])
