import random
from fractions import Fraction

import pytest

import _gen
from lvdiff.algebra.mpoly import MPoly
from lvdiff.algebra.ratfunc import RatFunc
from lvdiff.algebra.scalar import Scalar
from lvdiff.exprio import SymbolTable, parse_poly, parse_ratfunc
from lvdiff.lode import (HasAlgebraic, LinearOdeProblem, NoAlgebraic, NoneFound, Undecided,
                         algebraic_solution_test, lemma_family_check, rational_solution_search)

T = SymbolTable(("t",), ("alpha", "beta"))
alpha, beta = Scalar.symbol("alpha"), Scalar.symbol("beta")


def R(text):
    return parse_ratfunc(text, T)


def _witness_recomposes(F, verdict):
    total = RatFunc.from_poly(MPoly.const(0, F.gens))
    for g, e in verdict.witness:
        total = total + RatFunc(g.diff("t").scale(Scalar(e)), g)
    return total == F


def test_half_integer_residue():
    v = algebraic_solution_test(R("3/(2*t)"))
    assert isinstance(v, HasAlgebraic)
    assert [(str(g), e) for g, e in v.witness] == [("t", Fraction(3, 2))]


@pytest.mark.parametrize("text, reason", [
    ("alpha/t", "non-rational residue"),
    ("1/t + 1", "nonzero polynomial part"),
    ("1/t^2", "higher-order pole"),
    ("1/(t^2 + 1)", "non-rational residue"),
])
def test_negative_verdicts(text, reason):
    v = algebraic_solution_test(R(text))
    assert isinstance(v, NoAlgebraic) and v.reason == reason


def test_irreducible_quadratic_with_rational_residue():
    v = algebraic_solution_test(R("2*t/(t^2 + 1)"))
    assert isinstance(v, HasAlgebraic) and [(str(g), e) for g, e in v.witness] == [("t^2 + 1", 1)]


def test_lemma_family_examples():
    assert isinstance(lemma_family_check(alpha, Scalar(-1), -beta), NoAlgebraic)
    v = lemma_family_check(Scalar(2), Scalar(0), Scalar(1))
    assert isinstance(v, Undecided) and "lemma inapplicable" in v.reason
    assert isinstance(lemma_family_check(Scalar(1), Scalar(-1), Scalar(5), family="twod"), NoAlgebraic)
    with pytest.raises(ValueError):
        lemma_family_check(Scalar(1), Scalar(-1), Scalar(0), family="twod")


def test_lemma_without_linear_term_has_rational_solution():
    # with c1 = 0 the equation v' = (q/t) v + c2 is solved by c2 t / (1 - q)
    v = lemma_family_check(alpha, Scalar(0), Scalar(1))
    assert isinstance(v, HasAlgebraic)
    assert LinearOdeProblem(R("alpha/t"), Scalar(1)).residual(v.solution).is_zero()


def test_search_examples():
    v = rational_solution_search(R("2/t"), Scalar(0), 3)
    assert isinstance(v, RatFunc) and v == R("t^2")
    v = rational_solution_search(R("-1/t"), Scalar(1), 2)
    assert v == R("t/2")


def test_search_alpha_over_t_inhomogeneous():
    v = rational_solution_search(R("alpha/t"), Scalar(1), 4)
    assert isinstance(v, RatFunc) and v == R("-t/(alpha - 1)")


def test_search_finds_nothing_for_lemma_case():
    v = rational_solution_search(R("(1 - alpha)/t - 1"), -beta, 4)
    assert isinstance(v, NoneFound)
    with pytest.raises(ValueError):
        rational_solution_search(R("1/t"), Scalar(0), -1)


def test_witness_soundness_random():
    rng = random.Random(41)
    t = MPoly.var("t", ("t",))
    for _ in range(150):
        F = RatFunc.from_poly(MPoly.const(0, ("t",)))
        for _ in range(rng.randint(1, 3)):
            a = MPoly.const(_gen.frac(rng, -4, 4), ("t",))
            F = F + RatFunc(MPoly.const(_gen.frac(rng, -3, 3, (1, 2, 3)), ("t",)), t - a)
        if F.is_zero():
            continue
        v = algebraic_solution_test(F, "t")
        assert isinstance(v, HasAlgebraic) and _witness_recomposes(F, v)


def test_search_consistent_with_criterion():
    rng = random.Random(43)
    t = MPoly.var("t", ("t",))
    for _ in range(60):
        kind = rng.random()
        F = RatFunc.from_poly(MPoly.const(0, ("t",)))
        for _ in range(rng.randint(1, 2)):
            a = MPoly.const(rng.randint(-3, 3), ("t",))
            if kind < 0.5:
                num = MPoly.const(rng.randint(-2, 3), ("t",))
            else:
                num = MPoly.const(_gen.frac(rng, -3, 3), ("t",))
            F = F + RatFunc(num, t - a)
        if rng.random() < 0.2:
            F = F + RatFunc.from_poly(MPoly.const(1, ("t",)))
        if F.is_zero():
            continue
        found = rational_solution_search(F, Scalar(0), 3, "t")
        if isinstance(found, RatFunc):
            verdict = algebraic_solution_test(F, "t")
            assert isinstance(verdict, HasAlgebraic)
            assert all(Fraction(e).denominator == 1 for _, e in verdict.witness)


def test_lemma_agrees_with_search_randomized():
    rng = random.Random(47)
    for _ in range(50):
        q = Scalar(_gen.frac(rng, -3, 3)) + Scalar(rng.choice([1, -1, 2])) * alpha
        c1 = Scalar(rng.choice([-2, -1, 1, 3]))
        c2 = Scalar(_gen.frac(rng, -3, 3)) + (beta if rng.random() < 0.5 else Scalar(0))
        if c2.is_zero():
            c2 = Scalar(1)
        verdict = lemma_family_check(q, c1, c2)
        assert isinstance(verdict, NoAlgebraic)
        F = RatFunc(MPoly.const(q, ("t",)), MPoly.var("t", ("t",))) + RatFunc.from_poly(MPoly.const(c1, ("t",)))
        assert isinstance(rational_solution_search(F, c2, 3, "t"), NoneFound)
