"""Algebraic solutions of first-order linear ODEs v' = F v + c over Q(params)(t)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .algebra.linalg import rref
from .algebra.mpoly import MPoly, _main_var
from .algebra.partfrac import factor_denominator, partial_fractions, residue_split
from .algebra.ratfunc import RatFunc
from .algebra.scalar import ONE, ZERO, Scalar


@dataclass
class LinearOdeProblem:
    """v' = F v + c in the independent variable ``var`` (derivation d/dvar)."""

    F: RatFunc
    c: Scalar = ZERO
    var: str = "t"

    def residual(self, v: RatFunc) -> RatFunc:
        return v.diff(self.var) - self.F * v - RatFunc.from_poly(MPoly.const(self.c, v.gens))


@dataclass(frozen=True)
class HasAlgebraic:
    witness: tuple[tuple[MPoly, Fraction], ...] = ()
    solution: RatFunc | None = None

    name = "HasAlgebraic"


@dataclass(frozen=True)
class NoAlgebraic:
    reason: str
    detail: str = ""

    name = "NoAlgebraic"


@dataclass(frozen=True)
class Undecided:
    reason: str

    name = "Undecided"


AlgSolVerdict = Union[HasAlgebraic, NoAlgebraic, Undecided]


def _var_of(F: RatFunc, var: str | None) -> str:
    if var:
        return var
    try:
        return _main_var(F.num, F.den)
    except ValueError:
        raise ValueError("coefficient must be univariate") from None


def algebraic_solution_test(F: RatFunc, var: str | None = None) -> AlgSolVerdict:
    """Decide whether y' = F y has a nonzero solution algebraic over Q(params)(var)."""
    var = _var_of(F, var)
    if F.is_zero():
        return HasAlgebraic(())
    pf = partial_fractions(F, var)
    if not pf.polynomial_part.is_zero():
        return NoAlgebraic("nonzero polynomial part", str(pf.polynomial_part))
    for term in pf.terms:
        if term.multiplicity > 1:
            return NoAlgebraic("higher-order pole", f"({term.factor})^{term.multiplicity}")
    witness: list[tuple[MPoly, Fraction]] = []
    for term in pf.terms:
        split = residue_split(F, term.factor, var)
        if split is None:
            return NoAlgebraic("non-rational residue", str(term.factor))
        witness.extend(split)
    check = sum((RatFunc(g.diff(var).scale(Scalar(e)), g) for g, e in witness), RatFunc.from_poly(MPoly.const(0, F.gens)))
    if not check == F:
        raise AssertionError("residue witness does not recompose the coefficient")
    return HasAlgebraic(tuple(witness))


def _is_rational_constant(s: Scalar) -> bool:
    return s.as_rational() is not None


def lemma_family_check(q: Scalar, c1: Scalar, c2: Scalar, family: str = "classical",
                       var: str = "t") -> AlgSolVerdict:
    """Algebraic solutions of v' = (q/t + c1) v + c2 for the two lemma families."""
    q, c1, c2 = (x if isinstance(x, Scalar) else Scalar(x) for x in (q, c1, c2))
    t = MPoly.var(var)
    F = RatFunc(MPoly.const(q, (var,)), t) + RatFunc.from_poly(MPoly.const(c1, (var,)))
    if family == "twod":
        if not (q == ONE and c1 == Scalar(-1)):
            raise ValueError("the twod family is v' = (1/t - 1) v + c")
        if c2.is_zero():
            raise ValueError("the twod family requires c != 0")
        return NoAlgebraic("twod lemma: v' = (1/t - 1) v + c with c != 0")
    if family != "classical":
        raise ValueError(f"unknown family {family!r}")
    if not _is_rational_constant(q):
        if c1.is_zero() and not c2.is_zero():
            # the lemma does not cover c1 = 0: v = c2*t/(1 - q) is a rational solution
            sol = RatFunc(t.scale(c2 / (ONE - q)))
            if not LinearOdeProblem(F, c2, var).residual(sol).is_zero():
                raise AssertionError("closed-form solution failed verification")
            return HasAlgebraic((), sol)
        if c2.is_zero():
            return algebraic_solution_test(F, var)
        return NoAlgebraic("q is not rational and c1 != 0")
    if not c2.is_zero():
        return Undecided("lemma inapplicable: q is rational")
    return algebraic_solution_test(F, var)


@dataclass(frozen=True)
class NoneFound:
    searched: int

    name = "NoneFound"


def rational_solution_search(F: RatFunc, c: Scalar, degree_bound: int, var: str | None = None) -> RatFunc | NoneFound:
    """Search v = A/B with B a product of denominator factors of F and deg A <= bound."""
    if degree_bound < 0:
        raise ValueError("degree bound must be non-negative")
    var = _var_of(F, var) if not F.is_constant() else (var or "t")
    c = c if isinstance(c, Scalar) else Scalar(c)
    gens = tuple(sorted(set(F.gens) | {var}))
    F = F.with_gens(gens)
    factors = [p for p, _, _ in factor_denominator(F.den, var)] if not F.den.is_constant() else []
    tried = 0
    candidates = sorted(itertools.product(range(degree_bound + 1), repeat=len(factors)), key=lambda ks: (sum(ks), ks))
    for ks in candidates:
        B = MPoly.const(1, gens)
        for p, k in zip(factors, ks):
            B = B * p.with_gens(gens) ** k
        tried += 1
        v = _solve_numerator(F, c, B, degree_bound, var, gens)
        if v is not None:
            return v
    return NoneFound(tried)


def _solve_numerator(F: RatFunc, c: Scalar, B: MPoly, n: int, var: str, gens) -> RatFunc | None:
    # den(F) (A' B - A B') - num(F) A B = c den(F) B^2, linear in the coefficients of A
    dF, nF = F.den, F.num
    Bp = B.diff(var)
    cols = []
    for j in range(n + 1):
        Aj = MPoly.monomial(gens, {var: j})
        cols.append(dF * (Aj.diff(var) * B - Aj * Bp) - nF * Aj * B)
    rhs = (dF * B * B).scale(c)
    i = gens.index(var)
    rows = sorted({m for col in cols + [rhs] for m in col.terms}, key=lambda m: m[i])
    M = [[col.terms.get(m, ZERO) for col in cols] + [rhs.terms.get(m, ZERO)] for m in rows]
    if not M:
        return None
    R, piv = rref(M)
    if n + 1 in piv:
        return None  # inconsistent
    free = [j for j in range(n + 1) if j not in piv]
    coeffs = [ZERO] * (n + 1)
    for row, pc in enumerate(piv):
        coeffs[pc] = R[row][n + 1]
    if c.is_zero():
        if not free:
            return None
        f = free[0]
        coeffs = [ZERO] * (n + 1)
        coeffs[f] = ONE
        for row, pc in enumerate(piv):
            coeffs[pc] = -R[row][f]
    A = MPoly(gens, {tuple(j if g == var else 0 for g in gens): cj for j, cj in enumerate(coeffs)})
    if A.is_zero():
        return None
    v = RatFunc(A, B)
    if not LinearOdeProblem(F, c, var).residual(v).is_zero():
        raise AssertionError("linear solve produced a non-solution")
    return v
