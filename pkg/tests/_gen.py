"""Random generators shared by the property suites."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from lvdiff.algebra.mpoly import MPoly
from lvdiff.algebra.ratfunc import RatFunc
from lvdiff.algebra.scalar import Scalar


def frac(rng: random.Random, lo: int = -5, hi: int = 5, dens=(1, 1, 1, 2, 3)) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(dens))


def scalar(rng: random.Random, params: Sequence[str] = (), p_param: float = 0.3) -> Scalar:
    s = Scalar(frac(rng))
    for p in params:
        if rng.random() < p_param:
            s = s + Scalar(frac(rng)) * Scalar.symbol(p)
    return s


def poly(rng: random.Random, gens: Sequence[str], maxdeg: int = 2, nterms: int = 3,
         params: Sequence[str] = (), p_param: float = 0.3) -> MPoly:
    gens = tuple(gens)
    out = MPoly.const(0, gens)
    for _ in range(rng.randint(1, nterms)):
        exps = {}
        budget = rng.randint(0, maxdeg)
        for _ in range(budget):
            g = rng.choice(gens)
            exps[g] = exps.get(g, 0) + 1
        out = out + MPoly.monomial(gens, exps, scalar(rng, params, p_param))
    return out


def nonzero_poly(rng, gens, **kw) -> MPoly:
    while True:
        p = poly(rng, gens, **kw)
        if not p.is_zero():
            return p


def ratfunc(rng, gens, **kw) -> RatFunc:
    num = poly(rng, gens, **kw)
    den = nonzero_poly(rng, gens, maxdeg=1, nterms=2)
    return RatFunc(num, den)
