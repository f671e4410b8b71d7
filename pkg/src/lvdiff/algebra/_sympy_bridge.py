"""Conversions to sympy for the two operations delegated to it:
multivariate gcd and univariate factorization over Q."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import lcm

import sympy
from sympy.polys.domains import QQ
from sympy.polys.groebnertools import groebner as groebner_basis
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyRing, ring as sp_ring

from . import scalar as _s
from .mpoly import MPoly
from .scalar import Scalar

_VAR_PREFIX = "__v_"


def _common_denominator(p: MPoly) -> Scalar:
    """A Scalar L, polynomial in the params, such that L*p has polynomial coefficients."""
    den = Scalar(1)
    ints = 1
    for c in p.terms.values():
        if c.is_rational:
            ints = lcm(ints, c.as_rational().denominator)
            continue
        e = c._elem()
        d = Scalar._wrap(e.field(e.denom))
        den = den * d / _gcd_scalar_polys(den, d)
    return den * ints


def _gcd_scalar_polys(u: Scalar, v: Scalar) -> Scalar:
    if u.is_rational or v.is_rational:
        return Scalar(1)
    eu, ev = u._elem(), v._elem()
    g = eu.numer.gcd(ev.numer)
    return Scalar._wrap(eu.field(g))


def _to_ring(polys: list[MPoly]):
    gens = polys[0].gens
    pnames = list(_s._names)
    R, *_ = sp_ring(pnames + [_VAR_PREFIX + g for g in gens], QQ)
    out = []
    for p in polys:
        scaled = p.scale(_common_denominator(p))
        d = {}
        for m, c in scaled.terms.items():
            if c.is_rational:
                q = c.as_rational()
                d[(0,) * len(pnames) + m] = QQ(q.numerator, q.denominator)
                continue
            e = c._elem()
            num, den = e.numer, e.denom
            if not den.is_ground:
                raise ArithmeticError("coefficient still has a parameter denominator")
            dq = den.LC
            for pm, pc in num.terms():
                pm = tuple(pm) + (0,) * (len(pnames) - len(pm))
                key = pm + m
                d[key] = d.get(key, QQ.zero) + pc / dq
        out.append(R.from_dict(d) if d else R.zero)
    return R, pnames, out


def _from_ring(elem, pnames, gens) -> MPoly:
    np_ = len(pnames)
    fld = _s._current_field()
    groups: dict[tuple, dict] = {}
    for mon, c in elem.terms():
        groups.setdefault(tuple(mon[np_:]), {})[tuple(mon[:np_]) + (0,) * (len(fld.gens) - np_)] = c
    terms = {}
    for vm, coeffs in groups.items():
        if len(fld.gens) == 0:
            terms[vm] = Scalar(0)
            continue
        poly = fld.ring.from_dict(coeffs)
        terms[vm] = Scalar._wrap(fld.new(poly))
    return MPoly(gens, terms)


def multivariate_gcd(a: MPoly, b: MPoly) -> MPoly:
    a, b = a._align(b)
    if not _s._names:
        _s._register([])
    R, pnames, (ra, rb) = _to_ring([a, b])
    g = ra.gcd(rb)
    return _from_ring(g, pnames, a.gens).monic()


def factor_rational_univariate(p: MPoly, var: str) -> list[tuple[MPoly, int]]:
    """Irreducible factors over Q of a parameter-free univariate polynomial (monic)."""
    t = sympy.Symbol(var)
    expr = 0
    i = p.gens.index(var)
    for m, c in p.terms.items():
        q = c.as_rational()
        if q is None:
            raise ValueError("factorization over Q needs parameter-free coefficients")
        expr += sympy.Rational(q.numerator, q.denominator) * t ** m[i]
    _, facs = sympy.factor_list(sympy.Poly(expr, t, domain="QQ"))
    out = []
    for f, k in facs:
        coeffs = f.all_coeffs()[::-1]
        terms = {}
        for j, cj in enumerate(coeffs):
            if cj != 0:
                mono = tuple(j if g == var else 0 for g in p.gens)
                terms[mono] = Scalar(Fraction(int(cj.p), int(cj.q)))
        out.append((MPoly(p.gens, terms).monic(), int(k)))
    out.sort(key=lambda fk: (fk[0].total_degree(), str(fk[0])))
    return out


# -- ideals in the case parameters -------------------------------------------------
# Every symbol is a ring variable here, system parameters included.  Reduction
# to zero is then still a sound zero test; a basis element free of the unknowns
# would pin the system parameters, which generic parameters never satisfy.

@lru_cache(maxsize=64)
def _grevlex_ring(names: tuple[str, ...]):
    return PolyRing(names, QQ, grevlex)


class _Frame:
    """A small grevlex ring over just the symbols in play."""

    def __init__(self, scalars, unknowns: frozenset[str]):
        fld = _s._current_field()
        self.field = fld
        all_names = [str(g) for g in fld.symbols]
        used = set()
        for e in scalars:
            used |= e.symbols()
        self.idx = [i for i, n in enumerate(all_names) if n in used]
        names = tuple(all_names[i] for i in self.idx) or ("_unused",)
        self.ring = _grevlex_ring(names)
        self.unknown_pos = [k for k, i in enumerate(self.idx) if all_names[i] in unknowns]
        self.width = len(all_names)

    def to_ring(self, e: Scalar):
        numer = e._elem().numer
        return self.ring.from_dict({tuple(m[i] for i in self.idx) or (0,): c for m, c in numer.items()})

    def to_scalar(self, p) -> Scalar:
        d = {}
        for m, c in p.items():
            full = [0] * self.width
            for k, i in enumerate(self.idx):
                full[i] = m[k]
            d[tuple(full)] = c
        return Scalar._wrap(self.field.new(self.field.ring.from_dict(d)))

    def mentions_unknown(self, p) -> bool:
        return any(m[k] for m in p.monoms() for k in self.unknown_pos)


def ideal_basis(polys: list[Scalar], unknowns: frozenset[str]) -> list[Scalar] | None:
    """Reduced Groebner basis of the numerators; None when the branch is empty."""
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        return []
    if any(p.is_rational for p in polys):
        return None
    fr = _Frame(polys, unknowns)
    G = groebner_basis([fr.to_ring(p) for p in polys], fr.ring)
    if any(not fr.mentions_unknown(g) for g in G):
        return None
    return [fr.to_scalar(g) for g in G]


@lru_cache(maxsize=4096)
def ideal_reduce(e: Scalar, basis: tuple[Scalar, ...], unknowns: frozenset[str]) -> Scalar:
    """Normal form of e modulo the basis; the denominator of e is carried along."""
    if not basis or e.is_rational or not (e.symbols() & unknowns):
        return e
    num = e.numerator()
    fr = _Frame((num,) + basis, unknowns)
    r = fr.to_ring(num).rem([fr.to_ring(b) for b in basis])
    return fr.to_scalar(r) / (num / e)
