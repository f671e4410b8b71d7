"""Reduced rational functions over Q(params)."""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .mpoly import MPoly, poly_gcd
from .scalar import Scalar


class RatFunc:
    """num/den with gcd 1 and a monic denominator (graded-lex leading coefficient 1)."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, reduce: bool = True):
        num = _as_poly(num)
        den = MPoly.const(1, num.gens) if den is None else _as_poly(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        num, den = num._align(den)
        if reduce:
            num, den = _reduce(num, den)
        self.num, self.den = num, den

    @property
    def gens(self):
        return self.num.gens

    @classmethod
    def from_poly(cls, p: MPoly) -> "RatFunc":
        return cls(p, MPoly.const(1, p.gens), reduce=False)

    def with_gens(self, gens) -> "RatFunc":
        return RatFunc(self.num.with_gens(gens), self.den.with_gens(gens), reduce=False)

    def _align(self, other: "RatFunc"):
        if self.gens == other.gens:
            return self, other
        gens = set(self.gens) | set(other.gens)
        return self.with_gens(gens), other.with_gens(gens)

    # -- predicates ------------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> MPoly:
        if not self.is_polynomial():
            raise ValueError("rational function is not a polynomial")
        return self.num.scale(self.den.constant_value().inverse())

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Scalar:
        return self.num.constant_value() / self.den.constant_value()

    # -- arithmetic --------------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        a, b = self._align(other)
        if a.den == b.den:
            return RatFunc(a.num + b.num, a.den)
        return RatFunc(a.num * b.den + b.num * a.den, a.den * b.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        a, b = self._align(other)
        return RatFunc(a.num * b.num, a.den * b.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return _coerce(other, self.gens) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer powers only")
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self.num ** k, self.den ** k, reduce=False)

    def __eq__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return False
        a, b = self._align(other)
        return (a.num * b.den - b.num * a.den).is_zero()

    def __hash__(self):
        return hash(str(self))

    # -- calculus ----------------------------------------------------------------
    def diff(self, name: str) -> "RatFunc":
        n, d = self.num, self.den
        return RatFunc(n.diff(name) * d - n * d.diff(name), d * d)

    def subs_params(self, mapping: Mapping[str, Scalar]) -> "RatFunc":
        return RatFunc(self.num.subs_params(mapping), self.den.subs_params(mapping))

    def compose(self, mapping: Mapping[str, "RatFunc | MPoly"]) -> "RatFunc":
        """Substitute rational functions for generators."""
        mapping = {k: _coerce(v, ()) for k, v in mapping.items()}
        return _compose_poly(self.num, mapping) / _compose_poly(self.den, mapping)

    def evaluate(self, values, params=None) -> float:
        return self.num.evaluate(values, params) / self.den.evaluate(values, params)

    def __str__(self):
        from ..exprio import format_ratfunc
        return format_ratfunc(self)

    def __repr__(self):
        return f"RatFunc({str(self)!r})"


def _as_poly(x) -> MPoly:
    if isinstance(x, MPoly):
        return x
    if isinstance(x, (Scalar, int, Fraction)):
        return MPoly.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


def _coerce(x, gens):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, MPoly):
        return RatFunc.from_poly(x)
    if isinstance(x, (Scalar, int, Fraction)):
        return RatFunc.from_poly(MPoly.const(x, gens))
    return NotImplemented


def _reduce(num: MPoly, den: MPoly):
    if num.is_zero():
        return num, MPoly.const(1, num.gens)
    if den.is_constant():
        c = den.constant_value()
        return num.scale(c.inverse()), MPoly.const(1, num.gens)
    if den.is_monomial():
        (dm, dc), = den.terms.items()
        low = list(dm)
        for m in num.terms:
            low = [min(x, y) for x, y in zip(low, m)]
        shift = tuple(low)
        inv = dc.inverse()
        n = MPoly(num.gens, {tuple(x - s for x, s in zip(m, shift)): c * inv for m, c in num.terms.items()})
        d = MPoly(num.gens, {tuple(x - s for x, s in zip(dm, shift)): Scalar(1)})
        return n, d
    g = poly_gcd(num, den)
    if not g.is_constant():
        num = num.exact_div(g)
        den = den.exact_div(g)
    _, lc = den.leading()
    inv = lc.inverse()
    return num.scale(inv), den.scale(inv)


def _compose_poly(p: MPoly, mapping) -> RatFunc:
    live = {k: v for k, v in mapping.items() if k in p.gens}
    if not live:
        return RatFunc.from_poly(p)
    polys = {k: v.num for k, v in live.items() if v.is_polynomial() and v.den == 1}
    if len(polys) == len(live):
        return RatFunc.from_poly(p.compose(polys))
    keep = tuple(g for g in p.gens if g not in live)
    total = RatFunc.from_poly(MPoly.const(0, keep))
    for m, c in p.terms.items():
        term = RatFunc.from_poly(MPoly.monomial(keep, {g: k for g, k in zip(p.gens, m) if k and g not in live}, c))
        for g, k in zip(p.gens, m):
            if k and g in live:
                term = term * live[g] ** k
        total = total + term
    return total
