"""Exact elements of Q(params), the coefficient field.

Parameter-free values are stored as ``Fraction``.  Anything that mentions a
parameter symbol is stored as an element of a sympy ``FracField`` over QQ.
The field only ever grows: registering a new symbol rebuilds it with the new
generator appended, and older elements are lifted on first use.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import sympy
from sympy.polys.domains import QQ
from sympy.polys.fields import FracField

_lock = threading.Lock()
_names: list[str] = []
_field: FracField | None = None
_gen_index: dict[str, int] = {}


def _register(names: Iterable[str]) -> FracField:
    global _field
    with _lock:
        fresh = [n for n in names if n not in _gen_index]
        if fresh or _field is None:
            for n in fresh:
                _gen_index[n] = len(_names)
                _names.append(n)
            _field = FracField(sympy.symbols(_names or ["_unused"]), QQ)
        return _field


def _current_field() -> FracField:
    return _field if _field is not None else _register([])


def _lift(elem):
    fld = _current_field()
    if elem.field is fld:
        return elem
    return elem.set_field(fld)


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


class Scalar:
    """Immutable element of Q(params)."""

    __slots__ = ("_q", "_f")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            self._q, self._f = value._q, value._f
        elif isinstance(value, (int, Fraction, Rational)):
            self._q, self._f = Fraction(value), None
        elif isinstance(value, str):
            q = Fraction(value)
            self._q, self._f = q, None
        else:
            raise TypeError(f"cannot make a Scalar from {type(value).__name__}")

    @classmethod
    def _wrap(cls, elem) -> "Scalar":
        s = cls.__new__(cls)
        num, den = elem.numer, elem.denom
        if num.is_ground and den.is_ground:
            s._q = _to_fraction(num.LC if num else QQ.zero) / _to_fraction(den.LC)
            s._f = None
        else:
            s._q, s._f = None, elem
        return s

    @classmethod
    def symbol(cls, name: str) -> "Scalar":
        fld = _register([name])
        return cls._wrap(fld.gens[_gen_index[name]])

    # -- views -------------------------------------------------------------
    def _elem(self):
        if self._f is not None:
            return _lift(self._f)
        fld = _current_field()
        return fld(QQ(self._q.numerator, self._q.denominator))

    def as_rational(self) -> Fraction | None:
        return self._q

    @property
    def is_rational(self) -> bool:
        return self._q is not None

    def is_zero(self) -> bool:
        return self._q is not None and self._q == 0

    def is_one(self) -> bool:
        return self._q is not None and self._q == 1

    def symbols(self) -> frozenset[str]:
        if self._f is None:
            return frozenset()
        e = _lift(self._f)
        used = set()
        for poly in (e.numer, e.denom):
            for mon in poly.monoms():
                used.update(i for i, k in enumerate(mon) if k)
        return frozenset(_names[i] for i in used)

    def numer_denom_terms(self):
        """((numerator terms), (denominator terms)) as {name->exp} dicts with Fraction coefficients.

        The denominator is scaled to integer coefficients with content 1 and a
        positive leading term; the numerator absorbs the scaling.
        """
        if self._f is None:
            return [({}, self._q)], [({}, Fraction(1))]
        e = _lift(self._f)
        num = [(_mon_dict(m), _to_fraction(c)) for m, c in e.numer.terms()]
        den = [(_mon_dict(m), _to_fraction(c)) for m, c in e.denom.terms()]
        den.sort(key=lambda t: mono_sort_key(t[0]))
        scale = _primitive_scale([c for _, c in den])
        if den[0][1] * scale < 0:
            scale = -scale
        den = [(m, c * scale) for m, c in den]
        num = [(m, c * scale) for m, c in num]
        num.sort(key=lambda t: mono_sort_key(t[0]))
        return num, den

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            return Scalar(self._q + other._q)
        if self._q == 0:
            return other
        if other._q == 0:
            return self
        return Scalar._wrap(self._elem() + other._elem())

    __radd__ = __add__

    def __neg__(self):
        if self._q is not None:
            return Scalar(-self._q)
        return Scalar._wrap(-_lift(self._f))

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self._q is not None and other._q is not None:
            return Scalar(self._q * other._q)
        if self.is_zero() or other.is_zero():
            return ZERO
        if self._q == 1:
            return other
        if other._q == 1:
            return self
        return Scalar._wrap(self._elem() * other._elem())

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Scalar")
        if self._q is not None:
            return Scalar(1 / self._q)
        return Scalar._wrap(1 / _lift(self._f))

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("Scalar powers must be integers")
        if k < 0:
            return self.inverse() ** (-k)
        if self._q is not None:
            return Scalar(self._q ** k)
        return Scalar._wrap(_lift(self._f) ** k)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return False
        if self._q is not None and other._q is not None:
            return self._q == other._q
        if (self._q is None) != (other._q is None):
            return False
        return (self - other).is_zero()

    def __hash__(self):
        if self._q is not None:
            return hash(self._q)
        return hash(str(self))

    def __bool__(self):
        return not self.is_zero()

    # -- calculus and substitution ------------------------------------------
    def diff(self, name: str) -> "Scalar":
        if self._f is None or name not in _gen_index:
            return ZERO
        e = _lift(self._f)
        return Scalar._wrap(e.diff(e.field.gens[_gen_index[name]]))

    def subs(self, mapping: Mapping[str, "Scalar"]) -> "Scalar":
        """Simultaneous substitution of symbols by Scalars."""
        if self._f is None:
            return self
        syms = self.symbols()
        live = {k: _coerce(v) for k, v in mapping.items() if k in syms}
        if not live:
            return self
        if any(v.symbols() & live.keys() for v in live.values()):
            e = _lift(self._f)
            return _eval_poly(e.numer, live) / _eval_poly(e.denom, live)
        e = _lift(self._f)
        num, den = e.numer, e.denom
        for name, value in live.items():
            num, den = _subs_one(num, den, _gen_index[name], value)
        return Scalar._wrap(_current_field().new(num, den))

    def numerator(self) -> "Scalar":
        """Numerator as a polynomial Scalar; the denominator is dropped."""
        if self._f is None:
            return self
        e = _lift(self._f)
        return Scalar._wrap(e.field.new(e.numer))

    def evaluate(self, values: Mapping[str, float]) -> float:
        if self._q is not None:
            return float(self._q)
        e = _lift(self._f)
        return _eval_float(e.numer, values) / _eval_float(e.denom, values)

    def to_sympy(self):
        if self._q is not None:
            return sympy.Rational(self._q.numerator, self._q.denominator)
        return _lift(self._f).as_expr()

    @classmethod
    def from_sympy(cls, expr) -> "Scalar":
        expr = sympy.sympify(expr)
        names = sorted(str(s) for s in expr.free_symbols)
        fld = _register(names)
        return cls._wrap(fld.from_expr(expr))

    def __str__(self):
        from ..exprio import format_scalar
        return format_scalar(self)

    def __repr__(self):
        return f"Scalar({str(self)!r})"


def _mon_dict(mon) -> dict[str, int]:
    return {_names[i]: k for i, k in enumerate(mon) if k}


def mono_sort_key(mon: Mapping[str, int]):
    """Sort key for a parameter monomial: graded, then lexicographic with a > b > ..."""
    deg = sum(mon.values())
    names = sorted(mon)
    # lexicographic descending: compare exponent of the alphabetically first names
    return (-deg, tuple((n, -mon[n]) for n in names))


def _primitive_scale(coeffs: list[Fraction]) -> Fraction:
    from math import gcd, lcm
    den = 1
    for c in coeffs:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for i in ints:
        g = gcd(g, i)
    return Fraction(den, g or 1)


def _split_by_gen(poly, i):
    ring = poly.ring
    groups: dict[int, dict] = {}
    for mon, c in poly.terms():
        mm = list(mon)
        k = mm[i]
        mm[i] = 0
        groups.setdefault(k, {})[tuple(mm)] = c
    return {k: ring.from_dict(v) for k, v in groups.items()}


def _subs_one(num, den, i, value: "Scalar"):
    """Substitute gen i by value = A/B in num/den, staying inside the polynomial ring."""
    ve = value._elem()
    A, B = ve.numer, ve.denom
    ring = num.ring
    if A.ring is not ring:
        A, B = A.set_ring(ring), B.set_ring(ring)

    def homog(poly):
        if not poly:
            return ring.zero, 0
        parts = _split_by_gen(poly, i)
        n = max(parts)
        apow, bpow = [ring.one], [ring.one]
        for _ in range(n):
            apow.append(apow[-1] * A)
            bpow.append(bpow[-1] * B)
        total = ring.zero
        for k, c in parts.items():
            total += c * apow[k] * bpow[n - k]
        return total, n

    pn, dn = homog(num)
    pd, dd = homog(den)
    if dd >= dn:
        pn = pn * B ** (dd - dn)
    else:
        pd = pd * B ** (dn - dd)
    return pn, pd


def _eval_poly(poly, live: Mapping[str, Scalar]) -> Scalar:
    total = ZERO
    for mon, c in poly.terms():
        term = Scalar(_to_fraction(c))
        rest = [0] * len(mon)
        for i, k in enumerate(mon):
            if not k:
                continue
            name = _names[i]
            if name in live:
                term = term * live[name] ** k
            else:
                rest[i] = k
        if any(rest):
            fld = _current_field()
            term = term * Scalar._wrap(_monomial(fld, rest))
        total = total + term
    return total


def _monomial(fld, exps):
    m = fld.one
    for g, k in zip(fld.gens, exps):
        if k:
            m = m * g ** k
    return m


def _eval_float(poly, values: Mapping[str, float]) -> float:
    total = 0.0
    for mon, c in poly.terms():
        term = float(_to_fraction(c))
        for i, k in enumerate(mon):
            if k:
                name = _names[i]
                if name not in values:
                    raise KeyError(f"no numeric value for parameter {name!r}")
                term *= float(values[name]) ** k
        total += term
    return total


def _coerce(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    return NotImplemented


ZERO = Scalar(0)
ONE = Scalar(1)
