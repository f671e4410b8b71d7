"""Sparse multivariate polynomials with Scalar coefficients."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .scalar import ONE, ZERO, Scalar

Monomial = tuple[int, ...]


def _sc(c) -> Scalar:
    return c if isinstance(c, Scalar) else Scalar(c)


class MPoly:
    """Polynomial over Q(params) in a sorted tuple of generator names.

    Generators are kept in ASCII order, which makes ``X > Y > t > z`` in the
    graded-lexicographic monomial order used for leading terms.
    """

    __slots__ = ("gens", "terms")

    def __init__(self, gens: Iterable[str], terms: Mapping[Monomial, Scalar] | None = None):
        gens = tuple(gens)
        if list(gens) != sorted(set(gens)):
            raise ValueError(f"generators must be sorted and distinct: {gens}")
        self.gens = gens
        clean: dict[Monomial, Scalar] = {}
        for m, c in (terms or {}).items():
            if len(m) != len(gens):
                raise ValueError("monomial length does not match generators")
            c = _sc(c)
            if not c.is_zero():
                clean[tuple(m)] = c
        self.terms = clean

    # -- constructors --------------------------------------------------------
    @classmethod
    def const(cls, c, gens: Iterable[str] = ()) -> "MPoly":
        gens = tuple(sorted(set(gens)))
        return cls(gens, {(0,) * len(gens): _sc(c)})

    @classmethod
    def var(cls, name: str, gens: Iterable[str] = ()) -> "MPoly":
        gens = tuple(sorted(set(gens) | {name}))
        mon = tuple(1 if g == name else 0 for g in gens)
        return cls(gens, {mon: ONE})

    @classmethod
    def monomial(cls, gens: Iterable[str], exps: Mapping[str, int], c=1) -> "MPoly":
        gens = tuple(sorted(set(gens) | set(exps)))
        return cls(gens, {tuple(exps.get(g, 0) for g in gens): _sc(c)})

    # -- generator bookkeeping ----------------------------------------------
    def with_gens(self, gens: Iterable[str]) -> "MPoly":
        gens = tuple(sorted(set(gens)))
        if gens == self.gens:
            return self
        idx = {g: i for i, g in enumerate(gens)}
        missing = [g for g in self.gens if g not in idx]
        if missing:
            for m in self.terms:
                if any(m[self.gens.index(g)] for g in missing):
                    raise ValueError(f"cannot drop generators {missing} that occur")
        out: dict[Monomial, Scalar] = {}
        for m, c in self.terms.items():
            new = [0] * len(gens)
            for g, k in zip(self.gens, m):
                if k:
                    new[idx[g]] = k
            out[tuple(new)] = c
        p = MPoly.__new__(MPoly)
        p.gens, p.terms = gens, out
        return p

    def used_gens(self) -> tuple[str, ...]:
        return tuple(g for i, g in enumerate(self.gens) if any(m[i] for m in self.terms))

    def trimmed(self) -> "MPoly":
        return self.with_gens(self.used_gens())

    def _align(self, other: "MPoly"):
        if self.gens == other.gens:
            return self, other
        gens = set(self.gens) | set(other.gens)
        return self.with_gens(gens), other.with_gens(gens)

    # -- predicates ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Scalar:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()), ZERO)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        if name not in self.gens:
            return 0 if self.terms else -1
        i = self.gens.index(name)
        return max((m[i] for m in self.terms), default=-1)

    def param_symbols(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.terms.values():
            out |= c.symbols()
        return frozenset(out)

    # -- order ---------------------------------------------------------------
    @staticmethod
    def grlex_key(m: Monomial):
        return (sum(m), m)

    def leading(self) -> tuple[Monomial, Scalar]:
        m = max(self.terms, key=self.grlex_key)
        return m, self.terms[m]

    def monic(self) -> "MPoly":
        if self.is_zero():
            return self
        _, lc = self.leading()
        return self.scale(lc.inverse())

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        a, b = self._align(other)
        out = dict(a.terms)
        for m, c in b.terms.items():
            s = out.get(m)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return _raw(a.gens, out)

    __radd__ = __add__

    def __neg__(self):
        return _raw(self.gens, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = _coerce(other, self.gens)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "MPoly":
        c = _sc(c)
        if c.is_zero():
            return _raw(self.gens, {})
        if c.is_one():
            return self
        return _raw(self.gens, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            return self.scale(other)
        if not isinstance(other, MPoly):
            return NotImplemented
        a, b = self._align(other)
        out: dict[Monomial, Scalar] = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                s = out.get(m)
                p = c1 * c2
                out[m] = p if s is None else s + p
        return _raw(a.gens, {m: c for m, c in out.items() if not c.is_zero()})

    def __rmul__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MPoly.const(1, self.gens)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            other = MPoly.const(other, self.gens)
        if not isinstance(other, MPoly):
            return NotImplemented
        a, b = self._align(other)
        if a.terms.keys() != b.terms.keys():
            return False
        return all(a.terms[m] == b.terms[m] for m in a.terms)

    def __hash__(self):
        from ..exprio import format_poly
        return hash(format_poly(self))

    # -- calculus and substitution -------------------------------------------
    def diff(self, name: str) -> "MPoly":
        if name not in self.gens:
            return _raw(self.gens, {})
        i = self.gens.index(name)
        out = {}
        for m, c in self.terms.items():
            k = m[i]
            if k:
                mm = list(m)
                mm[i] = k - 1
                out[tuple(mm)] = c * k
        return _raw(self.gens, out)

    def map_coeffs(self, fn: Callable[[Scalar], Scalar]) -> "MPoly":
        return MPoly(self.gens, {m: fn(c) for m, c in self.terms.items()})

    def subs_params(self, mapping: Mapping[str, Scalar]) -> "MPoly":
        return self.map_coeffs(lambda c: c.subs(mapping))

    def compose(self, mapping: Mapping[str, "MPoly"]) -> "MPoly":
        """Simultaneously replace generators by polynomials."""
        mapping = {k: _coerce(v, ()) for k, v in mapping.items() if k in self.gens}
        if not mapping:
            return self
        keep = [g for g in self.gens if g not in mapping]
        gens = set(keep)
        for v in mapping.values():
            gens |= set(v.gens)
        total = MPoly.const(0, gens)
        powers: dict[tuple[str, int], MPoly] = {}
        for m, c in self.terms.items():
            rest = {g: k for g, k in zip(self.gens, m) if k and g not in mapping}
            term = MPoly.monomial(gens, rest, c)
            for g, k in zip(self.gens, m):
                if k and g in mapping:
                    key = (g, k)
                    if key not in powers:
                        powers[key] = mapping[g] ** k
                    term = term * powers[key]
            total = total + term
        return total

    def evaluate(self, values: Mapping[str, float], params: Mapping[str, float] | None = None) -> float:
        params = params or {}
        s = 0.0
        for m, c in self.terms.items():
            v = c.evaluate(params)
            for g, k in zip(self.gens, m):
                if k:
                    v *= values[g] ** k
            s += v
        return s

    def coeffs_in(self, names: Iterable[str]) -> dict[Monomial, "MPoly"]:
        """Split by monomials in ``names``; values are polynomials in the other generators."""
        names = tuple(sorted(set(names)))
        idx = [self.gens.index(n) if n in self.gens else None for n in names]
        rest = tuple(g for g in self.gens if g not in names)
        ridx = [self.gens.index(g) for g in rest]
        out: dict[Monomial, dict] = {}
        for m, c in self.terms.items():
            key = tuple(m[i] if i is not None else 0 for i in idx)
            out.setdefault(key, {})[tuple(m[i] for i in ridx)] = c
        return {k: _raw(rest, v) for k, v in out.items()}

    # -- division ------------------------------------------------------------
    def divrem(self, divisor: "MPoly", var: str | None = None) -> tuple["MPoly", "MPoly"]:
        """Division with remainder.

        With ``var`` given, divide as univariate polynomials in ``var``; the
        leading coefficient of the divisor in ``var`` must be a Scalar.
        Without ``var``, use graded-lex multivariate division.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        a, b = self._align(divisor)
        if var is None:
            return _divrem_grlex(a, b)
        return _divrem_univariate(a, b, var)

    def exact_div(self, divisor: "MPoly") -> "MPoly":
        q, r = self.divrem(divisor)
        if not r.is_zero():
            raise ArithmeticError("polynomial division is not exact")
        return q

    def __str__(self):
        from ..exprio import format_poly
        return format_poly(self)

    def __repr__(self):
        return f"MPoly({str(self)!r}, gens={self.gens})"


def _raw(gens, terms) -> MPoly:
    p = MPoly.__new__(MPoly)
    p.gens, p.terms = gens, terms
    return p


def _coerce(x, gens) -> MPoly:
    if isinstance(x, MPoly):
        return x
    if isinstance(x, (Scalar, int, Fraction)):
        return MPoly.const(x, gens)
    return NotImplemented


def _divrem_grlex(a: MPoly, b: MPoly):
    gens = a.gens
    lm, lc = b.leading()
    inv = lc.inverse()
    q: dict[Monomial, Scalar] = {}
    r: dict[Monomial, Scalar] = {}
    p = a
    key = MPoly.grlex_key
    while not p.is_zero():
        m, c = max(p.terms.items(), key=lambda t: key(t[0]))
        if all(x >= y for x, y in zip(m, lm)):
            shift = tuple(x - y for x, y in zip(m, lm))
            f = c * inv
            q[shift] = q.get(shift, ZERO) + f
            p = p - _raw(gens, {tuple(x + s for x, s in zip(bm, shift)): bc * f for bm, bc in b.terms.items()})
        else:
            r[m] = c
            p = _raw(gens, {k: v for k, v in p.terms.items() if k != m})
    return MPoly(gens, q), MPoly(gens, r)


def _divrem_univariate(a: MPoly, b: MPoly, var: str):
    if var not in a.gens:
        raise ValueError(f"unknown variable {var!r}")
    i = a.gens.index(var)
    db = b.degree_in(var)
    lead = {m: c for m, c in b.terms.items() if m[i] == db}
    if len(lead) != 1 or any(k for j, k in enumerate(next(iter(lead))) if j != i):
        raise ValueError("leading coefficient of the divisor must be a Scalar")
    inv = next(iter(lead.values())).inverse()
    q = MPoly.const(0, a.gens)
    r = a
    while not r.is_zero() and r.degree_in(var) >= db:
        dr = r.degree_in(var)
        top = {m: c for m, c in r.terms.items() if m[i] == dr}
        shift = {}
        for m, c in top.items():
            mm = list(m)
            mm[i] -= db
            shift[tuple(mm)] = c * inv
        t = _raw(a.gens, shift)
        q = q + t
        r = r - t * b
    return q, r


# -- univariate tools ------------------------------------------------------

def _main_var(*polys: MPoly) -> str:
    names = set()
    for p in polys:
        names |= set(p.used_gens())
    if len(names) > 1:
        raise ValueError(f"expected a univariate polynomial, got generators {sorted(names)}")
    if names:
        return names.pop()
    for p in polys:
        if p.gens:
            return p.gens[0]
    return "t"


def poly_gcd(a: MPoly, b: MPoly) -> MPoly:
    """Monic gcd over Q(params)."""
    a, b = a._align(b)
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    used = set(a.used_gens()) | set(b.used_gens())
    if not used:
        return MPoly.const(1, a.gens)
    parametric = any(c.as_rational() is None for p in (a, b) for c in p.terms.values())
    if len(used) == 1 and not parametric:
        # Euclid over Q(params) swells coefficients; parametric inputs take the ring gcd below
        var = used.pop()
        while not b.is_zero():
            a, b = b, a.divrem(b, var)[1]
        return a.monic()
    from ._sympy_bridge import multivariate_gcd
    return multivariate_gcd(a, b)


def squarefree(p: MPoly) -> list[tuple[MPoly, int]]:
    """Yun's squarefree decomposition of a univariate polynomial: [(factor, multiplicity)]."""
    if p.is_zero():
        raise ValueError("squarefree decomposition of zero")
    var = _main_var(p)
    p = p.monic()
    if p.is_constant():
        return []
    dp = p.diff(var)
    g = poly_gcd(p, dp)
    c = p.divrem(g, var)[0]
    d = dp.divrem(g, var)[0] - c.diff(var)
    out = []
    i = 1
    while not c.is_constant():
        a = poly_gcd(c, d)
        if not a.is_constant():
            out.append((a, i))
        c = c.divrem(a, var)[0]
        d = d.divrem(a, var)[0] - c.diff(var)
        i += 1
    return out
