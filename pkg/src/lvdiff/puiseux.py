"""Truncated Puiseux series with a symbolic offset exponent, and coefficient-constraint extraction.

A series in the variable ``y`` is a finite map from exponents to coefficients
plus a set of truncation bounds: every unknown term has an exponent at or
above one of the bounds.  Exponents are linear forms ``c_sym * sigma + c0`` in
one offset symbol ``sigma`` (r, k, s, ...) whose range is a union of intervals.
Coefficient comparisons are only reported at exponents whose position relative
to every other exponent and every bound is provable on that range.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Mapping, Sequence

from .algebra.mpoly import MPoly
from .algebra.ratfunc import RatFunc
from .algebra.scalar import ONE, ZERO, Scalar
from .diffstruct import Derivation, PlanarSystem, formal_base
from .lode import LinearOdeProblem

Exponent = tuple[Fraction, Fraction]   # (coefficient of the offset symbol, constant)

_INF = None


@dataclass(frozen=True)
class Interval:
    lo: Fraction | None
    hi: Fraction | None
    lo_closed: bool = False
    hi_closed: bool = False


@dataclass(frozen=True)
class Regime:
    """Range of the offset symbol: a point value, or a union of intervals."""

    symbol: str | None
    pieces: tuple[Interval, ...] = ()
    point: Fraction | None = None
    label: str = ""

    def _positive_on(self, a: Fraction, b: Fraction, iv: Interval) -> bool:
        # a*s + b > 0 for every s in iv
        if a == 0:
            return b > 0

        def end(v, closed, side):
            if v is None:
                # behaviour at -inf (side=-1) or +inf (side=+1)
                return side * a > 0 or None
            val = a * v + b
            return val > 0 if closed else val >= 0
        left = end(iv.lo, iv.lo_closed, -1)
        right = end(iv.hi, iv.hi_closed, +1)
        return bool(left) and bool(right)

    def positive(self, e: Exponent) -> bool:
        a, b = e
        if self.point is not None or self.symbol is None:
            return a * (self.point or 0) + b > 0
        return all(self._positive_on(a, b, iv) for iv in self.pieces)

    def less(self, e1: Exponent, e2: Exponent) -> bool:
        """Provably e1 < e2 on the whole range."""
        return self.positive((e2[0] - e1[0], e2[1] - e1[1]))

    def ordered(self, e1: Exponent, e2: Exponent) -> bool:
        return self.less(e1, e2) or self.less(e2, e1)

    def offset_scalar(self) -> Scalar:
        if self.symbol is None:
            return ZERO
        if self.point is not None:
            return Scalar(self.point)
        return Scalar.symbol(self.symbol)


_CASE_RE = [
    (re.compile(r"^\s*([A-Za-z]\w*)\s*(<|>|<=|>=|=|==|!=)\s*(-?\d+(?:/\d+)?)\s*$"), "single"),
    (re.compile(r"^\s*(-?\d+(?:/\d+)?)\s*(<|<=)\s*([A-Za-z]\w*)\s*(<|<=)\s*(-?\d+(?:/\d+)?)\s*$"), "double"),
]


def parse_case(text: str) -> Regime:
    """'r<0', 'r=0', 'r>0', 'k!=0', '0<s<1', 's=1', 's>1', ..."""
    m = _CASE_RE[0][0].match(text)
    if m:
        sym, op, v = m.group(1), m.group(2), Fraction(m.group(3))
        if op in ("=", "=="):
            return Regime(sym, point=v, label=text.strip())
        if op == "<":
            return Regime(sym, (Interval(None, v),), label=text.strip())
        if op == "<=":
            return Regime(sym, (Interval(None, v, hi_closed=True),), label=text.strip())
        if op == ">":
            return Regime(sym, (Interval(v, None),), label=text.strip())
        if op == ">=":
            return Regime(sym, (Interval(v, None, lo_closed=True),), label=text.strip())
        return Regime(sym, (Interval(None, v), Interval(v, None)), label=text.strip())
    m = _CASE_RE[1][0].match(text)
    if m:
        lo, op1, sym, op2, hi = Fraction(m.group(1)), m.group(2), m.group(3), m.group(4), Fraction(m.group(5))
        if lo >= hi:
            raise ValueError(f"empty range in case {text!r}")
        return Regime(sym, (Interval(lo, hi, op1 == "<=", op2 == "<="),), label=text.strip())
    raise ValueError(f"cannot parse case {text!r}; expected forms like r<0, r=0, k!=0, 0<s<1")


def format_exponent(e: Exponent, symbol: str | None) -> str:
    a, b = e
    parts = []
    if a != 0 and symbol:
        parts.append(symbol if a == 1 else (f"-{symbol}" if a == -1 else f"{a}*{symbol}"))
    if b != 0 or not parts:
        if parts:
            parts.append(f"+ {b}" if b > 0 else f"- {-b}")
        else:
            parts.append(str(b))
    return " ".join(parts)


def _minimize(bounds: Iterable[Exponent], regime: Regime) -> frozenset[Exponent]:
    bs = sorted(set(bounds))
    keep = []
    for b in bs:
        if any(o != b and (regime.less(o, b)) for o in bs):
            continue
        keep.append(b)
    return frozenset(keep)


@dataclass
class PuiseuxSeries:
    """sum_E coeff[E] * y^E, exact below every exponent in ``bounds``."""

    terms: dict[Exponent, MPoly]
    regime: Regime
    bounds: frozenset[Exponent] = frozenset()
    e: int = 1
    coeff_gens: tuple[str, ...] = ()
    assumptions: tuple[str, ...] = ()

    def __post_init__(self):
        self.terms = {k: v.with_gens(self.coeff_gens) for k, v in self.terms.items() if not v.is_zero()}

    # -- constructors ----------------------------------------------------------
    @classmethod
    def monomial(cls, c: MPoly, exponent: Exponent, regime: Regime, coeff_gens=()) -> "PuiseuxSeries":
        return cls({exponent: c}, regime, frozenset(), 1, tuple(coeff_gens))

    @classmethod
    def constant(cls, c: MPoly, regime: Regime, coeff_gens=()) -> "PuiseuxSeries":
        return cls.monomial(c, (Fraction(0), Fraction(0)), regime, coeff_gens)

    def _like(self, terms, bounds, e=None, other: "PuiseuxSeries | None" = None) -> "PuiseuxSeries":
        gens = tuple(sorted(set(self.coeff_gens) | set(other.coeff_gens if other else ())))
        assumptions = tuple(dict.fromkeys(self.assumptions + (other.assumptions if other else ())))
        return PuiseuxSeries(terms, self.regime, _minimize(bounds, self.regime), e or self.e, gens, assumptions)

    # -- arithmetic ----------------------------------------------------------------
    def __add__(self, other: "PuiseuxSeries") -> "PuiseuxSeries":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return self._like(out, self.bounds | other.bounds, lcm(self.e, other.e), other)

    def __neg__(self):
        return self._like({k: -v for k, v in self.terms.items()}, self.bounds)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: MPoly | Scalar) -> "PuiseuxSeries":
        if isinstance(c, Scalar):
            return self._like({k: v.scale(c) for k, v in self.terms.items()}, self.bounds)
        return self._like({k: v * c for k, v in self.terms.items()}, self.bounds,
                          other=PuiseuxSeries({}, self.regime, coeff_gens=c.gens))

    def shift(self, d: Exponent) -> "PuiseuxSeries":
        add = lambda k: (k[0] + d[0], k[1] + d[1])
        return self._like({add(k): v for k, v in self.terms.items()}, {add(b) for b in self.bounds})

    def __mul__(self, other: "PuiseuxSeries") -> "PuiseuxSeries":
        out: dict[Exponent, MPoly] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = (k1[0] + k2[0], k1[1] + k2[1])
                p = v1 * v2
                out[k] = out[k] + p if k in out else p
        bounds = set()
        for b in self.bounds:
            bounds |= {(b[0] + k[0], b[1] + k[1]) for k in other.terms}
            bounds |= {(b[0] + c[0], b[1] + c[1]) for c in other.bounds}
        for b in other.bounds:
            bounds |= {(b[0] + k[0], b[1] + k[1]) for k in self.terms}
        return self._like(out, bounds, lcm(self.e, other.e), other)

    def __pow__(self, n: int) -> "PuiseuxSeries":
        out = PuiseuxSeries.constant(MPoly.const(1, self.coeff_gens), self.regime, self.coeff_gens)
        for _ in range(n):
            out = out * self
        return out

    def map_coeffs(self, fn: Callable[[MPoly], MPoly]) -> "PuiseuxSeries":
        return self._like({k: fn(v) for k, v in self.terms.items()}, self.bounds)

    # -- views ---------------------------------------------------------------------
    def classes(self) -> list[Exponent]:
        return list(self.terms)

    def determined(self) -> list[Exponent]:
        """Exponents whose coefficient is provably complete and provably ordered against all others."""
        out = []
        keys = list(self.terms)
        for k in keys:
            if not all(self.regime.less(k, b) for b in self.bounds):
                continue
            if all(o == k or self.regime.ordered(o, k) for o in keys):
                out.append(k)
        snapshot = list(out)
        return sorted(snapshot, key=lambda k: sum(1 for o in snapshot if self.regime.less(o, k)))

    def valuation(self) -> Exponent | None:
        d = self.determined()
        if d and all(d[0] == o or self.regime.less(d[0], o) for o in self.terms):
            return d[0]
        return None

    def __str__(self):
        from .exprio import format_poly
        sym = self.regime.symbol if self.regime.point is None else None
        parts = []
        for k in sorted(self.terms, key=lambda k: (k[1], k[0])):
            parts.append(f"({format_poly(self.terms[k])})*y^({format_exponent(k, sym)})")
        for b in sorted(self.bounds):
            parts.append(f"O(y^({format_exponent(b, sym)}))")
        return " + ".join(parts) if parts else "0"


# -- derivation of series ------------------------------------------------------------

def derive_under(S: PuiseuxSeries, yprime: PuiseuxSeries,
                 coeff_derive: Callable[[MPoly], PuiseuxSeries]) -> PuiseuxSeries:
    """D(sum c_E y^E) = sum D(c_E) y^E + (sum E c_E y^E) * y'/y.

    ``yprime`` is the series of y'; ``coeff_derive`` returns D(c) as a series
    (a constant-mode derivative sits at exponent 0, a function-mode one may
    carry powers of y).
    """
    sigma = S.regime.offset_scalar()
    out = PuiseuxSeries({}, S.regime, S.bounds, S.e, S.coeff_gens, S.assumptions)
    for k, c in S.terms.items():
        out = out + coeff_derive(c).shift(k)
    weighted = S._like({k: c.scale(sigma * k[0] + k[1]) for k, c in S.terms.items()}, S.bounds)
    return out + weighted * yprime.shift((Fraction(0), Fraction(-1)))


def substitute_series(p: MPoly, values: Mapping[str, PuiseuxSeries], regime: Regime,
                      coeff_gens: Sequence[str] = ()) -> PuiseuxSeries:
    """Evaluate a polynomial at series; generators not in ``values`` stay in the coefficients."""
    coeff_gens = tuple(sorted(set(coeff_gens)))
    total = PuiseuxSeries({}, regime, coeff_gens=coeff_gens)
    cache: dict[tuple[str, int], PuiseuxSeries] = {}
    for m, c in p.terms.items():
        rest = {g: k for g, k in zip(p.gens, m) if k and g not in values}
        term = PuiseuxSeries.constant(MPoly.monomial(coeff_gens, rest, c).with_gens(coeff_gens), regime, coeff_gens)
        for g, k in zip(p.gens, m):
            if k and g in values:
                key = (g, k)
                if key not in cache:
                    cache[key] = values[g] ** k
                term = term * cache[key]
        total = total + term
    return total


# -- ansatz and constraint extraction -----------------------------------------------

@dataclass
class Ansatz:
    """Shape of the expansion.

    ``expanded`` names the system variable written as a series in
    ``series_var`` (first stage, constant coefficients).  With ``expanded``
    left as None the series is an unknown quantity ``a`` tied to the system
    by a side relation a' = m a, with coefficients that are functions of the
    other variable.
    """

    case: str
    e: int = 1
    depth: int = 4
    expanded: str | None = None
    series_var: str | None = None
    coeff_name: str | None = None
    prefix: Mapping[Fraction, MPoly] = field(default_factory=dict)


@dataclass(frozen=True)
class Constraint:
    exponent: Exponent
    equation: MPoly       # raw coefficient, equated to zero
    normalized: MPoly     # primitive over Z with positive leading coefficient
    label: str = ""

    def describe(self, symbol: str | None) -> str:
        return f"y^({format_exponent(self.exponent, symbol)}): {self.normalized} = 0"


@dataclass
class ConstraintSet:
    constraints: list[Constraint]
    assumptions: list[str]
    regime: Regime
    series_var: str
    determined: int
    undetermined: list[Exponent]
    mode: str
    coefficient_names: list[str]
    residual: PuiseuxSeries | None = None

    @property
    def symbol(self) -> str | None:
        return self.regime.symbol if self.regime.point is None else None

    def at(self, exponent: Exponent) -> Constraint:
        for c in self.constraints:
            if c.exponent == exponent:
                return c
        raise KeyError(f"no determined constraint at exponent {exponent}")

    def first(self) -> Constraint:
        if not self.constraints:
            raise ValueError("no exponent is determined in this regime")
        return self.constraints[0]


def normalize_equation(p: MPoly) -> MPoly:
    """Clear denominators, divide by the rational content, make the leading coefficient positive.

    Factors that are known to be nonzero are deliberately kept (r*a0^2 stays
    r*a0^2), so the result is exactly the coefficient up to a rational scale.
    """
    from .exprio import format_poly
    if p.is_zero():
        return p
    dens = 1
    contents = []
    for c in p.terms.values():
        num, den = c.numer_denom_terms()
        if len(den) != 1 or den[0][0]:
            return p.monic()
        for _, q in num:
            contents.append(q / den[0][1])
    for q in contents:
        dens = lcm(dens, q.denominator)
    from math import gcd
    g = 0
    for q in contents:
        g = gcd(g, int(q * dens))
    out = p.scale(Scalar(Fraction(dens, g)))
    text = format_poly(out)
    if text.startswith("-"):
        out = -out
    return out


def _formal_names(prefix: str, depth: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(depth)]


def series_derivative_name(sym: str, var: str) -> str:
    """b0 -> b0_X, b0_X -> b0_XX."""
    return f"{sym}{var}" if "_" in sym else f"{sym}_{var}"


def ansatz_constraints(sys: PlanarSystem, ansatz: Ansatz, relation: Scalar | MPoly | None = None) -> ConstraintSet:
    regime = parse_case(ansatz.case)
    sigma = regime.symbol
    if ansatz.depth < 1:
        raise ValueError("depth must be at least 1")
    if ansatz.e < 1:
        raise ValueError("ramification index must be positive")
    yv = ansatz.series_var or sys.yvar
    if yv not in sys.vars:
        raise ValueError(f"series variable {yv!r} is not a system variable")
    other = sys.xvar if yv == sys.yvar else sys.yvar
    fprime = {sys.xvar: sys.f, sys.yvar: sys.g}
    if sys.tower.names:
        raise ValueError("series expansion over a non-trivial tower is not supported")
    first_stage = relation is None
    if first_stage:
        expanded = ansatz.expanded or other
        if expanded != other:
            raise ValueError("the expanded variable must differ from the series variable")
        name = ansatz.coeff_name or "a"
        coeff_gens: tuple[str, ...] = ()
        mode = "constant"
    else:
        expanded = None
        name = ansatz.coeff_name or "b"
        coeff_gens = (other,)
        mode = "function"
    names = _formal_names(name, ansatz.depth)
    off = regime.offset_scalar()
    terms: dict[Exponent, MPoly] = {}
    base_sym = Fraction(1) if regime.point is None and sigma else Fraction(0)
    base_const = regime.point if regime.point is not None else Fraction(0)
    for i, n in enumerate(names):
        k = (base_sym, base_const + Fraction(i, ansatz.e))
        terms[k] = MPoly.const(Scalar.symbol(n), coeff_gens)
    tail = (base_sym, base_const + Fraction(ansatz.depth, ansatz.e))
    S = PuiseuxSeries(terms, regime, frozenset({tail}), ansatz.e, coeff_gens, (f"{names[0]} != 0", regime.label))
    for ex, p in ansatz.prefix.items():
        S = S + PuiseuxSeries.monomial(p.with_gens(set(p.gens) | set(coeff_gens)), (Fraction(0), Fraction(ex)), regime, coeff_gens)

    y_series = PuiseuxSeries.monomial(MPoly.const(1, coeff_gens), (Fraction(0), Fraction(1)), regime, coeff_gens)
    if first_stage:
        values = {expanded: S, yv: y_series}
        yprime = substitute_series(fprime[yv], values, regime, coeff_gens)
        formal = set(names)
        D = Derivation({}, frozenset(formal))

        def coeff_derive(c: MPoly) -> PuiseuxSeries:
            return PuiseuxSeries.constant(c.map_coeffs(D.coeff_derive), regime, coeff_gens)

        lhs = derive_under(S, yprime, coeff_derive)
        rhs = substitute_series(fprime[expanded], values, regime, coeff_gens)
    else:
        values = {yv: y_series}
        yprime = substitute_series(fprime[yv], values, regime, coeff_gens)
        other_prime = substitute_series(fprime[other], values, regime, coeff_gens)
        formal = set(names)

        def dx(c: MPoly) -> MPoly:
            out = c.diff(other)
            for m, s in c.terms.items():
                ds = ZERO
                for sym in sorted(s.symbols()):
                    if sym.split("_")[0] in formal:
                        ds = ds + s.diff(sym) * Scalar.symbol(series_derivative_name(sym, other))
                if not ds.is_zero():
                    out = out + MPoly(c.gens, {m: ds})
            return out

        def coeff_derive(c: MPoly) -> PuiseuxSeries:
            return other_prime.scale(dx(c))

        lhs = derive_under(S, yprime, coeff_derive)
        m = relation if isinstance(relation, MPoly) else MPoly.const(relation, coeff_gens)
        rhs = S.scale(m.with_gens(set(m.gens) | set(coeff_gens)))
    residual = lhs - rhs
    det = residual.determined()
    cons = []
    for k in det:
        eq = residual.terms[k]
        cons.append(Constraint(k, eq, normalize_equation(eq)))
    undet = sorted((k for k in residual.terms if k not in det), key=lambda k: (k[0], k[1]))
    assumptions = [f"{names[0]} != 0", regime.label]
    if ansatz.prefix:
        assumptions.append("known terms: " + ", ".join(f"{p} at y^{ex}" for ex, p in ansatz.prefix.items()))
    return ConstraintSet(cons, assumptions, regime, yv, len(cons), undet, mode, names, residual)


# -- from constraint to linear ODE ------------------------------------------------------

class NotLinear(ValueError):
    pass


def constraint_to_ode(cs: ConstraintSet, coefficient: str | None = None,
                      constraint: Constraint | None = None) -> LinearOdeProblem:
    """Read A*b_X + B*b + C = 0 off a function-mode constraint and return b_X = F b + c."""
    if cs.mode != "function":
        raise NotLinear("constraints with constant coefficients carry no ODE in the other variable")
    coefficient = coefficient or cs.coefficient_names[0]
    con = constraint or _first_mentioning(cs, coefficient)
    eq = con.equation
    var = eq.gens[0] if eq.gens else "x"
    dname = series_derivative_name(coefficient, var)
    A = eq.map_coeffs(lambda s: s.diff(dname))
    B = eq.map_coeffs(lambda s: s.diff(coefficient))
    b_sym = MPoly.const(Scalar.symbol(coefficient), eq.gens)
    bd_sym = MPoly.const(Scalar.symbol(dname), eq.gens)
    C = eq - A * bd_sym - B * b_sym
    for part, label in ((A, "derivative coefficient"), (B, "coefficient"), (C, "remainder")):
        if {coefficient, dname} & part.param_symbols():
            raise NotLinear(f"constraint is not linear in {coefficient}: {label} still mentions it")
    if A.is_zero():
        raise NotLinear(f"constraint does not involve the derivative of {coefficient}")
    F = RatFunc(-B, A)
    cterm = RatFunc(-C, A)
    if not cterm.is_constant():
        raise NotLinear("inhomogeneous term is not a constant")
    return LinearOdeProblem(F, cterm.constant_value() if not cterm.is_zero() else ZERO, var)


def _first_mentioning(cs: ConstraintSet, coefficient: str) -> Constraint:
    for c in cs.constraints:
        if coefficient in c.equation.param_symbols():
            return c
    raise NotLinear(f"no determined constraint mentions {coefficient}")


def lemma_form(F: RatFunc, var: str) -> tuple[Scalar, Scalar] | None:
    """(q, c1) when F = q/var + c1, else None."""
    from .algebra.partfrac import partial_fractions
    pf = partial_fractions(F, var)
    if not pf.polynomial_part.is_constant():
        return None
    c1 = pf.polynomial_part.constant_value() if not pf.polynomial_part.is_zero() else ZERO
    if len(pf.terms) != 1:
        return (ZERO, c1) if not pf.terms else None
    t = pf.terms[0]
    if t.multiplicity != 1 or t.factor != MPoly.var(var, t.factor.gens) or not t.numerators[0].is_constant():
        return None
    return t.numerators[0].constant_value(), c1
