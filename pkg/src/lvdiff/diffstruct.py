"""Derivations on towers of differential fields, and log-linear expressions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .algebra.mpoly import MPoly
from .algebra.ratfunc import RatFunc
from .algebra.scalar import ZERO, Scalar

Expr = Union[MPoly, RatFunc]


class UndeclaredSymbol(ValueError):
    pass


def formal_base(name: str) -> tuple[str, int]:
    """Split a formal indeterminate name into (base, derivative order): a0'' -> (a0, 2)."""
    base = name.rstrip("'")
    return base, len(name) - len(base)


def formal_derivative_name(name: str) -> str:
    return name + "'"


@dataclass(frozen=True)
class Derivation:
    """A derivation determined by the images of generators and of formal symbols.

    ``images`` maps generator names to their derivatives.  Parameters are
    constants unless their base name is listed in ``formal``, in which case
    the derivative of ``a0`` is the fresh symbol ``a0'``.
    """

    images: Mapping[str, Expr]
    formal: frozenset[str] = frozenset()

    def coeff_derive(self, c: Scalar) -> Scalar:
        if c.is_rational or not self.formal:
            return ZERO
        out = ZERO
        for s in sorted(c.symbols()):
            base, _ = formal_base(s)
            if base in self.formal:
                out = out + c.diff(s) * Scalar.symbol(formal_derivative_name(s))
        return out

    def _check(self, gens: Iterable[str]):
        missing = [g for g in gens if g not in self.images]
        if missing:
            raise UndeclaredSymbol(f"no derivative declared for {', '.join(missing)}")

    def apply_poly(self, p: MPoly) -> Expr:
        used = p.used_gens()
        self._check(used)
        out: Expr = p.map_coeffs(self.coeff_derive)
        for g in used:
            img = self.images[g]
            dp = p.diff(g)
            if dp.is_zero():
                continue
            out = out + dp * img if isinstance(img, MPoly) else RatFunc.from_poly(dp) * img + out
        return out

    def __call__(self, e: Expr) -> Expr:
        if isinstance(e, MPoly):
            return self.apply_poly(e)
        if isinstance(e, RatFunc):
            dn = self.apply_poly(e.num)
            if e.den.is_constant():
                return RatFunc(dn, e.den) if isinstance(dn, MPoly) else dn / RatFunc.from_poly(e.den)
            dd = self.apply_poly(e.den)
            num = _rf(dn) * _rf(e.den) - _rf(e.num) * _rf(dd)
            return num / RatFunc.from_poly(e.den * e.den)
        if isinstance(e, Scalar):
            return self.coeff_derive(e)
        raise TypeError(f"cannot differentiate {type(e).__name__}")


def _rf(e: Expr) -> RatFunc:
    return e if isinstance(e, RatFunc) else RatFunc.from_poly(e)


@dataclass(frozen=True)
class Generator:
    name: str
    derivative: Expr


@dataclass(frozen=True)
class DiffTower:
    """Ordered generators with prescribed derivatives, plus formal indeterminates.

    Generator k may mention generators 0..k (itself included, as in z' = b*z)
    and any parameters.
    """

    generators: tuple[Generator, ...] = ()
    formal: frozenset[str] = frozenset()

    def __post_init__(self):
        seen: list[str] = []
        for g in self.generators:
            seen.append(g.name)
            bad = [h for h in _gens_used(g.derivative) if h not in seen]
            if bad:
                raise ValueError(f"derivative of {g.name} mentions later or unknown generators {bad}")

    @classmethod
    def build(cls, gens: Sequence[tuple[str, Expr]] = (), formal: Iterable[str] = ()) -> "DiffTower":
        return cls(tuple(Generator(n, d) for n, d in gens), frozenset(formal))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def derivation(self, extra: Mapping[str, Expr] | None = None) -> Derivation:
        images = {g.name: g.derivative for g in self.generators}
        if extra:
            images.update(extra)
        return Derivation(images, self.formal)

    def derive(self, e: Expr) -> Expr:
        return self.derivation()(e)


def _gens_used(e: Expr) -> tuple[str, ...]:
    if isinstance(e, RatFunc):
        return tuple(sorted(set(e.num.used_gens()) | set(e.den.used_gens())))
    return e.used_gens()


def derive(e: Expr, tower: DiffTower) -> Expr:
    return tower.derive(e)


@dataclass
class PlanarSystem:
    """X' = f, Y' = g over a tower; f, g polynomial in the two variables and the tower generators."""

    xvar: str
    yvar: str
    f: MPoly
    g: MPoly
    tower: DiffTower = field(default_factory=DiffTower)
    divisors: list[MPoly] = field(default_factory=list)
    params: tuple[str, ...] = ()

    @property
    def vars(self) -> tuple[str, str]:
        return (self.xvar, self.yvar)

    @property
    def max_degree(self) -> int:
        return max(_deg_in(self.f, self.vars), _deg_in(self.g, self.vars))

    @property
    def derivation(self) -> Derivation:
        return self.tower.derivation({self.xvar: self.f, self.yvar: self.g})

    def subs_params(self, mapping: Mapping[str, Scalar]) -> "PlanarSystem":
        tower = DiffTower.build([(g.name, g.derivative.subs_params(mapping)) for g in self.tower.generators],
                                self.tower.formal)
        return PlanarSystem(self.xvar, self.yvar, self.f.subs_params(mapping), self.g.subs_params(mapping),
                            tower, [d.subs_params(mapping) for d in self.divisors],
                            tuple(p for p in self.params if p not in mapping))

    @classmethod
    def from_spec(cls, spec, subs: Mapping[str, Scalar] | None = None) -> "PlanarSystem":
        x, y = spec.vars
        tower = DiffTower.build(list(spec.tower.items()))
        sys = cls(x, y, spec.fprime[x], spec.fprime[y], tower, list(spec.nondegenerate), tuple(spec.params))
        return sys.subs_params(subs) if subs else sys


def _deg_in(p: MPoly, names: Sequence[str]) -> int:
    idx = [p.gens.index(n) for n in names if n in p.gens]
    return max((sum(m[i] for i in idx) for m in p.terms), default=-1)


def derive_system(e: Expr, sys: PlanarSystem) -> RatFunc:
    return _rf(sys.derivation(e))


@dataclass
class LogLinearExpr:
    """rational + sum c_i * log(G_i)."""

    rational: RatFunc
    logs: list[tuple[Scalar, RatFunc]] = field(default_factory=list)

    def __post_init__(self):
        merged: list[tuple[Scalar, RatFunc]] = []
        for c, G in self.logs:
            c = c if isinstance(c, Scalar) else Scalar(c)
            G = _rf(G)
            if G.is_zero():
                raise ValueError("log of zero")
            for i, (c0, G0) in enumerate(merged):
                if G0 == G:
                    merged[i] = (c0 + c, G0)
                    break
            else:
                merged.append((c, G))
        self.logs = [(c, G) for c, G in merged if not c.is_zero()]
        self.rational = _rf(self.rational)

    def __str__(self):
        from .exprio import format_ratfunc, format_scalar
        parts = []
        r = format_ratfunc(self.rational)
        if r != "0":
            parts.append(r)
        for c, G in self.logs:
            ct = format_scalar(c)
            g = format_ratfunc(G)
            term = f"log({g})" if ct == "1" else (f"-log({g})" if ct == "-1" else
                   (f"{ct}*log({g})" if " " not in ct else f"({ct})*log({g})"))
            parts.append(term)
        text = " + ".join(parts) if parts else "0"
        return text.replace("+ -", "- ")

    def evaluate(self, values: Mapping[str, float], params: Mapping[str, float] | None = None) -> float:
        import math
        v = self.rational.evaluate(values, params)
        for c, G in self.logs:
            v += c.evaluate(params or {}) * math.log(abs(G.evaluate(values, params)))
        return v


def loglinear_derive(H: LogLinearExpr, sys: PlanarSystem) -> RatFunc:
    out = derive_system(H.rational, sys)
    for c, G in H.logs:
        out = out + (derive_system(G, sys) / G) * RatFunc.from_poly(MPoly.const(c))
    return out
