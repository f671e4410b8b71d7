"""Normal forms of Lotka-Volterra systems, the logarithmic first integral, and dependence probes."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .algebra.mpoly import MPoly
from .algebra.ratfunc import RatFunc
from .algebra.scalar import ONE, ZERO, Scalar
from .diffstruct import LogLinearExpr, PlanarSystem, derive_system, loglinear_derive
from .numerics import Trajectory, common_grid

XV, YV = "X", "Y"


class Degenerate(ValueError):
    """The requested rewriting breaks down for these parameter values."""


def _sc(v) -> Scalar:
    if isinstance(v, Scalar):
        return v
    if isinstance(v, str):
        return Scalar.symbol(v)
    return Scalar(Fraction(v))


def lv_system(a, b, c, d, family: str = "classical", names: tuple[str, str] = (XV, YV)) -> PlanarSystem:
    """X' = X(aY + b), Y' = Y(cX + d) or, for ``twod``, Y' = Y(cX + dY)."""
    a, b, c, d = map(_sc, (a, b, c, d))
    xv, yv = names
    gens = (xv, yv)
    X, Y = MPoly.var(xv, gens), MPoly.var(yv, gens)
    f = X * (Y.scale(a) + MPoly.const(b, gens))
    if family == "classical":
        g = Y * (X.scale(c) + MPoly.const(d, gens))
    elif family == "twod":
        g = Y * (X.scale(c) + Y.scale(d))
    else:
        raise ValueError(f"unknown family {family!r}")
    params = tuple(sorted(set().union(*(s.symbols() for s in (a, b, c, d)))))
    return PlanarSystem(xv, yv, f, g, divisors=[X, Y], params=params)


@dataclass(frozen=True)
class NormalizationRecord:
    """x = x_scale * X, y = y_scale * Y, new time derivation = time_scale * old one."""

    family: str
    original: dict[str, Scalar]
    x_scale: Scalar
    y_scale: Scalar
    time_scale: Scalar
    normalized: dict[str, Scalar]

    def forward(self, x: float, y: float, params: Mapping[str, float] | None = None) -> tuple[float, float]:
        p = params or {}
        return self.x_scale.evaluate(p) * x, self.y_scale.evaluate(p) * y

    def backward(self, x: float, y: float, params: Mapping[str, float] | None = None) -> tuple[float, float]:
        p = params or {}
        return x / self.x_scale.evaluate(p), y / self.y_scale.evaluate(p)

    def verify(self) -> bool:
        """Push the original vector field through the scalings and compare with the target exactly."""
        o = self.original
        src = lv_system(o["a"], o["b"], o["c"], o["d"], self.family)
        ratio = self.normalized["alpha" if self.family == "classical" else "gamma"]
        dst = lv_system(1, 1, 1, ratio, self.family)
        gens = (XV, YV)
        sub = {XV: MPoly.var(XV, gens).scale(self.x_scale), YV: MPoly.var(YV, gens).scale(self.y_scale)}
        lhs_x = src.f.scale(self.x_scale * self.time_scale)
        lhs_y = src.g.scale(self.y_scale * self.time_scale)
        return lhs_x == dst.f.compose(sub) and lhs_y == dst.g.compose(sub)


def normalize_system(a, b, c, d, family: str = "classical") -> tuple[PlanarSystem, NormalizationRecord]:
    """Rescale LV_{a,b,c,d} to LV_{1,1,1,d/b} (classical) or LV^{2d}_{1,1,1,d/a} (twod).

    x = cX/b, y = aY/b and the derivation divided by b.
    """
    a, b, c, d = map(_sc, (a, b, c, d))
    for name, v in zip("abcd", (a, b, c, d)):
        if v.is_zero():
            raise ValueError(f"parameter {name} must be nonzero")
    if family == "classical":
        key, ratio = "alpha", d / b
    elif family == "twod":
        key, ratio = "gamma", d / a
    else:
        raise ValueError(f"unknown family {family!r}")
    rec = NormalizationRecord(family, {"a": a, "b": b, "c": c, "d": d}, c / b, a / b, ONE / b, {key: ratio})
    return lv_system(1, 1, 1, ratio, family), rec


@dataclass
class BrestovskiForm:
    """F' = sum a_i G_i'/G_i for an unknown Z, realized on the system by Z = X - Y.

    Differential polynomials live in generators (Z, Z'), and ``realize`` maps
    them into rational functions of the system variables.
    """

    unknown: str
    F: MPoly
    terms: list[tuple[Scalar, MPoly]]
    realization: MPoly
    system: PlanarSystem
    independence: "QRatioVerdict"
    identities: dict[str, bool] = field(default_factory=dict)

    @property
    def dgens(self) -> tuple[str, str]:
        return (self.unknown, self.unknown + "'")

    def realize(self, p: MPoly) -> RatFunc:
        z = self.realization
        zp = derive_system(z, self.system).as_poly()
        gens = tuple(sorted(set(z.gens) | set(zp.gens)))
        return RatFunc.from_poly(p.compose({self.dgens[0]: z.with_gens(gens), self.dgens[1]: zp.with_gens(gens)}))

    def residual(self) -> RatFunc:
        """F' - sum a_i G_i'/G_i on the system; zero when the form holds."""
        out = derive_system(self.realize(self.F), self.system)
        for a, G in self.terms:
            g = self.realize(G)
            out = out - derive_system(g, self.system) / g * RatFunc.from_poly(MPoly.const(a))
        return out

    def __str__(self):
        from .exprio import format_poly, format_scalar
        z = self.unknown
        parts = [f"({format_poly(self.F)})'", "="]
        rhs = ""
        for a, G in self.terms:
            g = format_poly(G)
            rhs += _signed(format_scalar(a), f"({g})'/({g})", first=not rhs)
        return " ".join(parts) + " " + rhs + f"   with {z} = {format_poly(self.realization)}"


def _signed(coef: str, body: str, first: bool = False) -> str:
    """Render coef*body as a sum term, folding a leading minus into the joiner."""
    neg = coef.startswith("-") and " " not in coef[1:].strip()
    c = coef[1:] if neg else coef
    c = f"({c})" if " " in c else c
    term = body if c == "1" else f"{c}*{body}"
    if first:
        return f"-{term}" if neg else term
    return f" - {term}" if neg else f" + {term}"


def to_brestovski(b="b", d="d") -> BrestovskiForm:
    """Rewrite LV_{1,b,1,d} as Z' = b (Z' - bZ)'/(Z' - bZ) - d (Z' - dZ)'/(Z' - dZ) with Z = X - Y."""
    b, d = _sc(b), _sc(d)
    if (b - d).is_zero():
        raise Degenerate("b = d: X - Y is itself invariant and the change of variables collapses")
    sys = lv_system(1, b, 1, d)
    z = "Z"
    dg = (z, z + "'")
    Z, Zp = MPoly.var(z, dg), MPoly.var(z + "'", dg)
    G1 = Zp - Z.scale(b)
    G2 = Zp - Z.scale(d)
    gens = (XV, YV)
    X, Y = MPoly.var(XV, gens), MPoly.var(YV, gens)
    form = BrestovskiForm(z, Z, [(b, G1), (-d, G2)], X - Y, sys, qratio_check(b, d))
    zp = derive_system(X - Y, sys)
    rx = RatFunc.from_poly(X)
    ry = RatFunc.from_poly(Y)
    bd = RatFunc.from_poly(MPoly.const(b - d, gens))
    form.identities = {
        "(b-d)*X = Z' - d*Z": bd * rx == form.realize(G2),
        "(b-d)*Y = Z' - b*Z": bd * ry == form.realize(G1),
        "X' - Y' = b*Y'/Y - d*X'/X": zp == (derive_system(ry, sys) / ry * RatFunc.from_poly(MPoly.const(b, gens))
                                            - derive_system(rx, sys) / rx * RatFunc.from_poly(MPoly.const(d, gens))),
        "form holds": form.residual().is_zero(),
    }
    failed = [k for k, ok in form.identities.items() if not ok]
    if failed:
        raise AssertionError(f"identities failed: {failed}")
    return form


def lv_params(sys: PlanarSystem) -> tuple[Scalar, Scalar, Scalar, Scalar]:
    """Read (a, b, c, d) off X' = X(aY + b), Y' = Y(cX + d); reject anything else."""
    def coef(p: MPoly, i: int, j: int) -> Scalar:
        exps = {sys.xvar: i, sys.yvar: j}
        return p.terms.get(tuple(exps.get(g, 0) for g in p.gens), ZERO)
    a, b = coef(sys.f, 1, 1), coef(sys.f, 1, 0)
    c, d = coef(sys.g, 1, 1), coef(sys.g, 0, 1)
    expect = lv_system(a, b, c, d, names=sys.vars)
    if sys.tower.names or sys.f != expect.f or sys.g != expect.g:
        raise ValueError("expected a classical system X' = X(a*Y + b), Y' = Y(c*X + d)")
    return a, b, c, d


def conservation_residual(H: LogLinearExpr, sys: PlanarSystem) -> RatFunc:
    return loglinear_derive(H, sys)


def first_integral(sys: PlanarSystem | None = None, b="b", d="d") -> LogLinearExpr:
    """H = (c*X - a*Y) + d*log X - b*log Y, checked to be conserved exactly before returning.

    With a = c = 1 this is (X - Y) + d*log X - b*log Y.
    """
    if sys is None:
        sys = lv_system(1, b, 1, d)
    a, b, c, d = lv_params(sys)
    gens = sys.vars
    X, Y = MPoly.var(sys.xvar, gens), MPoly.var(sys.yvar, gens)
    H = LogLinearExpr(RatFunc.from_poly(X.scale(c) - Y.scale(a)), [(d, RatFunc.from_poly(X)), (-b, RatFunc.from_poly(Y))])
    res = loglinear_derive(H, sys)
    if not res.is_zero():
        raise AssertionError(f"first integral not conserved: residual {res}")
    return H


def first_integral_zform(b="b", d="d") -> str:
    """Z - b*log(Z' - b*Z) + d*log(Z' - d*Z), which differs from ``first_integral`` by a constant."""
    form = to_brestovski(b, d)
    from .exprio import format_poly, format_scalar
    out = format_poly(form.F)
    for a, G in form.terms:
        out += _signed(format_scalar(-a), f"log({format_poly(G)})")
    return out


# -- rationality of d/b ----------------------------------------------------------

@dataclass(frozen=True)
class QRatioVerdict:
    name: str
    value: Fraction | None = None

    def __str__(self):
        return self.name if self.value is None else f"{self.name}({self.value})"


def qratio_check(b, d, max_den: int = 10 ** 6, tol: float = 1e-12) -> QRatioVerdict:
    """Decide whether d/b is rational: exactly for exact input, heuristically for floats."""
    if isinstance(b, float) or isinstance(d, float):
        b, d = float(b), float(d)
        if b == 0:
            raise ZeroDivisionError("b must be nonzero")
        r = d / b
        approx = Fraction(r).limit_denominator(max_den)
        if abs(float(approx) - r) <= tol * max(1.0, abs(r)):
            return QRatioVerdict("LikelyRational", approx)
        return QRatioVerdict("Unknown")
    b, d = _sc(b), _sc(d)
    if b.is_zero():
        raise ZeroDivisionError("b must be nonzero")
    q = (d / b).as_rational()
    if q is not None:
        return QRatioVerdict("Rational", q)
    return QRatioVerdict("IrrationalGeneric")


# -- numeric dependence probe --------------------------------------------------------

@dataclass(frozen=True)
class RatioProbeResult:
    name: str                  # IndependentEvidence | DependenceCandidate | Inconclusive
    variation: float | None
    epsilon: float | None = None
    samples: int = 0
    diagnostic: str = ""


def ratio_probe(traj1: Trajectory, traj2: Trajectory, tol: float = 1e-6) -> RatioProbeResult:
    """rho(t) = (x1 - y1)/(x2 - y2) on a shared grid; constant rho hints at a dependence x1 - y1 = eps (x2 - y2)."""
    grid = common_grid([traj1, traj2])
    s1, s2 = traj1.resample(grid), traj2.resample(grid)
    num = s1[:, 0] - s1[:, 1]
    den = s2[:, 0] - s2[:, 1]
    if np.min(np.abs(den)) < tol or (np.any(den > 0) and np.any(den < 0)):
        k = int(np.argmin(np.abs(den)))
        return RatioProbeResult("Inconclusive", None, None, len(grid),
                                f"x2 - y2 comes within tol of zero near t = {grid[k]:.6g}")
    rho = num / den
    mean = float(np.mean(rho))
    if mean == 0:
        return RatioProbeResult("Inconclusive", None, None, len(grid), "ratio has zero mean")
    variation = float((np.max(rho) - np.min(rho)) / abs(mean))
    if variation < tol:
        return RatioProbeResult("DependenceCandidate", variation, mean, len(grid))
    if variation > 10 * tol:
        return RatioProbeResult("IndependentEvidence", variation, None, len(grid))
    return RatioProbeResult("Inconclusive", variation, None, len(grid), "variation inside the undecided band")
