"""End-to-end pipeline on the preset Lotka-Volterra systems.

Each step records the verdict it obtained, the verdict it expects and
whether they agree.  Nothing is skipped when a step disagrees.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction
from typing import Any, Callable

from .algebra.mpoly import MPoly
from .algebra.scalar import Scalar
from .exprio import SymbolTable, parse_poly


def _step(steps: list, title: str, instantiates: str, expected: str, fn: Callable[[], tuple[str, dict]]):
    t0 = time.perf_counter()
    try:
        got, detail = fn()
    except Exception as exc:  # a failing step is reported, not raised
        got, detail = "error", {"error": f"{type(exc).__name__}: {exc}"}
    steps.append({"step": title, "instantiates": instantiates, "expected": expected, "obtained": got,
                  "agrees": got == expected, "detail": detail,
                  "seconds": round(time.perf_counter() - t0, 3)})


def _normalized(family: str):
    """X' = X(Y + 1), Y' = Y(X + alpha) or Y' = Y(X + gamma*Y), with a free symbol for the ratio."""
    from .brestovski import lv_system
    return lv_system(1, 1, 1, "alpha" if family == "classical" else "gamma", family)


def _constraints(sys, case, relation=None, prefix=None, depth=3):
    from .puiseux import Ansatz, ansatz_constraints
    return ansatz_constraints(sys, Ansatz(case, depth=depth, prefix=prefix or {}), relation)


def _first(cs) -> str:
    return f"{cs.first().normalized} = 0"


def classical_steps() -> list[dict]:
    from .brestovski import (first_integral, lv_system, normalize_system, qratio_check, ratio_probe,
                             to_brestovski)
    from .darboux import darboux_search, invariant_check
    from .lode import algebraic_solution_test, lemma_family_check
    from .numerics import conservation_drift, integrate, relation_probe
    from .puiseux import constraint_to_ode, lemma_form
    from .diffstruct import DiffTower, PlanarSystem

    steps: list[dict] = []
    full = lv_system("a", "b", "c", "d")
    gens = ("X", "Y")
    XY = MPoly.var("X", gens) * MPoly.var("Y", gens)
    _step(steps, "cofactor of XY", "invariant polynomial with cofactor aY + cX + b + d",
          "a*Y + c*X + b + d", lambda: (str(invariant_check(full, XY)), {}))

    def generic_search():
        cert = darboux_search(lv_system(1, "b", 1, "d"), 2)
        irr = [str(f.polynomial) for f in cert.irreducible]
        return ",".join(irr), {
            "families": [str(f.polynomial) for f in cert.families]}
    _step(steps, "degree-2 invariant search, independent b and d",
          "no invariant curves beyond the axes", "X,Y", generic_search)

    def degenerate():
        cert = darboux_search(lv_system(1, "b", 1, "b"), 1)
        fam = [f"{f.polynomial} [{f.cofactor}]" for f in cert.families]
        return ",".join(fam), {}
    _step(steps, "degree-1 search with d = b", "X - Y becomes invariant with cofactor b",
          "X [Y + b],X - Y [b],Y [X + b]", degenerate)

    def tower_family():
        base = lv_system(1, "b", 1, "b")
        z = "z"
        tg = ("z",)
        tower = DiffTower.build([(z, MPoly.var(z, tg).scale(Scalar.symbol("b")))])
        sys_ = PlanarSystem(base.xvar, base.yvar, base.f, base.g, tower, base.divisors, base.params)
        cert = darboux_search(sys_, 1, [MPoly.const(1), MPoly.var(z, tg)])
        fam = [f for f in cert.families if f.free_constants]
        return ",".join(f"{f.polynomial} [{f.cofactor}]" for f in fam), {}
    _step(steps, "degree-1 search over z' = b z with basis {1, z}",
          "the one-parameter family X - Y - lambda*z", "lam1*z + X - Y [b]", tower_family)

    def norm():
        _, rec = normalize_system("a", "b", "c", "d")
        return f"alpha = {rec.normalized['alpha']}", {"verified": rec.verify(),
                                                       "ratio": str(qratio_check("b", "d"))}
    _step(steps, "normalization", "rescaling to LV_{1,1,1,d/b}", "alpha = d/b", norm)

    N = _normalized("classical")
    _step(steps, "expansion X = sum a_i Y^(r+i), r < 0", "coefficient comparison at Y^(2r)",
          "a0^2*r = 0", lambda: (_first(_constraints(N, "r<0")), {}))
    _step(steps, "expansion with r = 0", "coefficient comparison at Y^0",
          "a0 - a0' = 0", lambda: (_first(_constraints(N, "r=0")), {}))
    _step(steps, "expansion with r > 0", "coefficient comparison: a0' = (1 - r*alpha) a0",
          "a0*alpha*r - a0 + a0' = 0", lambda: (_first(_constraints(N, "r>0")), {}))

    T = SymbolTable(("t",), ("alpha",))
    from .exprio import parse_ratfunc
    _step(steps, "y' = (alpha/t) y", "algebraic solutions force residues in Q",
          "NoAlgebraic", lambda: (algebraic_solution_test(parse_ratfunc("alpha/t", T), "t").name, {}))

    m = Scalar.symbol("m")

    def second_stage():
        cs = _constraints(N, "k!=0", relation=m)
        ode = constraint_to_ode(cs)
        return _first(cs), {"F": str(ode.F)}
    _step(steps, "second stage, a = sum b_i(X) Y^(k+i), k != 0", "m b0 = X db0/dX + k (X + alpha) b0",
          "b0*k*X + b0_X*X + alpha*b0*k - b0*m = 0", second_stage)

    def k_zero():
        cs = _constraints(N, "k=0", relation=Scalar(1))
        ode = constraint_to_ode(cs)
        v = algebraic_solution_test(ode.F, ode.var)
        return f"{ode.F}: {v.name}", {"witness": [f"{p}^{e}" for p, e in getattr(v, "witness", ())]}
    _step(steps, "second stage, k = 0, m = 1", "db0/dX = b0/X has the solution b0 = beta*X",
          "1/X: HasAlgebraic", k_zero)

    beta_x = {Fraction(0): parse_poly("beta*X", SymbolTable(("X",), ("beta",)))}

    def case1():
        cs = _constraints(N, "0<s<1", relation=Scalar(1), prefix=beta_x)
        ode = constraint_to_ode(cs)
        v = algebraic_solution_test(ode.F, ode.var)
        return v.name, {"F": str(ode.F), "c": str(ode.c), "reason": getattr(v, "reason", "")}
    _step(steps, "next exponent s in (0, 1)", "F = (1 - s*alpha)/X - s has a polynomial part",
          "NoAlgebraic", case1)

    def case2():
        cs = _constraints(N, "s=1", relation=Scalar(1), prefix=beta_x)
        ode = constraint_to_ode(cs)
        q, c1 = lemma_form(ode.F, ode.var)
        v = lemma_family_check(q, c1, ode.c, "classical")
        return v.name, {"F": str(ode.F), "c": str(ode.c), "q": str(q), "c1": str(c1)}
    _step(steps, "next exponent s = 1", "v' = ((1 - alpha)/x - 1) v - beta, q irrational",
          "NoAlgebraic", case2)

    def brest():
        form = to_brestovski()
        return ("verified" if all(form.identities.values()) else "failed"), {"form": str(form)}
    _step(steps, "logarithmic rewriting", "Z' = b G1'/G1 - d G2'/G2 with Z = X - Y", "verified", brest)

    _step(steps, "first integral", "H = (X - Y) + d log X - b log Y is conserved",
          "X - Y + d*log(X) - b*log(Y)", lambda: (str(first_integral()), {}))

    params = {"alpha": math.sqrt(2)}

    def drift():
        fi = first_integral(lv_system(1, 1, 1, "alpha"))
        tr = integrate(N, params, (0.5, 0.25), 1.0, rtol=1e-10)
        dr = conservation_drift(fi, tr)
        return ("drift <= 1e-6" if dr <= 1e-6 else "drift > 1e-6"), {"drift": dr, "termination": tr.termination}
    _step(steps, "numeric conservation", "H stays constant along solutions", "drift <= 1e-6", drift)

    def probes():
        t1 = integrate(N, params, (0.5, 0.25), 0.5)
        t2 = integrate(N, params, (0.6, 0.3), 0.5)
        return ratio_probe(t1, t2).name, {}
    _step(steps, "ratio probe on two solutions", "no relation x1 - y1 = eps (x2 - y2)",
          "IndependentEvidence", probes)

    def relation():
        t1 = integrate(N, params, (0.5, 0.25), 1.0)
        t2 = integrate(N, params, (0.6, 0.3), 1.0)
        rep = relation_probe([t1, t2], 2)
        return rep.verdict, {"ratio": rep.ratio, "monomials": len(rep.monomials)}
    _step(steps, "degree-2 relation probe on two solutions", "algebraic independence of solutions",
          "NoRelationEvidence", relation)
    return steps


def twod_steps() -> list[dict]:
    from .brestovski import lv_system, normalize_system
    from .darboux import invariant_check
    from .lode import lemma_family_check
    from .puiseux import constraint_to_ode, lemma_form

    steps: list[dict] = []
    full = lv_system("a", "b", "c", "d", "twod")
    gens = ("X", "Y")
    XY = MPoly.var("X", gens) * MPoly.var("Y", gens)
    _step(steps, "cofactor of XY", "XY is invariant for the 2d system", "a*Y + c*X + d*Y + b",
          lambda: (str(invariant_check(full, XY)), {}))

    def norm():
        _, rec = normalize_system("a", "b", "c", "d", "twod")
        return f"gamma = {rec.normalized['gamma']}", {"verified": rec.verify()}
    _step(steps, "normalization", "rescaling to LV^2d_{1,1,1,d/a}", "gamma = d/a", norm)

    N = _normalized("twod")
    _step(steps, "expansion X = sum a_i Y^(r+i), r > 0", "coefficient comparison: a0' = a0",
          "a0 - a0' = 0", lambda: (_first(_constraints(N, "r>0")), {}))

    beta_x = {Fraction(0): parse_poly("beta*X", SymbolTable(("X",), ("beta",)))}

    def case2():
        cs = _constraints(N, "s=1", relation=Scalar(1), prefix=beta_x)
        ode = constraint_to_ode(cs)
        q, c1 = lemma_form(ode.F, ode.var)
        v = lemma_family_check(q, c1, ode.c, "twod")
        return v.name, {"F": str(ode.F), "c": str(ode.c)}
    _step(steps, "second stage, next exponent s = 1", "v' = (1/t - 1) v + c with c != 0",
          "NoAlgebraic", case2)
    return steps


def run_demo(system: str) -> list[dict[str, Any]]:
    if system == "lv-classical":
        return classical_steps()
    if system == "lv-2d":
        return twod_steps()
    raise ValueError(f"unknown demo {system!r}")
