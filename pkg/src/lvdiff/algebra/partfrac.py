"""Partial fractions and residue tests for univariate rational functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from ._sympy_bridge import factor_rational_univariate
from .mpoly import MPoly, _main_var, poly_gcd, squarefree
from .ratfunc import RatFunc
from .scalar import ONE, ZERO, Scalar


@dataclass
class PFTerm:
    factor: MPoly          # monic, squarefree; irreducible over Q when parameter-free
    multiplicity: int
    numerators: list[MPoly]  # numerators[j] sits over factor**(j+1), deg < deg factor
    irreducible: bool = True


@dataclass
class PFDecomp:
    var: str
    polynomial_part: MPoly
    terms: list[PFTerm] = field(default_factory=list)

    def recompose(self) -> RatFunc:
        # one common denominator; adding term by term costs a parametric gcd per addition
        gens = self.polynomial_part.gens
        powers = [[t.factor ** k for k in range(t.multiplicity + 1)] for t in self.terms]
        den = MPoly.const(1, gens)
        for t, pw in zip(self.terms, powers):
            den = den * pw[t.multiplicity]
        num = self.polynomial_part * den
        for i, (t, pw) in enumerate(zip(self.terms, powers)):
            rest = MPoly.const(1, gens)
            for k, (u, pu) in enumerate(zip(self.terms, powers)):
                if k != i:
                    rest = rest * pu[u.multiplicity]
            for j, n in enumerate(t.numerators):
                if not n.is_zero():
                    num = num + n * rest * pw[t.multiplicity - j - 1]
        return RatFunc(num, den)


def ext_gcd(a: MPoly, b: MPoly, var: str):
    """(g, s, t) with s*a + t*b = g monic."""
    a, b = a._align(b)
    r0, r1 = a, b
    s0, s1 = MPoly.const(1, a.gens), MPoly.const(0, a.gens)
    t0, t1 = MPoly.const(0, a.gens), MPoly.const(1, a.gens)
    while not r1.is_zero():
        q, r = r0.divrem(r1, var)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    lc = r0.leading()[1].inverse()
    return r0.scale(lc), s0.scale(lc), t0.scale(lc)


def inverse_mod(a: MPoly, p: MPoly, var: str) -> MPoly:
    g, s, _ = ext_gcd(a.divrem(p, var)[1], p, var)
    if g.is_zero() or not g.is_constant():
        raise ArithmeticError("element is not invertible modulo the factor")
    return s.divrem(p, var)[1]


def _param_free(p: MPoly) -> bool:
    return all(c.is_rational for c in p.terms.values())


def rational_content(p: MPoly, var: str) -> MPoly:
    """Largest parameter-free monic factor of p over Q[var].

    Writes p as sum_j c_j(var) * pi_j with pi_j distinct parameter monomials
    (after clearing parameter denominators) and returns gcd_j c_j.
    """
    from ._sympy_bridge import _common_denominator
    if _param_free(p):
        return p.monic()
    scaled = p.scale(_common_denominator(p))
    i = p.gens.index(var)
    pieces: dict[tuple, dict] = {}
    for m, c in scaled.terms.items():
        num, den = c.numer_denom_terms()
        assert len(den) == 1 and not den[0][0]
        for pm, pc in num:
            key = tuple(sorted(pm.items()))
            pieces.setdefault(key, {})
            pieces[key][m] = pieces[key].get(m, Fraction(0)) + pc / den[0][1]
    g = MPoly.const(0, p.gens)
    for coeffs in pieces.values():
        g = poly_gcd(g, MPoly(p.gens, {m: Scalar(c) for m, c in coeffs.items()}))
        if g.is_constant():
            break
    return g


def factor_denominator(den: MPoly, var: str) -> list[tuple[MPoly, int, bool]]:
    """Squarefree decomposition, refined by Q-factorization of parameter-free parts.

    Returns (factor, multiplicity, known_irreducible).
    """
    out: list[tuple[MPoly, int, bool]] = []
    for s, k in squarefree(den):
        content = rational_content(s, var)
        rest = s
        if not content.is_constant():
            for f, _ in factor_rational_univariate(content, var):
                out.append((f, k, True))
            rest = s.divrem(content, var)[0].monic()
        if not rest.is_constant():
            out.append((rest, k, rest.degree_in(var) == 1))
    out.sort(key=lambda t: (t[0].degree_in(var), str(t[0])))
    return out


def partial_fractions(f: RatFunc, var: str | None = None) -> PFDecomp:
    var = var or _main_var(f.num, f.den)
    num, den = f.num, f.den
    if var not in num.gens:
        num, den = num.with_gens(set(num.gens) | {var}), den.with_gens(set(den.gens) | {var})
    poly, rem = num.divrem(den, var)
    decomp = PFDecomp(var, poly)
    if rem.is_zero():
        return decomp
    _, lc = den.leading()
    den_m = den.scale(lc.inverse())
    rem = rem.scale(lc.inverse())
    factors = factor_denominator(den_m, var)
    for p, k, irr in factors:
        pk = p ** k
        cof = den_m.divrem(pk, var)[0]
        a = (rem * inverse_mod(cof, pk, var)).divrem(pk, var)[1]
        nums: list[MPoly] = []
        # a = sum_j N_j p^(k-j); peel off the lowest p-adic digit first
        for _ in range(k):
            a, digit = a.divrem(p, var)
            nums.append(digit)
        nums.reverse()  # nums[0] now belongs to p^1
        decomp.terms.append(PFTerm(p, k, nums, irr))
    return decomp


# -- residues ---------------------------------------------------------------

@dataclass(frozen=True)
class RationalResidue:
    value: Fraction


@dataclass(frozen=True)
class NonRational:
    residue_class: MPoly


@dataclass(frozen=True)
class HigherPole:
    multiplicity: int


ResidueVerdict = Union[RationalResidue, NonRational, HigherPole]


def multiplicity(den: MPoly, p: MPoly, var: str) -> int:
    k = 0
    while True:
        q, r = den.divrem(p, var)
        if not r.is_zero():
            return k
        den, k = q, k + 1


def residue_class(f: RatFunc, p: MPoly, var: str) -> MPoly:
    """num * (den')^-1 reduced modulo p; its value at a root of p is the residue there."""
    return (f.num * inverse_mod(f.den.diff(var), p, var)).divrem(p, var)[1]


def residue_rationality(f: RatFunc, p: MPoly, var: str | None = None) -> ResidueVerdict:
    var = var or _main_var(f.num, f.den, p)
    if p.is_constant():
        raise ValueError("the factor must be non-constant")
    k = multiplicity(f.den, p, var)
    if k == 0:
        raise ValueError("the factor does not divide the denominator")
    if k > 1:
        return HigherPole(k)
    rc = residue_class(f, p, var)
    if rc.is_constant():
        q = rc.constant_value().as_rational()
        if q is not None:
            return RationalResidue(q)
    return NonRational(rc)


def charpoly_mod(h: MPoly, p: MPoly, var: str, lam: str = "lam") -> MPoly:
    """Characteristic polynomial of multiplication by h on K[var]/(p), via Faddeev-LeVerrier."""
    n = p.degree_in(var)
    basis = [MPoly.monomial(p.gens, {var: j}) for j in range(n)]
    i = p.gens.index(var) if var in p.gens else None
    cols = []
    for b in basis:
        r = (h * b).divrem(p, var)[1]
        col = [ZERO] * n
        for m, c in r.terms.items():
            col[m[i] if i is not None else 0] = c
        cols.append(col)
    A = [[cols[j][r] for j in range(n)] for r in range(n)]
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    Mk = [[ZERO] * n for _ in range(n)]
    for k in range(1, n + 1):
        AM = [[sum((A[r][s] * Mk[s][c] for s in range(n)), ZERO) for c in range(n)] for r in range(n)]
        Mk = [[AM[r][c] + (coeffs[n - k + 1] if r == c else ZERO) for c in range(n)] for r in range(n)]
        AMk = [[sum((A[r][s] * Mk[s][c] for s in range(n)), ZERO) for c in range(n)] for r in range(n)]
        tr = sum((AMk[j][j] for j in range(n)), ZERO)
        coeffs[n - k] = -tr / k
    return MPoly((lam,), {(j,): c for j, c in enumerate(coeffs)})


def residue_split(f: RatFunc, p: MPoly, var: str) -> list[tuple[MPoly, Fraction]] | None:
    """Split a simple squarefree factor p by residue value.

    Returns [(g, e)] with prod g = p and residue e at every root of g, or None
    when some residue is not a rational number.
    """
    rc = residue_class(f, p, var)
    if rc.is_constant():
        q = rc.constant_value().as_rational()
        return [(p, q)] if q is not None else None
    chi = charpoly_mod(rc, p, var)
    if not _param_free(chi):
        return None
    pieces = []
    for g, _ in factor_rational_univariate(chi, "lam"):
        if g.degree_in("lam") != 1:
            return None
        e = -g.terms.get((0,), ZERO).as_rational()
        shifted = (f.num - f.den.diff(var).scale(Scalar(e))).divrem(p, var)[1]
        piece = poly_gcd(p, shifted)
        if not piece.is_constant():
            pieces.append((piece, e))
    return pieces
