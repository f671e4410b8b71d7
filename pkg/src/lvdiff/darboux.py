"""Invariant (Darboux) polynomials of planar systems: verification and bounded-degree search."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .algebra._sympy_bridge import ideal_basis, ideal_reduce
from .algebra.linalg import CaseLeaf, CaseTree, parametric_kernel, rref, vanishes_on_branch
from .algebra.mpoly import MPoly, poly_gcd
from .algebra.ratfunc import RatFunc
from .algebra.scalar import ONE, ZERO, Scalar
from .diffstruct import PlanarSystem, _deg_in

__all__ = [
    "PlanarSystem", "ds_apply", "invariant_check", "NotInvariant", "darboux_search",
    "DarbouxCertificate", "InvariantFamily",
]

Cofactor = Union[MPoly, RatFunc]


def ds_apply(sys: PlanarSystem, P: MPoly) -> MPoly:
    """P^D + f dP/dX + g dP/dY."""
    out = sys.derivation(P)
    if isinstance(out, RatFunc):
        if not out.is_polynomial():
            raise ValueError("tower derivatives are not polynomial; use derive_system instead")
        return out.as_poly()
    return out


@dataclass(frozen=True)
class NotInvariant:
    remainder: MPoly

    def __bool__(self):
        return False


def invariant_check(sys: PlanarSystem, P: MPoly) -> Cofactor | NotInvariant:
    """Cofactor Q with D_S P = Q P, or NotInvariant carrying the division remainder.

    Q is a polynomial in the two variables; its coefficients may be rational
    in the tower generators (a RatFunc is returned in that case).
    """
    if P.is_zero():
        raise ValueError("the zero polynomial has no cofactor")
    DP = sys.derivation(P)
    if isinstance(DP, MPoly):
        q, r = DP.divrem(P)
        if r.is_zero():
            _check_degree(sys, q)
            return q
    else:
        r = None
    ratio = RatFunc(DP if isinstance(DP, MPoly) else DP.num,
                    P if isinstance(DP, MPoly) else P * DP.den)
    if any(v in ratio.den.used_gens() for v in sys.vars):
        if r is None:
            r = (DP.num).divrem(P)[1]
        return NotInvariant(r)
    if ratio.is_polynomial():
        q = ratio.as_poly()
        _check_degree(sys, q)
        return q
    _check_degree(sys, ratio.num)
    return ratio


def _check_degree(sys: PlanarSystem, q: MPoly):
    if not q.is_zero() and _deg_in(q, sys.vars) > sys.max_degree - 1:
        raise AssertionError("cofactor degree exceeds max(deg f, deg g) - 1")


# -- search ------------------------------------------------------------------

def _monomials(vars2: Sequence[str], degree: int) -> list[dict[str, int]]:
    """Monomials of total degree <= degree, degree descending then X-power descending."""
    x, y = vars2
    out = []
    for d in range(degree, -1, -1):
        for i in range(d, -1, -1):
            out.append({x: i, y: d - i})
    return out


@dataclass
class InvariantFamily:
    polynomial: MPoly            # may contain free constants lam1, lam2, ...
    cofactor: Cofactor
    free_constants: tuple[str, ...] = ()
    reducible: bool = False
    factors: list[MPoly] = field(default_factory=list)
    conditions: list[str] = field(default_factory=list)
    # equations on the cofactor coefficients when they are algebraic over the base field
    extension: list[Scalar] = field(default_factory=list)


@dataclass
class DarbouxCertificate:
    degree_bound: int
    basis: list[MPoly]
    ansatz: str
    tree: CaseTree
    families: list[InvariantFamily]
    case_params: dict[str, MPoly]    # case parameter name -> cofactor monomial

    @property
    def irreducible(self) -> list[InvariantFamily]:
        """Irreducible families defined over the base field."""
        return [f for f in self.families if not f.reducible and not f.extension]

    @property
    def over_extensions(self) -> list[InvariantFamily]:
        return [f for f in self.families if f.extension]

    def leaves_with_kernel(self) -> list[CaseLeaf]:
        return [l for l in self.tree.leaves() if l.kernel]


def darboux_search(sys: PlanarSystem, N: int, basis: Sequence[MPoly] | None = None,
                   budget: int = 10_000) -> DarbouxCertificate:
    if N < 1:
        raise ValueError("degree bound must be at least 1")
    tower_names = set(sys.tower.names)
    allgens = set(sys.vars) | tower_names | set(sys.f.gens) | set(sys.g.gens)
    basis = [b.with_gens(set(b.gens) | allgens) for b in (basis or [MPoly.const(1)])]
    allgens |= set(basis[0].gens)
    for b in basis:
        if any(v in b.used_gens() for v in sys.vars):
            raise ValueError("basis elements must not involve the dynamical variables")
        bad = set(b.used_gens()) - tower_names
        if bad:
            raise ValueError(f"basis derivative not expressible in the tower: {sorted(bad)}")
    mus = _monomials(sys.vars, N)
    nus = _monomials(sys.vars, sys.max_degree - 1)
    qnames = [f"_q{i}" for i in range(len(nus))]
    Q = sum((MPoly.monomial(allgens, nu, Scalar.symbol(qn)) for qn, nu in zip(qnames, nus)),
            MPoly.const(0, allgens))
    columns: list[MPoly] = []
    col_info: list[MPoly] = []
    for mu in mus:
        for b in basis:
            term = MPoly.monomial(allgens, mu) * b
            col_info.append(term)
            columns.append(ds_apply(sys, term) - Q * term)
    gens = columns[0].gens
    rows = sorted({m for c in columns for m in c.terms}, key=lambda m: (-sum(m), tuple(-k for k in m)))
    M = [[c.with_gens(gens).terms.get(m, ZERO) for c in columns] for m in rows]
    tree = parametric_kernel(M, qnames, budget=budget)
    qmono = {qn: MPoly.monomial(allgens, nu) for qn, nu in zip(qnames, nus)}
    families = _extract_families(sys, tree, col_info, qnames, Q)
    desc = (f"P = sum u*beta*mu over {len(basis)} basis element(s) and {len(mus)} monomials of degree <= {N}; "
            f"Q = sum q*nu over {len(nus)} monomials of degree <= {sys.max_degree - 1}")
    return DarbouxCertificate(N, basis, desc, tree, families, qmono)


def _tower_content(sys: PlanarSystem, P: MPoly) -> MPoly:
    g = MPoly.const(0, P.gens)
    for c in P.coeffs_in(sys.vars).values():
        g = poly_gcd(g, c.with_gens(set(c.gens) | set(P.gens)))
        if g.is_constant():
            return MPoly.const(1, P.gens)
    return g


def _extract_families(sys: PlanarSystem, tree: CaseTree, cols: list[MPoly], qnames, Q: MPoly) -> list[InvariantFamily]:
    found: dict[str, InvariantFamily] = {}
    case = frozenset(qnames)
    for leaf in tree.leaves():
        if not leaf.kernel:
            continue
        R, piv = rref(leaf.kernel)
        R = [R[i] for i in range(len(piv))]
        for i in range(len(R)):
            lam_names = [f"lam{j - i}" for j in range(i + 1, len(R))]
            vec = list(R[i])
            for j, ln in zip(range(i + 1, len(R)), lam_names):
                lam = Scalar.symbol(ln)
                vec = [a + lam * b for a, b in zip(vec, R[j])]
            P = sum((c * v for c, v in zip(cols, vec) if not v.is_zero()), MPoly.const(0, cols[0].gens))
            if not any(v in P.used_gens() for v in sys.vars):
                continue  # units of the coefficient field
            content = _tower_content(sys, P)
            if not content.is_constant():
                P = P.exact_div(content)
            used = [ln for ln in lam_names if ln in P.param_symbols()]
            P = _normalize(sys, P)
            conds = [str(c) for c in leaf.conditions if not (c.kind == "ne" and c.expr.is_rational)]
            if P.param_symbols() & case:
                fam = _extension_family(sys, leaf, P, Q, case, used, conds)
            else:
                cof = invariant_check(sys, P)
                if isinstance(cof, NotInvariant):
                    raise AssertionError(f"extracted polynomial {P} failed re-verification")
                fam = InvariantFamily(P, cof, tuple(used), conditions=conds)
            key = str(fam.polynomial)
            old = found.get(key)
            if old is None or len(fam.free_constants) > len(old.free_constants):
                found[key] = fam
    for fam in list(found.values()):
        if fam.free_constants:
            base = fam.polynomial.subs_params({n: ZERO for n in fam.free_constants})
            if str(base) != str(fam.polynomial):
                found.pop(str(base), None)
    fams = sorted(found.values(), key=lambda f: (_deg_in(f.polynomial, sys.vars), len(f.free_constants), str(f.polynomial)))
    for k, fam in enumerate(fams):
        for other in fams[:k]:
            if other.reducible or _deg_in(other.polynomial, sys.vars) >= _deg_in(fam.polynomial, sys.vars):
                continue
            q, r = fam.polynomial.divrem(other.polynomial)
            if r.is_zero():
                fam.reducible = True
                fam.factors = [other.polynomial, q]
                break
    return fams


def _extension_family(sys, leaf: CaseLeaf, P: MPoly, Q: MPoly, case: frozenset[str], used, conds) -> InvariantFamily:
    """A family whose cofactor coefficients satisfy equations with no rational solution."""
    eqs = [c.expr for c in leaf.conditions if c.kind == "eq" and c.expr.symbols() & case]
    basis = tuple(ideal_basis(eqs, case) or [])
    red = lambda c: ideal_reduce(c, basis, case)
    P = P.map_coeffs(red)
    cof = Q.subs_params(leaf.substitution).map_coeffs(red)
    resid = ds_apply(sys, P) - cof * P
    if any(not vanishes_on_branch(c, leaf.conditions, case) for c in resid.with_gens(P.gens).terms.values()):
        raise AssertionError(f"extracted polynomial {P} failed re-verification on its branch")
    _check_degree(sys, cof)
    return InvariantFamily(P, cof, tuple(used), conditions=conds, extension=list(basis))


def _normalize(sys: PlanarSystem, P: MPoly) -> MPoly:
    """Leading coefficient 1 under graded-lex in the dynamical variables."""
    parts = P.coeffs_in(sys.vars)
    lead = max(parts, key=lambda m: (sum(m), m))
    c = parts[lead]
    if c.is_constant():
        return P.scale(c.constant_value().inverse())
    _, lc = c.leading()
    return P.scale(lc.inverse())
