"""Exact linear algebra over Q(params), including case-split elimination."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from ._sympy_bridge import ideal_basis, ideal_reduce
from .scalar import ONE, ZERO, Scalar

Matrix = list[list[Scalar]]


def rref(M: Sequence[Sequence[Scalar]]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form over the field; no case analysis."""
    A = [[Scalar(x) if not isinstance(x, Scalar) else x for x in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if not A[i][c].is_zero()), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = A[r][c].inverse()
        A[r] = [x * inv for x in A[r]]
        for i in range(rows):
            if i != r and not A[i][c].is_zero():
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def kernel_from_rref(R: Matrix, pivots: list[int], ncols: int) -> list[list[Scalar]]:
    basis = []
    free = [c for c in range(ncols) if c not in pivots]
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, pc in enumerate(pivots):
            v[pc] = -R[row][f]
        basis.append(v)
    return basis


def kernel(M: Sequence[Sequence[Scalar]], ncols: int | None = None) -> list[list[Scalar]]:
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return kernel_from_rref([], [], ncols)
    R, piv = rref(M)
    return kernel_from_rref(R, piv, ncols)


def rank(M: Sequence[Sequence[Scalar]]) -> int:
    if not M:
        return 0
    return len(rref(M)[1])


# -- case-split elimination -------------------------------------------------

class Exhausted(RuntimeError):
    """The case tree grew past its node budget."""

    def __init__(self, budget: int):
        super().__init__(f"case-split elimination exceeded its budget of {budget} nodes")
        self.budget = budget


@dataclass(frozen=True)
class Condition:
    kind: str        # "eq" or "ne"
    expr: Scalar     # polynomial in the case parameters (and system parameters)

    def holds(self, point: Mapping[str, Scalar]) -> bool:
        v = self.expr.subs(point)
        return v.is_zero() if self.kind == "eq" else not v.is_zero()

    def __str__(self):
        return f"{self.expr} {'=' if self.kind == 'eq' else '!='} 0"


@dataclass
class CaseLeaf:
    conditions: list[Condition]
    substitution: dict[str, Scalar]
    kernel: list[list[Scalar]]

    def holds(self, point: Mapping[str, Scalar]) -> bool:
        return all(c.holds(point) for c in self.conditions)


@dataclass
class CaseNode:
    conditions: list[Condition] = field(default_factory=list)   # added relative to the parent
    children: list["CaseNode"] = field(default_factory=list)
    leaf: CaseLeaf | None = None


@dataclass
class CaseTree:
    root: CaseNode
    case_params: tuple[str, ...]
    ncols: int
    node_count: int

    def leaves(self) -> Iterator[CaseLeaf]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf is not None:
                yield node.leaf
            stack.extend(reversed(node.children))

    def locate(self, point: Mapping[str, Scalar]) -> CaseLeaf:
        """Follow the unique branch whose conditions hold at ``point``."""
        point = {k: Scalar(v) if not isinstance(v, Scalar) else v for k, v in point.items()}
        node = self.root
        while node.leaf is None:
            hits = [ch for ch in node.children if all(c.holds(point) for c in ch.conditions)]
            if len(hits) != 1:
                raise RuntimeError(f"{len(hits)} branches match the point; tree is not a partition")
            node = hits[0]
        return node.leaf


def vanishes_on_branch(e: Scalar, conditions: Sequence[Condition], case_params: Iterable[str]) -> bool:
    """True when e vanishes wherever the conditions hold (radical membership, Rabinowitsch trick)."""
    if e.is_zero():
        return True
    guard = e.numerator()
    for c in conditions:
        if c.kind == "ne":
            guard = guard * c.expr
    aux = "_vanish_aux"
    eqs = [c.expr for c in conditions if c.kind == "eq"] + [ONE - Scalar.symbol(aux) * guard]
    unknowns = frozenset(case_params) | {aux} | frozenset(s for c in conditions for s in c.expr.symbols())
    return ideal_basis(eqs, unknowns) is None


def _num(e: Scalar) -> Scalar:
    """Numerator of a Scalar (denominators are nonzero by construction)."""
    return e.numerator()


def _normalize_poly_scalar(e: Scalar, case: frozenset[str]) -> Scalar:
    """Numerator made monic in its leading term, for readable and comparable conditions."""
    n = _num(e)
    if n.is_rational:
        return n
    terms, _ = n.numer_denom_terms()
    return n / Scalar(terms[0][1])


def _case_syms(e: Scalar, case: frozenset[str]) -> frozenset[str]:
    return e.symbols() & case


@dataclass
class _State:
    A: Matrix
    used_rows: set
    pivots: dict          # column -> row
    eqs: list
    neqs: list
    subs: dict
    col: int
    ideal: list = field(default_factory=list)   # Groebner basis of equations with no rational solve


class _Engine:
    def __init__(self, case_params: Sequence[str], budget: int):
        self.case = frozenset(case_params)
        self.budget = budget
        self.count = 0

    def node(self, conditions) -> CaseNode:
        self.count += 1
        if self.count > self.budget:
            raise Exhausted(self.budget)
        return CaseNode(list(conditions))

    def known_nonzero(self, e: Scalar, st: _State) -> bool:
        if e.is_zero():
            return False
        if not _case_syms(e, self.case):
            return True
        n = _num(e)
        for d in st.neqs:
            if not _case_syms(n / d, self.case):
                return True
        return False

    def run(self, st: _State, node: CaseNode):
        A = st.A
        ncols = len(A[0]) if A else 0
        while st.col < ncols:
            c = st.col
            if st.ideal:
                for i in range(len(A)):
                    if i not in st.used_rows:
                        A[i][c] = self.reduce(A[i][c], st)
            rows = [i for i in range(len(A)) if i not in st.used_rows and not A[i][c].is_zero()]
            safe = next((i for i in rows if self.known_nonzero(A[i][c], st)), None)
            if safe is not None:
                self.pivot(st, safe, c)
                st.col += 1
                continue
            if not rows:
                st.col += 1
                continue
            e = _normalize_poly_scalar(A[rows[0]][c], self.case)
            ne_node = self.node([Condition("ne", e)])
            ne_state = _copy(st)
            ne_state.neqs.append(e)
            self.pivot(ne_state, rows[0], c)
            ne_state.col += 1
            node.children.append(ne_node)
            self.run(ne_state, ne_node)
            self.branch_zero(_copy(st), e, node, [])
            return
        self.finish(st, node)

    def pivot(self, st: _State, r: int, c: int):
        A = st.A
        inv = A[r][c].inverse()
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and not A[i][c].is_zero():
                f = A[i][c]
                A[i] = [x if y.is_zero() else x - f * y for x, y in zip(A[i], A[r])]
        st.used_rows.add(r)
        st.pivots[c] = r

    def reduce(self, e: Scalar, st: _State) -> Scalar:
        return ideal_reduce(e, tuple(st.ideal), self.case) if st.ideal else e

    def extend_ideal(self, st: _State, e: Scalar) -> bool:
        """Adjoin e = 0 to the side ideal; False if the branch became empty."""
        basis = ideal_basis(st.ideal + [e], self.case)
        if basis is None:
            return False
        st.ideal = basis
        return all(not self.reduce(d, st).is_zero() for d in st.neqs)

    def finish(self, st: _State, node: CaseNode):
        ncols = len(st.A[0]) if st.A else 0
        order = sorted(st.pivots)
        R = [st.A[st.pivots[c]] for c in order]
        node.leaf = CaseLeaf(_accumulated(st), dict(st.subs), kernel_from_rref(R, order, ncols))

    def apply_sub(self, st: _State, name: str, value: Scalar) -> bool:
        """Substitute a case parameter everywhere; False if the branch became empty."""
        m = {name: value}
        neqs = []
        for d in st.neqs:
            d2 = d.subs(m)
            if d2.is_zero():
                return False
            neqs.append(_num(d2))
        st.neqs = neqs
        st.subs = {k: v.subs(m) for k, v in st.subs.items()}
        st.subs[name] = value
        st.A = [[x.subs(m) for x in row] for row in st.A]
        st.eqs = [e.subs(m) for e in st.eqs]
        if st.ideal:
            old, st.ideal = st.ideal, []
            basis = ideal_basis([g.subs(m) for g in old], self.case)
            if basis is None:
                return False
            st.ideal = basis
            return all(not self.reduce(d, st).is_zero() for d in st.neqs)
        return True

    def branch_zero(self, st: _State, e: Scalar, parent: CaseNode, pending: list[Scalar]):
        """Add the branch e = 0 (together with the still unsolved ``pending`` equations)."""
        queue = [e] + pending
        conds = [Condition("eq", e)] if not pending else []
        self.solve_queue(st, queue, parent, conds)

    def solve_queue(self, st: _State, queue: list[Scalar], parent: CaseNode, conds: list[Condition]):
        while queue:
            e = _num(queue[0].subs(st.subs)) if st.subs else _num(queue[0])
            e = _num(self.reduce(e, st))
            queue = queue[1:]
            if e.is_zero():
                continue
            if not _case_syms(e, self.case):
                return  # a nonzero constant must vanish: the branch is empty
            st.eqs.append(e)
            plan = _linear_plan(e, self.case)
            if plan is not None:
                name, A_coef, B_coef = plan
                if not _case_syms(A_coef, self.case):
                    if not self.apply_sub(st, name, -B_coef / A_coef):
                        return
                    continue
                # A != 0: solve; A = 0: then B = 0 as well
                node_a = self.node(conds + [Condition("ne", _normalize_poly_scalar(A_coef, self.case))])
                st_a = _copy(st)
                st_a.neqs.append(_normalize_poly_scalar(A_coef, self.case))
                if self.apply_sub(st_a, name, -B_coef / A_coef):
                    parent.children.append(node_a)
                    self.solve_queue(st_a, queue, node_a, [])
                st_b = _copy(st)
                self.solve_queue(st_b, [A_coef, B_coef] + queue, parent, conds + [Condition("eq", _normalize_poly_scalar(A_coef, self.case))])
                return
            roots = _rational_roots(e, self.case)
            if roots is not None:
                name, values, leftover = roots
                for v in values:
                    child = self.node(conds + [Condition("eq", Scalar.symbol(name) - v)])
                    st_v = _copy(st)
                    if self.apply_sub(st_v, name, Scalar(v)):
                        parent.children.append(child)
                        self.solve_queue(st_v, list(queue), child, [])
                if leftover is not None:
                    st_l = _copy(st)
                    if self.extend_ideal(st_l, leftover):
                        self.solve_queue(st_l, list(queue), parent, conds + [Condition("eq", leftover)])
                return
            # no rational solve: keep e as a side relation and reduce modulo it from here on
            if not self.extend_ideal(st, e):
                return
            conds = conds + [Condition("eq", _normalize_poly_scalar(e, self.case))]
            continue
        split = _univariate_split(st.ideal, self.case) if st.ideal else None
        if split is not None:
            # elimination exposed a one-parameter equation with rational roots: branch on them
            name, values, leftover = split
            for v in values:
                child = self.node(conds + [Condition("eq", Scalar.symbol(name) - v)])
                st_v = _copy(st)
                if self.apply_sub(st_v, name, Scalar(v)):
                    parent.children.append(child)
                    self.solve_queue(st_v, [], child, [])
            if leftover is not None:
                st_l = _copy(st)
                if self.extend_ideal(st_l, leftover):
                    self.solve_queue(st_l, [], parent, conds + [Condition("eq", leftover)])
            return
        child = self.node(conds)
        parent.children.append(child)
        self.run(st, child)


def _accumulated(st: _State) -> list[Condition]:
    kept: list[Scalar] = []
    for d in st.neqs:
        # "2 != 0" says nothing, and d != 0 is the same condition as 2d != 0
        if d.as_rational() is None and all((d / k).as_rational() is None for k in kept):
            kept.append(d)
    out = [Condition("ne", d) for d in kept]
    out += [Condition("eq", Scalar.symbol(k) - v) for k, v in sorted(st.subs.items())]
    out += [Condition("eq", g) for g in st.ideal]
    return out


def _copy(st: _State) -> _State:
    return _State([list(r) for r in st.A], set(st.used_rows), dict(st.pivots), list(st.eqs),
                  list(st.neqs), dict(st.subs), st.col, list(st.ideal))


def _poly_coeffs_in(e: Scalar, name: str) -> dict[int, Scalar]:
    """Coefficients of a polynomial Scalar viewed in one symbol."""
    num, den = e.numer_denom_terms()
    assert len(den) == 1 and not den[0][0]
    out: dict[int, Scalar] = {}
    for mon, c in num:
        k = mon.get(name, 0)
        term = Scalar(c / den[0][1])
        for n, j in mon.items():
            if n != name:
                term = term * Scalar.symbol(n) ** j
        out[k] = out.get(k, ZERO) + term
    return out


def _linear_plan(e: Scalar, case: frozenset[str]):
    """Pick a case parameter in which e has degree 1: (name, A, B) with e = A*name + B."""
    best = None
    for name in sorted(_case_syms(e, case)):
        co = _poly_coeffs_in(e, name)
        if max(co) != 1:
            continue
        A, B = co.get(1, ZERO), co.get(0, ZERO)
        simple = not _case_syms(A, case)
        if best is None or (simple and not best[3]):
            best = (name, A, B, simple)
            if simple:
                break
    return None if best is None else best[:3]


def _rational_roots(e: Scalar, case: frozenset[str]):
    syms = e.symbols()
    if len(syms) != 1 or not syms <= case:
        return None
    name = next(iter(syms))
    from ._sympy_bridge import factor_rational_univariate
    from .mpoly import MPoly
    co = _poly_coeffs_in(e, name)
    p = MPoly((name,), {(k,): v for k, v in co.items()})
    values = []
    rest = MPoly.const(1, (name,))
    for f, _ in factor_rational_univariate(p, name):
        if f.degree_in(name) == 1:
            values.append(-f.terms.get((0,), ZERO).as_rational())
        else:
            rest = rest * f
    leftover = None
    if not rest.is_constant():
        leftover = sum((c * Scalar.symbol(name) ** m[0] for m, c in rest.terms.items()), ZERO)
    return name, sorted(values), leftover


def _univariate_split(ideal: list[Scalar], case: frozenset[str]):
    for g in ideal:
        roots = _rational_roots(g, case)
        if roots is not None and roots[1]:
            return roots
    return None


def parametric_kernel(M: Sequence[Sequence[Scalar]], case_params: Sequence[str], budget: int = 10_000) -> CaseTree:
    """Case-split Gaussian elimination; leaves carry kernel bases of the specialized system."""
    A = [[x if isinstance(x, Scalar) else Scalar(x) for x in row] for row in M]
    ncols = len(A[0]) if A else 0
    eng = _Engine(case_params, budget)
    root = eng.node([])
    eng.run(_State(A, set(), {}, [], [], {}, 0), root)
    if root.leaf is None and not root.children:
        root.leaf = CaseLeaf([], {}, [])
    return CaseTree(root, tuple(case_params), ncols, eng.count)
