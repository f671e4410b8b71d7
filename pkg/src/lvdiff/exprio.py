"""Text syntax for polynomials, rational functions and system files.

Grammar (no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' ['-'] INT)?
    atom   := INT | IDENT | '(' expr ')'

Identifiers are ``[A-Za-z][A-Za-z0-9_]*`` optionally followed by primes
(``a0'``), which name formal derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .algebra.mpoly import MPoly
from .algebra.ratfunc import RatFunc
from .algebra.scalar import Scalar, mono_sort_key

MAX_EXPONENT = 1000
MAX_DEPTH = 200


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.message = message
        self.pos = pos


class SpecError(ExprError):
    pass


@dataclass(frozen=True)
class ExprAst:
    kind: str  # number | symbol | add | mul | neg | pow | div
    children: tuple["ExprAst", ...] = ()
    value: Union[int, str, None] = None
    pos: int = 0


@dataclass(frozen=True)
class SymbolTable:
    """Declared names: generators become polynomial variables, params become Scalars."""

    gens: tuple[str, ...] = ()
    params: tuple[str, ...] = ()

    def __post_init__(self):
        clash = set(self.gens) & set(self.params)
        if clash:
            raise ExprError(f"names declared both as variable and parameter: {sorted(clash)}")

    @property
    def sorted_gens(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.gens)))


# -- lexer --------------------------------------------------------------------

@dataclass
class _Tok:
    kind: str  # INT IDENT OP END
    text: str
    pos: int


def _is_ident_start(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ("0" <= ch <= "9") or ch == "_"


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif "0" <= ch <= "9":
            j = i
            while j < n and "0" <= text[j] <= "9":
                j += 1
            toks.append(_Tok("INT", text[i:j], i))
            i = j
        elif _is_ident_start(ch):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            while j < n and text[j] == "'":
                j += 1
            toks.append(_Tok("IDENT", text[i:j], i))
            i = j
        elif ch in "+-*/^()":
            toks.append(_Tok("OP", ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(_Tok("END", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str) -> _Tok:
        t = self.peek()
        if t.kind != "OP" or t.text != op:
            raise ParseError(f"expected {op!r}", t.pos)
        return self.take()

    def parse(self) -> ExprAst:
        node = self.expr()
        t = self.peek()
        if t.kind != "END":
            raise ParseError(f"unexpected {t.text!r}", t.pos)
        return node

    def _enter(self, pos: int):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", pos)

    def expr(self) -> ExprAst:
        self._enter(self.peek().pos)
        node = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.take()
            rhs = self.term()
            if op.text == "-":
                rhs = ExprAst("neg", (rhs,), pos=op.pos)
            node = ExprAst("add", (node, rhs), pos=op.pos)
        self.depth -= 1
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.take()
            rhs = self.unary()
            node = ExprAst("mul" if op.text == "*" else "div", (node, rhs), pos=op.pos)
        return node

    def unary(self) -> ExprAst:
        t = self.peek()
        if t.kind == "OP" and t.text in "+-":
            self.take()
            self._enter(t.pos)
            inner = self.unary()
            self.depth -= 1
            return inner if t.text == "+" else ExprAst("neg", (inner,), pos=t.pos)
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        t = self.peek()
        if t.kind == "OP" and t.text == "^":
            self.take()
            sign = 1
            s = self.peek()
            if s.kind == "OP" and s.text == "-":
                self.take()
                sign = -1
            e = self.peek()
            if e.kind != "INT":
                raise ParseError("exponent must be an integer literal", e.pos)
            self.take()
            k = int(e.text)
            if k > MAX_EXPONENT:
                raise ParseError(f"exponent exceeds {MAX_EXPONENT}", e.pos)
            return ExprAst("pow", (base,), value=sign * k, pos=t.pos)
        return base

    def atom(self) -> ExprAst:
        t = self.peek()
        if t.kind == "INT":
            self.take()
            return ExprAst("number", value=int(t.text), pos=t.pos)
        if t.kind == "IDENT":
            self.take()
            return ExprAst("symbol", value=t.text, pos=t.pos)
        if t.kind == "OP" and t.text == "(":
            self.take()
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "END":
            raise ParseError("unexpected end of input", t.pos)
        raise ParseError(f"unexpected {t.text!r}", t.pos)


def parse_ast(text: str | bytes) -> ExprAst:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("input is not valid UTF-8", exc.start) from None
    return _Parser(text).parse()


# -- evaluation ---------------------------------------------------------------

def _eval(node: ExprAst, ctx: SymbolTable, rational: bool):
    gens = ctx.sorted_gens
    k = node.kind
    if k == "number":
        return RatFunc.from_poly(MPoly.const(node.value, gens))
    if k == "symbol":
        name = node.value
        if name in ctx.gens:
            return RatFunc.from_poly(MPoly.var(name, gens))
        if name in ctx.params:
            return RatFunc.from_poly(MPoly.const(Scalar.symbol(name), gens))
        raise ParseError(f"undeclared symbol {name!r}", node.pos)
    if k == "neg":
        return -_eval(node.children[0], ctx, rational)
    if k == "add":
        return _eval(node.children[0], ctx, rational) + _eval(node.children[1], ctx, rational)
    if k == "mul":
        return _eval(node.children[0], ctx, rational) * _eval(node.children[1], ctx, rational)
    if k == "div":
        num = _eval(node.children[0], ctx, rational)
        den = _eval(node.children[1], ctx, rational)
        if den.is_zero():
            raise ParseError("division by zero", node.pos)
        if not rational and not den.is_constant():
            raise ParseError("division by a non-constant in polynomial context", node.pos)
        return num / den
    if k == "pow":
        base = _eval(node.children[0], ctx, rational)
        e = node.value
        if e < 0:
            if not rational:
                raise ParseError("negative exponent in polynomial context", node.pos)
            if base.is_zero():
                raise ParseError("division by zero", node.pos)
        return base ** e
    raise ParseError(f"unknown node kind {k!r}", node.pos)


def _check_exponents(node: ExprAst, rational: bool):
    if node.kind == "pow" and node.value < 0 and not rational:
        raise ParseError("negative exponent in polynomial context", node.pos)
    for c in node.children:
        _check_exponents(c, rational)


def parse_ratfunc(text: str | bytes, ctx: SymbolTable) -> RatFunc:
    ast = parse_ast(text)
    return _eval(ast, ctx, True)


def parse_poly(text: str | bytes, ctx: SymbolTable) -> MPoly:
    ast = parse_ast(text)
    _check_exponents(ast, False)
    return _eval(ast, ctx, False).as_poly()


def parse_scalar(text: str | bytes, params: Iterable[str]) -> Scalar:
    p = parse_poly(text, SymbolTable((), tuple(params)))
    return p.constant_value()


# -- formatting ---------------------------------------------------------------

def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _mono_str(parts: list[tuple[str, int]]) -> str:
    return "*".join(n if k == 1 else f"{n}^{k}" for n, k in parts)


def _join_signed(items: list[tuple[int, str]]) -> str:
    """items are (sign, unsigned text)."""
    if not items:
        return "0"
    out = []
    for i, (sgn, txt) in enumerate(items):
        if i == 0:
            out.append(txt if sgn > 0 else f"-{txt}")
        else:
            out.append(f" + {txt}" if sgn > 0 else f" - {txt}")
    return "".join(out)


def _coef_mono(c: Fraction, mono: str) -> tuple[int, str]:
    sgn = 1 if c > 0 else -1
    a = abs(c)
    if not mono:
        return sgn, _fmt_rational(a)
    if a == 1:
        return sgn, mono
    return sgn, f"{_fmt_rational(a)}*{mono}"


def _param_parts(d: dict[str, int]) -> list[tuple[str, int]]:
    return [(n, d[n]) for n in sorted(d)]


def _scalar_poly_items(terms) -> list[tuple[int, str]]:
    return [_coef_mono(c, _mono_str(_param_parts(m))) for m, c in terms]


def format_scalar(s: Scalar) -> str:
    q = s.as_rational()
    if q is not None:
        return _fmt_rational(q)
    num, den = s.numer_denom_terms()
    if len(den) == 1 and not den[0][0]:
        return _join_signed(_scalar_poly_items(num))
    from math import lcm
    scale = 1
    for _, c in num:
        scale = lcm(scale, c.denominator)
    if scale > 1:
        num = [(m, c * scale) for m, c in num]
        den = [(m, c * scale) for m, c in den]
    ntxt = _join_signed(_scalar_poly_items(num))
    dtxt = _join_signed(_scalar_poly_items(den))
    if len(num) > 1:
        ntxt = f"({ntxt})"
    if len(den) > 1 or den[0][1] != 1 or len(den[0][0]) > 1 or any(k > 1 for k in den[0][0].values()):
        dtxt = f"({dtxt})"
    return f"{ntxt}/{dtxt}"


def _var_mono_key(m: tuple[int, ...]):
    return (-sum(m), tuple(-k for k in m))


def format_poly(p: MPoly) -> str:
    """Expanded canonical text, ordered by variable degree, then parameter monomial, then variable monomial."""
    atoms = []
    for m, c in p.terms.items():
        vparts = [(g, k) for g, k in zip(p.gens, m) if k]
        num, den = c.numer_denom_terms()
        if len(den) == 1 and not den[0][0]:
            scale = den[0][1]
            for pm, pc in num:
                key = (-sum(m), mono_sort_key(pm), _var_mono_key(m))
                mono = _mono_str(_param_parts(pm) + vparts)
                atoms.append((key, _coef_mono(pc / scale, mono)))
        else:
            key = (-sum(m), mono_sort_key(num[0][0]), _var_mono_key(m))
            ctext = format_scalar(c)
            text = f"{ctext}*{_mono_str(vparts)}" if vparts else ctext
            sgn = 1
            if text.startswith("-"):
                sgn, text = -1, text[1:]
            atoms.append((key, (sgn, text)))
    atoms.sort(key=lambda a: a[0])
    return _join_signed([a[1] for a in atoms])


def _needs_parens(txt: str) -> bool:
    return any(ch in txt for ch in " */") or txt.startswith("-")


def format_ratfunc(f: RatFunc) -> str:
    if f.den.is_constant():
        return format_poly(f.as_poly())
    ntxt = format_poly(f.num)
    dtxt = format_poly(f.den)
    sign = ""
    if ntxt.startswith("-") and " " not in ntxt:
        sign, ntxt = "-", ntxt[1:]
    if _needs_parens(ntxt):
        ntxt = f"{sign}({ntxt})"
    else:
        ntxt = sign + ntxt
    if _needs_parens(dtxt):
        dtxt = f"({dtxt})"
    return f"{ntxt}/{dtxt}"


# -- system files -------------------------------------------------------------

@dataclass
class SystemSpec:
    vars: tuple[str, str]
    params: tuple[str, ...]
    fprime: dict[str, MPoly]
    nondegenerate: list[MPoly] = field(default_factory=list)
    tower: dict[str, MPoly] = field(default_factory=dict)
    source: dict[str, str] = field(default_factory=dict)

    @property
    def table(self) -> SymbolTable:
        return SymbolTable(tuple(self.vars) + tuple(self.tower), self.params)


PRESETS: dict[str, str] = {
    "lv-classical": """\
# classical Lotka-Volterra system
vars = X, Y
params = a, b, c, d
fprime.X = X*(a*Y + b)
fprime.Y = Y*(c*X + d)
nondegenerate = X, Y
""",
    "lv-2d": """\
# 2d Lotka-Volterra system
vars = X, Y
params = a, b, c, d
fprime.X = X*(a*Y + b)
fprime.Y = Y*(c*X + d*Y)
nondegenerate = X, Y
""",
}

_IDENT_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_'")


def _ident_list(value: str, key: str, lineno: int) -> list[str]:
    items = [v.strip() for v in value.split(",")] if value.strip() else []
    for it in items:
        if not it or not _is_ident_start(it[0]) or not set(it) <= _IDENT_CHARS:
            raise SpecError(f"line {lineno}: bad identifier {it!r} in {key}")
    if len(set(items)) != len(items):
        raise SpecError(f"line {lineno}: duplicate name in {key}")
    return items


def parse_system(doc: str | bytes) -> SystemSpec:
    if isinstance(doc, (bytes, bytearray)):
        doc = bytes(doc).decode("utf-8")
    if doc.strip() in PRESETS:
        doc = PRESETS[doc.strip()]
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(doc.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        known = key in ("vars", "params", "nondegenerate") or key.startswith(("fprime.", "tower."))
        if not known:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
        raw[key] = (value.strip().strip('"'), lineno)
    if "vars" not in raw:
        raise SpecError("missing field vars")
    vs = _ident_list(raw["vars"][0], "vars", raw["vars"][1])
    if len(vs) != 2:
        raise SpecError(f"a planar system needs exactly 2 variables, got {len(vs)}")
    params = _ident_list(raw["params"][0], "params", raw["params"][1]) if "params" in raw else []
    tower_names = [k[len("tower."):] for k in raw if k.startswith("tower.")]
    for name in tower_names:
        _ident_list(name, "tower", raw["tower." + name][1])
    overlap = (set(vs) | set(tower_names)) & set(params)
    if overlap or set(vs) & set(tower_names):
        raise SpecError(f"names declared twice: {sorted(overlap or set(vs) & set(tower_names))}")
    table = SymbolTable(tuple(vs) + tuple(tower_names), tuple(params))
    source: dict[str, str] = {}

    def expr(key: str) -> MPoly:
        text, lineno = raw[key]
        source[key] = text
        try:
            return parse_poly(text, table)
        except ParseError as exc:
            raise SpecError(f"line {lineno}: {key}: {exc}") from None

    fprime = {}
    for v in vs:
        if f"fprime.{v}" not in raw:
            raise SpecError(f"missing derivative for {v}")
        fprime[v] = expr(f"fprime.{v}")
    for k in raw:
        if k.startswith("fprime.") and k[len("fprime."):] not in vs:
            raise SpecError(f"line {raw[k][1]}: derivative given for undeclared variable {k[len('fprime.'):]!r}")
    tower = {name: expr("tower." + name) for name in tower_names}
    nondeg = []
    if "nondegenerate" in raw:
        text, lineno = raw["nondegenerate"]
        for piece in [s for s in text.split(",") if s.strip()]:
            try:
                p = parse_poly(piece, table)
            except ParseError as exc:
                raise SpecError(f"line {lineno}: nondegenerate: {exc}") from None
            if p.is_zero():
                raise SpecError(f"line {lineno}: non-degeneracy divisor is zero")
            nondeg.append(p)
    return SystemSpec((vs[0], vs[1]), tuple(params), fprime, nondeg, tower, source)
