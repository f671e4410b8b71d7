"""Command-line interface: ``lvdiff <subcommand> ...``; JSON report on stdout."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import __version__
from .algebra.mpoly import MPoly
from .algebra.ratfunc import RatFunc
from .algebra.scalar import Scalar
from .exprio import (PRESETS, ExprError, SymbolTable, parse_poly, parse_ratfunc, parse_scalar,
                     parse_system)
from .diffstruct import LogLinearExpr, PlanarSystem

SCHEMA = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# -- helpers ------------------------------------------------------------------

def _load_spec_text(spec: str) -> str:
    if spec in PRESETS:
        return PRESETS[spec]
    if not os.path.exists(spec):
        raise CliError(f"unknown preset or missing file: {spec!r} (presets: {', '.join(sorted(PRESETS))})")
    with open(spec, encoding="utf-8") as fh:
        return fh.read()


def _split_assignments(items: Sequence[str] | None, flag: str) -> list[tuple[str, str]]:
    out = []
    for item in items or ():
        for piece in item.split(","):
            piece = piece.strip()
            if not piece:
                continue
            if "=" not in piece:
                raise CliError(f"{flag} expects name=value, got {piece!r}")
            k, v = (s.strip() for s in piece.split("=", 1))
            out.append((k, v))
    return out


def load_system(spec: str, sets: Sequence[str] | None = None, towers: Sequence[str] | None = None):
    text = _load_spec_text(spec)
    for name, expr in _split_assignments(towers, "--tower"):
        text += f"\ntower.{name} = {expr}\n"
    sp = parse_system(text)
    subs = {}
    fresh: set[str] = set()
    for name, value in _split_assignments(sets, "--set"):
        if name not in sp.params:
            raise CliError(f"--set: {name!r} is not a declared parameter")
        # values may introduce new parameter names, e.g. --set d=alpha
        new = set(_guess_params(value)) - set(sp.params)
        clash = new & (set(sp.vars) | set(sp.tower))
        if clash:
            raise CliError(f"--set: {sorted(clash)} are variables, not parameters")
        fresh |= new
        subs[name] = parse_scalar(value, tuple(sp.params) + tuple(sorted(new)))
    sys_ = PlanarSystem.from_spec(sp, subs or None)
    if fresh:
        sys_.params = tuple(sorted(set(sys_.params) | fresh))
    return sp, sys_


def _floats(items: Sequence[str] | None, flag: str) -> dict[str, float]:
    out = {}
    for k, v in _split_assignments(items, flag):
        try:
            out[k] = _num(v)
        except ValueError:
            raise CliError(f"{flag}: cannot read a number from {v!r}") from None
    return out


def _num(text: str) -> float:
    text = text.strip()
    if text.startswith("sqrt(") and text.endswith(")"):
        return math.sqrt(_num(text[5:-1]))
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _pair(text: str, flag: str) -> tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise CliError(f"{flag} expects x0,y0")
    try:
        return _num(parts[0]), _num(parts[1])
    except ValueError:
        raise CliError(f"{flag}: cannot read numbers from {text!r}") from None


def _s(obj) -> str:
    return str(obj)


def _verdict_payload(v) -> dict:
    from .lode import HasAlgebraic, NoAlgebraic
    out: dict[str, Any] = {"verdict": v.name}
    if isinstance(v, HasAlgebraic):
        out["witness"] = [{"factor": _s(p), "exponent": str(e)} for p, e in v.witness]
        if v.solution is not None:
            out["solution"] = _s(v.solution)
    elif isinstance(v, NoAlgebraic):
        out["reason"] = v.reason
        if v.detail:
            out["detail"] = v.detail
    else:
        out["reason"] = v.reason
    return out


# -- subcommands ------------------------------------------------------------------

def cmd_check_invariant(args) -> tuple[dict, int, list[str]]:
    from .darboux import NotInvariant, invariant_check
    sp, sys_ = load_system(args.spec, args.set, args.tower)
    P = parse_poly(args.poly, sp.table)
    res = invariant_check(sys_, P)
    if isinstance(res, NotInvariant):
        return {"polynomial": _s(P), "invariant": False, "remainder": _s(res.remainder)}, EXIT_NEGATIVE, []
    return {"polynomial": _s(P), "invariant": True, "cofactor": _s(res)}, EXIT_OK, []


def _family_payload(f) -> dict:
    return {"polynomial": _s(f.polynomial), "cofactor": _s(f.cofactor), "free_constants": list(f.free_constants),
            "reducible": f.reducible, "factors": [_s(p) for p in f.factors], "conditions": list(f.conditions),
            "extension": [f"{e} = 0" for e in f.extension]}


def cmd_search_darboux(args):
    from .darboux import darboux_search
    sp, sys_ = load_system(args.spec, args.set, args.tower)
    basis = None
    if args.basis:
        basis = [parse_poly(b, sp.table) for b in args.basis.split(",") if b.strip()]
    cert = darboux_search(sys_, args.max_degree, basis, budget=args.budget)
    payload = {
        "degree_bound": cert.degree_bound,
        "basis": [_s(b) for b in cert.basis],
        "ansatz": cert.ansatz,
        "case_tree": {"nodes": cert.tree.node_count, "leaves": len(list(cert.tree.leaves())),
                      "leaves_with_kernel": len(cert.leaves_with_kernel())},
        "families": [_family_payload(f) for f in cert.families],
        "irreducible": [_s(f.polynomial) for f in cert.irreducible],
        "over_extensions": [_s(f.polynomial) for f in cert.over_extensions],
    }
    return payload, EXIT_OK if cert.families else EXIT_NEGATIVE, []


def cmd_ode_alg_test(args):
    from .lode import HasAlgebraic, algebraic_solution_test
    params = [p.strip() for p in (args.params or "").split(",") if p.strip()]
    F = parse_ratfunc(args.coeff, SymbolTable((args.var,), tuple(params) or _guess_params(args.coeff, args.var)))
    v = algebraic_solution_test(F, args.var)
    payload = {"equation": f"y' = ({F})*y", **_verdict_payload(v)}
    return payload, EXIT_OK if isinstance(v, HasAlgebraic) else EXIT_NEGATIVE, []


def _guess_params(text: str, *exclude: str) -> tuple[str, ...]:
    """Every identifier that is not a variable is a parameter."""
    from .exprio import parse_ast
    names: set[str] = set()

    def walk(node):
        if node.kind == "symbol":
            names.add(node.value)
        for ch in node.children:
            walk(ch)
    walk(parse_ast(text))
    return tuple(sorted(names - set(exclude)))


def cmd_lemma_check(args):
    from .lode import HasAlgebraic, lemma_family_check
    texts = [args.q, args.c1, args.c2]
    params = tuple(sorted(set().union(*(_guess_params(t) for t in texts))))
    q, c1, c2 = (parse_scalar(t, params) for t in texts)
    v = lemma_family_check(q, c1, c2, args.family)
    warnings = []
    if isinstance(v, HasAlgebraic):
        warnings.append("c1 = 0 is outside the lemma's hypotheses; an explicit rational solution exists")
    payload = {"family": args.family, "equation": f"v' = (({q})/t + ({c1}))*v + ({c2})", **_verdict_payload(v)}
    return payload, EXIT_OK if isinstance(v, HasAlgebraic) else EXIT_NEGATIVE, warnings


def _constraint_payload(cs) -> dict:
    from .puiseux import format_exponent
    sym = cs.symbol
    return {
        "case": cs.regime.label,
        "mode": cs.mode,
        "series_variable": cs.series_var,
        "assumptions": cs.assumptions,
        "determined": cs.determined,
        "constraints": [{"exponent": format_exponent(c.exponent, sym), "equation": f"{c.normalized} = 0"}
                        for c in cs.constraints],
        "undetermined_exponents": [format_exponent(k, sym) for k in cs.undetermined],
    }


def cmd_puiseux(args):
    from fractions import Fraction as Fr
    from .puiseux import Ansatz, ansatz_constraints, constraint_to_ode
    sp, sys_ = load_system(args.spec, args.set, args.tower)
    rel = None
    prefix = {}
    if args.relation is not None:
        rel = parse_scalar(args.relation, tuple(sys_.params) + _guess_params(args.relation))
    if args.prefix:
        if rel is None:
            raise CliError("--prefix only applies together with --relation")
        other = sys_.xvar if (args.series_var or sys_.yvar) == sys_.yvar else sys_.yvar
        table = SymbolTable((other,), tuple(sys_.params) + _guess_params(args.prefix, other))
        prefix[Fr(0)] = parse_poly(args.prefix, table)
    ans = Ansatz(args.case, e=args.e, depth=args.depth, series_var=args.series_var, prefix=prefix)
    cs = ansatz_constraints(sys_, ans, rel)
    payload = _constraint_payload(cs)
    if rel is not None and cs.constraints:
        try:
            ode = constraint_to_ode(cs)
            payload["ode"] = {"variable": ode.var, "F": _s(ode.F), "c": _s(ode.c),
                              "equation": f"d{cs.coefficient_names[0]}/d{ode.var} = ({ode.F})*{cs.coefficient_names[0]}"
                                          + ("" if ode.c.is_zero() else f" + ({ode.c})")}
        except ValueError as exc:
            payload["ode"] = {"error": str(exc)}
    return payload, EXIT_OK if cs.constraints else EXIT_NEGATIVE, []


def cmd_first_integral(args):
    from .brestovski import first_integral, lv_params, qratio_check
    from .diffstruct import loglinear_derive
    _, sys_ = load_system(args.spec, args.set, args.tower)
    H = first_integral(sys_)
    a, b, c, d = lv_params(sys_)
    payload = {"H": _s(H), "conserved": loglinear_derive(H, sys_).is_zero(),
               "d_over_b": _s(qratio_check(b, d))}
    return payload, EXIT_OK, []


def _numeric_system(args):
    sp, sys_ = load_system(args.spec, args.set, args.tower)
    params = _floats(args.params, "--params")
    return sp, sys_, params


def cmd_integrate(args):
    from .numerics import integrate, write_csv
    _, sys_, params = _numeric_system(args)
    tr = integrate(sys_, params, _pair(args.ic, "--ic"), args.horizon, rtol=args.rtol)
    if args.out:
        write_csv(tr, args.out)
    payload = {"termination": tr.termination, "final_time": float(tr.final_time),
               "final_state": [float(tr.x[-1]), float(tr.y[-1])], "samples": int(len(tr.t)),
               "steps": tr.steps, "rtol": tr.rtol, "atol": tr.atol, "csv": args.out}
    return payload, EXIT_OK, []


def cmd_independence_probe(args):
    from .brestovski import ratio_probe
    from .numerics import relation_probe, integrate
    _, sys_, params = _numeric_system(args)
    if not args.ic or len(args.ic) < 2:
        raise CliError("independence-probe needs two --ic options")
    trajs = [integrate(sys_, params, _pair(ic, "--ic"), args.horizon, rtol=args.rtol) for ic in args.ic]
    rp = ratio_probe(trajs[0], trajs[1], args.tol)
    rel = relation_probe(trajs, args.max_degree)
    payload = {
        "trajectories": [{"ic": list(t.ic), "termination": t.termination, "final_time": t.final_time}
                         for t in trajs],
        "ratio_probe": {"verdict": rp.name, "variation": rp.variation, "epsilon": rp.epsilon,
                        "diagnostic": rp.diagnostic},
        "relation_probe": {"verdict": rel.verdict, "monomials": len(rel.monomials), "samples": rel.samples,
                           "ratio": rel.ratio, "threshold": rel.threshold},
    }
    ok = rp.name == "IndependentEvidence" and rel.verdict == "NoRelationEvidence"
    return payload, EXIT_OK if ok else EXIT_NEGATIVE, ["numeric probes are evidence, not proof"]


def cmd_demo(args):
    from .demo import run_demo
    steps = run_demo(args.system)
    if args.no_timing:
        for s in steps:
            s.pop("seconds", None)
    ok = all(s["agrees"] for s in steps)
    return {"system": args.system, "steps": steps, "all_agree": ok}, EXIT_OK if ok else EXIT_NEGATIVE, []


# -- parser & driver ------------------------------------------------------------

def _common(p: argparse.ArgumentParser, spec: bool = True):
    if spec:
        p.add_argument("spec", help="preset name (lv-classical, lv-2d) or system file")
        p.add_argument("--set", action="append", metavar="NAME=EXPR", help="substitute a parameter")
        p.add_argument("--tower", action="append", metavar="NAME=EXPR", help="adjoin a tower generator")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.add_argument("--no-timing", action="store_true", help="omit timing for byte-stable output")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lvdiff", description="Invariant curves, algebraic-solution tests and probes for planar polynomial systems.")
    ap.add_argument("--version", action="version", version=f"lvdiff {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("check-invariant", help="verify D_S P = Q P and print the cofactor")
    _common(p)
    p.add_argument("--poly", required=True)
    p.set_defaults(func=cmd_check_invariant)

    p = sub.add_parser("search-darboux", help="bounded-degree invariant polynomial search")
    _common(p)
    p.add_argument("--max-degree", type=int, required=True)
    p.add_argument("--basis", help="comma-separated coefficient basis, e.g. 1,z")
    p.add_argument("--budget", type=int, default=10_000)
    p.set_defaults(func=cmd_search_darboux)

    p = sub.add_parser("ode-alg-test", help="algebraic solutions of y' = F y")
    _common(p, spec=False)
    p.add_argument("--coeff", required=True)
    p.add_argument("--var", default="t")
    p.add_argument("--params", help="comma-separated parameter names (default: every other identifier)")
    p.set_defaults(func=cmd_ode_alg_test)

    p = sub.add_parser("lemma-check", help="v' = (q/t + c1) v + c2 lemma families")
    _common(p, spec=False)
    p.add_argument("--family", choices=["classical", "twod"], required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--c1", required=True)
    p.add_argument("--c2", required=True)
    p.set_defaults(func=cmd_lemma_check)

    p = sub.add_parser("puiseux-constraints", help="coefficient constraints of a Puiseux ansatz")
    _common(p)
    p.add_argument("--case", required=True, help="e.g. 'r<0', 'r=0', 'r>0', 'k!=0', '0<s<1', 's=1'")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--e", type=int, default=1, help="ramification index")
    p.add_argument("--relation", help="m in the side relation a' = m a (switches to function coefficients)")
    p.add_argument("--prefix", help="known term at exponent 0 of the series for a, e.g. beta*X")
    p.add_argument("--series-var", help="variable the series is written in (default: second variable)")
    p.set_defaults(func=cmd_puiseux)

    p = sub.add_parser("first-integral", help="logarithmic first integral of a classical LV system")
    _common(p)
    p.set_defaults(func=cmd_first_integral)

    p = sub.add_parser("integrate", help="numeric integration")
    _common(p)
    p.add_argument("--params", action="append", metavar="NAME=VALUE")
    p.add_argument("--ic", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("independence-probe", help="ratio and monomial-relation probes on two trajectories")
    _common(p)
    p.add_argument("--params", action="append", metavar="NAME=VALUE")
    p.add_argument("--ic", action="append", required=True)
    p.add_argument("--max-degree", type=int, default=2)
    p.add_argument("--horizon", type=float, default=0.5)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_independence_probe)

    p = sub.add_parser("demo", help="run the full pipeline on a preset system")
    _common(p, spec=False)
    p.add_argument("system", choices=["lv-classical", "lv-2d"])
    p.set_defaults(func=cmd_demo)
    return ap


_EXPR_FLAGS = {"--q", "--c1", "--c2", "--coeff", "--poly", "--relation", "--prefix", "--set", "--case"}


def _glue_values(argv: list[str]) -> list[str]:
    """Let expression values start with '-' (``--c2 -beta``) by rewriting to ``--c2=-beta``."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _EXPR_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _pretty(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                body = _pretty(v, indent + 1).lstrip()
                lines.append(f"{pad}- {body}")
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(lines)


def run(argv: Sequence[str]) -> tuple[dict, int]:
    """Execute a command line; returns (report, exit code) without printing."""
    start = time.perf_counter()
    argv = list(argv)
    report: dict[str, Any] = {"schema": SCHEMA, "command": argv}
    try:
        args = build_parser().parse_args(_glue_values(argv))
    except CliError as exc:
        report.update(status="error", error=f"usage: {exc}")
        return report, EXIT_ERROR
    try:
        payload, code, warnings = args.func(args)
        report.update(status="ok" if code == EXIT_OK else "negative", result=payload, warnings=warnings)
    except CliError as exc:
        report.update(status="error", error=str(exc))
        code = EXIT_ERROR
    except (ExprError, ValueError, ArithmeticError, AssertionError, RuntimeError) as exc:
        report.update(status="error", error=f"{type(exc).__name__}: {exc}")
        code = EXIT_ERROR
    except Exception as exc:  # keep the exit-code contract for unforeseen failures
        report.update(status="error", error=f"internal error: {type(exc).__name__}: {exc}")
        code = EXIT_ERROR
    if not getattr(args, "no_timing", False):
        report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    report["_pretty"] = getattr(args, "pretty", False)
    return report, code


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    report, code = run(argv)
    pretty = report.pop("_pretty", False)
    if pretty:
        print(_pretty({k: v for k, v in report.items() if k != "schema"}))
    else:
        print(json.dumps(report, indent=2, sort_keys=False, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
