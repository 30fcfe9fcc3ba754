"""Command-line front end.

Subcommands:

  parse      parse a definable-set file, print the AST (or pretty text)
  integrate  evaluate a symbolic integral (cell data or a linear product)
  compare    symbolic value vs. the point-counting oracle, prime by prime
  appendix2  the split-torus volume: exact count checks at listed primes
  oracle     run the box-counting oracle on one fixture

Exit codes are a stable contract:

  0  success
  2  unreadable input: parse or sort errors, bad flags, malformed data
  3  the input is outside the supported fragment
  4  a comparison failed (symbolic value not contained in an oracle bracket)
  5  a box or point budget was exceeded
  1  unexpected internal failure

All numeric output is exact: integers, "numerator/denominator" strings, or
ring elements rendered in normal form.  Nothing is ever printed as a float.

Fixture files are plain text.  Lines starting with "#" are comments; lines
starting with "#!" carry key: value directives (expect, linear-product,
integrand, exponent) that describe what the formula in the file is for.
Cell-data files are JSON; their optional "oracle" block gives a domain
formula, an integrand, and per-case parameter values and uniformizer
expressions so the same integral can be run numerically.
"""

from __future__ import annotations

import argparse
import ast
import json
import sys
from dataclasses import dataclass, fields as dataclass_fields, is_dataclass
from fractions import Fraction

from .errors import (BudgetExceeded, DpcalcError, InvalidPrime, NotSummable,
                     ParseError, SortError, TooLarge, UnsupportedFeature,
                     UnsupportedZeroCell)
from .formula import (Formula, Sort, VfConst, VfMul, VfPow, VfUnif,
                      bad_primes, eval_vf_term, parse, pretty_print)
from .localfield import fpt, is_prime, qp
from .motivic import (bind_parameters, integrate_cell_data,
                      integrate_linear_product, load_cells, residue_cases,
                      specialize)
from .motivic import appendix2_symbolic, appendix2_volume
from .oracle import IntegrandSpec, fraction_str
from .oracle import integrate as oracle_integrate
from .symring import SymA


@dataclass(frozen=True)
class RunConfig:
    """One invocation: the command, its inputs, and the numeric knobs."""

    command: str
    path: str | None = None
    primes: tuple = ()
    precision: int = 6
    budget: int | None = None
    output: str | None = None
    emit: str = "json"
    params: tuple = ()
    linear_product: str | None = None
    exponent: int = 1
    field: str = "qp"
    both_characteristics: bool = False
    prime: int | None = None


# ---------------------------------------------------------------------------
# small shared helpers


def _emit(cfg, payload):
    text = json.dumps(payload, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg):
    sys.stderr.write("dpcalc: %s\n" % msg)


def _read_dp(path):
    """A formula fixture: comment lines stripped, directives collected."""
    with open(path) as fh:
        raw = fh.read()
    body = []
    directives = {}
    for line in raw.splitlines():
        stripped = line.strip()
        if stripped.startswith("#!"):
            key, sep, value = stripped[2:].partition(":")
            if not sep:
                raise ParseError("bad directive line %r" % stripped)
            directives[key.strip()] = value.strip()
        elif stripped.startswith("#"):
            continue
        else:
            body.append(line)
    text = "\n".join(body).strip()
    if not text:
        raise ParseError("%s contains no formula" % path)
    return text, directives


def _load_cells_path(path):
    try:
        return load_cells(path)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError("malformed cell data in %s: %s" % (path, e))


def _parse_primes(text):
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        p = int(piece)
        if not is_prime(p):
            raise InvalidPrime("%d is not a prime" % p)
        out.append(p)
    if not out:
        raise InvalidPrime("no primes given")
    return tuple(sorted(set(out)))


def _parse_param_list(pieces):
    """--param values: "k=0", "acx:cube", or comma-joined mixtures."""
    numeric = {}
    tokens = {}
    for chunk in pieces:
        for piece in chunk.split(","):
            piece = piece.strip()
            if not piece:
                continue
            if "=" in piece:
                name, _, value = piece.partition("=")
                try:
                    numeric[name.strip()] = int(value)
                except ValueError:
                    raise ParseError("parameter value %r is not an integer"
                                     % value)
            elif ":" in piece:
                name, _, token = piece.partition(":")
                tokens[name.strip()] = token.strip()
            else:
                raise ParseError("bad parameter setting %r (use name=value "
                                 "or name:class)" % piece)
    return numeric, tokens


def _parse_linear_product(text):
    centers = []
    mults = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        c, sep, m = piece.partition(":")
        if not sep:
            raise ParseError("linear product terms look like center:"
                             "multiplicity, got %r" % piece)
        centers.append(Fraction(c))
        mults.append(int(m))
    if not centers:
        raise ParseError("empty linear product")
    return centers, mults


_NODE_SCALARS = (bool, int, str)


def _node_json(n):
    if isinstance(n, Formula):
        return {"free": [{"name": name, "sort": sort.value}
                         for name, sort in n.free],
                "expr": _node_json(n.expr)}
    if is_dataclass(n):
        out = {"node": type(n).__name__}
        for f in dataclass_fields(n):
            out[f.name] = _node_json(getattr(n, f.name))
        return out
    if isinstance(n, Sort):
        return n.value
    if isinstance(n, Fraction):
        return fraction_str(n)
    if isinstance(n, _NODE_SCALARS):
        return n
    raise TypeError("cannot serialize %r" % (n,))


def _bad_json(bad):
    return {str(p): list(reasons) for p, reasons in sorted(bad.items())}


def _derivation_json(result):
    return [{"cell": cid, "value": fn.render(), "note": note}
            for cid, fn, note in result.derivation]


# ---------------------------------------------------------------------------
# uniformizer-monomial arithmetic for oracle binds


def _eval_monomial(text, env):
    """Evaluate an arithmetic expression over the integers, the declared
    parameters, and the uniformizer symbol pi, e.g. "acx * pi^(3*k)".

    Values are monomials c * pi^e; sums are only defined between pi-free
    values, so the result is always a single monomial (coeff, exponent)."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as e:
        raise ParseError("bad arithmetic in %r: %s" % (text, e))

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return Fraction(node.value), 0
        if isinstance(node, ast.Name):
            if node.id == "pi":
                return Fraction(1), 1
            if node.id in env:
                return Fraction(env[node.id]), 0
            raise ParseError("unknown name %r in %r" % (node.id, text))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            c, e = ev(node.operand)
            return -c, e
        if isinstance(node, ast.BinOp):
            a, ae = ev(node.left)
            b, be = ev(node.right)
            if isinstance(node.op, ast.Mult):
                return a * b, ae + be
            if isinstance(node.op, ast.Div):
                if be or b == 0:
                    raise ParseError("bad division in %r" % text)
                return a / b, ae
            if isinstance(node.op, (ast.Add, ast.Sub)):
                if ae or be:
                    raise ParseError("cannot add uniformizer powers in %r"
                                     % text)
                return (a + b, 0) if isinstance(node.op, ast.Add) \
                    else (a - b, 0)
            if isinstance(node.op, ast.Pow):
                if be or b.denominator != 1 or b < 0:
                    raise ParseError("exponents must be nonnegative "
                                     "integers in %r" % text)
                return a ** int(b), ae * int(b)
        raise ParseError("unsupported arithmetic in %r" % text)

    return ev(tree)


def _vf_value(spec, coeff, exp):
    """The field element coeff * pi^exp in the given complete field."""
    term = VfConst(coeff)
    if exp:
        term = VfMul(term, VfPow(VfUnif(), exp))
    return eval_vf_term(term, spec, {})


def _integrand_from(directives):
    if "integrand" in directives:
        return IntegrandSpec.abs_power(directives["integrand"],
                                       int(directives.get("exponent", "1")))
    return IntegrandSpec.one()


# ---------------------------------------------------------------------------
# parse


def cmd_parse(cfg):
    body, _ = _read_dp(cfg.path)
    phi = parse(body)
    pretty = pretty_print(phi)
    if parse(pretty) != phi:
        raise AssertionError("pretty text failed to round-trip")
    if cfg.emit == "pretty":
        sys.stdout.write(pretty + "\n")
        return 0
    _emit(cfg, {
        "file": cfg.path,
        "free": [{"name": n, "sort": s.value} for n, s in phi.free],
        "pretty": pretty,
        "ast": _node_json(phi.expr),
    })
    return 0


# ---------------------------------------------------------------------------
# integrate


_CLASS_TOKENS = {"cube": (3, 1)}


def cmd_integrate(cfg):
    if cfg.linear_product is not None:
        if cfg.path:
            raise ParseError("give either a cell-data file or "
                             "--linear-product, not both")
        centers, mults = _parse_linear_product(cfg.linear_product)
        result = integrate_linear_product(centers, mults, cfg.exponent)
        _emit(cfg, {
            "input": {"linear_product": cfg.linear_product,
                      "exponent": cfg.exponent},
            "value": result.as_syma().render(),
            "bad_primes": _bad_json(result.bad_primes),
            "derivation": _derivation_json(result),
        })
        return 0

    if not cfg.path:
        raise ParseError("integrate needs a cell-data file or "
                         "--linear-product")
    data = _load_cells_path(cfg.path)
    result = integrate_cell_data(data)
    numeric, tokens = _parse_param_list(cfg.params)
    declared = dict(data.parameters)
    for name in list(numeric) + list(tokens):
        if name not in declared:
            raise ParseError("unknown parameter %r (file declares %s)"
                             % (name, sorted(declared) or "none"))
    for name in numeric:
        if declared[name] is not Sort.ZZ:
            raise UnsupportedFeature(
                "residue parameter %r takes a class token here (such as "
                "%s:cube); numeric values belong to compare or oracle runs"
                % (name, name))
    for name, token in tokens.items():
        if declared[name] is not Sort.RF:
            raise ParseError("parameter %r is not residue-sorted" % name)
        if token not in _CLASS_TOKENS:
            raise ParseError("unknown residue class token %r (supported: %s)"
                             % (token, ", ".join(sorted(_CLASS_TOKENS))))

    bound = bind_parameters(result, numeric)
    out = {
        "file": cfg.path,
        "parameters": [{"name": n, "sort": s.value}
                       for n, s in data.parameters],
        "assigned": {n: v for n, v in sorted(numeric.items())},
        "value": bound.value.render(),
        "bad_primes": _bad_json(result.bad_primes),
        "derivation": _derivation_json(result),
    }

    rf_names = {n for n, s in data.parameters if s is Sort.RF}
    zz_names = {n for n, s in data.parameters if s is Sort.ZZ}
    if tokens:
        if set(tokens) != rf_names or not zz_names <= set(numeric):
            raise UnsupportedFeature(
                "congruence cases need a class token for every residue "
                "parameter and a value for every value-group parameter")
        moduli = {_CLASS_TOKENS[t][0] for t in tokens.values()}
        if len(moduli) != 1:
            raise UnsupportedFeature("mixed class tokens are not supported")
        modulus = moduli.pop()
        witness = {n: _CLASS_TOKENS[t][1] for n, t in tokens.items()}
        out["cases"] = [
            {"when": "q = %d (mod %d)" % (r, modulus), "value": v.render()}
            for r, v in residue_cases(result, modulus, witness, numeric)]
    _emit(cfg, out)
    return 0


# ---------------------------------------------------------------------------
# compare


def _oracle_rows(cfg, primes, skipped, per_prime):
    """Run `per_prime` at each non-skipped prime; collect rows/failures."""
    rows = []
    failing = []
    for p in primes:
        if p in skipped:
            rows.append({"prime": p,
                         "skipped": "bad prime (%s)"
                                    % "; ".join(skipped[p])})
            continue
        row, ok = per_prime(p)
        rows.append(row)
        if not ok:
            failing.append(p)
    return rows, failing


def _compare_formula(cfg):
    body, directives = _read_dp(cfg.path)
    phi = parse(body)
    if "linear-product" in directives:
        centers, mults = _parse_linear_product(directives["linear-product"])
        result = integrate_linear_product(
            centers, mults, int(directives.get("exponent", "1")))
        value = result.as_syma()
        skipped = result.bad_primes
    elif "expect" in directives:
        value = SymA.parse(directives["expect"])
        skipped = bad_primes(phi)
    else:
        raise ParseError(
            "%s carries no symbolic value: add a '#! expect:' or "
            "'#! linear-product:' directive" % cfg.path)
    integrand = _integrand_from(directives)

    def per_prime(p):
        sym = value.nu(p)
        row = {"prime": p, "symbolic": fraction_str(sym)}
        ok = True
        for kind in ("qp", "fpt") if cfg.both_characteristics else ("qp",):
            spec = (qp if kind == "qp" else fpt)(p, cfg.precision)
            iv = oracle_integrate(integrand, phi, spec, budget=cfg.budget)
            row[kind] = [fraction_str(iv.lower), fraction_str(iv.upper)]
            row[kind + "_contained"] = iv.contains(sym)
            ok = ok and iv.contains(sym)
        return row, ok

    rows, failing = _oracle_rows(cfg, cfg.primes, skipped, per_prime)
    return {"file": cfg.path, "value": value.render(),
            "rows": rows}, failing


def _compare_cells(cfg):
    data = _load_cells_path(cfg.path)
    result = integrate_cell_data(data)
    block = data.oracle
    if not isinstance(block, dict) or "domain" not in block:
        raise UnsupportedFeature(
            "%s has no oracle block, so there is nothing to compare against"
            % cfg.path)
    phi = parse(block["domain"])
    spec_f = block.get("integrand") or {}
    if spec_f:
        integrand = IntegrandSpec.abs_power(spec_f["f"],
                                            int(spec_f.get("e", 1)))
    else:
        integrand = IntegrandSpec.one()
    cases = block.get("cases") or [{}]

    rf_params = {n for n, s in data.parameters if s is Sort.RF}
    all_rows = []
    all_failing = []
    for case in cases:
        params = {k: int(v) for k, v in (case.get("params") or {}).items()}
        precision = int(case.get("precision", cfg.precision))
        binds = case.get("vf") or {}

        def degenerate_at(p):
            """Residue-class parameters name unit residues; a value that
            vanishes mod p does not define one there."""
            for name in sorted(rf_params & set(params)):
                if params[name] % p == 0:
                    return "parameter %s = %d vanishes mod %d" \
                        % (name, params[name], p)
            return None

        def per_prime(p):
            reason = degenerate_at(p)
            if reason is not None:
                return {"prime": p,
                        "case": {k: v for k, v in sorted(params.items())},
                        "skipped": reason}, True
            sym = specialize(result, p, params)
            row = {"prime": p,
                   "case": {k: v for k, v in sorted(params.items())},
                   "symbolic": fraction_str(sym)}
            ok = True
            kinds = ("qp", "fpt") if cfg.both_characteristics else ("qp",)
            for kind in kinds:
                spec = (qp if kind == "qp" else fpt)(p, precision)
                assignment = {}
                for name, expr in binds.items():
                    coeff, exp = _eval_monomial(expr, params)
                    assignment[name] = _vf_value(spec, coeff, exp)
                iv = oracle_integrate(integrand, phi, spec,
                                      assignment=assignment,
                                      budget=cfg.budget)
                row[kind] = [fraction_str(iv.lower), fraction_str(iv.upper)]
                row[kind + "_contained"] = iv.contains(sym)
                ok = ok and iv.contains(sym)
            return row, ok

        rows, failing = _oracle_rows(cfg, cfg.primes, result.bad_primes,
                                     per_prime)
        all_rows.extend(rows)
        all_failing.extend(failing)
    return {"file": cfg.path, "value": result.value.render(),
            "rows": all_rows}, all_failing


def cmd_compare(cfg):
    if cfg.path.endswith(".json"):
        out, failing = _compare_cells(cfg)
    else:
        out, failing = _compare_formula(cfg)
    out["ok"] = not failing
    if failing:
        out["failing_primes"] = sorted(set(failing))
    _emit(cfg, out)
    if failing:
        _say("comparison failed at prime(s) %s"
             % ", ".join(str(p) for p in sorted(set(failing))))
        return 4
    return 0


# ---------------------------------------------------------------------------
# appendix2


def _nonsquares(q):
    return [n for n in range(2, q) if pow(n, (q - 1) // 2, q) == q - 1]


def cmd_appendix2(cfg):
    symbolic = appendix2_symbolic()
    rows = []
    failing = []
    for q in cfg.primes:
        expected = q * (q - 1) * (q + 1) // 2
        for eta in _nonsquares(q):
            for variant in ("b2_minus_d2", "d2_minus_b2"):
                vol = appendix2_volume("per_eta", q, eta=eta,
                                       variant=variant, budget=cfg.budget)
                count = vol * q ** 3
                ok = count == expected
                rows.append({"q": q, "eta": eta, "variant": variant,
                             "count": int(count), "expected": expected,
                             "ok": ok})
                if not ok:
                    failing.append((q, eta, variant))
    _emit(cfg, {
        "symbolic": symbolic.render(),
        "count_formula": "q*(q-1)*(q+1)/2",
        "rows": rows,
        "ok": not failing,
    })
    if failing:
        _say("count mismatch at %s"
             % ", ".join("q=%d eta=%d (%s)" % f for f in failing))
        return 4
    return 0


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(cfg):
    body, directives = _read_dp(cfg.path)
    phi = parse(body)
    integrand = _integrand_from(directives)
    make = qp if cfg.field == "qp" else fpt
    spec = make(cfg.prime, cfg.precision)
    iv = oracle_integrate(integrand, phi, spec, budget=cfg.budget)
    _emit(cfg, {
        "file": cfg.path,
        "field": cfg.field,
        "prime": cfg.prime,
        "precision": cfg.precision,
        "integrand": directives.get("integrand", "1"),
        "interval": iv.to_json_dict(),
        "width": fraction_str(iv.width()),
    })
    return 0


# ---------------------------------------------------------------------------
# wiring


def _add_output(p):
    p.add_argument("-o", "--output", metavar="PATH",
                   help="write the JSON report here instead of stdout")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dpcalc",
        description="symbolic integration over complete discretely valued "
                    "fields, with an exhaustive numeric cross-check")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a definable-set file")
    p.add_argument("path")
    p.add_argument("--emit", choices=("json", "pretty"), default="json",
                   help="full AST as JSON, or just the normalized text")
    _add_output(p)

    p = sub.add_parser("integrate", help="evaluate a symbolic integral")
    p.add_argument("path", nargs="?",
                   help="cell-data file (JSON)")
    p.add_argument("--linear-product", metavar="C:M,...",
                   help="integrate |(x-c1)^m1 ... (x-cn)^mn| over the "
                        "valuation ring instead of reading a file")
    p.add_argument("--exponent", type=int, default=1,
                   help="raise the linear-product integrand to this power")
    p.add_argument("--param", action="append", default=[],
                   metavar="NAME=INT|NAME:CLASS",
                   help="bind a parameter; repeatable or comma-joined")
    _add_output(p)

    p = sub.add_parser("compare",
                       help="check the symbolic value against the oracle")
    p.add_argument("path", help=".dp fixture or cell-data JSON")
    p.add_argument("--primes", default="2,3,5,7,11,13",
                   help="comma-separated primes (default 2,3,5,7,11,13)")
    p.add_argument("--precision", type=int, default=6,
                   help="oracle digit depth (default 6)")
    p.add_argument("--both-characteristics", action="store_true",
                   help="also run the equal-characteristic oracle")
    p.add_argument("--budget", type=int,
                   help="box budget override (or DPCALC_BOX_BUDGET)")
    _add_output(p)

    p = sub.add_parser("appendix2",
                       help="split-torus volume count checks")
    p.add_argument("--primes", default="5,7",
                   help="comma-separated primes (default 5,7)")
    p.add_argument("--budget", type=int,
                   help="point budget override (or DPCALC_BOX_BUDGET)")
    _add_output(p)

    p = sub.add_parser("oracle", help="run the numeric oracle on a fixture")
    p.add_argument("path", help=".dp fixture")
    p.add_argument("--prime", type=int, required=True)
    p.add_argument("--precision", type=int, default=4)
    p.add_argument("--field", choices=("qp", "fpt"), default="qp",
                   help="mixed characteristic (qp) or equal (fpt)")
    p.add_argument("--budget", type=int,
                   help="box budget override (or DPCALC_BOX_BUDGET)")
    _add_output(p)

    return ap


_COMMANDS = {
    "parse": cmd_parse,
    "integrate": cmd_integrate,
    "compare": cmd_compare,
    "appendix2": cmd_appendix2,
    "oracle": cmd_oracle,
}


def _config_from(args):
    def get(name, default=None):
        return getattr(args, name, default)

    primes = get("primes")
    if primes is not None:
        primes = _parse_primes(primes)
    prime = get("prime")
    if prime is not None and not is_prime(prime):
        raise InvalidPrime("%d is not a prime" % prime)
    return RunConfig(
        command=args.command,
        path=get("path"),
        primes=primes or (),
        precision=get("precision", 6),
        budget=get("budget"),
        output=get("output"),
        emit=get("emit", "json"),
        params=tuple(get("param", []) or []),
        linear_product=get("linear_product"),
        exponent=get("exponent", 1),
        field=get("field", "qp"),
        both_characteristics=bool(get("both_characteristics")),
        prime=prime,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        return _COMMANDS[cfg.command](cfg)
    except (ParseError, SortError) as e:
        _say(str(e))
        return 2
    except (UnsupportedFeature, UnsupportedZeroCell, NotSummable) as e:
        _say("outside the supported fragment: %s" % e)
        return 3
    except (BudgetExceeded, TooLarge) as e:
        _say(str(e))
        return 5
    except DpcalcError as e:
        _say(str(e))
        return 2
    except OSError as e:
        _say(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
