"""Cells, constructible functions, and the symbolic one-variable integrator.

A 1-cell describes the points z of a valued field with ord(z - c) = alpha,
ac(z - c) = xi, where the center c, the valuation alpha, and the angular
component xi are read off from auxiliary residue and value-group variables
constrained by the cell's basis formula.  A 0-cell is the single point
z = c.  Integrating a coefficient psi over a 1-cell pushes it forward to

    [residue class of the basis]  (x)  sum over the value-group variables
                                       of  psi * L^(-alpha - 1)

with the sum evaluated exactly by `presburger`.  0-cells carry measure
zero; their counting terms are recorded in the derivation log and only
affine centers are accepted.  Results are constructible functions: finite
sums of residue classes tensored with exact ring values, which specialize
to any concrete residue characteristic by point counting and L -> q.

Automatic decomposition is provided only for products of linear factors
|t - c_j| over the valuation ring; everything else enters as caller-built
cells or cell-data files.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import (BadPrime, DuplicateCenter, InvalidPrime, OverlapDetected,
                     ParseError, UnboundParameter, UnsupportedFeature,
                     UnsupportedZeroCell)
from .formula import (And, Exists, Formula, Not, RfAdd, RfConst, RfEq, RfMul,
                      RfNe, RfNeg, RfSub, RfVar, Sort, VfAdd, VfConst, VfMul,
                      VfNeg, VfPow, VfSub, VfUnif, VfVar, ZzCong, ZzEq, ZzLe,
                      ZzLt, bad_primes, free_vars, parse, pretty_print, walk)
from .formula.count import count_rf_points
from .localfield import is_prime
from .presburger import (AffineForm, PresDomain, PresTerm, SymSum, VarRange,
                         parse_affine)
from .presburger import sum as pres_sum
from .symring import ONE, ZERO, L, SymA

EMPTY_DOMAIN = PresDomain(())

ZERO_CELL = "ZeroCell"
ONE_CELL = "OneCell"


def _prime_factors(n):
    n = abs(int(n))
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def _flatten_and(expr):
    if isinstance(expr, And):
        return _flatten_and(expr.left) + _flatten_and(expr.right)
    return [expr]


def _fold_and(parts):
    out = None
    for p in parts:
        out = p if out is None else And(out, p)
    return out


def _zz_affine(node):
    """A value-group term as an AffineForm, or a loud failure."""
    from .formula import ZzAdd, ZzConst, ZzNeg, ZzScale, ZzSub, ZzVar
    if isinstance(node, ZzConst):
        return AffineForm.constant(node.value)
    if isinstance(node, ZzVar):
        return AffineForm.var(node.name)
    if isinstance(node, ZzAdd):
        return _zz_affine(node.left) + _zz_affine(node.right)
    if isinstance(node, ZzSub):
        return _zz_affine(node.left) - _zz_affine(node.right)
    if isinstance(node, ZzNeg):
        return -_zz_affine(node.operand)
    if isinstance(node, ZzScale):
        return _zz_affine(node.operand).scale(node.factor)
    raise UnsupportedFeature(
        "value-group constraint is not affine (%s)" % type(node).__name__)


def _extract_ranges(conjuncts, ordered_vars, context):
    """Pull bound and congruence constraints on ordered_vars out of a
    conjunct list.  Returns (PresDomain, leftover conjuncts).  Bounds may
    mention context names and earlier ordered_vars (triangular shape)."""
    order = {v: i for i, v in enumerate(ordered_vars)}
    table = {v: {"lower": None, "upper": None, "cong": None}
             for v in ordered_vars}
    leftover = []

    def target_of(aff):
        cands = [v for v in aff.variables() if v in order]
        tv = max(cands, key=order.get)
        if abs(aff.coeff(tv)) != 1:
            raise UnsupportedFeature(
                "cannot solve for %r with coefficient %d"
                % (tv, aff.coeff(tv)))
        return tv

    def set_bound(tv, which, value):
        if table[tv][which] is not None:
            raise UnsupportedFeature("two %s bounds for %r" % (which, tv))
        table[tv][which] = value

    for c in conjuncts:
        if not isinstance(c, (ZzEq, ZzLe, ZzLt, ZzCong)):
            leftover.append(c)
            continue
        names = set(free_vars(c))
        if not names & set(ordered_vars):
            leftover.append(c)
            continue
        aff = _zz_affine(c.left) - _zz_affine(c.right)
        tv = target_of(aff)
        coeff = aff.coeff(tv)
        rest = aff.drop(tv)
        if isinstance(c, ZzCong):
            if not rest.is_constant():
                raise UnsupportedFeature(
                    "congruence on %r has a symbolic offset" % tv)
            if table[tv]["cong"] is not None:
                raise UnsupportedFeature("two congruences for %r" % tv)
            table[tv]["cong"] = (c.modulus,
                                 (-coeff * rest.const) % c.modulus)
            continue
        if isinstance(c, ZzEq):
            pin = rest.scale(-coeff)
            set_bound(tv, "lower", pin)
            set_bound(tv, "upper", pin)
            continue
        bound = (-rest) + (-1 if isinstance(c, ZzLt) else 0)
        if coeff == 1:
            set_bound(tv, "upper", bound)
        else:
            set_bound(tv, "lower", -bound)

    ranges = []
    for v in ordered_vars:
        slot = table[v]
        mod, res = slot["cong"] or (1, 0)
        ranges.append(VarRange(v, slot["lower"], slot["upper"], mod, res))
    try:
        return PresDomain(tuple(ranges)), leftover
    except ValueError as e:
        raise UnsupportedFeature(str(e)) from None


_PSI_RE = re.compile(r"^\s*(?:(?P<pre>.*?)\s*\*\s*)?L\^\(\s*(?P<aff>[^()]*?)\s*\)\s*$")


def _strip_parens(text):
    text = text.strip()
    while text.startswith("(") and text.endswith(")"):
        depth = 0
        for i, ch in enumerate(text):
            depth += (ch == "(") - (ch == ")")
            if depth == 0 and i < len(text) - 1:
                return text
        text = text[1:-1].strip()
    return text


def parse_psi(text):
    """A cell coefficient 'c * L^(affine)' (or a bare ring constant) as a
    PresTerm."""
    m = _PSI_RE.match(text)
    if m is None:
        return PresTerm(SymA.parse(text), AffineForm.constant(0))
    pre = m.group("pre")
    coeff = SymA.parse(_strip_parens(pre)) if pre else ONE
    return PresTerm(coeff, parse_affine(m.group("aff")))


def _parse_vf_term(text):
    try:
        phi = parse("(%s) == 0" % text, default_sort=Sort.VF)
    except ParseError:
        return None
    return phi.expr.left


def _parse_rf_term(text):
    try:
        phi = parse("(%s) == 0" % text, default_sort=Sort.RF)
    except ParseError:
        return None
    return phi.expr.left


def _vf_degree(node):
    if isinstance(node, (VfConst, VfUnif)):
        return 0
    if isinstance(node, VfVar):
        return 1
    if isinstance(node, (VfAdd, VfSub)):
        return max(_vf_degree(node.left), _vf_degree(node.right))
    if isinstance(node, VfNeg):
        return _vf_degree(node.operand)
    if isinstance(node, VfMul):
        return _vf_degree(node.left) + _vf_degree(node.right)
    if isinstance(node, VfPow):
        return _vf_degree(node.base) * node.exponent
    return 2


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Cell:
    """One stratum of a decomposition of the valued-field line.

    For a 1-cell, z ranges over ord(z - center) = alpha, ac(z - center) =
    xi, with the extra residue variables cut out by class_formula and the
    extra value-group variables ranging over z_domain.  A 0-cell is the
    point z = center.  param_domain restricts the ambient value-group
    parameters (it survives into the integration result).
    """

    kind: str
    center_text: str
    psi: PresTerm
    cell_id: str = ""
    class_formula: Formula | None = None
    z_domain: PresDomain = EMPTY_DOMAIN
    param_domain: PresDomain = EMPTY_DOMAIN
    alpha: AffineForm | None = None
    xi_text: str | None = None
    center_term: object = None
    presentation: str = ""

    def __post_init__(self):
        if self.kind not in (ZERO_CELL, ONE_CELL):
            raise ValueError("unknown cell kind %r" % (self.kind,))
        if self.kind == ONE_CELL:
            if self.alpha is None or not self.xi_text:
                raise ValueError("a 1-cell carries both alpha and xi")
        else:
            if self.alpha is not None or self.xi_text:
                raise ValueError("a 0-cell carries neither alpha nor xi")
            if self.z_domain.ranges:
                raise ValueError(
                    "a 0-cell has no extra value-group variables")


@dataclass(frozen=True)
class CellData:
    """A parsed cell-data file: the cells, the declared parameter slots,
    file-level excluded primes, and an optional oracle cross-check block."""

    cells: tuple
    parameters: tuple
    bad_primes: dict
    oracle: object = None


_SORTS = {"vf": Sort.VF, "rf": Sort.RF, "zz": Sort.ZZ}


def _build_cell(raw, index, param_names, zz_params):
    if not isinstance(raw, dict):
        raise ParseError("cell %d is not an object" % index)
    kind = raw.get("kind")
    if kind not in (ZERO_CELL, ONE_CELL):
        raise ParseError("cell %d has unknown kind %r" % (index, kind))
    cell_id = str(raw.get("id", "") or "cell%d" % index)
    center_text = raw.get("center")
    if not isinstance(center_text, str) or not center_text.strip():
        raise ParseError("cell %s has no center" % cell_id)
    center_text = center_text.strip()
    psi_text = raw.get("psi")
    if not isinstance(psi_text, str):
        raise ParseError("cell %s has no psi coefficient" % cell_id)
    psi = parse_psi(psi_text)

    basis_text = raw.get("basis")
    conjuncts = []
    zvars = []
    if basis_text:
        basis = parse(basis_text, default_sort=Sort.RF)
        for name, sort in basis.free:
            if sort is Sort.VF:
                raise UnsupportedFeature(
                    "cell %s: basis formulas range over residue and "
                    "value-group variables only" % cell_id)
            if sort is Sort.ZZ and name not in param_names:
                zvars.append(name)
        conjuncts = _flatten_and(basis.expr)

    z_domain, leftover = _extract_ranges(conjuncts, zvars, param_names)
    own_params = [n for n in zz_params
                  if any(n in free_vars(c) for c in leftover)]
    param_domain, leftover = _extract_ranges(leftover, own_params, set())

    alpha_text = raw.get("alpha")
    xi_text = raw.get("xi")
    if kind == ZERO_CELL:
        if alpha_text or xi_text:
            raise ParseError("cell %s: a 0-cell has no alpha or xi"
                             % cell_id)
        if z_domain.ranges:
            raise ParseError(
                "cell %s: a 0-cell has no extra value-group variables"
                % cell_id)
        alpha = None
    else:
        if not alpha_text or not xi_text:
            raise ParseError("cell %s: a 1-cell needs alpha and xi"
                             % cell_id)
        alpha = parse_affine(alpha_text)
        loose = alpha.variables() - set(zvars) - set(param_names)
        if loose:
            raise ParseError("cell %s: alpha uses undeclared %s"
                             % (cell_id, sorted(loose)))
        # xi ranges over nonzero residues by definition; make the literal
        # constraint part of the class when xi is a bare variable
        term = _parse_rf_term(xi_text.strip())
        if isinstance(term, RfVar):
            atom = RfNe(term, RfConst(0))
            if atom not in conjuncts:
                leftover = leftover + [atom]

    for c in leftover:
        for name, sort in free_vars(c).items():
            if sort is not Sort.RF:
                raise UnsupportedFeature(
                    "cell %s: constraint %s is neither a summation range "
                    "nor a residue condition" % (cell_id, pretty_print(
                        Formula(c))))

    class_formula = Formula(_fold_and(leftover)) if leftover else None
    return Cell(kind=kind,
                center_text=center_text,
                psi=psi,
                cell_id=cell_id,
                class_formula=class_formula,
                z_domain=z_domain,
                param_domain=param_domain,
                alpha=alpha,
                xi_text=xi_text.strip() if xi_text else None,
                center_term=_parse_vf_term(center_text),
                presentation=str(raw.get("presentation", "") or ""))


def load_cells(source):
    """Read a cell-data file (path, file object, or parsed dict).

    Format: {"cells": [{kind, basis, center, alpha, xi, psi, id?,
    presentation?}], "parameters": [{name, sort}], "bad_primes"?:
    {prime: reason(s)}, "oracle"?: anything}.  Sorts are vf/rf/zz.
    """
    if isinstance(source, dict):
        data = source
    elif hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(os.fspath(source)) as fh:
            data = json.load(fh)
    if not isinstance(data, dict) or "cells" not in data:
        raise ParseError("cell data must be an object with a 'cells' list")

    parameters = []
    for raw in data.get("parameters", ()):
        try:
            name, sort = raw["name"], _SORTS[raw["sort"]]
        except (TypeError, KeyError):
            raise ParseError("bad parameter entry %r" % (raw,)) from None
        parameters.append((name, sort))
    param_names = {n for n, _ in parameters}
    zz_params = [n for n, s in parameters if s is Sort.ZZ]

    cells = [_build_cell(raw, i, param_names, zz_params)
             for i, raw in enumerate(data["cells"])]

    bad = {}
    for key, reasons in (data.get("bad_primes") or {}).items():
        p = int(key)
        if isinstance(reasons, str):
            reasons = [reasons]
        bad[p] = tuple(str(r) for r in reasons)

    return CellData(cells=tuple(cells), parameters=tuple(parameters),
                    bad_primes=bad, oracle=data.get("oracle"))


# ---------------------------------------------------------------------------
# constructible functions


@dataclass(frozen=True)
class CTerm:
    """One summand: a residue class, residual value-group constraints, and
    an exact coefficient."""

    rf_class: Formula | None
    domain: PresDomain
    coeff: SymSum

    def render(self):
        cls = "1" if self.rf_class is None else pretty_print(self.rf_class)
        out = "[%s] (x) %s" % (cls, self.coeff.render())
        if self.domain.ranges:
            out += "  for " + ", ".join(_render_range(r)
                                        for r in self.domain.ranges)
        return out


def _render_range(r):
    parts = []
    if r.lower is not None:
        parts.append("%s <= %s" % (r.lower.render(), r.name))
    if r.upper is not None:
        parts.append("%s <= %s" % (r.name, r.upper.render()))
    if r.modulus != 1:
        parts.append("%s == %d mod %d" % (r.name, r.residue, r.modulus))
    return " && ".join(parts) or r.name + " free"


class ConstructibleFn:
    """A finite sum of residue classes tensored with exact ring values.

    Terms with the same class and residual domain merge; zero coefficients
    drop.  Once no value-group parameters remain, every coefficient is a
    plain ring constant and as_syma() collapses the class-free part.
    """

    __slots__ = ("terms", "params")

    def __init__(self, terms=(), params=()):
        self.params = tuple((n, s) for n, s in params)
        merged = {}
        for t in terms:
            if isinstance(t, CTerm):
                cls, dom, coeff = t.rf_class, t.domain, t.coeff
            else:
                cls, dom, coeff = t
            if isinstance(coeff, SymA):
                coeff = SymSum.of_syma(coeff)
            elif isinstance(coeff, PresTerm):
                coeff = SymSum((coeff,))
            key = (cls, dom)
            merged[key] = merged[key] + coeff if key in merged else coeff
        out = [CTerm(cls, dom, coeff)
               for (cls, dom), coeff in merged.items()
               if not coeff.is_zero()]
        out.sort(key=lambda t: ("" if t.rf_class is None
                                else pretty_print(t.rf_class),
                                tuple((r.name, str(r.lower), str(r.upper),
                                       r.modulus, r.residue)
                                      for r in t.domain.ranges)))
        self.terms = tuple(out)

    @classmethod
    def zero(cls, params=()):
        return cls((), params)

    @classmethod
    def constant(cls, value, params=()):
        return cls(((None, EMPTY_DOMAIN, value),), params)

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        if not isinstance(other, ConstructibleFn):
            return NotImplemented
        params = self.params
        if self.params != other.params:
            if not self.terms:
                params = other.params
            elif not other.terms:
                params = self.params
            else:
                raise ValueError("cannot add functions over different "
                                 "parameter lists")
        return ConstructibleFn(self.terms + other.terms, params)

    def __eq__(self, other):
        if not isinstance(other, ConstructibleFn):
            return NotImplemented
        return self.terms == other.terms and self.params == other.params

    def __hash__(self):
        return hash((self.terms, self.params))

    def as_syma(self):
        """Collapse to a ring constant; requires every class trivial."""
        acc = SymA.from_int(0)
        for t in self.terms:
            if t.rf_class is not None or t.domain.ranges:
                raise UnsupportedFeature(
                    "the function still carries a residue class or a "
                    "parameter domain: %s" % t.render())
            acc = acc + t.coeff.as_syma()
        return acc

    def render(self):
        if not self.terms:
            return "0"
        return "  +  ".join(t.render() for t in self.terms)

    __str__ = render

    def __repr__(self):
        return "ConstructibleFn(%s)" % self.render()


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    """The value of a cell integration, the primes it excludes (with the
    recorded reasons), and the per-cell audit trail."""

    value: ConstructibleFn
    bad_primes: dict
    derivation: tuple

    def as_syma(self):
        return self.value.as_syma()


# ---------------------------------------------------------------------------
# class-size collapse (conjunctions of linear disequalities)


def _linear_residue_parts(node):
    """node as ({var: int coeff}, int const), or None if not linear."""
    if isinstance(node, RfConst):
        return {}, node.value
    if isinstance(node, RfVar):
        return {node.name: 1}, 0
    if isinstance(node, RfNeg):
        r = _linear_residue_parts(node.operand)
        if r is None:
            return None
        return {v: -c for v, c in r[0].items()}, -r[1]
    if isinstance(node, (RfAdd, RfSub)):
        a = _linear_residue_parts(node.left)
        b = _linear_residue_parts(node.right)
        if a is None or b is None:
            return None
        sign = 1 if isinstance(node, RfAdd) else -1
        coeffs = dict(a[0])
        for v, c in b[0].items():
            coeffs[v] = coeffs.get(v, 0) + sign * c
        return coeffs, a[1] + sign * b[1]
    if isinstance(node, RfMul):
        for const, other in ((node.left, node.right),
                             (node.right, node.left)):
            if isinstance(const, RfConst):
                r = _linear_residue_parts(other)
                if r is None:
                    return None
                return ({v: c * const.value for v, c in r[0].items()},
                        r[1] * const.value)
        return None
    return None


def _split_components(phi):
    """Conjuncts of phi grouped into connected components by shared free
    variables; parts that share nothing can be sized independently."""
    groups = []
    for c in _flatten_and(phi.expr):
        vs = set(free_vars(c))
        if not vs:
            groups.append([vs, [c]])
            continue
        hit = [g for g in groups if g[0] & vs]
        if hit:
            first = hit[0]
            for g in hit[1:]:
                first[0] |= g[0]
                first[1].extend(g[1])
                groups.remove(g)
            first[0] |= vs
            first[1].append(c)
        else:
            groups.append([vs, [c]])
    return groups


def _class_size(phi, reserved):
    """Exact class size for a conjunction of linear disequalities over
    non-parameter residue variables: each variable contributes L minus its
    number of excluded residues.  Returns (SymA, notes) or None when the
    class has to stay a formula.  notes lists (prime, reason) pairs for
    primes where the excluded residues degenerate."""
    names = [n for n, _ in phi.free]
    if any(n in reserved for n in names):
        return None
    if any(s is not Sort.RF for _, s in phi.free):
        return None
    excluded = {n: set() for n in names}
    notes = []
    for conj in _flatten_and(phi.expr):
        if not isinstance(conj, RfNe):
            return None
        left = _linear_residue_parts(conj.left)
        right = _linear_residue_parts(conj.right)
        if left is None or right is None:
            return None
        coeffs = dict(left[0])
        for v, c in right[0].items():
            coeffs[v] = coeffs.get(v, 0) - c
        coeffs = {v: c for v, c in coeffs.items() if c}
        const = left[1] - right[1]
        if not coeffs:
            if const == 0:
                return ZERO, notes
            continue
        if len(coeffs) != 1:
            return None
        (v, c), = coeffs.items()
        value = Fraction(-const, c)
        if abs(c) != 1:
            for p in _prime_factors(c):
                notes.append((p, "coefficient %d on %s is not invertible"
                              % (c, v)))
        if value.denominator != 1:
            for p in _prime_factors(value.denominator):
                notes.append((p, "excluded residue %s is not integral"
                              % value))
        excluded[v].add(value)
    size = ONE
    for v in names:
        vals = sorted(excluded[v])
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                for p in _prime_factors((vals[j] - vals[i]).numerator):
                    notes.append((p, "residues %s and %s of %s collide"
                                  % (vals[i], vals[j], v)))
        size = size * (L - SymA.from_int(len(vals)))
    return size, notes


# ---------------------------------------------------------------------------
# signature disjointness


def _alpha_interval(cell):
    """The range of alpha over the cell's value-group variables, as a pair
    of AffineForms over the parameters (None for an open end), or None when
    it cannot be read off."""
    alpha = cell.alpha
    zvars = {r.name: r for r in cell.z_domain.ranges}
    inside = [v for v in alpha.variables() if v in zvars]
    if not inside:
        return alpha, alpha
    if len(inside) > 1:
        return None
    v = inside[0]
    c = alpha.coeff(v)
    rest = alpha.drop(v)
    rng = zvars[v]

    def compose(bound):
        if bound is None:
            return None
        out = rest + bound.scale(c)
        if out.variables() & set(zvars):
            return None
        return out

    lo, up = compose(rng.lower), compose(rng.upper)
    if c > 0:
        return lo, up
    return up, lo


def _provably_disjoint(i1, i2):
    if i1 is None or i2 is None:
        return False

    def separated(hi, lo):
        if hi is None or lo is None:
            return False
        d = lo - hi
        return d.is_constant() and d.const >= 1

    return separated(i1[1], i2[0]) or separated(i2[1], i1[0])


def _complementary(f1, f2):
    if f1 is None or f2 is None:
        return False
    a = set(_flatten_and(f1.expr))
    b = set(_flatten_and(f2.expr))
    for x in a:
        if Not(x) in b:
            return True
        if isinstance(x, Not) and x.operand in b:
            return True
        if isinstance(x, RfEq) and RfNe(x.left, x.right) in b:
            return True
        if isinstance(x, RfNe) and RfEq(x.left, x.right) in b:
            return True
    for y in b:
        if isinstance(y, Not) and y.operand in a:
            return True
    return False


def _check_disjoint(cells):
    """Signature-level disjointness per shared center: same-center 1-cells
    must have provably separated alpha ranges or contradictory residue
    classes.  Cells with different centers are trusted."""
    by_center = {}
    points = {}
    for cell in cells:
        if cell.kind == ZERO_CELL:
            if cell.center_text in points:
                raise OverlapDetected(
                    "0-cells %s and %s share the center %s"
                    % (points[cell.center_text], cell.cell_id,
                       cell.center_text))
            points[cell.center_text] = cell.cell_id
            continue
        by_center.setdefault(cell.center_text, []).append(cell)
    for center, group in by_center.items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                if _provably_disjoint(_alpha_interval(a),
                                      _alpha_interval(b)):
                    continue
                if _complementary(a.class_formula, b.class_formula):
                    continue
                raise OverlapDetected(
                    "cells %s and %s share center %s with overlapping "
                    "(alpha, xi) signatures" % (a.cell_id, b.cell_id,
                                                center))


# ---------------------------------------------------------------------------
# integration


def _note(bad, prime, reason):
    reasons = bad.setdefault(int(prime), [])
    if reason not in reasons:
        reasons.append(reason)


def _freeze_bad(bad):
    return {p: tuple(bad[p]) for p in sorted(bad)}


def _psi_terms(psi):
    if isinstance(psi, str):
        psi = parse_psi(psi)
    if isinstance(psi, SymA):
        return (PresTerm(psi, AffineForm.constant(0)),)
    if isinstance(psi, PresTerm):
        return (psi,)
    if isinstance(psi, SymSum):
        return psi.terms
    if isinstance(psi, tuple) and len(psi) == 2:
        return (PresTerm(*psi),)
    raise TypeError("cannot read a cell coefficient from %r" % (psi,))


def _center_notes(cell, bad):
    if cell.center_term is None:
        return
    for node in walk(cell.center_term):
        if isinstance(node, VfConst) and node.value.denominator != 1:
            for p in _prime_factors(node.value.denominator):
                _note(bad, p, "center %s is not integral"
                      % cell.center_text)


def integrate_cells(cells, psis=None, params=()):
    """Integrate the coefficients over a disjoint family of cells.

    psis overrides the cells' own coefficients when given (one entry per
    cell).  Every 1-cell contributes its residue class tensored with the
    exact sum of psi * L^(-alpha - 1) over its value-group variables;
    parameter-free classes cut out by linear disequalities collapse to
    their ring cardinality.  0-cells contribute nothing to the value; their
    counting terms go to the derivation log, and non-affine centers are
    rejected."""
    cells = tuple(cells)
    if psis is None:
        psi_list = [cell.psi for cell in cells]
    else:
        psi_list = list(psis)
        if len(psi_list) != len(cells):
            raise ValueError("need one coefficient per cell")
    _check_disjoint(cells)

    param_names = {n for n, _ in params}
    bad = {}
    derivation = []
    total = ConstructibleFn.zero(params)

    for cell, psi in zip(cells, psi_list):
        terms = _psi_terms(psi)
        _center_notes(cell, bad)
        if cell.class_formula is not None:
            for p, reasons in bad_primes(cell.class_formula).items():
                for r in reasons:
                    _note(bad, p, r)

        if cell.kind == ZERO_CELL:
            if cell.center_term is None or _vf_degree(cell.center_term) > 1:
                raise UnsupportedZeroCell(
                    "cell %s: only affine centers are supported, got %s"
                    % (cell.cell_id, cell.center_text))
            counting = SymSum(terms)
            contribution = ConstructibleFn.zero(params)
            note = ("measure zero; counting term %s recorded only"
                    % counting.render())
        else:
            summed = SymSum()
            for t in terms:
                exponent = t.exponent - cell.alpha - 1
                summed = summed + pres_sum(cell.z_domain,
                                           PresTerm(t.coefficient, exponent))
            cls = cell.class_formula
            note = ""
            if cls is not None:
                kept = []
                sized = []
                for _, nodes in _split_components(cls):
                    sub = Formula(_fold_and(nodes))
                    collapsed = _class_size(sub, param_names)
                    if collapsed is None:
                        kept.extend(nodes)
                        continue
                    size, notes = collapsed
                    for p, r in notes:
                        _note(bad, p, r)
                    summed = summed * size
                    sized.append((pretty_print(sub), size.render()))
                if sized:
                    note = "; ".join("class factor [%s] collapsed to %s"
                                     % pair for pair in sized)
                    cls = Formula(_fold_and(kept)) if kept else None
            contribution = ConstructibleFn(
                ((cls, cell.param_domain, summed),), params)
        derivation.append((cell.cell_id, contribution, note))
        total = total + contribution

    return IntegrationResult(value=total, bad_primes=_freeze_bad(bad),
                             derivation=tuple(derivation))


def integrate_cell_data(data):
    """Integrate a loaded cell-data file, folding in its declared excluded
    primes."""
    result = integrate_cells(data.cells, params=data.parameters)
    bad = {p: list(rs) for p, rs in result.bad_primes.items()}
    for p, reasons in data.bad_primes.items():
        for r in reasons:
            _note(bad, p, r)
    return IntegrationResult(value=result.value, bad_primes=_freeze_bad(bad),
                             derivation=result.derivation)


def integrate_linear_product(centers, multiplicities, exponent=1):
    """Integral of prod_j |t - c_j|^(e*m_j) over the valuation ring.

    The decomposition is built automatically: one cell for the residues
    away from every center, one shell family around each center, and the
    centers themselves as 0-cells.  Primes where the centers collide or
    fail to be integral are excluded and recorded."""
    centers = [Fraction(c) for c in centers]
    mults = [int(m) for m in multiplicities]
    e = int(exponent)
    if len(mults) != len(centers):
        raise ValueError("need one multiplicity per center")
    if any(m < 1 for m in mults):
        raise ValueError("multiplicities must be >= 1")
    if e < 1:
        raise ValueError("the exponent must be >= 1")
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if centers[i] == centers[j]:
                raise DuplicateCenter("centers %s and %s coincide"
                                      % (centers[i], centers[j]))

    u, g = "u", "g"
    one_term = PresTerm(ONE, AffineForm.constant(0))
    cells = []
    if not centers:
        cells.append(Cell(kind=ONE_CELL, cell_id="everything",
                          center_text="0", center_term=VfConst(Fraction(0)),
                          class_formula=Formula(RfNe(RfVar(u), RfConst(0))),
                          z_domain=PresDomain.single(g, lower=0),
                          alpha=AffineForm.var(g), xi_text=u, psi=one_term))
        cells.append(Cell(kind=ZERO_CELL, cell_id="origin", center_text="0",
                          center_term=VfConst(Fraction(0)), psi=one_term))
    else:
        anchor = centers[0]
        atoms = [RfNe(RfVar(u), RfConst(0))]
        for cj in centers[1:]:
            d = cj - anchor
            scaled = RfVar(u) if d.denominator == 1 else \
                RfMul(RfConst(d.denominator), RfVar(u))
            atoms.append(RfNe(scaled, RfConst(d.numerator)))
        cells.append(Cell(kind=ONE_CELL, cell_id="away_from_centers",
                          center_text=str(anchor),
                          center_term=VfConst(anchor),
                          class_formula=Formula(_fold_and(atoms)),
                          alpha=AffineForm.constant(0), xi_text=u,
                          psi=one_term))
        for j, (cj, mj) in enumerate(zip(centers, mults)):
            shell_psi = PresTerm(ONE, AffineForm.var(g).scale(-e * mj))
            cells.append(Cell(kind=ONE_CELL, cell_id="near_center_%d" % j,
                              center_text=str(cj), center_term=VfConst(cj),
                              class_formula=Formula(
                                  RfNe(RfVar(u), RfConst(0))),
                              z_domain=PresDomain.single(g, lower=1),
                              alpha=AffineForm.var(g), xi_text=u,
                              psi=shell_psi))
            cells.append(Cell(kind=ZERO_CELL, cell_id="point_%d" % j,
                              center_text=str(cj), center_term=VfConst(cj),
                              psi=PresTerm(ZERO, AffineForm.constant(0))))
    return integrate_cells(cells)


# ---------------------------------------------------------------------------
# specialization


def _bind_rf(node, env, q):
    """Replace assigned residue variables by constants, recursively."""
    if isinstance(node, RfVar) and node.name in env:
        return RfConst(env[node.name] % q)
    if isinstance(node, Exists) and node.var in env:
        inner = dict(env)
        del inner[node.var]
        return Exists(node.var, node.sort, _bind_rf(node.body, inner, q))
    kwargs = {}
    changed = False
    for field in node.__dataclass_fields__:
        v = getattr(node, field)
        if hasattr(v, "__dataclass_fields__"):
            w = _bind_rf(v, env, q)
            changed = changed or w is not v
            kwargs[field] = w
        else:
            kwargs[field] = v
    return type(node)(**kwargs) if changed else node


def specialize(value, q, assignment=None):
    """Evaluate a constructible function (or a whole IntegrationResult) at
    residue characteristic q under a parameter assignment.

    Residue-sort parameters take integer representatives; value-group
    parameters take integers.  Classes become point counts over F_q and
    ring coefficients evaluate at L = q."""
    if isinstance(value, IntegrationResult):
        if int(q) in value.bad_primes:
            raise BadPrime("%d is excluded: %s"
                           % (q, "; ".join(value.bad_primes[int(q)])))
        fn = value.value
    else:
        fn = value
    if not is_prime(q):
        raise InvalidPrime("%r is not a rational prime" % (q,))
    assignment = dict(assignment or {})
    missing = [n for n, _ in fn.params if n not in assignment]
    if missing:
        raise UnboundParameter("no value for parameter(s) %s"
                               % sorted(missing))
    rf_env = {n: int(assignment[n]) for n, s in fn.params if s is Sort.RF}
    zz_env = {n: int(assignment[n]) for n, s in fn.params if s is Sort.ZZ}

    total = Fraction(0)
    for t in fn.terms:
        if t.domain.ranges:
            point = {}
            for r in t.domain.ranges:
                if r.name not in zz_env:
                    raise UnboundParameter("no value for parameter %r"
                                           % r.name)
                point[r.name] = zz_env[r.name]
            if not t.domain.contains(point, env=zz_env):
                raise ValueError(
                    "assignment %s leaves the residual domain %s"
                    % (point, ", ".join(_render_range(r)
                                        for r in t.domain.ranges)))
        count = 1
        if t.rf_class is not None:
            inst = Formula(_bind_rf(t.rf_class.expr, rf_env, int(q)))
            count = count_rf_points(inst, int(q))
        total += count * t.coeff.nu(q, zz_env)
    return total


# ---------------------------------------------------------------------------
# partial parameter binding and congruence-case evaluation


def _bind_domain(domain, env):
    """Residual domain under a partial integer assignment, or None when the
    assignment falls outside the domain."""
    kept = []
    for r in domain.ranges:
        lo = r.lower.bind(env) if r.lower is not None else None
        up = r.upper.bind(env) if r.upper is not None else None
        if r.name in env:
            v = env[r.name]
            if v % r.modulus != r.residue:
                return None
            for bound, is_upper in ((lo, False), (up, True)):
                if bound is None:
                    continue
                if not bound.is_constant():
                    raise UnsupportedFeature(
                        "the range for %s still depends on %s"
                        % (r.name, sorted(bound.variables())))
                if v > bound.const if is_upper else v < bound.const:
                    return None
            continue
        kept.append(VarRange(r.name, lo, up, r.modulus, r.residue))
    return PresDomain(tuple(kept))


def bind_parameters(value, assignment):
    """Substitute integers for value-group parameters, keeping everything
    else symbolic.  Residue-sort parameters stay free.  Accepts and returns
    either a ConstructibleFn or a whole IntegrationResult.

    An assignment outside some term's residual domain is an error, exactly
    as in specialize: the function is only represented there."""
    if isinstance(value, IntegrationResult):
        return IntegrationResult(
            value=bind_parameters(value.value, assignment),
            bad_primes=value.bad_primes,
            derivation=tuple((cid, bind_parameters(fn, assignment), note)
                             for cid, fn, note in value.derivation))
    env = {n: int(assignment[n]) for n, s in value.params
           if s is Sort.ZZ and n in assignment}
    params = tuple((n, s) for n, s in value.params if n not in env)
    terms = []
    for t in value.terms:
        dom = _bind_domain(t.domain, env)
        if dom is None:
            raise ValueError(
                "assignment %s leaves the residual domain %s"
                % (env, ", ".join(_render_range(r) for r in t.domain.ranges)))
        terms.append((t.rf_class, dom, t.coeff.substitute(env)))
    return ConstructibleFn(terms, params)


def _interp_poly(points):
    """Exact Lagrange interpolation; returns coefficients by power."""
    coeffs = [Fraction(0)] * len(points)
    for i, (xi, yi) in enumerate(points):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            shifted = [Fraction(0)] * (len(basis) + 1)
            for k, b in enumerate(basis):
                shifted[k + 1] += b
                shifted[k] -= xj * b
            basis = shifted
            denom *= xi - xj
        scale = Fraction(yi) / denom
        for k, b in enumerate(basis):
            coeffs[k] += scale * b
    return coeffs


def _case_witnesses(residue, modulus, avoid, need):
    out = []
    n = 5
    while len(out) < need:
        if is_prime(n) and n % modulus == residue and n not in avoid:
            out.append(n)
        n += 1
    return out


def residue_cases(value, modulus, rf_witness, zz_assignment=None, validate=2):
    """Evaluate a constructible function as an exact ring element on each
    invertible congruence class of q mod `modulus`.

    Residue-class point counts are quasi-polynomial in q; on each fixed
    congruence class the counts are interpolated from witness primes as
    exact polynomials in L, and the fit is confirmed on `validate` further
    witnesses (a mismatch raises UnsupportedFeature).  rf_witness binds each
    residue-sort parameter to an integer that lands in the intended class
    at every witness prime (1 for "a nonzero cube").  Value-group
    parameters must all be bound by zz_assignment.

    Returns [(residue, SymA)] sorted by residue.
    """
    fn = value.value if isinstance(value, IntegrationResult) else value
    bad = value.bad_primes if isinstance(value, IntegrationResult) else {}
    fn = bind_parameters(fn, zz_assignment or {})
    still_zz = [n for n, s in fn.params if s is Sort.ZZ]
    if still_zz:
        raise UnboundParameter("no value for parameter(s) %s"
                               % sorted(still_zz))
    rf_env = {}
    for n, s in fn.params:
        if s is Sort.RF:
            if n not in rf_witness:
                raise UnboundParameter("no witness for parameter %r" % n)
            rf_env[n] = int(rf_witness[n])

    cases = []
    for residue in range(1, modulus):
        if gcd(residue, modulus) != 1:
            continue
        total = ZERO
        for t in fn.terms:
            if t.rf_class is None:
                poly = ONE
            else:
                degree = len([n for n, _ in t.rf_class.free
                              if n not in rf_env])
                primes = _case_witnesses(residue, modulus, bad,
                                         degree + 1 + validate)
                counts = [count_rf_points(
                    Formula(_bind_rf(t.rf_class.expr, rf_env, q)), q)
                    for q in primes]
                fit = _interp_poly(list(zip(primes, counts))[:degree + 1])
                for q, c in zip(primes, counts):
                    got = sum(a * Fraction(q) ** k
                              for k, a in enumerate(fit))
                    if got != c:
                        raise UnsupportedFeature(
                            "the point count of [%s] is not polynomial "
                            "over q = %d mod %d" % (pretty_print(t.rf_class),
                                                    residue, modulus))
                poly = ZERO
                for k, a in enumerate(fit):
                    poly = poly + SymA.from_fraction(a) * SymA.l_power(k)
            total = total + poly * t.coeff.as_syma()
        cases.append((residue, total))
    return cases


# ---------------------------------------------------------------------------
# the split-torus volume worked end to end


def _smallest_nonsquare(q):
    for n in range(2, q):
        if pow(n, (q - 1) // 2, q) == q - 1:
            return n
    raise InvalidPrime("no non-square residue mod %r" % (q,))


def appendix2_steps():
    """The symbolic volume of the quadratic-twist locus in SL2 of the
    valuation ring, assembled step by step with exact ring bookkeeping.

    The plane splits into the cone t^2 = s^2, the locus where t^2 - s^2 is
    a nonzero square, and the locus where it is a nonsquare; the nonsquare
    locus times a free unit scale gives the unit-determinant slice, which
    is halved by the nonzero-square-test fibre, spread over the nonsquare
    twists, and completed by the positive-valuation branch."""
    half = Fraction(1, 2)
    cone = 2 * (L - ONE) + ONE
    nonzero_square = (L - ONE) * (L - ONE) * half
    nonsquare = L * L - nonzero_square - cone
    anisotropic_slice = nonsquare * (L - ONE)
    unit_b_half_fibre = L * anisotropic_slice * half
    unit_b_per_eta = (unit_b_half_fibre * 2).div_by_unit(L - ONE)
    positive_b_part = L * (L - ONE)
    total = unit_b_per_eta + positive_b_part
    return {
        "cone": cone,
        "nonzero_square_locus": nonzero_square,
        "nonsquare_locus": nonsquare,
        "anisotropic_slice": anisotropic_slice,
        "unit_b_half_fibre": unit_b_half_fibre,
        "unit_b_per_eta": unit_b_per_eta,
        "positive_b_part": positive_b_part,
        "total": total,
    }


def appendix2_symbolic():
    """The volume as an exact ring element: (1/2) L (L-1) (L+1)."""
    return appendix2_steps()["total"]


def appendix2_volume(eta_mode, q, eta=None, variant="b2_minus_d2",
                     budget=None):
    """The same volume numerically, by counting over F_q at level zero.

    eta_mode 'per_eta' counts {ad - bc = 1 and b^2 - d^2*eta a square} for
    one non-square eta (the smallest when not given) and divides by q^3;
    'summed_over_nonsquares' lets eta range over all non-squares.  variant
    'd2_minus_b2' tests d^2 - b^2*eta for a nonzero square instead; the
    two variants agree (the quadratic form is anisotropic either way)."""
    q = int(q)
    if not is_prime(q) or q < 5:
        raise InvalidPrime("need an odd prime >= 5, got %r" % (q,))
    if variant == "b2_minus_d2":
        tmpl = "(exists s:rf. b^2 - d^2*%s == s^2)"
    elif variant == "d2_minus_b2":
        tmpl = "(exists s:rf. s != 0 && d^2 - b^2*%s == s^2)"
    else:
        raise ValueError("unknown variant %r" % (variant,))

    if eta_mode == "per_eta":
        if eta is None:
            eta = _smallest_nonsquare(q)
        eta = int(eta) % q
        if eta == 0 or pow(eta, (q - 1) // 2, q) != q - 1:
            raise ValueError("%d is not a non-square mod %d" % (eta, q))
        text = ("rf a, b, c, d; a*d - b*c == 1 && " + tmpl % eta)
    elif eta_mode == "summed_over_nonsquares":
        text = ("rf a, b, c, d, h; a*d - b*c == 1 && "
                "!(exists r:rf. h == r^2) && " + tmpl % "h")
    else:
        raise ValueError("unknown eta_mode %r" % (eta_mode,))

    if budget is None:
        count = count_rf_points(text, q)
    else:
        count = count_rf_points(text, q, budget=budget)
    return Fraction(count, q ** 3)
