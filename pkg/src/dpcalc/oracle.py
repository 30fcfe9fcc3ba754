"""Numeric ground truth by exhaustive residue-box enumeration.

Volumes and integrals over the valuation ring come back as exact rational
intervals: a box mod ϖ^N that the three-valued interpreter decides True
contributes its measure to both endpoints, a box it cannot decide widens
only the upper endpoint.  Three-valued truth refines monotonically as
digits are added, so a subtree can be classified the moment its root box
decides; the result is identical to flat enumeration of all p^(N*m) boxes,
which is what the box budget meters.

Nothing here is symbolic.  The point is an independent check on the
symbolic engine, plus the classical consistency checks (Weil point-count
stabilization, Jacobian scaling).
"""

from __future__ import annotations

import dataclasses
import itertools
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (BadPrime, BudgetExceeded, UnboundVariable,
                     UnsupportedFeature)
from .formula import (Exists, Formula, Node, Sort, Truth3, VfAdd, VfConst,
                      VfMul, VfNeg, VfPow, VfSub, VfUnif, VfVar,
                      eval_vf_term, free_vars, interpret, parse)
from .localfield import INF, FieldKind, from_digits

DEFAULT_BOX_BUDGET = 10 ** 8
_BUDGET_ENV = "DPCALC_BOX_BUDGET"


def _resolve_budget(budget):
    if budget is not None:
        return int(budget)
    configured = os.environ.get(_BUDGET_ENV)
    if configured:
        return int(configured)
    return DEFAULT_BOX_BUDGET


def fraction_str(x):
    """Unambiguous "numerator/denominator" rendering, denominator always
    present."""
    x = Fraction(x)
    return "%d/%d" % (x.numerator, x.denominator)


@dataclass(frozen=True)
class VolumeInterval:
    """Exact rational bracket [lower, upper] around a measure or integral.

    undecided_mass is the total contribution bound of the boxes the
    interpreter could not settle, i.e. exactly upper - lower.  Box counters
    are nominal full-depth counts (a subtree classified early counts all
    the boxes it covers).
    """

    lower: Fraction
    upper: Fraction
    precision_used: int
    undecided_mass: Fraction
    boxes_total: int
    boxes_true: int
    boxes_undecided: int

    def __post_init__(self):
        assert 0 <= self.lower <= self.upper

    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper

    def overlaps(self, other):
        return self.lower <= other.upper and other.lower <= self.upper

    def scaled(self, c):
        """The interval for c times the quantity (c >= 0)."""
        c = Fraction(c)
        return VolumeInterval(self.lower * c, self.upper * c,
                              self.precision_used, self.undecided_mass * c,
                              self.boxes_total, self.boxes_true,
                              self.boxes_undecided)

    def to_json_dict(self):
        return {
            "lower": fraction_str(self.lower),
            "upper": fraction_str(self.upper),
            "precision": self.precision_used,
            "boxes_total": self.boxes_total,
            "boxes_true": self.boxes_true,
            "boxes_undecided": self.boxes_undecided,
        }


def parse_vf_polynomial(text):
    """Parse a valued-field polynomial term such as "y^3 - x".

    Every identifier is read at the field sort; returns the term AST."""
    phi = parse("(%s) == 0" % text, default_sort=Sort.VF)
    return phi.expr.left


@dataclass(frozen=True)
class IntegrandSpec:
    """Either the constant 1 (plain volume) or |f|^e for a field polynomial
    f, valued p^(-e*ord f(x)) pointwise."""

    f: object = None
    e: int = 1

    @classmethod
    def one(cls):
        return cls(None, 1)

    @classmethod
    def abs_power(cls, f, e=1):
        if int(e) < 1:
            raise ValueError("exponent must be a positive integer")
        if isinstance(f, str):
            f = parse_vf_polynomial(f)
        return cls(f, int(e))

    @property
    def is_one(self):
        return self.f is None


def _as_formula(phi):
    if isinstance(phi, str):
        return parse(phi, default_sort=Sort.VF)
    if isinstance(phi, Formula):
        return phi
    return Formula(phi)


def _value_power(p, e, v):
    """p^(-e*v) as an exact Fraction; v = INF means the value 0."""
    if v is INF:
        return Fraction(0)
    return Fraction(p) ** (-e * v)


class _BoxWalk:
    """Depth-first refinement of the residue-box tree for one bracket."""

    def __init__(self, phi, spec, integrand, assignment, vf_witness_depth):
        self.phi = phi
        self.spec = spec
        self.integrand = integrand
        self.assignment = assignment
        self.vf_witness_depth = vf_witness_depth
        self.p = spec.prime
        self.depth = spec.precision
        self.names = [n for n, s in phi.free
                      if s is Sort.VF and n not in assignment]
        self.m = len(self.names)
        self.lower = Fraction(0)
        self.upper = Fraction(0)
        self.boxes_true = 0
        self.boxes_undecided = 0

    def nominal_boxes(self):
        return self.p ** (self.depth * self.m)

    def run(self):
        self.walk(tuple(() for _ in self.names), 0)
        return VolumeInterval(self.lower, self.upper, self.depth,
                              self.upper - self.lower, self.nominal_boxes(),
                              self.boxes_true, self.boxes_undecided)

    def integrand_bounds(self, env):
        """(lower, upper) on the integrand's value over the box; equal
        when decided."""
        if self.integrand.is_one:
            return Fraction(1), Fraction(1)
        value = eval_vf_term(self.integrand.f, self.spec, env)
        vlo, vhi = value.ord_bounds()
        return (_value_power(self.p, self.integrand.e, vhi),
                _value_power(self.p, self.integrand.e, vlo))

    def walk(self, prefixes, level):
        env = dict(self.assignment)
        for name, digs in zip(self.names, prefixes):
            env[name] = from_digits(self.spec, 0, digs)
        membership = interpret(self.phi, self.spec, env,
                               self.vf_witness_depth)
        if membership is Truth3.FALSE:
            return
        weight = self.p ** ((self.depth - level) * self.m)
        measure = Fraction(1, self.p ** (level * self.m))
        if membership is Truth3.TRUE:
            flo, fhi = self.integrand_bounds(env)
            if flo == fhi:
                self.lower += measure * flo
                self.upper += measure * flo
                self.boxes_true += weight
                return
            if level == self.depth:
                self.boxes_undecided += weight
                self.upper += measure * fhi
                return
        elif level == self.depth:
            _, fhi = self.integrand_bounds(env)
            self.boxes_undecided += weight
            self.upper += measure * fhi
            return
        for combo in itertools.product(range(self.p), repeat=self.m):
            self.walk(tuple(digs + (d,)
                            for digs, d in zip(prefixes, combo)),
                      level + 1)


def _prepare(phi, spec, integrand, assignment, budget, vf_witness_depth):
    phi = _as_formula(phi)
    assignment = dict(assignment or {})
    missing = [n for n, s in phi.free
               if s is not Sort.VF and n not in assignment]
    if missing:
        raise UnboundVariable(
            "residue/value-group parameters must be bound by the caller: "
            + ", ".join(sorted(missing)))
    if not integrand.is_one:
        have = set(assignment) | {n for n, s in phi.free if s is Sort.VF}
        loose = [n for n in free_vars(integrand.f) if n not in have]
        if loose:
            raise UnboundVariable(
                "integrand mentions variables outside the domain: "
                + ", ".join(sorted(loose)))
    walk = _BoxWalk(phi, spec, integrand, assignment, vf_witness_depth)
    limit = _resolve_budget(budget)
    if walk.nominal_boxes() > limit:
        raise BudgetExceeded(
            "%d^(%d*%d) = %d residue boxes exceed the budget of %d"
            % (walk.p, walk.depth, walk.m, walk.nominal_boxes(), limit))
    return walk


def volume(phi, spec, *, assignment=None, budget=None,
           vf_witness_depth=None):
    """Exact rational bracket around the measure of the integral points
    satisfying phi.

    Free field variables range over the valuation ring; residue and
    value-group parameters must be pre-bound through `assignment`.
    Field quantifiers are rejected unless a witness depth is supplied.
    """
    walk = _prepare(phi, spec, IntegrandSpec.one(), assignment, budget,
                    vf_witness_depth)
    return walk.run()


def integrate(integrand, phi, field, *, assignment=None, budget=None,
              vf_witness_depth=None):
    """Bracket the integral of `integrand` over the set phi cuts out of
    the valuation ring, against the normalized Haar measure."""
    walk = _prepare(phi, field, integrand, assignment, budget,
                    vf_witness_depth)
    return walk.run()


def _np_pow(base, k, modulus):
    out = np.full_like(base, 1 % modulus)
    b = base % modulus
    while k:
        if k & 1:
            out = (out * b) % modulus
        b = (b * b) % modulus
        k >>= 1
    return out


def _np_source(node, index, modulus, p):
    """Polynomial term AST -> numpy expression source, reduced after every
    operation so products stay inside int64."""
    if isinstance(node, VfVar):
        return "v%d" % index[node.name]
    if isinstance(node, VfConst):
        value = Fraction(node.value)
        try:
            inv = pow(value.denominator, -1, modulus)
        except ValueError:
            raise BadPrime("coefficient %s is not integral at %d"
                           % (value, p)) from None
        return repr((value.numerator * inv) % modulus)
    if isinstance(node, VfUnif):
        return repr(p % modulus)
    binops = {VfAdd: "+", VfSub: "-", VfMul: "*"}
    op = binops.get(type(node))
    if op is not None:
        return "((%s %s %s) %% M)" % (
            _np_source(node.left, index, modulus, p), op,
            _np_source(node.right, index, modulus, p))
    if isinstance(node, VfNeg):
        return "((-%s) %% M)" % _np_source(node.operand, index, modulus, p)
    if isinstance(node, VfPow):
        return "_pw(%s, %d, M)" % (_np_source(node.base, index, modulus, p),
                                   node.exponent)
    raise UnsupportedFeature(
        "%s is not a polynomial construct" % type(node).__name__)


_CHUNK = 1 << 18


def serre_oesterle_count(system, d, spec, N, *, budget=None):
    """#solutions of the polynomial system mod ϖ^N, divided by p^(N*d).

    The caller supplies the intended dimension d; for a smooth
    d-dimensional set the value stabilizes in N at #points(residue
    field)/p^d.  Characteristic-zero fields only (the grid is Z/p^N).
    """
    if spec.kind is not FieldKind.CHAR_ZERO:
        raise UnsupportedFeature(
            "the grid counter only covers the characteristic-zero case")
    if isinstance(system, (str, Node)):
        system = [system]
    terms = [parse_vf_polynomial(f) if isinstance(f, str) else f
             for f in system]
    if not terms:
        raise ValueError("empty polynomial system")
    index = {}
    for term in terms:
        for name in free_vars(term):
            index.setdefault(name, len(index))
    if not index:
        raise UnsupportedFeature("system has no variables")
    p = spec.prime
    modulus = p ** N
    total = modulus ** len(index)
    limit = _resolve_budget(budget)
    if total > limit:
        raise BudgetExceeded(
            "%d grid points exceed the budget of %d" % (total, limit))
    if modulus > 3_000_000_000:
        raise UnsupportedFeature("modulus too large for the int64 grid")
    sources = [compile(_np_source(t, index, modulus, p), "<poly>", "eval")
               for t in terms]
    consts = {"__builtins__": {}, "M": modulus, "_pw": _np_pow}
    count = 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        local = {}
        rem = idx
        for j in range(len(index)):
            local["v%d" % j] = rem % modulus
            rem = rem // modulus
        ok = np.ones(idx.shape, dtype=bool)
        for src in sources:
            vals = eval(src, consts, local)
            ok &= np.asarray(vals) % modulus == 0
        count += int(np.count_nonzero(ok))
    return Fraction(count, p ** (N * d))


def _scale_vf_vars(node, names, factor):
    """Replace each free occurrence of the named field variables v by
    factor*v."""
    if isinstance(node, VfVar) and node.name in names:
        return VfMul(VfConst(factor), node)
    if isinstance(node, Exists):
        inner = names - {node.var}
        return Exists(node.var, node.sort,
                      _scale_vf_vars(node.body, inner, factor))
    if not dataclasses.is_dataclass(node):
        return node
    changed = False
    kwargs = {}
    for field in dataclasses.fields(node):
        v = getattr(node, field.name)
        if isinstance(v, Node):
            nv = _scale_vf_vars(v, names, factor)
            changed = changed or nv is not v
            kwargs[field.name] = nv
        else:
            kwargs[field.name] = v
    return type(node)(**kwargs) if changed else node


def jacobian_check(a, phi, spec, *, assignment=None, budget=None):
    """(volume of phi, volume of phi with each field variable x read as
    x/a), i.e. of the original set and the set scaled by a.

    The second measure must equal |a|^m times the first; callers assert
    the containment on the returned intervals.
    """
    a = Fraction(a)
    if a == 0:
        raise ValueError("scale factor must be nonzero")
    phi = _as_formula(phi)
    assignment = dict(assignment or {})
    names = {n for n, s in phi.free
             if s is Sort.VF and n not in assignment}
    scaled = Formula(_scale_vf_vars(phi.expr, names, 1 / a), phi.free)
    return (volume(phi, spec, assignment=assignment, budget=budget),
            volume(scaled, spec, assignment=assignment, budget=budget))
