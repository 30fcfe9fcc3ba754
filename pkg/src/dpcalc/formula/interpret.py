"""Three-valued interpretation over a concrete local field at finite
precision.

Truth values refine monotonically: once an atom decides True or False at
precision N it decides the same way at every higher precision, because
element digit windows only grow.  Valuations of not-fully-determined
elements enter comparisons as intervals [lower, upper]; anything the
interval cannot settle comes back Undecided.
"""

from __future__ import annotations

import itertools
from enum import Enum
from fractions import Fraction

from ..errors import PrecisionExhausted, UnboundVariable, UnsupportedFeature
from ..localfield import INF, LFElem, embed_rational, from_digits
from .nodes import (And, Exists, Formula, Not, Or, RfAc, RfAdd, RfConst,
                    RfEq, RfMul, RfNe, RfNeg, RfPow, RfSub, RfVar, Sort,
                    VfAdd, VfConst, VfEq, VfMul, VfNeg, VfPow, VfSub,
                    VfUnif, VfVar, ZzAdd, ZzCong, ZzConst, ZzEq, ZzInf,
                    ZzLe, ZzLt, ZzNeg, ZzOrd, ZzScale, ZzSub, ZzVar,
                    free_vars)


class Truth3(Enum):
    TRUE = "true"
    FALSE = "false"
    UNDECIDED = "undecided"


_T, _F, _U = Truth3.TRUE, Truth3.FALSE, Truth3.UNDECIDED


def t3_not(a):
    if a is _T:
        return _F
    if a is _F:
        return _T
    return _U


def t3_and(a, b):
    if a is _F or b is _F:
        return _F
    if a is _T and b is _T:
        return _T
    return _U


def t3_or(a, b):
    if a is _T or b is _T:
        return _T
    if a is _F and b is _F:
        return _F
    return _U


class _NegInf:
    __slots__ = ()

    def __repr__(self):
        return "-inf"


NINF = _NegInf()


def _ext_neg(v):
    if v is INF:
        return NINF
    if v is NINF:
        return INF
    return -v


def _ext_scale(k, v):
    if v is INF:
        return INF if k > 0 else NINF
    if v is NINF:
        return NINF if k > 0 else INF
    return k * v


def _ext_le(a, b):
    if a is NINF or b is INF:
        return True
    if a is INF:
        return b is INF
    if b is NINF:
        return False
    return a <= b


def _ext_lt(a, b):
    return not _ext_le(b, a)


_PINF_POINT = (INF, INF)
_NINF_POINT = (NINF, NINF)


def _zi_neg(A):
    return (_ext_neg(A[1]), _ext_neg(A[0]))


def _zi_add(A, B):
    if (A == _PINF_POINT and B == _NINF_POINT) or \
       (A == _NINF_POINT and B == _PINF_POINT):
        return (NINF, INF)
    if A == _PINF_POINT or B == _PINF_POINT:
        return _PINF_POINT
    if A == _NINF_POINT or B == _NINF_POINT:
        return _NINF_POINT
    lo = NINF if (A[0] is NINF or B[0] is NINF) else A[0] + B[0]
    hi = INF if (A[1] is INF or B[1] is INF) else A[1] + B[1]
    return (lo, hi)


def _zi_scale(k, A):
    if k == 0:
        return (0, 0)
    if k > 0:
        return (_ext_scale(k, A[0]), _ext_scale(k, A[1]))
    return (_ext_scale(k, A[1]), _ext_scale(k, A[0]))


class _Evaluator:
    def __init__(self, spec, vf_witness_depth=None):
        self.spec = spec
        self.p = spec.prime
        self.vf_witness_depth = vf_witness_depth

    # terms

    def vf(self, n, env):
        if isinstance(n, VfVar):
            return env[n.name]
        if isinstance(n, VfConst):
            return embed_rational(n.value, self.spec)
        if isinstance(n, VfUnif):
            return self.spec.uniformizer()
        if isinstance(n, VfAdd):
            return self.vf(n.left, env) + self.vf(n.right, env)
        if isinstance(n, VfSub):
            return self.vf(n.left, env) - self.vf(n.right, env)
        if isinstance(n, VfMul):
            return self.vf(n.left, env) * self.vf(n.right, env)
        if isinstance(n, VfNeg):
            return -self.vf(n.operand, env)
        if isinstance(n, VfPow):
            acc = embed_rational(1, self.spec)
            base = self.vf(n.base, env)
            for _ in range(n.exponent):
                acc = acc * base
            return acc
        raise AssertionError(n)

    def rf(self, n, env):
        """Residue value as an int, or None when undetermined."""
        if isinstance(n, RfVar):
            return env[n.name] % self.p
        if isinstance(n, RfConst):
            return n.value % self.p
        if isinstance(n, RfAc):
            x = self.vf(n.operand, env)
            try:
                return x.ac() % self.p
            except PrecisionExhausted:
                return None
        if isinstance(n, (RfAdd, RfSub, RfMul)):
            a = self.rf(n.left, env)
            b = self.rf(n.right, env)
            if a is None or b is None:
                return None
            if isinstance(n, RfAdd):
                return (a + b) % self.p
            if isinstance(n, RfSub):
                return (a - b) % self.p
            return (a * b) % self.p
        if isinstance(n, RfNeg):
            a = self.rf(n.operand, env)
            return None if a is None else (-a) % self.p
        if isinstance(n, RfPow):
            a = self.rf(n.base, env)
            return None if a is None else pow(a, n.exponent, self.p)
        raise AssertionError(n)

    def zz(self, n, env):
        """Value-group interval (lower, upper) over Z with +-inf ends."""
        if isinstance(n, ZzVar):
            v = env[n.name]
            return _PINF_POINT if v is INF else (int(v), int(v))
        if isinstance(n, ZzConst):
            return (n.value, n.value)
        if isinstance(n, ZzInf):
            return _PINF_POINT
        if isinstance(n, ZzOrd):
            return self.vf(n.operand, env).ord_bounds()
        if isinstance(n, ZzAdd):
            return _zi_add(self.zz(n.left, env), self.zz(n.right, env))
        if isinstance(n, ZzSub):
            return _zi_add(self.zz(n.left, env),
                           _zi_neg(self.zz(n.right, env)))
        if isinstance(n, ZzNeg):
            return _zi_neg(self.zz(n.operand, env))
        if isinstance(n, ZzScale):
            return _zi_scale(n.factor, self.zz(n.operand, env))
        raise AssertionError(n)

    # atoms

    def atom(self, n, env):
        try:
            return self._atom(n, env)
        except PrecisionExhausted:
            return _U

    def _atom(self, n, env):
        # reflexivity decides syntactically identical sides at any precision
        if n.left == n.right:
            if isinstance(n, (VfEq, RfEq, ZzEq, ZzLe, ZzCong)):
                return _T
            if isinstance(n, (RfNe, ZzLt)):
                return _F
        if isinstance(n, VfEq):
            w = self.vf(n.left, env) - self.vf(n.right, env)
            if w.is_exact_zero():
                return _T
            if w.exact or not w.is_indeterminate():
                return _F
            return _U
        if isinstance(n, (RfEq, RfNe)):
            a = self.rf(n.left, env)
            b = self.rf(n.right, env)
            if a is None or b is None:
                return _U
            same = (a - b) % self.p == 0
            if isinstance(n, RfEq):
                return _T if same else _F
            return _F if same else _T
        if isinstance(n, ZzLe):
            A = self.zz(n.left, env)
            B = self.zz(n.right, env)
            if _ext_le(A[1], B[0]):
                return _T
            if _ext_lt(B[1], A[0]):
                return _F
            return _U
        if isinstance(n, ZzLt):
            A = self.zz(n.left, env)
            B = self.zz(n.right, env)
            if _ext_lt(A[1], B[0]):
                return _T
            if _ext_le(B[1], A[0]):
                return _F
            return _U
        if isinstance(n, ZzEq):
            A = self.zz(n.left, env)
            B = self.zz(n.right, env)
            if A == B and A[0] == A[1]:
                return _T
            if _ext_lt(A[1], B[0]) or _ext_lt(B[1], A[0]):
                return _F
            return _U
        if isinstance(n, ZzCong):
            D = _zi_add(self.zz(n.left, env),
                        _zi_neg(self.zz(n.right, env)))
            if D == _PINF_POINT or D == _NINF_POINT:
                # no finite difference exists, so the congruence fails
                return _F
            lo, hi = D
            if lo is NINF or hi is INF:
                return _U
            hits = [v % n.modulus == 0 for v in range(lo, hi + 1)]
            if all(hits):
                return _T
            if not any(hits):
                return _F
            return _U
        raise AssertionError(n)

    # connectives and quantifiers

    def truth(self, n, env):
        if isinstance(n, And):
            return t3_and(self.truth(n.left, env), self.truth(n.right, env))
        if isinstance(n, Or):
            return t3_or(self.truth(n.left, env), self.truth(n.right, env))
        if isinstance(n, Not):
            return t3_not(self.truth(n.operand, env))
        if isinstance(n, Exists):
            return self.exists(n, env)
        return self.atom(n, env)

    def exists(self, n, env):
        if n.sort is Sort.RF:
            return self._search(n, env, range(self.p), complete=True)
        if n.sort is Sort.ZZ:
            B = self.spec.precision
            window = range(-B, B + 1)
            lo, hi = _syntactic_zz_bounds(n.body, n.var)
            complete = lo is not None and hi is not None \
                and -B <= lo and hi <= B
            return self._search(n, env, window, complete)
        # VF witnesses: disjoint digit boxes covering the valuation ring
        if self.vf_witness_depth is None:
            raise UnsupportedFeature(
                "valued-field quantifiers are only searchable in oracle "
                "mode (pass a witness depth)")
        m = min(self.vf_witness_depth, self.spec.precision)
        p = self.p

        def candidates():
            for digits in itertools.product(range(p), repeat=m):
                # the exact representative can certify equalities that the
                # box leaves open; the boxes alone form the exhaustive cover
                yield embed_rational(
                    sum(d * p ** i for i, d in enumerate(digits)), self.spec)
                yield from_digits(self.spec, 0, digits)

        return self._search(n, env, candidates(), complete=True)

    def _search(self, n, env, candidates, complete):
        saw_undecided = False
        for v in candidates:
            r = self.truth(n.body, {**env, n.var: v})
            if r is _T:
                return _T
            if r is _U:
                saw_undecided = True
        if saw_undecided or not complete:
            return _U
        return _F


def _flatten_and(n, out):
    if isinstance(n, And):
        _flatten_and(n.left, out)
        _flatten_and(n.right, out)
    else:
        out.append(n)
    return out


def _syntactic_zz_bounds(body, var):
    """(lower, upper) integer bounds that top-level conjuncts force on a
    quantified ZZ variable; None for an unbounded side."""
    lo = hi = None

    def tighten_lo(v):
        nonlocal lo
        lo = v if lo is None else max(lo, v)

    def tighten_hi(v):
        nonlocal hi
        hi = v if hi is None else min(hi, v)

    for atom in _flatten_and(body, []):
        pairs = []
        if isinstance(atom, (ZzLe, ZzLt, ZzEq)):
            pairs = [(atom.left, atom.right)]
        for a, b in pairs:
            if isinstance(a, ZzVar) and a.name == var and \
                    isinstance(b, ZzConst):
                if isinstance(atom, ZzLe):
                    tighten_hi(b.value)
                elif isinstance(atom, ZzLt):
                    tighten_hi(b.value - 1)
                else:
                    tighten_lo(b.value)
                    tighten_hi(b.value)
            elif isinstance(b, ZzVar) and b.name == var and \
                    isinstance(a, ZzConst):
                if isinstance(atom, ZzLe):
                    tighten_lo(a.value)
                elif isinstance(atom, ZzLt):
                    tighten_lo(a.value + 1)
                else:
                    tighten_lo(a.value)
                    tighten_hi(a.value)
    return lo, hi


def interpret(phi, spec, assignment, vf_witness_depth=None):
    """Evaluate a formula at an assignment of its free variables.

    VF values may be LFElem (matching spec), int, or Fraction; RF values are
    integers mod p; ZZ values are integers or the infinity constant.
    Returns Truth3; finite precision surfaces as UNDECIDED, never as a
    wrong answer.
    """
    expr = phi.expr if isinstance(phi, Formula) else phi
    free = dict(phi.free) if isinstance(phi, Formula) else free_vars(expr)
    env = {}
    for name, sort in free.items():
        if name not in assignment:
            raise UnboundVariable("no value for %r" % name)
        v = assignment[name]
        if sort is Sort.VF:
            if isinstance(v, LFElem):
                if v.spec != spec:
                    raise ValueError(
                        "assignment for %r lives in a different field" % name)
                env[name] = v
            else:
                env[name] = embed_rational(Fraction(v), spec)
        elif sort is Sort.RF:
            env[name] = int(v) % spec.prime
        else:
            env[name] = v if v is INF else int(v)
    return _Evaluator(spec, vf_witness_depth).truth(expr, env)


def eval_vf_term(term, spec, assignment):
    """Evaluate a valued-field term at an assignment.

    Values may be LFElem, int, or Fraction; returns an LFElem (possibly
    only partially determined, matching the inputs)."""
    env = {}
    for name, v in assignment.items():
        if isinstance(v, LFElem):
            env[name] = v
        elif isinstance(v, (int, Fraction)):
            env[name] = embed_rational(Fraction(v), spec)
        else:
            env[name] = v
    return _Evaluator(spec).vf(term, env)
