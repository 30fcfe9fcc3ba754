"""Exact sign analysis of integer polynomials on the open ray (1, oo).

Used to decide the order relation on the symbolic ring: a value is
nonnegative iff its cleared numerator polynomial is >= 0 for every real
q > 1.  Everything runs on Fractions; no floating point.
"""

from __future__ import annotations

from fractions import Fraction


def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _eval(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _derivative(a):
    return _trim([i * c for i, c in enumerate(a)][1:])


def _divmod(a, b):
    a = [Fraction(c) for c in a]
    b = [Fraction(c) for c in b]
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and _trim(a):
        if len(a) < len(b):
            break
        c = a[-1] / b[-1]
        d = len(a) - len(b)
        q[d] = c
        for i, bc in enumerate(b):
            a[i + d] -= c * bc
        _trim(a)
    return _trim(q), a


def _gcd(a, b):
    a, b = list(a), list(b)
    while _trim(list(b)):
        a, b = b, _divmod(a, b)[1]
        b = _trim(b)
    return a


def _sturm_chain(a):
    chain = [list(a), _derivative(a)]
    while _trim(list(chain[-1])):
        r = _divmod(chain[-2], chain[-1])[1]
        r = _trim(r)
        if not r:
            break
        chain.append([-c for c in r])
    return [c for c in chain if _trim(list(c))]


def _variations(chain, x):
    signs = []
    for poly in chain:
        v = _eval(poly, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    count = 0
    for s, t in zip(signs, signs[1:]):
        if s != t:
            count += 1
    return count


def _count_roots(chain, lo, hi):
    """Distinct real roots in (lo, hi]; endpoints must not be roots of chain[0]."""
    return _variations(chain, lo) - _variations(chain, hi)


def _root_bound(a):
    lead = abs(a[-1])
    m = max(abs(c) for c in a[:-1]) if len(a) > 1 else Fraction(0)
    return Fraction(1) + m / lead


def _strip_root_at(a, r):
    """Divide out (x - r) as often as it divides exactly."""
    while len(a) > 1 and _eval(a, r) == 0:
        q, rem = _divmod(a, [-r, Fraction(1)])
        assert not _trim(rem)
        a = q
    return a


def nonneg_on_gt1(coeffs):
    """True iff the polynomial (low-to-high coefficients) is >= 0 on (1, oo)."""
    a = _trim([Fraction(c) for c in coeffs])
    if not a:
        return True
    if a[-1] < 0:
        return False  # negative near +infinity
    # roots at 1 do not affect sign on the open ray
    a_sign = _strip_root_at(list(a), Fraction(1))
    if len(a_sign) == 1:
        return a_sign[0] >= 0
    # square-free part for isolation
    g = _gcd(a_sign, _derivative(a_sign))
    sf = _divmod(a_sign, g)[0] if len(g) > 1 else list(a_sign)
    chain = _sturm_chain(sf)
    lo = Fraction(1)
    hi = _root_bound(sf)
    while _eval(sf, hi) == 0:
        hi += 1
    total = _count_roots(chain, lo, hi)
    # isolate: bisect until each interval holds exactly one root
    intervals = []
    stack = [(lo, hi, total)]
    while stack:
        x, y, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            intervals.append((x, y))
            continue
        mid = (x + y) / 2
        while _eval(sf, mid) == 0:
            mid = (x + mid) / 2
        nl = _count_roots(chain, x, mid)
        stack.append((x, mid, nl))
        stack.append((mid, y, n - nl))
    intervals.sort()

    def halve(x, y):
        mid = (x + y) / 2
        while _eval(sf, mid) == 0:
            mid = (x + mid) / 2
        if _count_roots(chain, x, mid) == 1:
            return (x, mid)
        return (mid, y)

    # the isolated roots are distinct reals, so halving separates the intervals
    done = False
    while not done:
        done = True
        for i in range(len(intervals) - 1):
            if intervals[i][1] >= intervals[i + 1][0]:
                intervals[i] = halve(*intervals[i])
                intervals[i + 1] = halve(*intervals[i + 1])
                done = False
        intervals.sort()
    if not intervals:
        return _eval(a_sign, lo + 1) >= 0
    # sign just right of 1: lowest nonzero Taylor coefficient at 1
    taylor = []
    work = list(a_sign)
    while work:
        taylor.append(_eval(work, Fraction(1)))
        work = _derivative(work)
    first = next(c for c in taylor if c != 0)
    if first < 0:
        return False
    # between consecutive roots, and beyond the last one
    samples = []
    for i in range(len(intervals) - 1):
        samples.append((intervals[i][1] + intervals[i + 1][0]) / 2)
    samples.append(intervals[-1][1] + 1)
    return all(_eval(a_sign, s) >= 0 for s in samples)
