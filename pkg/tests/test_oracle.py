"""The point-counting oracle: exact interval brackets for volumes and
integrals over the valuation ring."""

import os
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import dpcalc.localfield as lf
from dpcalc.errors import BudgetExceeded, UnboundVariable, UnsupportedFeature
from dpcalc.oracle import (IntegrandSpec, fraction_str, integrate,
                           jacobian_check, serre_oesterle_count, volume)
from dpcalc.symring import SymA

Q5 = lf.qp(5, 6)


# --- volumes ---

def test_ball_volume():
    v = volume("ord(x) >= n", Q5, assignment={"n": 2})
    assert v.lower == v.upper == F(1, 25)
    assert v.precision_used == 6
    assert v.boxes_total == 5 ** 6
    assert v.boxes_true == 5 ** 4
    assert v.boxes_undecided == 0
    assert v.undecided_mass == 0


def test_full_ring():
    v = volume("x == x", Q5)
    assert v.lower == v.upper == 1
    assert v.boxes_true == 5 ** 6


def test_annulus():
    v = volume("ord(x) == 1", Q5)
    assert v.lower == v.upper == F(1, 5) - F(1, 25)


def test_undecided_tail():
    # the set needs more digits than the working precision provides
    v = volume("ord(x) >= 7", Q5)
    assert v.lower == 0
    assert v.upper == F(1, 5 ** 6)
    assert v.boxes_undecided == 1
    assert v.undecided_mass == F(1, 5 ** 6)


def test_vf_quantifier_needs_witness_depth():
    with pytest.raises(UnsupportedFeature):
        volume("exists y:vf. x*x + y*y == 1", Q5)


def test_residue_parameters_must_be_bound():
    with pytest.raises(UnboundVariable):
        volume("ac(x) == u", Q5)


def test_refinement_nesting():
    phi = "exists y:vf. ord(y*y - x) >= 4"
    v3 = volume(phi, lf.qp(3, 3), vf_witness_depth=3)
    v4 = volume(phi, lf.qp(3, 4), vf_witness_depth=4)
    assert v3.lower <= v4.lower <= v4.upper <= v3.upper


# --- budget ---

def test_budget_argument():
    with pytest.raises(BudgetExceeded):
        volume("x == x", lf.qp(5, 6), budget=100)


def test_budget_environment_variable():
    os.environ["DPCALC_BOX_BUDGET"] = "100"
    try:
        with pytest.raises(BudgetExceeded):
            volume("x == x", lf.qp(5, 6))
    finally:
        del os.environ["DPCALC_BOX_BUDGET"]


# --- integrals ---

def test_cube_power_integral():
    target = SymA.parse("(1 - L^-1)").div_by_unit(SymA.parse("1 - L^-4")).nu(5)
    iv = integrate(IntegrandSpec.abs_power("y^3"), "ord(y) >= 0", Q5)
    assert iv.contains(target)
    assert iv.width() <= F(1, 5 ** 18)


def test_trivial_integrand_is_volume():
    iv = integrate(IntegrandSpec.one(), "ord(x) >= 2", Q5)
    assert iv.lower == iv.upper == F(1, 25)


def test_level_set_integral():
    # |y^3 - x| over 3 ord(y) = ord(x) at x = 1: exact value 27/56 for q = 7
    q7 = lf.qp(7, 6)
    expected = (SymA.from_int(3)
                * SymA.parse("(1 - L^-1) * L^-2")
                .div_by_unit(SymA.parse("1 - L^-2"))
                + SymA.parse("1 - 4*L^-1")).nu(7)
    assert expected == F(27, 56)
    iv = integrate(IntegrandSpec.abs_power("y^3 - x"),
                   "vf x, y; 3*ord(y) == ord(x)", q7, assignment={"x": 1})
    assert iv.contains(expected)


def test_equal_characteristic_transfer():
    expected = F(27, 56)
    q7 = lf.qp(7, 6)
    f7t = lf.fpt(7, 6)
    spec = IntegrandSpec.abs_power("y^3 - x")
    phi = "vf x, y; 3*ord(y) == ord(x)"
    iv = integrate(spec, phi, q7, assignment={"x": 1})
    iv2 = integrate(spec, phi, f7t, assignment={"x": 1})
    assert iv2.contains(expected)
    assert iv.overlaps(iv2)


# --- stabilized solution counts mod p^N ---

def test_conic_count_stabilizes():
    q5 = lf.qp(5, 3)
    vals = [serre_oesterle_count("x*x + y*y - 1", 1, q5, N) for N in (1, 2, 3)]
    assert vals[0] == vals[1] == vals[2] == F(4, 5)


def test_point_count():
    q5 = lf.qp(5, 3)
    assert [serre_oesterle_count("x", 0, q5, N) for N in (1, 2, 3)] == [1, 1, 1]


def test_nodal_curve_does_not_stabilize():
    q5 = lf.qp(5, 3)
    vals = [serre_oesterle_count("x*y", 1, q5, N) for N in (1, 2, 3)]
    assert len(set(vals)) > 1


def test_polynomial_system():
    assert serre_oesterle_count(["x - y", "x*x - 1"], 0, lf.qp(5, 3), 2) == 2


# --- change of variables ---

def test_jacobian_scaling():
    q5 = lf.qp(5, 5)
    a, b = jacobian_check(5, "ord(x) >= 0", q5)
    assert a.lower == a.upper == 1
    assert b.lower == b.upper == F(1, 5)

    a, b = jacobian_check(F(2, 3), "ord(x) >= 1", q5)  # unit scale
    assert (a.lower, a.upper) == (b.lower, b.upper)

    a, b = jacobian_check(25, "ord(x) == 1", q5)
    assert b.lower == b.upper == F(1, 25) * (F(1, 5) - F(1, 25))


# --- additivity within interval arithmetic ---

def test_additivity_brackets():
    p1 = "ord(x) >= 1"
    p2 = "ac(x) == u"
    va = volume("(%s) || (%s)" % (p1, p2), Q5, assignment={"u": 2})
    vb = volume("(%s) && (%s)" % (p1, p2), Q5, assignment={"u": 2})
    v1 = volume(p1, Q5)
    v2 = volume(p2, Q5, assignment={"u": 2})
    assert va.lower + vb.lower <= v1.upper + v2.upper
    assert v1.lower + v2.lower <= va.upper + vb.upper


# --- report formatting ---

def test_fraction_str():
    assert fraction_str(F(3)) == "3/1"
    assert fraction_str(F(-4, 6)) == "-2/3"


def test_interval_json():
    v = volume("ord(x) >= 2", Q5)
    d = v.to_json_dict()
    assert d["lower"] == "1/25"
    assert d["upper"] == "1/25"
    assert d["precision"] == 6
    assert d["boxes_undecided"] == 0


def test_interval_scaling():
    v = volume("ord(x) >= 2", Q5)
    w = v.scaled(F(1, 3))
    assert w.lower == w.upper == F(1, 75)


# --- property tests ---

_thresholds = st.integers(0, 4)


@settings(max_examples=25, deadline=None)
@given(c1=_thresholds, c2=_thresholds, u=st.integers(1, 4),
       n=st.integers(2, 4))
def test_refinement_property(c1, c2, u, n):
    """Brackets at higher precision nest inside lower-precision ones."""
    phi = "ord(x) >= %d || (ord(x) == %d && ac(x) == %d)" % (c1, c2, u)
    coarse = volume(phi, lf.qp(3, n))
    fine = volume(phi, lf.qp(3, n + 1))
    assert coarse.lower <= fine.lower <= fine.upper <= coarse.upper


@settings(max_examples=25, deadline=None)
@given(c1=_thresholds, c2=_thresholds, q=st.sampled_from([2, 3, 5]))
def test_volume_additivity_property(c1, c2, q):
    """Disjoint annuli: the union's bracket agrees with the sum."""
    if c1 == c2:
        return
    spec = lf.qp(q, 5)
    v1 = volume("ord(x) == %d" % c1, spec)
    v2 = volume("ord(x) == %d" % c2, spec)
    both = volume("ord(x) == %d || ord(x) == %d" % (c1, c2), spec)
    assert both.lower == v1.lower + v2.lower
    assert both.upper == v1.upper + v2.upper
