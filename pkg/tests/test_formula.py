"""Three-sorted formulas: parsing, printing, truth evaluation, counting."""

import pytest
from hypothesis import given, strategies as st

from dpcalc import localfield as lf
from dpcalc.errors import (InvalidPrime, ParseError, SortError, TooLarge,
                           UnboundVariable, UnsupportedFeature)
from dpcalc.formula import (Sort, Truth3, bad_primes, count_rf_points,
                            interpret, parse, pretty_print)

T, FL, U = Truth3.TRUE, Truth3.FALSE, Truth3.UNDECIDED


# --- parsing ---

def test_free_variable_collection():
    f1 = parse("vf x; ord(x) == 0 && exists u:rf. u^3 == ac(x)")
    assert dict(f1.free) == {"x": Sort.VF}

    f2 = parse("vf a,b,c,d; a*d - b*c == 1 && exists e:rf. "
               "e != 0 && ac(d)^2 - ac(b)^2 * H == e^2")
    assert dict(f2.free) == {"a": Sort.VF, "b": Sort.VF, "c": Sort.VF,
                             "d": Sort.VF, "H": Sort.RF}


def test_integer_sort_is_linear():
    with pytest.raises(SortError):
        parse("zz n; n * n == 4")


@pytest.mark.parametrize("text", [
    "vf x; x == ",                    # dangling comparison
    "vf x; rf x; x == 0",             # duplicate declaration
    "vf x; exists x:rf. x == 0",      # shadowing
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_sort_clash():
    with pytest.raises(SortError):
        parse("vf x; ac(x) == 1 && x != 0")


# --- printing ---

ROUND_TRIP_CORPUS = [
    "vf x; ord(x) == 0 && exists u:rf. u^3 == ac(x)",
    "vf a,b,c,d; a*d - b*c == 1 && exists e:rf. "
    "e != 0 && ac(d)^2 - ac(b)^2 * H == e^2",
    "vf x; ord(x) <= 3 || !(ord(x) == 0) && x == t*t",
    "zz n,m; 2*n - m <= 4 && n == 1 mod 3",
    "vf x,y; forall w:rf. w == 0 || exists v:rf. v*v == w*ac(x*y)",
    "vf x; ord(x - 3) == 2 mod 2 && ord(x) < inf",
    "rf u; (u == 0 || u != 1) && !(u^2 == 2)",
    "vf x; exists n:zz. 0 <= n && n <= 5 && ord(x) == 2*n",
    "vf x; -3*x == t - 1",
    "zz n; -n <= -2 && 1 - n == 0 mod 2",
]


@pytest.mark.parametrize("text", ROUND_TRIP_CORPUS)
def test_pretty_print_round_trip(text):
    phi = parse(text)
    assert parse(pretty_print(phi)) == phi


# --- interpretation over complete fields ---

Q7 = lf.qp(7, 12)
F_ORD = parse("vf x; ord(x) == 2")


def test_ord_atoms():
    assert interpret(F_ORD, Q7, {"x": 98}) is T
    assert interpret(F_ORD, Q7, {"x": 7}) is FL
    assert interpret(F_ORD, Q7, {"x": 0}) is FL  # ord(0) = inf


def test_residue_quantifier():
    f_cbrt = parse("exists u:rf. u^3 == 1 && u != 1")
    assert interpret(f_cbrt, lf.qp(7, 6), {}) is T
    assert interpret(f_cbrt, lf.qp(5, 6), {}) is FL


def test_undecided_on_blurred_input():
    f_zero = parse("vf x; x == 0")
    blur = lf.from_digits(Q7, 12, ())
    assert interpret(f_zero, Q7, {"x": blur}) is U
    assert interpret(f_zero, Q7, {"x": 0}) is T
    assert interpret(f_zero, Q7, {"x": 49}) is FL


def test_uniformizer_constant():
    f_t = parse("ord(t) == 1")
    for spec in (lf.qp(2, 8), lf.qp(13, 8), lf.fpt(3, 8), lf.fpt(11, 8)):
        assert interpret(f_t, spec, {}) is T


def test_infinity_literal():
    assert interpret(parse("vf x; ord(x) == inf"), Q7, {"x": 0}) is T
    assert interpret(parse("vf x; ord(x) == inf"), Q7, {"x": 3}) is FL
    assert interpret(parse("vf x; ord(x) < inf"), Q7, {"x": 3}) is T


def test_kleene_absorption():
    # undecided && false = false
    f_mix = parse("vf x; x == 0 && 1 == 2")
    blur = lf.from_digits(Q7, 12, ())
    assert interpret(f_mix, Q7, {"x": blur}) is FL


def test_bounded_integer_quantifier():
    f_even = parse("vf x; exists n:zz. 0 <= n && n <= 4 && ord(x) == 2*n")
    assert interpret(f_even, Q7, {"x": 49}) is T
    assert interpret(f_even, Q7, {"x": 7 ** 3}) is FL
    f_open = parse("vf x; exists n:zz. ord(x) == 2*n")
    assert interpret(f_open, Q7, {"x": 49}) is T


def test_congruence_with_indeterminate_ord():
    f_cong = parse("vf x; ord(x) == 0 mod 2")
    blur = lf.from_digits(Q7, 12, ())
    assert interpret(f_cong, Q7, {"x": blur}) is U
    assert interpret(f_cong, Q7, {"x": 49}) is T
    assert interpret(f_cong, Q7, {"x": 7}) is FL


def test_decisions_stable_under_refinement():
    f_cbrt = parse("exists u:rf. u^3 == 1 && u != 1")
    for prec in (6, 12):
        spec = lf.qp(7, prec)
        assert interpret(F_ORD, spec, {"x": 98}) is T
        assert interpret(f_cbrt, spec, {}) is T


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        interpret(F_ORD, Q7, {})


def test_equal_characteristic_values():
    f3 = lf.fpt(3, 10)
    x = f3.uniformizer() * f3.uniformizer()
    assert interpret(F_ORD, f3, {"x": x}) is T


# --- field-sort witness search ---

def test_vf_witness_search():
    f_sq = parse("vf x; exists w:vf. w*w == x")
    q5 = lf.qp(5, 4)
    four = lf.embed_rational(4, q5)
    two = lf.embed_rational(2, q5)
    assert interpret(f_sq, q5, {"x": four}, vf_witness_depth=3) is T
    assert interpret(f_sq, q5, {"x": two}, vf_witness_depth=3) is FL

    f_approx = parse("vf x; exists w:vf. ord(w*w - x) >= 3")
    assert interpret(f_approx, q5, {"x": 4}, vf_witness_depth=3) is T
    assert interpret(f_approx, q5, {"x": 2}, vf_witness_depth=3) is FL


def test_vf_quantifier_needs_depth():
    f_sq = parse("vf x; exists w:vf. w*w == x")
    q5 = lf.qp(5, 4)
    with pytest.raises(UnsupportedFeature):
        interpret(f_sq, q5, {"x": lf.embed_rational(4, q5)})


# --- residue point counting ---

def test_count_cube_roots():
    assert count_rf_points("u^3 == 1", 7) == 3
    assert count_rf_points("u^3 == 1", 5) == 1


def test_count_units():
    for q in (3, 11, 17):
        assert count_rf_points("u != 0", q) == q - 1


def test_count_with_quantifier():
    assert count_rf_points("exists w:rf. w^2 == u && u != 0", 11) == 5


def test_count_circle():
    assert count_rf_points("u*u + v*v == 1", 7) == 8


def test_count_degenerate_formulas():
    assert count_rf_points("1 == 0", 5) == 0
    assert count_rf_points("0 == 0", 5) == 1


def test_count_rejects_nonprime():
    with pytest.raises(InvalidPrime, match="prime"):
        count_rf_points("u == 0", 10)


def test_count_budget():
    with pytest.raises(TooLarge):
        count_rf_points("u == 0 && v == 0 && w == 0 && x == 0", 1009)


def test_exists_agrees_with_count():
    phi = parse("exists u:rf. u^3 == 1 && u != 1")
    for q in (5, 7, 13):
        cnt = count_rf_points("u^3 == 1 && u != 1", q)
        truth = interpret(phi, lf.qp(q, 6), {})
        assert (truth is T) == (cnt >= 1)


# --- excluded primes ---

def test_bad_primes_from_coefficients():
    assert set(bad_primes(parse("vf x; 3*x == 0"))) == {3}
    assert bad_primes(parse("vf x; x == 0")) == {}
    assert set(bad_primes(parse("vf x; 6*x == 1"))) == {2, 3}


def test_noted_bad_primes_accumulate():
    phi = parse("vf x; x == 0")
    phi.note_bad_prime(2, "divides a center difference")
    phi.note_bad_prime(3, "divides a center difference")
    assert set(bad_primes(phi)) == {2, 3}


# --- property tests ---

@st.composite
def zz_expressions(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        kind = draw(st.integers(0, 3))
        if kind == 0:
            return "%d*n <= %d" % (draw(st.integers(1, 3)),
                                   draw(st.integers(-4, 4)))
        if kind == 1:
            return "%d*n - %d*m <= %d" % (draw(st.integers(1, 3)),
                                          draw(st.integers(1, 3)),
                                          draw(st.integers(-4, 4)))
        if kind == 2:
            d = draw(st.integers(2, 5))
            return "n == %d mod %d" % (draw(st.integers(0, d - 1)), d)
        return "m <= %d" % draw(st.integers(-4, 4))
    a = draw(zz_expressions(depth=depth - 1))
    b = draw(zz_expressions(depth=depth - 1))
    op = draw(st.sampled_from(["&&", "||", "not", "exists"]))
    if op == "not":
        return "!(%s)" % a
    if op == "exists":
        j = "j%d" % depth  # depth-indexed so nested quantifiers never shadow
        return "exists %s:zz. 0 <= %s && %s <= 2 && (%s)" % (j, j, j, a)
    return "(%s) %s (%s)" % (a, op, b)


@given(expr=zz_expressions())
def test_round_trip_property(expr):
    phi = parse("zz n, m; " + expr)
    assert parse(pretty_print(phi)) == phi


MONOTONE_CORPUS = [
    parse("vf x; ord(x) >= 2"),
    parse("vf x; ord(x) == 0 mod 2"),
    parse("vf x; x == 0"),
    parse("vf x; ord(x) == 3 || ord(x) <= 1"),
    parse("vf x; !(ord(x) == 2) && ord(x) <= 5"),
    parse("vf x; ac(x) == 3"),
]


@given(idx=st.integers(0, len(MONOTONE_CORPUS) - 1),
       val=st.integers(-2, 4),
       digits=st.lists(st.integers(0, 6), max_size=6),
       keep=st.integers(0, 6))
def test_decisions_monotone_in_information(idx, val, digits, keep):
    """A verdict reached from a digit window never flips when the window
    is extended."""
    phi = MONOTONE_CORPUS[idx]
    spec = lf.qp(7, 8)
    less = lf.from_digits(spec, val, digits[:min(keep, len(digits))])
    more = lf.from_digits(spec, val, digits)
    coarse = interpret(phi, spec, {"x": less})
    fine = interpret(phi, spec, {"x": more})
    if coarse is not U:
        assert fine is coarse
