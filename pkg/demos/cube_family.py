"""Integrate |y^3 - x| over a parametric family of cells and cross-check
the symbolic answer against the point-counting oracle.

The cell data lives in fixtures/cube.cells.json: x is a parameter with
residue class acx and valuation 3k, and the cells decompose the unit ball
in y by distance to the cube roots of x.

    python3 demos/cube_family.py
"""

import os

import dpcalc.localfield as lf
from dpcalc.motivic import (integrate_cell_data, load_cells, residue_cases,
                            specialize)
from dpcalc.oracle import IntegrandSpec, integrate

HERE = os.path.dirname(os.path.abspath(__file__))
CELLS = os.path.join(HERE, os.pardir, "fixtures", "cube.cells.json")


def main():
    data = load_cells(CELLS)
    result = integrate_cell_data(data)

    print("value as a constructible function:")
    print("  " + result.value.render().replace("\n", "\n  "))
    print("excluded primes:", dict(result.bad_primes))

    # On each congruence class of q mod 3 the value is a single ring
    # element (the count of cube roots of acx is constant on the class).
    print("\ncongruence cases at k = 0, acx a cube:")
    for residue, value in residue_cases(result, 3, {"acx": 1}, {"k": 0}):
        print("  q = %d mod 3:  %s" % (residue, value.render()))

    # Specialize at small primes and bracket the same integral by counting
    # residue boxes in Z_p.
    integrand = IntegrandSpec.abs_power("y^3 - x")
    domain = "vf x, y; ord(y) >= 0"
    print("\nsymbolic value vs oracle bracket:")
    for p in (5, 7, 11, 13):
        exact = specialize(result, p, {"acx": 1, "k": 0})
        iv = integrate(integrand, domain, lf.qp(p, 6), assignment={"x": 1})
        ok = iv.contains(exact)
        print("  p = %2d:  %-9s in [%s, %s]  %s"
              % (p, exact, iv.lower, iv.upper, "ok" if ok else "MISMATCH"))

    # The same bracket works in equal characteristic.
    iv = integrate(integrand, domain, lf.fpt(7, 6), assignment={"x": 1})
    print("\nF_7((t)) bracket contains the p = 7 value:",
          iv.contains(specialize(result, 7, {"acx": 1, "k": 0})))


if __name__ == "__main__":
    main()
