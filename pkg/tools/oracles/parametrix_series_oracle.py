"""Symbolic oracle for the radial parametrix recursion on the round 2-sphere.

Run before the package was built; it derives Taylor series (about r=0) for the
first two transported coefficients of the Gaussian parametrix on a sphere of
radius R, entirely in sympy, so the numerical recursion has exact values to
converge to. The recursion, with D(r) = R*sin(r/R)/r and the positive radial
Laplacian  L h = -(h'' + ((n-1)/r + D'/D) h'),  n = 2:

    u0 = D^(-1/2)
    u_i(r) = -r^(-i) * D^(-1/2)(r) * Integral_0^r D^(1/2)(s) * (L u_{i-1})(s) * s^(i-1) ds

Printed: series for u1, L u1, u2 at generic R and their r=0 values.
"""

import sympy as sp

r, s, R = sp.symbols("r s R", positive=True)
ORDER = 12  # series order in r


def ser(expr):
    return sp.series(expr, r, 0, ORDER).removeO().expand()


def lap(h, n=2):
    D = R * sp.sin(r / R) / r
    DpD = sp.diff(D, r) / D
    out = -(sp.diff(h, r, 2) + ((n - 1) / r + DpD) * sp.diff(h, r))
    return ser(sp.simplify(out))


def transport(i, prev_l):
    """u_i from L u_{i-1} (as a series in r)."""
    D = R * sp.sin(r / R) / r
    integrand = ser(sp.sqrt(D) * prev_l * r ** (i - 1))
    anti = sp.integrate(integrand, r)  # vanishes at 0 term by term
    ui = -(r ** (-i)) * ser(sp.sqrt(D) ** (-1)) * anti
    return ser(sp.expand(ui))


if __name__ == "__main__":
    D = R * sp.sin(r / R) / r
    u0 = ser(1 / sp.sqrt(D))
    l0 = lap(u0)
    u1 = transport(1, l0)
    l1 = lap(u1)
    u2 = transport(2, l1)

    print("u1 series (generic R):")
    sp.pprint(sp.nsimplify(u1))
    print("L u1 series (generic R):")
    sp.pprint(sp.nsimplify(l1))
    print("u2 series (generic R):")
    sp.pprint(sp.nsimplify(u2))

    u1_unit = u1.subs(R, 1).expand()
    l1_unit = l1.subs(R, 1).expand()
    u2_unit = u2.subs(R, 1).expand()
    print("\nunit sphere:")
    print("u1  =", sp.nsimplify(u1_unit))
    print("Lu1 =", sp.nsimplify(l1_unit))
    print("u2  =", sp.nsimplify(u2_unit))
    print("u1(0) =", u1_unit.subs(r, 0), "   (K/6 with K=2 -> 1/3)")
    print("u2(0) =", u2_unit.subs(r, 0))
    print("u1(0) generic R =", sp.simplify(u1.subs(r, 0)))
    print("u2(0) generic R =", sp.simplify(u2.subs(r, 0)))
