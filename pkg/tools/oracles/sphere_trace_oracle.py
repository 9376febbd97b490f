"""High-precision oracle for the unit-sphere heat trace and its t^2 coefficient.

Run before the package was built; the printed values are frozen into the test
suite. Everything here is independent of the package: mpmath arbitrary
precision, direct summation over the exact spectrum l(l+1) with multiplicity
2l+1, and Richardson extrapolation in t for the t^2 coefficient of the scaled
trace 4*pi*t*Theta(t).

Outputs:
  - Theta(0.1) on the unit sphere (direct summation, 40 digits)
  - a2 estimate via Richardson, compared against 4*pi/15
"""

import mpmath as mp

mp.mp.dps = 40


def theta(t, lmax=400):
    s = mp.mpf(0)
    for l in range(lmax, -1, -1):  # small terms first
        s += (2 * l + 1) * mp.e ** (-l * (l + 1) * t)
    return s


def scaled(t):
    return 4 * mp.pi * t * theta(t)


def a2_richardson(t0=mp.mpf("0.02"), levels=6):
    """R0(t) = (S(t) - a0 - a1 t)/t^2 = a2 + a3 t + a4 t^2 + ...

    Two Richardson stages kill the t and t^2 error terms; more levels give a
    short table whose last entries agree to ~1e-12.
    """
    a0 = 4 * mp.pi
    a1 = 4 * mp.pi / 3
    ts = [t0 / 2**j for j in range(levels)]
    r0 = [(scaled(t) - a0 - a1 * t) / t**2 for t in ts]
    r1 = [2 * r0[j + 1] - r0[j] for j in range(levels - 1)]
    r2 = [(4 * r1[j + 1] - r1[j]) / 3 for j in range(levels - 2)]
    return r0, r1, r2


if __name__ == "__main__":
    th = theta(mp.mpf("0.1"))
    print("Theta(0.1) unit sphere =", mp.nstr(th, 20))
    print("1/t + 1/3 + t/15      =", mp.nstr(10 + mp.mpf(1) / 3 + mp.mpf("0.1") / 15, 20))

    r0, r1, r2 = a2_richardson()
    print("R0 tail:", [mp.nstr(v, 15) for v in r0[-3:]])
    print("R1 tail:", [mp.nstr(v, 15) for v in r1[-3:]])
    print("R2 tail:", [mp.nstr(v, 15) for v in r2[-3:]])
    print("a2 (Richardson)  =", mp.nstr(r2[-1], 20))
    print("4*pi/15          =", mp.nstr(4 * mp.pi / 15, 20))
    print("difference       =", mp.nstr(r2[-1] - 4 * mp.pi / 15, 5))
