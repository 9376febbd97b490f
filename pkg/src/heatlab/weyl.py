"""Counting-function asymptotics and the Karamata bridge.

Weyl's law pins the eigenvalue staircase to the volume:

    N(Lam) ~ omega_n Vol Lam^{n/2} / (2 pi)^n,
    lambda_k k^{-2/n} -> (2 pi)^2 / (omega_n Vol)^{2/n}

and Karamata's theorem is the abstract engine behind it: if t^alpha Theta(t)
-> c then for admissible g

    F_t(g) = t^alpha sum_k g(e^{-t mu_k}) e^{-t mu_k}
       ->  G(g) = (c / Gamma(alpha)) int_0^inf g(e^{-s}) e^{-s} s^{alpha-1} ds.

The interesting test function is the bounded discontinuous one, g(x) = 1/x on
[1/e, 1) and 0 elsewhere: then g(x) x is the indicator of 0 < t mu <= 1, so
F_t counts eigenvalues below 1/t and the limit G = c / Gamma(alpha + 1) *is*
Weyl's law — the heat trace alone recovers the staircase. Keeping the left
endpoint of that branch closed and the right endpoint open puts g(1) = 0, so
zero modes drop out (an O(1) choice that dies in the t^alpha scaling).

Everything below works on trusted prefixes only and says so: counting beyond
the trusted range raises instead of silently undercounting."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from . import kernels
from .heattrace import heat_trace, tail_envelope, _tail_values


def unit_ball_volume(n):
    """omega_n = pi^{n/2} / Gamma(n/2 + 1)."""
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def counting_function(spectrum, lam):
    """N(lam) = #{ mu_k <= lam } over the trusted prefix.

    Counting past the last trusted eigenvalue would silently undercount
    (the truncation hides unknown eigenvalues there), so that's an error."""
    mu = spectrum.trusted
    if mu.shape[0] == 0:
        raise ValueError("spectrum has no trusted eigenvalues")
    lam = float(lam)
    if lam > mu[-1]:
        raise ValueError(
            f"counting at {lam:g} exceeds the trusted range (<= {mu[-1]:g})")
    return int(np.searchsorted(mu, lam, side="right"))


def weyl_ratio(spectrum, model, lam):
    """N(lam) (2 pi)^n / (omega_n Vol lam^{n/2}): -> 1 under Weyl's law."""
    n = model.dim
    if lam <= 0:
        raise ValueError("Weyl ratio needs lam > 0")
    N = counting_function(spectrum, lam)
    return N * (2.0 * math.pi) ** n / (
        unit_ball_volume(n) * model.volume * lam ** (n / 2.0))


def eigenvalue_growth(spectrum, model, k_min=1):
    """Normalized growth ratios lambda_k k^{-2/n} / ((2pi)^2/(omega_n Vol)^{2/n}).

    Under Weyl's law these tend to 1 (with lattice-shell oscillation on
    tori). Returns (k, ratio) over the trusted prefix from k_min on."""
    mu = spectrum.trusted
    n = model.dim
    if mu.shape[0] <= k_min:
        raise ValueError("trusted prefix too short")
    k = np.arange(k_min, mu.shape[0], dtype=np.float64)
    limit = (2.0 * math.pi) ** 2 / (unit_ball_volume(n) * model.volume) ** (2.0 / n)
    ratio = mu[k_min:] * k ** (-2.0 / n) / limit
    return k.astype(np.int64), ratio


@dataclass(frozen=True)
class KaramataTestFunction:
    """Piecewise power function g(x) = coef * x^power on [lo, hi), else 0.

    Branches must be disjoint half-open subintervals of [0, 1]; the value at
    x = 1 itself (reached exactly by zero modes, e^{-t*0} = 1) is a separate
    field, zero by default. The declared bounded/nonnegative flags are
    verified against the branch data at construction and again by
    karamata_check — a g that secretly blows up at x -> 0+ would invalidate
    the theorem's hypotheses, not just the numbers."""
    branches: tuple                  # ((lo, hi, coef, power), ...)
    value_at_one: float = 0.0
    bounded: bool = True
    nonnegative: bool = True
    name: str = "g"

    def __post_init__(self):
        br = tuple((float(lo), float(hi), float(c), float(p))
                   for lo, hi, c, p in self.branches)
        object.__setattr__(self, "branches", br)
        prev_hi = 0.0
        for lo, hi, c, p in sorted(br):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("branch interval must sit inside [0, 1]")
            if lo < prev_hi:
                raise ValueError("branches overlap")
            prev_hi = hi
        self.validate()

    def validate(self):
        for lo, hi, c, p in self.branches:
            if self.bounded and p < 0 and lo == 0.0:
                raise ValueError(
                    f"branch {c} * x^{p} on [0, {hi}) is unbounded but the "
                    f"function is declared bounded")
            if self.nonnegative and c < 0.0:
                raise ValueError("negative coefficient under a nonnegative "
                                 "declaration")
        if self.nonnegative and self.value_at_one < 0.0:
            raise ValueError("negative value at x = 1 under a nonnegative "
                             "declaration")
        if not math.isfinite(self.value_at_one):
            raise ValueError("value at x = 1 must be finite")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for lo, hi, c, p in self.branches:
            m = (x >= lo) & (x < hi)
            if m.any():
                out[m] = c * np.power(x[m], p)
        if self.value_at_one != 0.0:
            out[x == 1.0] = self.value_at_one
        return out

    def limit_functional(self, alpha, c_trace):
        """G(g) = (c / Gamma(alpha)) int_0^inf g(e^{-s}) e^{-s} s^{alpha-1} ds.

        Per-branch: x = e^{-s} in [lo, hi) maps to s in (-ln hi, -ln lo],
        where the integrand is coef * e^{-(p+1)s} s^{alpha-1} — a smooth
        integral with at worst the integrable s^{alpha-1} endpoint."""
        total = 0.0
        for lo, hi, c, p in self.branches:
            s_lo = -math.log(hi) if hi < 1.0 else 0.0
            s_hi = -math.log(lo) if lo > 0.0 else math.inf
            val, _ = scipy.integrate.quad(
                lambda s, c=c, p=p: c * math.exp(-(p + 1.0) * s) * s ** (alpha - 1.0),
                s_lo, s_hi, limit=200)
            total += val
        return c_trace / math.gamma(alpha) * total


def indicator_counting_g():
    """The Weyl-law test function: 1/x on [1/e, 1), zero elsewhere.

    g(x) x = 1 exactly when 0 < t mu <= 1, so F_t(g) = t^alpha N(1/t)
    (zero modes excluded by g(1) = 0)."""
    return KaramataTestFunction(branches=((math.exp(-1.0), 1.0, 1.0, -1.0),),
                                bounded=True, nonnegative=True,
                                name="counting_indicator")


def constant_g():
    """g = 1 on all of [0, 1]: F_t(g) = t^alpha Theta(t), G(g) = c.

    Zero modes land exactly at x = 1, so value_at_one = 1 keeps F_t(g)
    literally the same sum as the heat trace."""
    return KaramataTestFunction(branches=((0.0, 1.0, 1.0, 0.0),),
                                value_at_one=1.0,
                                bounded=True, nonnegative=True, name="one")


def karamata_check(spectrum, alpha, g, t_sequence, c=None, model=None):
    """Compare F_t(g) against the Karamata limit G(g) along t_sequence.

    c (the trace amplitude, Theta ~ c t^{-alpha}) is measured as
    t^alpha Theta(t) at the smallest t where the trace's truncation tail is
    below tolerance, unless supplied. Passing the model adds the sanity
    cross-check against Vol/(4 pi)^alpha — never used as c itself. Each row
    reports the gap and whether that t was trusted; the headline number is
    the relative gap at the smallest trusted t."""
    if not isinstance(g, KaramataTestFunction):
        raise TypeError("g must be a KaramataTestFunction")
    g.validate()
    ts = np.sort(np.asarray(t_sequence, dtype=np.float64))
    if ts[0] <= 0:
        raise ValueError("t sequence must be positive")
    curve = heat_trace(spectrum, ts)
    trusted = curve.trusted_mask
    if c is None:
        if not trusted.any():
            raise ValueError("no trusted t available to calibrate c")
        i0 = int(np.argmax(trusted))
        c = float(ts[i0] ** alpha * curve.values[i0])
        c_source = f"measured at t = {ts[i0]:g}"
    else:
        c = float(c)
        c_source = "supplied"
    G = g.limit_functional(alpha, c)

    mu = spectrum.trusted
    env = tail_envelope(spectrum)
    rows = []
    for i, t in enumerate(ts):
        x = np.exp(-t * mu)
        F = float(t ** alpha * kernels.fsum((g(x) * x)[::-1]))
        gap = F - G
        tail = float(t ** alpha * _tail_values(env, np.array([t]))[0])
        rows.append({"t": float(t), "F": F, "gap": float(gap),
                     "rel_gap": float(gap / G) if G != 0 else math.inf,
                     "tail_scaled": tail,
                     "trusted": bool(trusted[i])})
    head = next((r for r in rows if r["trusted"]), None)
    report = {"alpha": float(alpha), "c": c, "c_source": c_source,
              "G": float(G), "g_name": g.name, "rows": rows,
              "rel_gap_at_smallest_trusted": (abs(head["rel_gap"])
                                              if head else math.inf)}
    if model is not None:
        c_weyl = model.volume / (4.0 * math.pi) ** alpha
        report["c_weyl"] = float(c_weyl)
        report["c_vs_weyl_rel"] = float(abs(c - c_weyl) / abs(c_weyl))
    return report
