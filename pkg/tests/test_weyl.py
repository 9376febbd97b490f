"""Counting functions, growth ratios, and the Karamata functional bridge."""

import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings, strategies as st

import heatlab
from heatlab import operators, weyl


# ----------------------------------------------------------------------
# Counting function and growth
# ----------------------------------------------------------------------

def test_counting_known_values(circle):
    """Circle eigenvalues 0, 1, 1, 4, 4, 9, 9 ...: N is computable by hand."""
    spec = operators.exact_spectrum(circle)
    assert weyl.counting_function(spec, 0.0) == 1
    assert weyl.counting_function(spec, 0.5) == 1
    assert weyl.counting_function(spec, 1.0) == 3
    assert weyl.counting_function(spec, 4.0) == 5
    assert weyl.counting_function(spec, 8.9) == 5
    assert weyl.counting_function(spec, 9.0) == 7


def test_counting_beyond_trusted_raises(torus11):
    spec = operators.exact_spectrum(torus11)
    with pytest.raises(ValueError, match="trusted"):
        weyl.counting_function(spec, float(spec.eigenvalues[-1]) * 10.0)


@given(idx=st.integers(0, 60))
@settings(max_examples=20, deadline=None)
def test_counting_right_continuity(idx):
    """N counts <= lam: stepping exactly onto an eigenvalue includes its
    whole multiplicity cluster."""
    torus = heatlab.build_flat_torus((1.0, 1.0), band_limit=12)
    spec = operators.exact_spectrum(torus)
    mu = spec.trusted
    lam = float(mu[idx])
    n_at = weyl.counting_function(spec, lam)
    n_below = weyl.counting_function(spec, math.nextafter(lam, -1.0)) \
        if lam > 0 else 0
    mult = int(np.count_nonzero(mu == lam))
    assert n_at - n_below == mult
    assert n_at == int(np.searchsorted(mu, lam, side="right"))


def test_weyl_ratio_circle(circle_fine):
    spec = operators.exact_spectrum(circle_fine)
    lam = float(spec.trusted[-1])
    assert weyl.weyl_ratio(spec, circle_fine, lam) == pytest.approx(1.0,
                                                                    abs=0.02)


def test_weyl_ratio_torus3_large_lambda():
    """3-torus at N(Lam) >= 1e5: lattice-count oscillation is averaged
    down to under a percent."""
    t3 = heatlab.build_flat_torus((1.0, 1.0, 1.0), band_limit=49)
    spec = operators.exact_spectrum(t3)
    lam = float(spec.trusted[-1])
    N = weyl.counting_function(spec, lam)
    assert N >= 100_000
    assert weyl.weyl_ratio(spec, t3, lam) == pytest.approx(1.0, abs=0.01)


def test_growth_ratio_tends_to_one(circle_fine):
    spec = operators.exact_spectrum(circle_fine)
    k, ratio = weyl.eigenvalue_growth(spec, circle_fine, k_min=1)
    assert k[0] == 1 and k.dtype == np.int64
    tail = ratio[-50:]
    assert np.abs(tail - 1.0).max() < 0.02


def test_unit_ball_volumes():
    assert weyl.unit_ball_volume(0) == pytest.approx(1.0)
    assert weyl.unit_ball_volume(1) == pytest.approx(2.0)
    assert weyl.unit_ball_volume(2) == pytest.approx(math.pi)
    assert weyl.unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    with pytest.raises(ValueError):
        weyl.unit_ball_volume(-1)


# ----------------------------------------------------------------------
# Test-function validation
# ----------------------------------------------------------------------

def test_g_rejects_unbounded_branch():
    with pytest.raises(ValueError, match="unbounded"):
        weyl.KaramataTestFunction(branches=((0.0, 0.5, 1.0, -1.0),))


def test_g_rejects_negative_coefficient():
    with pytest.raises(ValueError, match="negative"):
        weyl.KaramataTestFunction(branches=((0.0, 1.0, -1.0, 0.0),))


def test_g_rejects_bad_intervals():
    with pytest.raises(ValueError):
        weyl.KaramataTestFunction(branches=((0.5, 0.4, 1.0, 0.0),))
    with pytest.raises(ValueError, match="overlap"):
        weyl.KaramataTestFunction(branches=((0.0, 0.6, 1.0, 0.0),
                                            (0.5, 1.0, 1.0, 0.0)))
    with pytest.raises(ValueError):
        weyl.KaramataTestFunction(branches=((0.0, 1.5, 1.0, 0.0),))


def test_karamata_rejects_plain_callable(torus11):
    spec = operators.exact_spectrum(torus11)
    with pytest.raises(TypeError):
        weyl.karamata_check(spec, 1.0, lambda x: x, [1e-3])


def test_g_evaluation_indicator():
    g = weyl.indicator_counting_g()
    x = np.array([0.0, 0.2, math.exp(-1.0), 0.5, 1.0])
    got = g(x)
    assert got[0] == 0.0 and got[1] == 0.0          # below the branch
    assert got[2] == pytest.approx(math.e)           # closed left end
    assert got[3] == pytest.approx(2.0)
    assert got[4] == 0.0                             # open right end


def test_g_evaluation_constant_keeps_zero_mode():
    g = weyl.constant_g()
    assert g(np.array([1.0]))[0] == 1.0
    assert g(np.array([0.0]))[0] == 1.0


# ----------------------------------------------------------------------
# Limit functional closed forms
# ----------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_limit_functional_constant(alpha):
    """For g = 1, G = c / Gamma(alpha) * int e^{-s} s^{alpha-1} ds = c."""
    g = weyl.constant_g()
    assert g.limit_functional(alpha, 0.7) == pytest.approx(0.7, rel=1e-9)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_limit_functional_counting_indicator(alpha):
    """For the counting g, G = c / Gamma(alpha + 1) (the Weyl constant)."""
    g = weyl.indicator_counting_g()
    assert g.limit_functional(alpha, 1.3) == pytest.approx(
        1.3 / math.gamma(alpha + 1.0), rel=1e-9)


def test_limit_functional_matches_direct_quadrature():
    """A two-branch g with a genuine power law checked against a scipy
    integral of the defining formula."""
    g = weyl.KaramataTestFunction(branches=((0.1, 0.4, 2.0, 0.5),
                                            (0.4, 1.0, 0.3, 0.0)),
                                  name="two_branch")
    alpha = 1.5
    c = 0.9

    def integrand(s):
        return float(g(np.array([math.exp(-s)]))[0]) * math.exp(-s) \
            * s ** (alpha - 1.0)

    want, _ = scipy.integrate.quad(integrand, 0.0, 60.0, limit=400)
    want *= c / math.gamma(alpha)
    assert g.limit_functional(alpha, c) == pytest.approx(want, rel=1e-7)


# ----------------------------------------------------------------------
# Karamata on actual spectra
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def torus_wide_spec():
    torus = heatlab.build_flat_torus((1.0, 1.0), band_limit=80)
    return torus, operators.exact_spectrum(torus)


def test_karamata_constant_g_is_exact(torus_wide_spec):
    """With g = 1, F_t(g) is literally t^alpha Theta(t), so the gap at the
    calibration point is pure roundoff — far below the truncation bound."""
    torus, spec = torus_wide_spec
    ts = np.geomspace(1e-4, 3e-3, 8)
    report = weyl.karamata_check(spec, 1.0, weyl.constant_g(), ts,
                                 model=torus)
    head = next(r for r in report["rows"] if r["trusted"])
    assert abs(head["gap"]) <= head["tail_scaled"]
    assert abs(head["gap"]) < 1e-14 * report["G"]


def test_karamata_counting_g_approaches_weyl(torus_wide_spec):
    torus, spec = torus_wide_spec
    ts = np.geomspace(1e-4, 3e-3, 8)
    report = weyl.karamata_check(spec, 1.0, weyl.indicator_counting_g(), ts,
                                 model=torus)
    assert report["rel_gap_at_smallest_trusted"] < 0.05
    # calibrated c should match the geometric prediction Vol/(4 pi)
    assert report["c_vs_weyl_rel"] < 1e-9
    assert report["c_weyl"] == pytest.approx(1.0 / (4.0 * math.pi),
                                             rel=1e-12)


def test_karamata_supplied_c(torus_wide_spec):
    torus, spec = torus_wide_spec
    ts = np.array([1e-3])
    report = weyl.karamata_check(spec, 1.0, weyl.constant_g(), ts,
                                 c=1.0 / (4.0 * math.pi))
    assert report["c_source"] == "supplied"
    assert "c_weyl" not in report
    assert report["G"] == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)


def test_karamata_untrusted_rows_flagged(torus11):
    """At t far below the truncation scale the rows must say untrusted."""
    spec = operators.exact_spectrum(torus11)
    ts = np.array([1e-7, 1e-1])
    report = weyl.karamata_check(spec, 1.0, weyl.constant_g(), ts)
    assert report["rows"][0]["trusted"] is False
    assert report["rows"][1]["trusted"] is True
