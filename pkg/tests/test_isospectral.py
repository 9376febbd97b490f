"""Hearing geometry: dimension, volume, and Euler characteristic recovered
from eigenvalue lists alone."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import heatlab
from heatlab import fields, isospectral, operators

FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------------------
# compare_spectra
# ----------------------------------------------------------------------

def test_compare_reflexive(torus11):
    spec = operators.exact_spectrum(torus11)
    assert isospectral.compare_spectra(spec, spec) is True


def test_compare_different_truncations_same_operator(torus11, torus11_wide):
    s1 = operators.exact_spectrum(torus11)
    s2 = operators.exact_spectrum(torus11_wide)
    assert isospectral.compare_spectra(s1, s2) is True
    assert isospectral.compare_spectra(s2, s1) is True


def test_compare_detects_stretched_circle():
    c1 = heatlab.build_circle(TWO_PI, band_limit=32)
    c2 = heatlab.build_circle(TWO_PI * 1.01, band_limit=32)
    s1 = operators.exact_spectrum(c1)
    s2 = operators.exact_spectrum(c2)
    assert isospectral.compare_spectra(s1, s2) is False


@given(scale=st.floats(1e-12, 1e-7), flip=st.booleans())
@settings(max_examples=15, deadline=None)
def test_compare_symmetric_under_perturbation(scale, flip):
    torus = heatlab.build_flat_torus((1.0, 1.0), band_limit=10)
    s1 = operators.exact_spectrum(torus)
    mu = s1.eigenvalues * (1.0 + scale)
    s2 = operators.OperatorSpectrum(
        eigenvalues=mu, basis_size=s1.basis_size,
        trusted_count=s1.trusted_count,
        operator_tag=s1.operator_tag, negative_count=0,
        model_ref=s1.model_ref)
    args = (s2, s1) if flip else (s1, s2)
    want = scale <= 1e-9
    assert isospectral.compare_spectra(*args, rel_tol=1e-9) is want


def test_compare_conjugated_route_is_isospectral(torus11):
    """Drifting operator by conjugation vs the Schrodinger operator with
    the Witten potential: same spectrum, different assembly."""
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos")])
    vw = fields.witten_potential(torus11, f)
    N = 128
    H = operators.assemble_drifting_conjugated(torus11, f, N)
    s1 = operators.eigen_decompose(H, "drifting_conjugated",
                                   model_ref=torus11.ref())
    s2 = operators.schrodinger_spectrum(torus11, vw, N)
    assert isospectral.compare_spectra(s1, s2, rel_tol=1e-12) is True


def test_compare_needs_trusted(torus11):
    spec = operators.exact_spectrum(torus11)
    empty = operators.OperatorSpectrum(
        eigenvalues=spec.eigenvalues, basis_size=spec.basis_size,
        trusted_count=0, operator_tag="exact", negative_count=0,
        model_ref=None)
    with pytest.raises(ValueError):
        isospectral.compare_spectra(spec, empty)


# ----------------------------------------------------------------------
# Geometry inference
# ----------------------------------------------------------------------

def test_sphere_inference(sphere_fine):
    spec = operators.exact_spectrum(sphere_fine)
    inf = isospectral.infer_geometry(spec)
    assert 1.95 <= inf.n_hat <= 2.05
    assert inf.vol_hat == pytest.approx(FOUR_PI, rel=1e-6)
    assert inf.a1_hat == pytest.approx(FOUR_PI / 3.0, rel=1e-3)
    chi = isospectral.infer_euler(spec)
    assert chi == pytest.approx(2.0, abs=0.05)


def test_torus_inference(torus11_wide):
    spec = operators.exact_spectrum(torus11_wide)
    inf = isospectral.infer_geometry(spec)
    assert inf.n_hat == pytest.approx(2.0, abs=0.01)
    assert inf.vol_hat == pytest.approx(1.0, rel=1e-6)
    chi = isospectral.infer_euler(spec)
    assert abs(chi) < 0.01


def test_rectangular_torus_volume(torus12):
    spec = operators.exact_spectrum(torus12)
    inf = isospectral.infer_geometry(spec)
    assert inf.vol_hat == pytest.approx(2.0, rel=1e-5)


def test_circle_inference(circle_fine):
    spec = operators.exact_spectrum(circle_fine)
    inf = isospectral.infer_geometry(spec)
    assert inf.n_hat == pytest.approx(1.0, abs=0.01)
    assert inf.vol_hat == pytest.approx(TWO_PI, rel=1e-6)
    with pytest.raises(ValueError, match="surface"):
        isospectral.infer_euler(spec)


def test_drifting_spectrum_keeps_geometry(torus11):
    """The drift deforms eigenvalues but not dimension or volume."""
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos"),
                                         (0.2, (0, 1), "sin")])
    H = operators.assemble_drifting_conjugated(torus11, f, torus11.n_modes)
    spec = operators.eigen_decompose(H, "drifting_conjugated",
                                     model_ref=torus11.ref())
    inf = isospectral.infer_geometry(spec)
    assert inf.n_hat == pytest.approx(2.0, abs=0.1)
    assert inf.vol_hat == pytest.approx(1.0, rel=0.02)


def test_euler_compensation_is_exact_on_predictions():
    """euler_from_a1 undoes the drift term identically when fed the
    closed-form a1."""
    torus = heatlab.build_flat_torus((1.0, 1.0), band_limit=8)
    f = fields.trig_polynomial(torus, [(0.7, (1, 0), "sin")])
    D = fields.dirichlet_norm(torus, f)
    assert D > 0.1
    assert isospectral.euler_from_a1(-0.25 * D, D) == pytest.approx(
        0.0, abs=1e-15)
    assert isospectral.euler_from_a1(FOUR_PI / 3.0, 0.0) == pytest.approx(
        2.0, rel=1e-14)


def test_dimension_guard():
    """A trace that is not power-law (gapped synthetic spectrum) must be
    refused, not silently fitted."""
    mu = np.concatenate([[0.0], np.geomspace(1.0, 1e4, 40)])
    fake = operators.OperatorSpectrum(eigenvalues=mu, basis_size=41,
                                      trusted_count=41,
                                      operator_tag="exact",
                                      negative_count=0, model_ref=None)
    with pytest.raises(ValueError):
        isospectral.infer_geometry(fake, t_grid=np.geomspace(1e-3, 1.0, 61))


# ----------------------------------------------------------------------
# Report
# ----------------------------------------------------------------------

def test_isospectral_report_roundtrip(torus11, torus11_wide):
    s1 = operators.exact_spectrum(torus11)
    s2 = operators.exact_spectrum(torus11_wide)
    report = isospectral.isospectral_report(s1, s2)
    assert report["verdict"] is True
    for side in (report["first"], report["second"]):
        assert side.isospectral_verdict is True
        assert side.vol_hat == pytest.approx(1.0, rel=1e-4)
        assert side.euler_hat == pytest.approx(0.0, abs=0.05)
        payload = side.to_json()
        assert payload["n_hat"] == side.n_hat
        assert payload["window"] is not None


def test_isospectral_report_drift_side(torus11):
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos")])
    D = fields.dirichlet_norm(torus11, f)
    H = operators.assemble_drifting_conjugated(torus11, f, torus11.n_modes)
    s_f = operators.eigen_decompose(H, "drifting_conjugated",
                                    model_ref=torus11.ref())
    s_0 = operators.exact_spectrum(torus11)
    report = isospectral.isospectral_report(s_0, s_f,
                                            dirichlet_norms=(0.0, D))
    assert report["verdict"] is False
    assert report["second"].dirichlet_norm == pytest.approx(D)
    # the compensated Euler estimate returns to ~0 despite the drift
    assert report["second"].euler_hat == pytest.approx(0.0, abs=0.2)
