"""Shared model fixtures, session-scoped: building a model enumerates its
spectrum and quadrature, so each distinct (kind, size) is built once."""

import math

import pytest

import heatlab


TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def circle():
    return heatlab.build_circle(TWO_PI, band_limit=64)


@pytest.fixture(scope="session")
def circle_fine():
    return heatlab.build_circle(TWO_PI, band_limit=256)


@pytest.fixture(scope="session")
def torus11():
    return heatlab.build_flat_torus((1.0, 1.0), band_limit=26)


@pytest.fixture(scope="session")
def torus11_wide():
    return heatlab.build_flat_torus((1.0, 1.0), band_limit=80)


@pytest.fixture(scope="session")
def torus12():
    return heatlab.build_flat_torus((1.0, 2.0), band_limit=40)


@pytest.fixture(scope="session")
def sphere():
    return heatlab.build_sphere(1.0, band_limit=32)


@pytest.fixture(scope="session")
def sphere_fine():
    return heatlab.build_sphere(1.0, band_limit=64)
