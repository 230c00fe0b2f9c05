"""Bessel evaluation tests: frozen high-precision references, ODE residual
probes, exact special values, bounds, branch-seam continuity, and a scipy
cross-check as an independent second route."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from dkglab.bessel import (
    BesselEvalConfig,
    bessel_i0,
    bessel_i1,
    bessel_j0,
    bessel_j1,
    i1_over_z,
    j1_over_z,
)
from dkglab.errors import DomainError
from dkglab.selfcheck import i0_ode_residual, j0_ode_residual

# 25-digit references (mpmath besseli/besselj), spanning both evaluation
# branches and the crossover neighborhood.
REFERENCE = {
    0.5: (
        1.063483370741323519263184,
        0.2578943053908963163624797,
        0.9384698072408129042284047,
        0.2422684576748738863839546,
    ),
    1.0: (
        1.266065877752008335598245,
        0.565159103992485027207696,
        0.7651976865579665514497175,
        0.4400505857449335159596822,
    ),
    5.0: (
        27.23987182360444689454423,
        24.33564214245052719914305,
        -0.177596771314338304347397,
        -0.3275791375914652220377343,
    ),
    14.9: (
        308375.5786874390940586988,
        297840.6947795742081032039,
        0.006391544890852980327288162,
        0.206876171809925055952945,
    ),
    15.1: (
        374103.4111904091135378465,
        361495.5661854017354650583,
        -0.03456185145556502768137462,
        0.2013102204084909009360121,
    ),
    25.0: (
        5774560606.46631031577134,
        5657865129.878701353103889,
        0.09626678327595811617350334,
        -0.1253502495802899046518093,
    ),
}


def test_frozen_reference_values():
    for x, (i0, i1, j0, j1) in REFERENCE.items():
        assert bessel_i0(x) == pytest.approx(i0, rel=1e-13)
        assert bessel_i1(x) == pytest.approx(i1, rel=1e-13)
        # the alternating J series bottoms out at ~eps * I0(x) absolute
        assert bessel_j0(x) == pytest.approx(j0, abs=5e-11 + 1e-13 * abs(j0))
        assert bessel_j1(x) == pytest.approx(j1, abs=5e-11 + 1e-13 * abs(j1))


def test_exact_special_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i1(0.0) == 0.0
    assert bessel_j0(0.0) == 1.0
    assert bessel_j1(0.0) == 0.0
    assert i1_over_z(0.0) == 0.5
    assert j1_over_z(0.0) == 0.5


def test_ratio_continuity_at_zero():
    assert i1_over_z(1e-8) == pytest.approx(0.5, abs=1e-15)
    assert j1_over_z(1e-8) == pytest.approx(0.5, abs=1e-15)


def test_ode_residuals():
    rng = np.random.default_rng(20260825)
    xs = rng.uniform(0.05, 30.0, size=100)
    assert np.max(np.abs(i0_ode_residual(xs))) <= 1e-8
    assert np.max(np.abs(j0_ode_residual(xs))) <= 1e-8


def test_lower_bounds_on_grid():
    grid = np.linspace(0.0, 30.0, 1000)
    assert np.all(bessel_i0(grid) >= 1.0)
    assert np.all(bessel_i1(grid) >= 0.5 * grid)


def test_seam_continuity():
    # 5e-11 is the honest budget: the series branch loses ~eps * I0(15)
    # absolute accuracy to cancellation right at the crossover.
    for f in (bessel_i0, bessel_i1, i1_over_z, bessel_j0, bessel_j1, j1_over_z):
        lo, hi = f(15.0 - 1e-12), f(15.0 + 1e-12)
        assert abs(hi - lo) <= 5e-11 * max(1.0, abs(lo))


def test_derivative_relations():
    """Central differences of I0 converge to I1 (and of J0 to -J1) at O(h^2)."""
    for x in (0.8, 3.0, 10.0):
        errs_i = []
        errs_j = []
        for h in (1e-2, 5e-3, 2.5e-3):
            errs_i.append(abs((bessel_i0(x + h) - bessel_i0(x - h)) / (2 * h) - bessel_i1(x)))
            errs_j.append(abs((bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h) + bessel_j1(x)))
        assert errs_i[0] / max(errs_i[2], 1e-14) > 8.0
        assert errs_j[0] / max(errs_j[2], 1e-14) > 8.0


def test_scipy_cross_check():
    xs = np.linspace(0.0, 30.0, 601)
    assert np.allclose(bessel_i0(xs), scipy.special.i0(xs), rtol=1e-12)
    assert np.allclose(bessel_i1(xs), scipy.special.i1(xs), rtol=1e-12)
    assert np.allclose(bessel_j0(xs), scipy.special.j0(xs), atol=2e-11)
    assert np.allclose(bessel_j1(xs), scipy.special.j1(xs), atol=2e-11)


def test_array_and_scalar_shapes():
    xs = np.array([[0.0, 1.0], [2.0, 20.0]])
    out = bessel_i0(xs)
    assert out.shape == xs.shape
    assert isinstance(bessel_i0(1.0), float)


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel_i0(-1.0)
    with pytest.raises(DomainError):
        bessel_j1(float("nan"))
    with pytest.raises(DomainError):
        BesselEvalConfig(series_crossover=-1.0)


def test_custom_crossover_consistency():
    """Moving the crossover must not change values beyond the seam budget.

    Probes stay at x >= 13 where the fixed-depth asymptotic expansion has
    bottomed out (its terms shrink until k ~ 2x).
    """
    cfg_lo = BesselEvalConfig(series_crossover=12.5)
    for x in (13.0, 13.5, 14.0, 14.5):
        assert bessel_i0(x, cfg_lo) == pytest.approx(bessel_i0(x), rel=1e-11)
        assert bessel_j0(x, cfg_lo) == pytest.approx(bessel_j0(x), abs=5e-11)


@given(st.floats(min_value=0.0, max_value=29.0), st.floats(min_value=0.01, max_value=1.0))
@settings(max_examples=60, deadline=None)
def test_i0_monotone_increasing(x, dx):
    assert bessel_i0(x + dx) >= bessel_i0(x)


@given(st.floats(min_value=0.0, max_value=30.0))
@settings(max_examples=60, deadline=None)
def test_j0_bounded_by_one(x):
    assert abs(bessel_j0(x)) <= 1.0 + 1e-12


@given(st.floats(min_value=1e-6, max_value=30.0))
@settings(max_examples=60, deadline=None)
def test_ratio_matches_division(x):
    assert i1_over_z(x) == pytest.approx(bessel_i1(x) / x, rel=1e-12)
    assert j1_over_z(x) * x == pytest.approx(bessel_j1(x), abs=5e-11)


def test_i1_series_half_identity():
    """i1_over_z equals the x -> 0 limit structure: 1/2 + x^2/16 + O(x^4)."""
    for x in (1e-3, 1e-2):
        taylor = 0.5 + x * x / 16.0
        assert i1_over_z(x) == pytest.approx(taylor, abs=x**4)


def test_asymptotic_scale_sanity():
    """Above the crossover I0 tracks e^x / sqrt(2 pi x) within a few percent."""
    for x in (16.0, 25.0, 40.0):
        leading = math.exp(x) / math.sqrt(2.0 * math.pi * x)
        assert bessel_i0(x) == pytest.approx(leading, rel=0.05)
        assert bessel_i0(x) >= leading
