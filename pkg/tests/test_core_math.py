import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homodyne_qkd.core_math import (
    REGIONS,
    ConvergenceError,
    Interval,
    QuadratureSpec,
    erfc,
    integrate_1d,
    integrate_2d_region,
    log_erfc,
)
from oracles import FROZEN_CONES, FROZEN_ERFC_SQRT2, PEAK


def test_erfc_at_zero():
    assert erfc(0.0) == 1.0


@pytest.mark.parametrize("x", [0.3, 1.7])
def test_erfc_reflection(x):
    assert erfc(x) == pytest.approx(2 - erfc(-x), abs=1e-15)


def test_erfc_sqrt2_against_defining_integral():
    assert erfc(math.sqrt(2)) == pytest.approx(FROZEN_ERFC_SQRT2, rel=1e-14)
    assert round(erfc(math.sqrt(2)), 6) == 0.0455


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_erfc_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        erfc(bad)


@given(st.floats(-20, 20), st.floats(1e-6, 5))
def test_erfc_strictly_decreasing_and_bounded(x, dx):
    assert 0 <= erfc(x) <= 2
    if abs(x) < 5:
        assert erfc(x + dx) < erfc(x)
    assert erfc(x) + erfc(-x) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("x", [-3.0, 0.0, 1.0, 5.0, 20.0])
def test_log_erfc_matches_log_of_erfc(x):
    assert log_erfc(x) == pytest.approx(math.log(erfc(x)), rel=1e-13, abs=1e-15)


def test_log_erfc_far_tail_stays_finite():
    # erfc(40) underflows to 0; the log still follows -x^2 - log(x sqrt(pi))
    assert erfc(40.0) == 0.0
    assert log_erfc(40.0) == pytest.approx(-1600 - math.log(40 * math.sqrt(math.pi)), rel=1e-6)


def centred(x):
    return PEAK * math.exp(-2 * x * x)


def test_integrate_full_line_gaussian():
    assert integrate_1d(centred, Interval(-math.inf, math.inf)) == pytest.approx(1.0, abs=1e-10)


def test_integrate_half_line_gaussian():
    assert integrate_1d(centred, Interval(0.0, math.inf)) == pytest.approx(0.5, abs=1e-10)


def test_integrate_erfc_definition():
    value = integrate_1d(lambda t: math.exp(-t * t), Interval(math.sqrt(2), math.inf))
    assert value == pytest.approx(math.sqrt(math.pi) / 2 * erfc(math.sqrt(2)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_shifted_gaussian_tail_matches_erfc(mu, t):
    value = integrate_1d(lambda x: PEAK * math.exp(-2 * (x - mu) ** 2),
                         Interval(t, math.inf), centers=[mu])
    assert value == pytest.approx(0.5 * erfc(math.sqrt(2) * (t - mu)), abs=1e-9)


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    with pytest.raises(ValueError):
        Interval(math.inf, math.inf)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)


def test_convergence_error_carries_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=2)
    with pytest.raises(ConvergenceError) as info:
        integrate_1d(lambda x: abs(math.sin(40 * x)), Interval(0.0, 10.0), spec)
    assert math.isfinite(info.value.estimate)


def product_gaussian(mx, my, var):
    norm = 1 / (2 * math.pi * var)
    return lambda x, y: norm * math.exp(-((x - mx) ** 2 + (y - my) ** 2) / (2 * var))


def eve_density(n):
    a = math.sqrt(n / 2)
    return lambda x, y: (2 / math.pi) * math.exp(-2 * (x - a) ** 2 - 2 * y * y)


@pytest.mark.parametrize("region", REGIONS)
def test_unit_variance_product_cones_are_quarters(region):
    f = product_gaussian(0.0, 0.0, 1.0)
    spec = QuadratureSpec(1e-9, 1e-9)
    assert integrate_2d_region(f, region, spec) == pytest.approx(0.25, abs=1e-8)


def test_vacuum_eve_density_plus_cone():
    assert integrate_2d_region(eve_density(0.0), "x>=|y|") == pytest.approx(0.25, abs=1e-9)


def test_eve_density_n2_against_grid_oracle():
    p_plus, p_perp, p_minus = FROZEN_CONES[2.0]
    assert integrate_2d_region(eve_density(2.0), "x>=|y|") == pytest.approx(p_plus, abs=5e-7)
    assert integrate_2d_region(eve_density(2.0), "-x>=|y|") == pytest.approx(p_minus, abs=5e-7)


@pytest.mark.parametrize("mx,my", [(0.7, -0.2), (-1.1, 0.4)])
def test_cone_integrals_sum_to_one(mx, my):
    f = product_gaussian(mx, my, 0.25)
    spec = QuadratureSpec(1e-10, 1e-10)
    total = sum(integrate_2d_region(f, r, spec) for r in REGIONS)
    assert total == pytest.approx(1.0, abs=4e-10)


def test_unknown_region():
    with pytest.raises(ValueError):
        integrate_2d_region(lambda x, y: 0.0, "x>y")
