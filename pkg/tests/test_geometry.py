import math

import numpy as np
import pytest

from gchoquard.core.geometry import (
    ProblemParams,
    SplitPoint,
    admissible_p_interval,
    anisotropic_dilation,
    choquard_lebesgue_exponent,
    classify_regime,
    critical_exponent,
    exponent_data,
    grushin_distance,
    grushin_gradient,
    homogeneous_dimension,
    is_admissible,
    pohozaev_coefficients,
)
from gchoquard.utils.errors import ParameterError


def test_reference_exponents(ref_params):
    assert homogeneous_dimension(ref_params) == 5.0
    lo, hi = admissible_p_interval(ref_params)
    assert lo == pytest.approx(1.8, abs=1e-15)
    assert hi == pytest.approx(3.0, abs=1e-15)
    c_a, c_b = pohozaev_coefficients(ref_params)
    assert c_a == pytest.approx(0.25, abs=1e-15)
    assert c_b == pytest.approx(0.75, abs=1e-15)
    assert choquard_lebesgue_exponent(ref_params) == pytest.approx(20.0 / 9.0, rel=1e-15)
    assert critical_exponent(ref_params) == pytest.approx(10.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize('p', [1.85, 2.0, 2.5, 2.95])
def test_coefficients_sum_to_one_inside_window(ref_params, p):
    params = ref_params.replace(p=p)
    c_a, c_b = pohozaev_coefficients(params)
    assert c_a > 0.0 and c_b > 0.0
    assert c_a + c_b == pytest.approx(1.0, abs=1e-14)
    assert is_admissible(params)


@pytest.mark.parametrize('p', [1.8, 3.0])
def test_endpoints_are_nonexistent(ref_params, p):
    params = ref_params.replace(p=p)
    c_a, c_b = pohozaev_coefficients(params)
    assert min(c_a, c_b) == 0.0
    assert not is_admissible(params)
    report = classify_regime(params)
    assert report.nonexistent
    assert report.label == 'nonexistent regime'


@pytest.mark.parametrize('p', [1.5, 3.5])
def test_outside_window_has_nonpositive_coefficient(ref_params, p):
    c_a, c_b = pohozaev_coefficients(ref_params.replace(p=p))
    assert min(c_a, c_b) < 0.0


def test_regime_notes(ref_params):
    report = classify_regime(ref_params)
    assert report.admissible and report.regularity_applicable
    assert report.hormander_integer_gamma
    frac = classify_regime(ref_params.replace(gamma=0.5))
    assert not frac.hormander_integer_gamma
    assert any('non-integer gamma' in n for n in frac.notes)
    heavy = classify_regime(ProblemParams(m=3, ell=2, gamma=1.0, mu=4.5, p=2.0))
    assert not heavy.regularity_applicable


def test_exponent_data_matches_helpers(ref_params):
    data = exponent_data(ref_params)
    assert (data.p_lo, data.p_hi) == admissible_p_interval(ref_params)
    assert (data.c_A, data.c_B) == pohozaev_coefficients(ref_params)


@pytest.mark.parametrize('kwargs', [
    dict(m=0, ell=2, gamma=1.0, mu=1.0, p=2.0),
    dict(m=1, ell=2, gamma=-0.5, mu=1.0, p=2.0),
    dict(m=1, ell=2, gamma=1.0, mu=5.0, p=2.0),
    dict(m=1, ell=2, gamma=1.0, mu=0.0, p=2.0),
    dict(m=1, ell=2, gamma=1.0, mu=1.0, p=1.0),
    dict(m=1, ell=1, gamma=0.0, mu=1.0, p=2.0),
    dict(m=1, ell=2, gamma=math.nan, mu=1.0, p=2.0),
])
def test_invalid_parameters(kwargs):
    with pytest.raises(ParameterError):
        ProblemParams(**kwargs)


def test_distance_values():
    euclid = ProblemParams(m=1, ell=2, gamma=0.0, mu=1.0, p=2.0)
    assert grushin_distance(SplitPoint((3.0,), (4.0, 0.0)), euclid) == pytest.approx(5.0, rel=1e-15)
    grushin = ProblemParams(m=1, ell=2, gamma=1.0, mu=1.0, p=2.0)
    # (2^4 + 3^2)^{1/4}
    assert grushin_distance(SplitPoint((2.0,), (0.0, 3.0)), grushin) == pytest.approx(math.sqrt(5.0), rel=1e-15)
    assert grushin_distance(SplitPoint((0.0,), (0.0, 0.0)), grushin) == 0.0


def test_distance_is_homogeneous_under_dilations(ref_params, rng):
    for _ in range(20):
        z = SplitPoint(rng.normal(size=1), rng.normal(size=2))
        t = float(rng.uniform(0.1, 10.0))
        d = grushin_distance(z, ref_params)
        assert grushin_distance(anisotropic_dilation(z, t, ref_params), ref_params) == pytest.approx(t * d, rel=1e-13)


def test_dilation_rejects_bad_input(ref_params):
    z = SplitPoint((1.0,), (1.0, 1.0))
    with pytest.raises(ParameterError):
        anisotropic_dilation(z, 0.0, ref_params)
    with pytest.raises(ParameterError):
        grushin_distance(SplitPoint((1.0, 2.0), (1.0,)), ref_params)


def test_grushin_gradient_weights_y_block(ref_params):
    g = grushin_gradient([1.0], [2.0, 3.0], [2.0], ref_params)
    np.testing.assert_allclose(g, [1.0, 4.0, 6.0])
    with pytest.raises(ParameterError):
        grushin_gradient([1.0, 1.0], [2.0, 3.0], [2.0], ref_params)
