import math

import numpy as np
import pytest

from latpack.dispersion import (
    coeff_map,
    evaluate,
    laplacian,
    make_dispersion,
    morse_report,
    nearest_neighbor,
    scaled,
)
from latpack.errors import AsymmetricCoefficients, BadParameter, EmptyCoefficients, NotMorse


@pytest.mark.parametrize("d", [1, 2, 3])
def test_laplacian_normalization_and_morse_data(d):
    e = laplacian(d)
    assert math.isclose(e.e_max, 2.0 * d, abs_tol=1e-9)
    assert e.morse.n_min == 1
    assert math.isclose(e.morse.k_min, 1.0, abs_tol=1e-6)
    # critical points are the 2^d half-period corners
    assert len(e.morse.critical_points) == 2**d


def test_laplacian_2d_delta_is_lowest_saddle():
    assert math.isclose(laplacian(2).morse.delta, 2.0, abs_tol=1e-9)


def test_evaluate_scalar_and_stacked():
    e = laplacian(2)
    assert math.isclose(evaluate(e, [0.0, 0.0]), 0.0, abs_tol=1e-12)
    assert math.isclose(evaluate(e, [math.pi, math.pi]), 4.0, abs_tol=1e-12)
    out = evaluate(e, np.array([[0.0, 0.0], [math.pi, 0.0]]))
    assert out.shape == (2,)
    assert out[1] == pytest.approx(2.0)


def test_gradient_vanishes_at_critical_points():
    e = laplacian(3)
    for c in e.morse.critical_points:
        assert np.linalg.norm(e.gradient(np.array(c.p))) < 1e-8


def test_make_dispersion_shifts_min_to_zero():
    # 5 - cos p has min 4 before normalization
    e = make_dispersion({(0,): 5.0, (1,): -0.5, (-1,): -0.5})
    assert math.isclose(e.shift, 4.0, abs_tol=1e-12)
    assert math.isclose(e.e_max, 2.0, abs_tol=1e-12)


def test_asymmetric_coefficients_rejected():
    with pytest.raises(AsymmetricCoefficients):
        make_dispersion({(0,): 1.0, (1,): -0.5, (-1,): -0.4})


@pytest.mark.parametrize("coeffs", [{}, {(0,): 0.0}])
def test_empty_coefficients_rejected(coeffs):
    with pytest.raises(EmptyCoefficients):
        make_dispersion(coeffs)


def test_degenerate_minimum_is_not_morse():
    # (1 - cos p)^2 has a quartic minimum at 0
    with pytest.raises(NotMorse):
        make_dispersion({(0,): 1.5, (1,): -1.0, (-1,): -1.0, (2,): 0.25, (-2,): 0.25})


def test_scaled_dispersion_scales_e_max():
    e = laplacian(2)
    assert math.isclose(scaled(e, 3.0).e_max, 3.0 * e.e_max, rel_tol=1e-9)
    with pytest.raises(BadParameter):
        scaled(e, 0.0)


def test_nearest_neighbor_adds_diagonal_hopping():
    e = nearest_neighbor(2, 0.05)
    coeffs = coeff_map(e)
    assert coeffs[(1, 1)] == pytest.approx(0.05)
    assert coeffs[(1, -1)] == pytest.approx(0.05)
    assert e.coefficient_range == 1
    assert e.morse.n_min == 1


def test_morse_report_is_reproducible_with_explicit_seed_grid():
    e = laplacian(2)
    a = morse_report(e, seed_grid_n=12)
    b = morse_report(e, seed_grid_n=12)
    assert [c.p for c in a.critical_points] == [c.p for c in b.critical_points]
