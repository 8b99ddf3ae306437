import math

import pytest

from latpack.stats import fmt_bracket, fmt_float, fmt_int, loglog_slope, ratio_spread


def test_loglog_slope_recovers_power_law():
    xs = [1.0, 2.0, 4.0, 8.0, 16.0]
    ys = [3.0 * x**1.5 for x in xs]
    fit = loglog_slope(xs, ys)
    assert fit.slope == pytest.approx(1.5, abs=1e-10)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.n == 5


def test_loglog_slope_with_two_points_has_no_stderr():
    fit = loglog_slope([1.0, 10.0], [1.0, 100.0])
    assert fit.slope == pytest.approx(2.0)
    assert math.isnan(fit.stderr)


def test_loglog_slope_drops_nonpositive_points():
    fit = loglog_slope([0.0, 1.0, 2.0, 4.0], [5.0, 1.0, 2.0, 4.0])
    assert fit.n == 3
    assert fit.slope == pytest.approx(1.0)
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0], [0.0, 1.0])


@pytest.mark.parametrize(
    "values, expected",
    [
        ([1.0, 2.0, 4.0], 4.0),
        ([3.0], 1.0),
        ([0.0, 2.0, math.inf, 1.0], 2.0),
    ],
)
def test_ratio_spread(values, expected):
    assert ratio_spread(values) == pytest.approx(expected)


def test_formatting_helpers():
    assert fmt_float(None) == "n/a"
    assert fmt_float(math.inf) == "inf"
    assert fmt_float(1.23456789) == "1.23457"
    assert fmt_int(7) == "7"
    assert fmt_bracket(2.0, 2.0) == "2"
    assert fmt_bracket(1.0, 2.5) == "[1, 2.5]"
