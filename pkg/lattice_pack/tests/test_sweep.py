import math

import numpy as np
import pandas as pd
import pytest

from latpack.dispersion import laplacian
from latpack.errors import BadParameter
from latpack.potential import ExpTail, PowerTail, from_samples, from_tail, random_finite, zero
from latpack.semiclassical import ScBracket
from latpack.sweep import (
    SWEEP_COLUMNS,
    denominator,
    liminf_limsup_probe,
    n_scaled_decay,
    oscillating_potential,
    ratio_bracket,
    weyl_sweep,
)


@pytest.mark.parametrize(
    "n, den, expected",
    [
        (0, ScBracket(0.0, 0.0), (0.0, 0.0)),
        (4, ScBracket(2.0, 4.0), (1.0, 2.0)),
        (3, ScBracket(0.0, 3.0), (1.0, math.inf)),
        (3, ScBracket.infinite(), (0.0, 0.0)),
    ],
)
def test_ratio_bracket(n, den, expected):
    assert ratio_bracket(n, den) == expected


def test_zero_potential_gives_zero_rows():
    report = weyl_sweep(laplacian(1), zero(1), [1.0, 10.0])
    frame = report.to_frame()
    assert list(frame.columns) == SWEEP_COLUMNS
    assert (frame["n_box"] == 0).all()
    assert (frame["ratio_lo"] == 0).all() and (frame["ratio_hi"] == 0).all()


def test_strong_coupling_saturates_in_three_dimensions():
    e = laplacian(3)
    V = from_samples(3, {(0, 0, 0): 1.0, (2, 0, 0): 1.0})
    report = weyl_sweep(e, V, [100.0], start_l=2, max_l=8, with_bs=False)
    row = report.rows[0]
    assert row.n_box.count == 2
    assert row.n_box.stabilized
    assert row.n_sc_gt == 2
    assert (row.ratio_lo, row.ratio_hi) == pytest.approx((1.0, 1.0))
    assert row.n_bs is None


def test_lambdas_sorted_and_deduplicated():
    report = weyl_sweep(laplacian(1), from_samples(1, {(0,): 1.0}), [4.0, 1.0, 4.0], with_bs=False)
    assert [r.lam for r in report.rows] == [1.0, 4.0]
    with pytest.raises(BadParameter):
        weyl_sweep(laplacian(1), zero(1), [-1.0])


def test_threaded_sweep_matches_serial():
    e = laplacian(1)
    V = random_finite(1, 4, 5, 1.0, np.random.default_rng(2))
    serial = weyl_sweep(e, V, [1.0, 4.0, 16.0], threads=1)
    pooled = weyl_sweep(e, V, [1.0, 4.0, 16.0], threads=2)
    pd.testing.assert_frame_equal(serial.to_frame(), pooled.to_frame())
    assert serial.meta == pooled.meta


def test_low_dimension_denominator_is_at_least_one():
    den = denominator(laplacian(1), from_samples(1, {(0,): 0.5}))
    assert den.lower >= 1.0
    assert den.upper < math.inf


def test_denominator_of_tail_without_room_to_weight_is_infinite():
    den = denominator(laplacian(1), from_tail(1, PowerTail(1.0, 2.0)))
    assert den.is_infinite


def test_n_scaled_column():
    report = weyl_sweep(laplacian(1), from_samples(1, {(0,): 1.0}), [4.0], with_bs=False)
    scaled = n_scaled_decay(report)
    assert scaled.shape == (1,)
    assert scaled[0] == pytest.approx(report.rows[0].n_box.count / 2.0)


def test_oscillating_potential_switches_tail_in_band():
    V = oscillating_potential([6.0, 12.0])
    # r = 8 lies in the band, r = 20 in the exponential part
    assert V.value((8, 0, 0)) == pytest.approx(9.0**-2 / math.log(9.0))
    assert V.value((20, 0, 0)) == pytest.approx(math.exp(-20.0))


def test_liminf_limsup_needs_three_dimensions():
    with pytest.raises(BadParameter):
        liminf_limsup_probe(laplacian(2), [4.0, 8.0])


def test_tailed_potential_skips_bs_column():
    report = weyl_sweep(laplacian(1), from_tail(1, ExpTail(1.0, 1.0), window_r=2), [1.0])
    assert report.rows[0].n_bs is None
    assert report.to_frame()["n_bs"].iloc[0] == -1
