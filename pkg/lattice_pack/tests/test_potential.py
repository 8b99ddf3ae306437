import math

import numpy as np
import pytest

from latpack.dispersion import laplacian, scaled
from latpack.errors import (
    BadLambdas,
    BadParameter,
    ChainCollision,
    CoordinateOverflow,
    NegativeValue,
    NonpositiveAlpha,
    TailedPotential,
)
from latpack.potential import (
    ExpTail,
    GCaveat,
    PowerTail,
    ball_count,
    build_prescribed,
    bump,
    from_samples,
    from_tail,
    g_bounds,
    interleave,
    is_rearrangement,
    level_count,
    level_profile,
    partial_sums_diverge,
    random_finite,
    rearrange_sparse,
    scale_continuum,
    sparse_chain,
    sparse_values,
    sparse_values_partial_sums,
    tail_from_dict,
    tail_to_dict,
    weight_by_power,
    weighted_norm,
)


def test_level_count_on_finite_potential():
    V = from_samples(2, {(0, 0): 3.0, (1, 0): 1.0, (0, 5): 0.5})
    assert level_count(V, 1.0) == 2
    assert level_count(V, 0.4) == 3
    assert level_count(V, 10.0) == 0
    with pytest.raises(NonpositiveAlpha):
        level_count(V, 0.0)


def test_level_count_uses_the_tail_beyond_the_window():
    # (1 + |x|)^-1 >= 0.2 on |x| <= 4
    V = from_tail(1, PowerTail(1.0, 1.0))
    assert level_count(V, 0.2) == 9


def test_level_profile_is_sorted_and_exact_for_small_sets():
    V = from_samples(1, {(0,): 2.0, (3,): 1.0})
    prof = level_profile(V, [1.0, 0.5, 2.0])
    assert prof.thresholds == (0.5, 1.0, 2.0)
    assert prof.counts == (2, 2, 1)
    assert prof.truncation_exact


def test_ball_count_matches_the_gauss_circle_problem():
    assert ball_count(2, 25) == (81, True)
    assert ball_count(1, 16) == (9, True)
    assert ball_count(3, -1) == (0, True)


def test_negative_values_rejected():
    with pytest.raises(NegativeValue):
        from_samples(1, {(0,): -0.1})


def test_weighted_norm_of_finite_potential():
    V = from_samples(1, {(0,): 3.0, (1,): 4.0})
    assert weighted_norm(V, 2.0) == pytest.approx((5.0, 5.0))
    # <x> = 1 + |x| weights the second site by 2
    assert weighted_norm(V, 1.0, 1.0) == pytest.approx((11.0, 11.0))


def test_weighted_norm_brackets_a_summable_tail():
    V = from_tail(3, ExpTail(1.0, 1.0), window_r=2)
    lo, hi = weighted_norm(V, 1.0)
    assert 0 < lo <= hi < math.inf


def test_weighted_norm_of_non_summable_tail_is_infinite():
    V = from_tail(3, PowerTail(1.0, 2.0))
    assert weighted_norm(V, 1.0)[1] == math.inf


def test_weight_by_power_multiplies_by_bracket_x():
    V = from_samples(1, {(0,): 1.0, (1,): 1.0})
    W = weight_by_power(V, 1.0)
    assert W.value((0,)) == pytest.approx(1.0)
    assert W.value((1,)) == pytest.approx(2.0)


def test_scaled_and_translated():
    V = from_samples(2, {(0, 0): 1.0})
    assert V.scaled(3.0).value((0, 0)) == pytest.approx(3.0)
    assert V.translated((2, -1)).support == [(2, -1)]
    with pytest.raises(TailedPotential):
        from_tail(2, ExpTail(1.0, 1.0)).translated((1, 0))


def test_support_of_tailed_potential_is_refused():
    with pytest.raises(TailedPotential):
        from_tail(1, ExpTail(1.0, 1.0)).support


def test_tail_dict_round_trip():
    tail = PowerTail(2.0, 1.5)
    assert tail_from_dict(tail_to_dict(tail)) == tail
    with pytest.raises(BadParameter):
        tail_from_dict({"kind": "gaussian", "params": {}})


def test_sparse_chain_positions_and_overflow():
    assert sparse_chain(2, 3) == [(2, 0, 0), (18, 0, 0), (162, 0, 0)]
    assert len(sparse_chain(1, 20)) == 20
    with pytest.raises(CoordinateOverflow):
        sparse_chain(1, 21)


def test_build_prescribed_values():
    V = build_prescribed([1.0, 2.0, 4.0], eta=2.0, r0=3)
    assert sorted(V.explicit.values()) == pytest.approx([0.5, 1.0, 2.0])
    # the chain starts one step out so x_1 = 9 r0
    assert V.value((27, 0, 0)) == pytest.approx(2.0)
    with pytest.raises(BadLambdas):
        build_prescribed([2.0, 1.0], eta=2.0, r0=3)
    with pytest.raises(BadLambdas):
        build_prescribed([0.5], eta=2.0, r0=3)


def test_sparse_values_decrease_slowly():
    vals = sparse_values(2.0, 5)
    assert vals[0] == pytest.approx(2.0 / math.log(4.0))
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_partial_sums_of_the_sparse_sequence():
    sums = sparse_values_partial_sums(1.0, [1, 2, 0])
    assert sorted(sums) == [1, 2]
    assert sums[1] == pytest.approx(1.0 / math.log(4.0))
    assert sums[2] == pytest.approx(1.0 / math.log(4.0) + 1.0 / math.log(5.0))
    # p = 1 diverges, p = 4 settles
    slow = sparse_values_partial_sums(1.0, [100, 1000])
    fast = sparse_values_partial_sums(4.0, [100, 1000])
    assert slow[1000] - slow[100] > 100
    assert fast[1000] - fast[100] < slow[1000] - slow[100]


@pytest.mark.parametrize(
    "sums, expected",
    [
        ([3.3, 15.0, 76.0], True),
        ([1.0, 1.5, 1.75], False),
        ([1.0, 1.0, 2.0], False),
        ([1.0], False),
    ],
)
def test_partial_sums_diverge(sums, expected):
    assert partial_sums_diverge(sums) is expected


def test_sparse_sequence_sums_diverge_in_three_dimensions():
    sums = sparse_values_partial_sums(1.5, [10**k for k in range(1, 6)])
    assert partial_sums_diverge(list(sums.values()))


def test_rearrange_sparse_is_a_rearrangement():
    V = from_samples(3, {(0, 0, 0): 3.0, (1, 0, 0): 0.5, (0, 1, 0): 0.2})
    W = rearrange_sparse(V, eps=0.25, e=laplacian(3), r0=5)
    assert is_rearrangement(V, W)
    assert W.value((0, 0, 0)) == pytest.approx(3.0)
    assert W.value((5, 0, 0)) == pytest.approx(0.5)
    assert W.value((45, 0, 0)) == pytest.approx(0.2)


def test_rearrange_sparse_detects_collisions():
    V = from_samples(3, {(5, 0, 0): 3.0, (1, 0, 0): 0.5})
    with pytest.raises(ChainCollision):
        rearrange_sparse(V, eps=0.25, e=laplacian(3), r0=5)


def test_rearrange_sparse_cut_follows_the_dispersion():
    # eta(laplacian(3)) ~ 1.978, so the cut sits near 1.48; doubling e doubles eta
    V = from_samples(3, {(0, 0, 0): 1.6, (1, 0, 0): 0.5})
    kept = rearrange_sparse(V, eps=0.25, e=laplacian(3), r0=5)
    assert kept.value((0, 0, 0)) == pytest.approx(1.6)
    moved = rearrange_sparse(V, eps=0.25, e=scaled(laplacian(3), 2.0), r0=5)
    assert moved.value((0, 0, 0)) == 0.0
    assert moved.value((5, 0, 0)) == pytest.approx(1.6)
    assert is_rearrangement(V, moved)
    with pytest.raises(BadParameter):
        rearrange_sparse(from_samples(3, {(0, 0, 0): 1.0}), eps=0.25, e=laplacian(2), r0=5)


def test_interleave_without_shells_is_the_second_potential():
    V1 = from_samples(1, {(0,): 1.0, (2,): 1.0})
    V2 = from_samples(1, {(1,): 5.0})
    W = interleave(V1, V2, [])
    assert W.support == [(1,)]
    assert W.is_finite


def test_interleave_switches_inside_the_band():
    V1 = from_samples(1, {(0,): 1.0, (2,): 1.0})
    V2 = from_samples(1, {(0,): 7.0, (2,): 7.0})
    W = interleave(V1, V2, [1.5, 2.5])
    assert W.value((0,)) == pytest.approx(7.0)
    assert W.value((2,)) == pytest.approx(1.0)
    with pytest.raises(BadParameter):
        interleave(V1, V2, [2.0, 1.0])


def test_scale_continuum_of_a_bump():
    V = scale_continuum(bump(), 2, 1)
    assert V.support == [(-1,), (0,), (1,)]
    assert V.value((0,)) == pytest.approx(0.25)
    assert V.value((1,)) == pytest.approx(0.140625)


def test_g_bounds_of_inverse_square_tail():
    V = from_tail(3, PowerTail(1.0, 2.0))
    g = g_bounds(V, 10.0)
    assert g.caveat is GCaveat.WINDOW_ESTIMATE
    assert g.g_minus_hat == pytest.approx(1.0, abs=0.1)
    assert g.g_plus_hat == pytest.approx(1.0, abs=0.1)


def test_g_bounds_degenerate_for_finite_support():
    g = g_bounds(from_samples(1, {(0,): 1.0}), 5.0)
    assert g.caveat is GCaveat.DEGENERATE_FINITE_SUPPORT


def test_random_finite_is_reproducible():
    a = random_finite(2, 6, 3, 2.0, np.random.default_rng(7))
    b = random_finite(2, 6, 3, 2.0, np.random.default_rng(7))
    assert a.support == b.support
    assert len(a.support) == 6
    assert all(0 < v < 2.0 for v in a.explicit.values())
    with pytest.raises(BadParameter):
        random_finite(1, 10, 1, 1.0, np.random.default_rng(0))
