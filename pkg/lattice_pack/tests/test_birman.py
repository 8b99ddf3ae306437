import numpy as np
import pytest

from latpack.birman import (
    bs_matrix,
    bs_min_eig_vs_diag,
    bs_norm,
    count_ge_one,
    coupling_threshold,
    k_positive,
    n_below_via_bs,
    n_bound_states_bs,
    schur_offdiag,
    sparse_certificate,
    spread_rearrangement,
)
from latpack.boxop import n_bound_states
from latpack.dispersion import laplacian
from latpack.errors import BadParameter, TailedPotential, ThresholdAmbiguous, ZeroRhoLowDimension
from latpack.potential import ExpTail, from_samples, from_tail, is_rearrangement, random_finite, sparse_potential


def test_single_site_bs_eigenvalue_1d():
    # 0.75 G_0.25(0) = 0.75 / sqrt(0.25^2 + 0.5) = 1
    B = bs_matrix(laplacian(1), from_samples(1, {(0,): 0.75}), 0.25)
    assert B.eigenvalues()[0] == pytest.approx(1.0, abs=1e-5)


def test_threshold_on_an_eigenvalue_is_ambiguous():
    e, V = laplacian(1), from_samples(1, {(0,): 0.75})
    with pytest.raises(ThresholdAmbiguous) as info:
        n_below_via_bs(e, V, 0.25)
    assert len(info.value.eigenvalues_in_band) == 1
    # the bound state sits at -0.25
    assert n_below_via_bs(e, V, 0.3) == 0
    assert n_below_via_bs(e, V, 0.2) == 1


def test_bs_count_agrees_with_box_count_3d():
    e = laplacian(3)
    V = from_samples(3, {(0, 0, 0): 10.0, (3, 0, 0): 8.0})
    bs = n_bound_states_bs(e, V)
    box = n_bound_states(e, V)
    assert bs.stabilized and box.stabilized
    assert bs.count == box.count == 2


@pytest.mark.parametrize("value, expected", [(1.9, 0), (2.1, 1)])
def test_single_site_threshold_3d(value, expected):
    res = n_bound_states_bs(laplacian(3), from_samples(3, {(0, 0, 0): value}))
    assert res.count == expected
    assert res.stabilized


def test_any_site_binds_in_one_dimension():
    res = n_bound_states_bs(laplacian(1), from_samples(1, {(0,): 0.3}))
    assert res.count == 1
    assert res.stabilized


def test_empty_potential_has_no_bound_states():
    res = n_bound_states_bs(laplacian(2), from_samples(2, {}))
    assert (res.count, res.stabilized) == (0, True)


def test_schur_offdiag_of_adjacent_sites_3d():
    # G_0(e_1) = G_0(0) - 1/3
    s = schur_offdiag(laplacian(3), [(0, 0, 0), (1, 0, 0)])
    assert s == pytest.approx(0.505462 - 1.0 / 3.0, abs=1e-4)
    assert schur_offdiag(laplacian(3), [(0, 0, 0)]) == 0.0


def test_bs_norm_and_k_positive_1d():
    e = laplacian(1)
    # G_1(0) = 1 / sqrt(3)
    top, err = bs_norm(e, from_samples(1, {(0,): 3.0}), 1.0)
    assert top == pytest.approx(3.0 / np.sqrt(3.0), abs=1e-4)
    assert err >= 0
    assert k_positive(e, from_samples(1, {(0,): 3.0}), 1.0)
    assert not k_positive(e, from_samples(1, {(0,): 1.0}), 1.0)


def test_bs_at_zero_dominates_diag_over_e_max():
    e = laplacian(3)
    V = random_finite(3, 8, 2, 4.0, np.random.default_rng(3))
    B = bs_matrix(e, V, 0.0)
    assert bs_min_eig_vs_diag(B, e.e_max) >= -B.eig_err


def test_count_ge_one_band():
    e = laplacian(3)
    B = bs_matrix(e, from_samples(3, {(0, 0, 0): 2.1}), 0.0)
    assert count_ge_one(B) == (1, 1)


def test_coupling_threshold():
    assert coupling_threshold(laplacian(3)) == pytest.approx(1.9784, abs=1e-4)
    assert coupling_threshold(laplacian(1)) == 0.0


def test_sparse_certificate_on_a_spread_chain():
    e = laplacian(3)
    V = sparse_potential([2.5, 2.4, 1.0], r0=50)
    cert = sparse_certificate(e, V, eps=0.2)
    assert cert.holds
    assert cert.lower_bound == 2
    with pytest.raises(BadParameter):
        sparse_certificate(laplacian(2), from_samples(2, {(0, 0): 1.0}), eps=0.2)


def test_spread_rearrangement_1d_saturates():
    e = laplacian(1)
    V = from_samples(1, {(0,): 0.3, (1,): 0.2, (2,): 0.1})
    W, cert = spread_rearrangement(e, V)
    assert is_rearrangement(V, W)
    assert cert.min_eig > cert.eig_err
    hi, lo = count_ge_one(bs_matrix(e, W, cert.rho))
    assert hi == lo == 3


def test_spread_rearrangement_2d():
    e = laplacian(2)
    V = from_samples(2, {(0, 0): 2.0, (1, 1): 3.0})
    W, cert = spread_rearrangement(e, V)
    assert is_rearrangement(V, W)
    assert cert.spacing >= 1
    with pytest.raises(BadParameter):
        spread_rearrangement(laplacian(3), from_samples(3, {(0, 0, 0): 1.0}))


def test_spread_rearrangement_six_weak_sites_2d():
    e = laplacian(2)
    V = from_samples(2, {(k % 3, k // 3): 0.3 for k in range(6)})
    W, cert = spread_rearrangement(e, V)
    assert is_rearrangement(V, W)
    assert 0 < cert.rho < 1e-6
    assert cert.min_eig > cert.eig_err
    hi, lo = count_ge_one(bs_matrix(e, W, cert.rho))
    assert hi == lo == 6


@pytest.mark.parametrize(
    "dim, samples",
    [
        (1, {(0,): 1.0, (1,): 1.0}),
        (2, {(0, 0): 0.3, (1, 0): 0.3}),
    ],
)
def test_low_dimension_count_settles_below_the_support_size(dim, samples):
    res = n_bound_states_bs(laplacian(dim), from_samples(dim, samples))
    assert res.count == 1
    assert res.stabilized
    assert len({n for _, n in res.history[-3:]}) == 1


def test_bs_refuses_tails_and_zero_rho_in_low_dimension():
    with pytest.raises(TailedPotential):
        bs_matrix(laplacian(3), from_tail(3, ExpTail(1.0, 1.0)), 0.5)
    with pytest.raises(ZeroRhoLowDimension):
        bs_matrix(laplacian(1), from_samples(1, {(0,): 1.0}), 0.0)
