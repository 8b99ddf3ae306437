import numpy as np
import pytest

from latpack.boxop import (
    DENSE_MAX,
    assemble,
    count_below,
    count_below_jittered,
    essential_spectrum_census,
    gershgorin_bounds,
    is_symmetric,
    lowest_eigenvalues,
    n_bound_states,
    to_triplets,
)
from latpack.dispersion import laplacian, nearest_neighbor
from latpack.errors import BadParameter, BoxTooSmall, SingularShift
from latpack.potential import from_samples, random_finite, zero


def test_assemble_1d_entries():
    H = assemble(laplacian(1), zero(1), 2)
    A = H.matrix.toarray()
    assert H.size == 5
    assert np.allclose(np.diag(A), 1.0)
    assert np.allclose(np.diag(A, 1), -0.5)
    assert A[0, 4] == 0.0
    assert is_symmetric(H)


def test_periodic_wraps_around():
    A = assemble(laplacian(1), zero(1), 2, bc="periodic").matrix.toarray()
    assert A[0, 4] == pytest.approx(-0.5)


def test_potential_enters_the_diagonal():
    H = assemble(laplacian(2), from_samples(2, {(1, -1): 3.0}), 2)
    i = next(k for k in range(H.size) if H.site(k) == (1, -1))
    assert H.matrix[i, i] == pytest.approx(2.0 - 3.0)


def test_assemble_validation():
    with pytest.raises(BoxTooSmall):
        assemble(laplacian(1), zero(1), 0)
    with pytest.raises(BadParameter):
        assemble(laplacian(1), zero(1), 4, bc="dirichlet")
    with pytest.raises(BadParameter):
        assemble(laplacian(2), zero(1), 4)


def test_single_site_eigenvalue_1d_closed_form():
    # V = 0.75 delta_0 has E = -rho with rho^2 + 2 rho = 0.75^2, so E = -0.25
    H = assemble(laplacian(1), from_samples(1, {(0,): 0.75}), 64)
    assert lowest_eigenvalues(H, 1)[0] == pytest.approx(-0.25, abs=1e-9)


def _gap_midpoints(A, ks):
    w = np.linalg.eigvalsh(A)
    return [(k + 1, 0.5 * (w[k] + w[k + 1])) for k in ks]


@pytest.mark.parametrize(
    "dim, box_l",
    [
        (1, 40),  # Sturm recurrence
        (2, 10),  # dense LDL
        (2, 20),  # sparse LU
    ],
)
def test_inertia_count_matches_eigvalsh(dim, box_l):
    V = random_finite(dim, 12, 6, 6.0, np.random.default_rng(11))
    H = assemble(laplacian(dim), V, box_l)
    for expected, t in _gap_midpoints(H.matrix.toarray(), [0, 3, 7]):
        assert count_below(H, t) == expected


def test_sparse_path_is_used_for_large_boxes():
    assert assemble(laplacian(2), zero(2), 20).size > DENSE_MAX


def test_longer_range_hopping_counts_agree():
    e = nearest_neighbor(2, 0.05)
    H = assemble(e, from_samples(2, {(0, 0): 4.0, (2, 1): 3.0}), 6)
    for expected, t in _gap_midpoints(H.matrix.toarray(), [0, 1]):
        assert count_below(H, t) == expected


def test_singular_shift_and_jitter():
    # constants are in the kernel of the periodic Laplacian
    H = assemble(laplacian(1), zero(1), 4, bc="periodic")
    with pytest.raises(SingularShift) as info:
        count_below(H, 0.0)
    assert info.value.suggested_t < 0.0
    n, t = count_below_jittered(H, 0.0)
    assert n == 0
    assert t < 0.0


def test_triplets_cover_every_entry():
    H = assemble(laplacian(1), zero(1), 2)
    lines = to_triplets(H).splitlines()
    assert len(lines) == 5 + 8
    row, col, value = lines[0].split()
    assert (row, col) == ("0", "0")
    assert float(value) == pytest.approx(1.0)


def test_gershgorin_of_free_laplacian():
    lo, hi = gershgorin_bounds(assemble(laplacian(1), zero(1), 8))
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert hi == pytest.approx(2.0)


def test_free_operator_has_no_spectrum_outside_band():
    below, above, size = essential_spectrum_census(laplacian(1), zero(1), 16)
    assert (below, above, size) == (0, 0, 33)


def test_single_site_bound_state_in_one_dimension():
    res = n_bound_states(laplacian(1), from_samples(1, {(0,): 0.5}))
    assert res.count == 1
    assert res.stabilized
    assert len(res.history) >= 3


def test_unstabilized_when_boxes_run_out():
    res = n_bound_states(laplacian(1), from_samples(1, {(0,): 0.5}), start_l=16, max_l=32)
    assert not res.stabilized
    assert [L for L, _ in res.history] == [16, 32]
