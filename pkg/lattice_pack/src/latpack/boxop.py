"""Finite-box sections of H(e, V) = h(e) - V and exact eigenvalue counts.

Counts come from matrix inertia: the number of eigenvalues below t equals the
number of negative pivots in a symmetric factorization of H - t I.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu

from latpack.dispersion import Dispersion
from latpack.errors import BadParameter, BoxTooSmall, SingularShift
from latpack.potential import Potential

log = logging.getLogger(__name__)

BoundaryCondition = Literal["restriction", "periodic"]

NEGATIVE_THRESHOLD = -1e-10
PIVOT_TOL = 1e-12
JITTER = 1e-9
DENSE_MAX = 1500
DENSE_FALLBACK_MAX = 5000

_START_L = {1: 16, 2: 8, 3: 4}
_MAX_L = {1: 2048, 2: 64, 3: 16}


def default_start_l(dim: int) -> int:
    return _START_L.get(dim, 2)


def default_max_l(dim: int) -> int:
    return _MAX_L.get(dim, 4)


@dataclass(frozen=True, eq=False)
class BoxOperator:
    dim: int
    box_l: int
    bc: BoundaryCondition
    matrix: sp.csr_matrix
    coefficient_range: int = 1

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def site(self, index: int) -> tuple[int, ...]:
        side = 2 * self.box_l + 1
        return tuple(int(i) - self.box_l for i in np.unravel_index(index, (side,) * self.dim))


@dataclass(frozen=True)
class CountResult:
    count: int
    stabilized: bool
    history: tuple[tuple[float, int], ...] = field(default_factory=tuple)
    threshold: float = NEGATIVE_THRESHOLD


def _box_coords(dim: int, box_l: int) -> np.ndarray:
    ax = np.arange(-box_l, box_l + 1, dtype=np.int64)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def assemble(e: Dispersion, V: Potential, box_l: int, bc: BoundaryCondition = "restriction") -> BoxOperator:
    """Sparse section of h(e) - V on the sites |x|_inf <= box_l, lexicographic order."""
    if bc not in ("restriction", "periodic"):
        raise BadParameter(f"bc must be 'restriction' or 'periodic'. Got: {bc!r}")
    if V.dim != e.dim:
        raise BadParameter(f"dimension mismatch: dispersion d={e.dim}, potential d={V.dim}")
    if box_l < max(e.coefficient_range, 1):
        raise BoxTooSmall(f"box_l={box_l} is smaller than the hopping range {e.coefficient_range}")
    side = 2 * box_l + 1
    shape = (side,) * e.dim
    coords = _box_coords(e.dim, box_l)
    idx = np.arange(coords.shape[0])

    rows, cols, data = [], [], []
    zero = (0,) * e.dim
    for x, c in zip(e.offsets, e.coeffs):
        if x == zero:
            continue
        nb = coords - np.asarray(x, dtype=np.int64)
        if bc == "periodic":
            nb = (nb + box_l) % side - box_l
            keep = np.ones(idx.size, dtype=bool)
        else:
            keep = np.all(np.abs(nb) <= box_l, axis=1)
        rows.append(idx[keep])
        cols.append(np.ravel_multi_index(tuple((nb[keep] + box_l).T), shape))
        data.append(np.full(int(keep.sum()), c))

    _, v = V.values_on_box(box_l)
    rows.append(idx)
    cols.append(idx)
    data.append(e.c0 - e.shift - v)
    A = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(idx.size, idx.size)
    ).tocsr()
    A.sum_duplicates()
    return BoxOperator(e.dim, box_l, bc, A, e.coefficient_range)


def gershgorin_bounds(H: BoxOperator) -> tuple[float, float]:
    A = H.matrix
    diag = A.diagonal()
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def _scale(H: BoxOperator) -> float:
    lo, hi = gershgorin_bounds(H)
    return max(abs(lo), abs(hi), 1.0)


def _singular(t: float, norm: float, where: str) -> SingularShift:
    return SingularShift(f"t={t:.12g} is within pivot tolerance of an eigenvalue ({where})", t - JITTER * norm)


def _sturm_count(H: BoxOperator, t: float, norm: float) -> int:
    a = H.matrix.diagonal() - t
    b2 = H.matrix.diagonal(1) ** 2
    tiny = PIVOT_TOL * norm
    q = a[0]
    neg = 0
    for i in range(a.size):
        if i:
            q = a[i] - b2[i - 1] / q
        if abs(q) < tiny:
            raise _singular(t, norm, "Sturm recurrence")
        neg += q < 0
    return int(neg)


def _dense_count(A: np.ndarray, t: float, norm: float) -> int:
    _, D, _ = scipy.linalg.ldl(A - t * np.eye(A.shape[0]), lower=True)
    neg, i, n = 0, 0, D.shape[0]
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0.0:
            block = np.linalg.eigvalsh(D[i:i + 2, i:i + 2])
            i += 2
        else:
            block = np.array([D[i, i]])
            i += 1
        if np.min(np.abs(block)) < PIVOT_TOL * norm:
            raise _singular(t, norm, "dense LDL pivot")
        neg += int((block < 0).sum())
    return neg


def _sparse_count(H: BoxOperator, t: float, norm: float) -> int:
    A = (H.matrix - t * sp.identity(H.size, format="csr")).tocsc()
    try:
        lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise _singular(t, norm, f"sparse LU: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        if H.size <= DENSE_FALLBACK_MAX:
            log.debug("sparse LU left symmetric mode at n=%d; dense fallback", H.size)
            return _dense_count(H.matrix.toarray(), t, norm)
        raise _singular(t, norm, "sparse LU used off-diagonal pivots")
    piv = lu.U.diagonal()
    if np.min(np.abs(piv)) < PIVOT_TOL * norm:
        raise _singular(t, norm, "sparse LU pivot")
    return int((piv < 0).sum())


def count_below(H: BoxOperator, t: float) -> int:
    """Number of eigenvalues of H strictly below t."""
    norm = _scale(H)
    if H.dim == 1 and H.bc == "restriction" and H.coefficient_range == 1:
        return _sturm_count(H, t, norm)
    if H.size <= DENSE_MAX:
        return _dense_count(H.matrix.toarray(), t, norm)
    return _sparse_count(H, t, norm)


def count_below_jittered(H: BoxOperator, t: float, retries: int = 3) -> tuple[int, float]:
    """count_below, moving t down on SingularShift. Returns (count, t used)."""
    for _ in range(retries):
        try:
            return count_below(H, t), t
        except SingularShift as exc:
            log.warning("SingularShift at t=%.12g (box_l=%d); retrying at %.12g", t, H.box_l, exc.suggested_t)
            t = exc.suggested_t
    return count_below(H, t), t


def lowest_eigenvalues(H: BoxOperator, k: int) -> list[float]:
    if k <= 0:
        return []
    k = min(k, H.size)
    if H.size <= 2000 or k >= H.size - 1:
        vals = scipy.linalg.eigvalsh(H.matrix.toarray(), subset_by_index=[0, k - 1])
    else:
        lo, _ = gershgorin_bounds(H)
        vals = eigsh(H.matrix.tocsc(), k=k, sigma=lo - 1.0, which="LM", return_eigenvectors=False, tol=1e-12)
    return sorted(float(v) for v in vals)


def n_below_threshold(
    e: Dispersion,
    V: Potential,
    t: float,
    start_l: Optional[int] = None,
    max_l: Optional[int] = None,
    bc: BoundaryCondition = "restriction",
) -> CountResult:
    """Box-doubling count of eigenvalues below t; stabilized when three boxes agree."""
    L = max(start_l or default_start_l(e.dim), e.coefficient_range)
    top = max(max_l or default_max_l(e.dim), L)
    history: list[tuple[float, int]] = []
    while L <= top:
        n, _ = count_below_jittered(assemble(e, V, L, bc), t)
        history.append((L, n))
        log.debug("box count d=%d box_l=%d t=%.3g: %d", e.dim, L, t, n)
        if len(history) >= 3 and len({c for _, c in history[-3:]}) == 1:
            return CountResult(n, True, tuple(history), t)
        L *= 2
    return CountResult(history[-1][1], False, tuple(history), t)


def n_bound_states(
    e: Dispersion,
    V: Potential,
    t: float = NEGATIVE_THRESHOLD,
    start_l: Optional[int] = None,
    max_l: Optional[int] = None,
    bc: BoundaryCondition = "restriction",
) -> CountResult:
    """Stabilized number of negative eigenvalues of H(e, V)."""
    return n_below_threshold(e, V, t, start_l, max_l, bc)


def essential_spectrum_census(e: Dispersion, V: Potential, box_l: int, eps: float = 1e-3) -> tuple[int, int, int]:
    """(#eigs below -eps, #eigs above e_max + eps, matrix size)."""
    H = assemble(e, V, box_l)
    below, _ = count_below_jittered(H, -eps)
    not_above, _ = count_below_jittered(H, e.e_max + eps)
    return below, H.size - not_above, H.size


def to_triplets(H: BoxOperator) -> str:
    """Upper and lower entries as 'row col value' lines, row-major."""
    A = H.matrix.tocoo()
    order = np.lexsort((A.col, A.row))
    return "".join(f"{r} {c} {v!r}\n" for r, c, v in zip(A.row[order], A.col[order], A.data[order].tolist()))


def is_symmetric(H: BoxOperator) -> bool:
    diff = H.matrix - H.matrix.T
    return diff.count_nonzero() == 0 or math.isclose(abs(diff).max(), 0.0)
