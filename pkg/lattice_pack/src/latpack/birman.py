"""Birman-Schwinger reduction on the support of a finite potential.

B(rho) = V^{1/2} (rho + h(e))^{-1} V^{1/2} restricted to supp V. The number of
eigenvalues of H(e, V) at or below -rho equals the number of eigenvalues of
B(rho) that are >= 1. Green's function quadrature error is carried through as
an eigenvalue error band ``eig_err = green_err * |V|_1``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from latpack.boxop import CountResult
from latpack.dispersion import Dispersion
from latpack.errors import BadParameter, SpacingOverflow, TailedPotential, ThresholdAmbiguous
from latpack.green import DEFAULT_TOL, eta, green_table, near_cap
from latpack.potential import LatticePoint, Potential, level_count

log = logging.getLogger(__name__)

DEFAULT_MARGIN = 1e-6
MAX_SPACING = 2**62
SETTLE_STEPS = 3


def default_rho_seq() -> tuple[float, ...]:
    return tuple(2.0**-k for k in range(21))


@dataclass(frozen=True, eq=False)
class BSMatrix:
    rho: float
    points: tuple[LatticePoint, ...]
    values: np.ndarray
    matrix: np.ndarray
    green_err: float
    eig_err: float

    def eigenvalues(self) -> np.ndarray:
        if not self.points:
            return np.zeros(0)
        return np.linalg.eigvalsh(self.matrix)


def _table_radius(dim: int, r: int) -> int:
    cap = near_cap(dim)
    if r >= cap:
        return cap
    return 1 << max(r, 1).bit_length() if r > 0 else 0


def green_matrix(
    e: Dispersion, rho: float, points: Sequence[LatticePoint], tol: float = DEFAULT_TOL
) -> tuple[np.ndarray, float]:
    """[G_rho(x - y)] over points, with the largest entry error."""
    n = len(points)
    pts = [tuple(int(c) for c in x) for x in points]
    lo = min((min(x) for x in pts), default=0)
    hi = max((max(x) for x in pts), default=0)
    reach = hi - lo
    table = green_table(e, float(rho), _table_radius(e.dim, reach), tol)
    R = table.radius
    G = np.empty((n, n))
    err = table.err

    far: list[tuple[int, int]] = []
    if abs(lo) < 2**40 and abs(hi) < 2**40:
        arr = np.asarray(pts, dtype=np.int64)
        diff = arr[:, None, :] - arr[None, :, :]
        near = np.all(np.abs(diff) <= R, axis=-1)
        idx = tuple(np.moveaxis(np.where(near[..., None], diff, 0) + R, -1, 0))
        G[:] = table.values[idx]
        far = [(i, j) for i, j in zip(*np.nonzero(~near)) if i < j]
    else:
        far = [(i, j) for i in range(n) for j in range(i, n)]

    for i, j in far:
        dx = tuple(a - b for a, b in zip(pts[i], pts[j]))
        G[i, j] = G[j, i] = table.value(dx)
        err = max(err, table.err_at(dx))
    return G, err


def bs_matrix(e: Dispersion, V: Potential, rho: float, tol: float = DEFAULT_TOL) -> BSMatrix:
    if V.tail is not None:
        raise TailedPotential("bs_matrix needs a finitely supported potential; truncate first")
    items = V.nonzero_items()
    if not items:
        return BSMatrix(float(rho), (), np.zeros(0), np.zeros((0, 0)), 0.0, 0.0)
    points = tuple(x for x, _ in items)
    vals = np.array([v for _, v in items])
    G, err = green_matrix(e, rho, points, tol)
    s = np.sqrt(vals)
    B = s[:, None] * G * s[None, :]
    return BSMatrix(float(rho), points, vals, 0.5 * (B + B.T), err, err * float(vals.sum()))


def count_ge_one(B: BSMatrix, margin: float = DEFAULT_MARGIN) -> tuple[int, int]:
    """(count_hi, count_lo): eigenvalues >= 1 - band and >= 1 + band."""
    ev = B.eigenvalues()
    band = margin + B.eig_err
    return int(np.sum(ev >= 1.0 - band)), int(np.sum(ev >= 1.0 + band))


def n_below_via_bs(
    e: Dispersion, V: Potential, rho: float, margin: float = DEFAULT_MARGIN, tol: float = DEFAULT_TOL
) -> int:
    """#{eigenvalues of H(e, V) <= -rho}."""
    B = bs_matrix(e, V, rho, tol)
    hi, lo = count_ge_one(B, margin)
    if hi != lo:
        ev = B.eigenvalues()
        band = margin + B.eig_err
        inside = [float(v) for v in ev if abs(v - 1.0) < band]
        raise ThresholdAmbiguous(f"B({rho:g}) has eigenvalue(s) {inside} within {band:.3g} of 1", inside)
    return hi


def _count_with_jitter(e: Dispersion, V: Potential, rho: float, margin: float, tol: float) -> tuple[int, float]:
    for _ in range(4):
        try:
            return n_below_via_bs(e, V, rho, margin, tol), rho
        except ThresholdAmbiguous as exc:
            log.warning("%s; retrying at rho=%.6g", exc, rho * 1.01)
            rho *= 1.01
    return n_below_via_bs(e, V, rho, margin, tol), rho


def n_bound_states_bs(
    e: Dispersion,
    V: Potential,
    rho_seq: Optional[Sequence[float]] = None,
    margin: float = DEFAULT_MARGIN,
    tol: float = DEFAULT_TOL,
) -> CountResult:
    """Number of negative eigenvalues from B(rho) along a decreasing rho sequence.

    For d >= 3 the limit is cross-checked against the eigenvalues of B(0). For
    d <= 2 the count is stabilized once it reaches #supp V, or when the last
    SETTLE_STEPS values of rho give the same count.
    """
    n_supp = len(V.nonzero_items()) if V.tail is None else None
    if n_supp == 0:
        return CountResult(0, True, (), 0.0)
    seq = sorted(rho_seq or default_rho_seq(), reverse=True)
    ceiling = n_supp
    if e.dim >= 3:
        hi0, lo0 = count_ge_one(bs_matrix(e, V, 0.0, tol), margin)
        ceiling = hi0 if hi0 == lo0 else None
    history: list[tuple[float, int]] = []
    count, used = 0, seq[0]
    for rho in seq:
        count, used = _count_with_jitter(e, V, rho, margin, tol)
        history.append((used, count))
        log.debug("bs count d=%d rho=%.3g: %d", e.dim, used, count)
        if ceiling is not None and count >= ceiling:
            break
    stabilized = ceiling is not None and count == ceiling
    if not stabilized and e.dim <= 2 and len(history) >= SETTLE_STEPS:
        stabilized = len({c for _, c in history[-SETTLE_STEPS:]}) == 1
    return CountResult(count, stabilized, tuple(history), -used)


def schur_offdiag(
    e: Dispersion,
    points: Sequence[LatticePoint],
    rho_grid: Sequence[float] = (1.0, 0.5, 0.25, 0.1),
    include_zero: Optional[bool] = None,
    tol: float = DEFAULT_TOL,
) -> float:
    """max over rho of max_x sum_{y != x} |G_rho(x - y)|."""
    if len(points) < 2:
        return 0.0
    grid = list(rho_grid)
    if include_zero if include_zero is not None else e.dim >= 3:
        grid.append(0.0)
    best = 0.0
    for rho in grid:
        G, _ = green_matrix(e, rho, points, tol)
        off = np.abs(G)
        np.fill_diagonal(off, 0.0)
        best = max(best, float(off.sum(axis=1).max()))
    return best


def bs_norm(e: Dispersion, V: Potential, rho: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(largest eigenvalue of B(rho), eigenvalue error)."""
    B = bs_matrix(e, V, rho, tol)
    ev = B.eigenvalues()
    return (float(ev.max()) if ev.size else 0.0), B.eig_err


def k_positive(e: Dispersion, V: Potential, rho: float, tol: float = DEFAULT_TOL) -> bool:
    """True iff B(rho) - I > 0 beyond the eigenvalue error."""
    B = bs_matrix(e, V, rho, tol)
    ev = B.eigenvalues()
    return bool(ev.size) and float(ev.min()) - 1.0 > B.eig_err


def bs_min_eig_vs_diag(B: BSMatrix, e_max: float) -> float:
    """Smallest eigenvalue of B - diag(V) / e_max."""
    if not B.points:
        return 0.0
    return float(np.linalg.eigvalsh(B.matrix - np.diag(B.values / e_max)).min())


def coupling_threshold(e: Dispersion) -> float:
    """Single-site critical coupling: eta(e) for d >= 3, 0 for d <= 2."""
    return eta(e)


# ----- certificates -----


@dataclass(frozen=True)
class SparseCertificate:
    eta: float
    eps: float
    schur: float
    holds: bool
    lower_bound: int   # L_V[(1 + eps) eta], valid when holds


def sparse_certificate(
    e: Dispersion, V: Potential, eps: float, rho_grid: Sequence[float] = (1.0, 0.5, 0.25, 0.1)
) -> SparseCertificate:
    """Sparse-support lower bound: eta * offdiag < eps / (1 + eps) gives N >= L_V[(1 + eps) eta]."""
    if e.dim < 3:
        raise BadParameter(f"sparse_certificate needs d >= 3. Got d = {e.dim}")
    h = eta(e)
    pts = V.support
    s = schur_offdiag(e, pts, rho_grid)
    return SparseCertificate(h, eps, s, h * s < eps / (1.0 + eps), level_count(V, (1.0 + eps) * h))


@dataclass(frozen=True)
class SpreadCertificate:
    rho: float
    spacing: int
    min_eig: float     # smallest eigenvalue of B(rho) - I
    eig_err: float


def _pick_rho(e: Dispersion, vmin: float, tol: float) -> tuple[float, float]:
    rho = 1.0
    while True:
        g0 = green_table(e, rho, 0, tol)[(0,) * e.dim]
        if vmin * g0 > 2.0:
            return rho, g0
        rho /= 4.0
        if rho < 1e-300:
            raise SpacingOverflow(f"no rho with min V * G_rho(0) > 2 (min V = {vmin})")


def spread_rearrangement(e: Dispersion, V: Potential, tol: float = DEFAULT_TOL) -> tuple[Potential, SpreadCertificate]:
    """Rearrange V along an arithmetic chain spread until B(rho) > I.

    rho is chosen with min V * G_rho(0) > 2 (possible because G_rho(0) diverges
    as rho -> 0 in d <= 2); the spacing doubles until the off-diagonal part is
    small enough that every eigenvalue of B(rho) exceeds 1.
    """
    if e.dim not in (1, 2):
        raise BadParameter(f"spread_rearrangement needs d in {{1, 2}}. Got d = {e.dim}")
    if V.tail is not None:
        raise TailedPotential("spread_rearrangement needs a finitely supported potential")
    vals = sorted((v for _, v in V.nonzero_items()), reverse=True)
    if not vals:
        raise BadParameter("spread_rearrangement needs V != 0")
    rho, g0 = _pick_rho(e, vals[-1], tol)
    if len(vals) == 1:
        return V, SpreadCertificate(rho, 0, vals[0] * g0 - 1.0, 0.0)
    spacing = 1
    while spacing <= MAX_SPACING:
        W = Potential(e.dim, {(k * spacing,) + (0,) * (e.dim - 1): v for k, v in enumerate(vals)})
        B = bs_matrix(e, W, rho, tol)
        low = float(B.eigenvalues().min()) - 1.0
        log.debug("spread d=%d rho=%.3g spacing=%d: min eig(B - I) = %.4g", e.dim, rho, spacing, low)
        if low > B.eig_err:
            return W, SpreadCertificate(rho, spacing, low, B.eig_err)
        spacing *= 2
    raise SpacingOverflow(f"no certificate up to spacing 2^62 at rho={rho:g}")
