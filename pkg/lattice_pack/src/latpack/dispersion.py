"""Admissible dispersion relations on the torus.

A dispersion is a real, even trigonometric polynomial

    e(p) = sum_x c(x) cos(p . x) - shift

given by finitely many hopping coefficients c(x) = c(-x). The hopping matrix
of the lattice operator is h(e)_{x,y} = c(x - y); ``shift`` is chosen so that
min e = 0. Construction rejects inputs that are not Morse functions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from latpack.errors import AsymmetricCoefficients, BadParameter, EmptyCoefficients, NotMorse
from latpack.torus import axis_views, node_axis, seed_points, torus_distance, wrap

log = logging.getLogger(__name__)

LatticePoint = tuple[int, ...]

MORSE_TOL = 1e-8
NEWTON_MAX_ITER = 50
DEDUP_DIST = 1e-6
MIN_ENERGY_TOL = 1e-9  # relative to max(1, e_max), decides membership in Min(e)
NORMALIZATION_MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class CriticalPoint:
    p: tuple[float, ...]
    energy: float
    hessian_eigs: tuple[float, ...]
    hessian: tuple[tuple[float, ...], ...]

    @property
    def is_minimum(self) -> bool:
        return all(ev > 0 for ev in self.hessian_eigs)


@dataclass(frozen=True)
class MorseReport:
    critical_points: tuple[CriticalPoint, ...]
    k_min: float          # smallest sqrt|Hessian eigenvalue| over all critical points
    n_min: int            # number of global minima
    delta: float          # min of e over Crit \ Min (inf when empty)
    diverged_seeds: int = 0

    @property
    def minima(self) -> tuple[CriticalPoint, ...]:
        emax = max((c.energy for c in self.critical_points), default=1.0)
        cut = MIN_ENERGY_TOL * max(1.0, emax)
        return tuple(c for c in self.critical_points if c.is_minimum and c.energy <= cut)


@dataclass(frozen=True)
class Dispersion:
    dim: int
    offsets: tuple[LatticePoint, ...]
    coeffs: tuple[float, ...]
    shift: float = 0.0
    tol: float = MORSE_TOL
    e_max: float = field(default=math.nan, compare=False)
    morse: Optional[MorseReport] = field(default=None, compare=False, repr=False)

    # ---- trig polynomial kernels -------------------------------------------------

    @property
    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float).reshape(len(self.offsets), self.dim)

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    @property
    def coefficient_range(self) -> int:
        return max((max(abs(c) for c in x) for x in self.offsets), default=0)

    @property
    def c0(self) -> float:
        zero = (0,) * self.dim
        return sum(c for x, c in zip(self.offsets, self.coeffs) if x == zero)

    def value(self, p) -> np.ndarray:
        """e(p) for p of shape (..., dim)."""
        p = np.asarray(p, dtype=float)
        phase = p @ self.offset_array.T
        return np.cos(phase) @ self.coeff_array - self.shift

    def gradient(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        phase = p @ self.offset_array.T
        return -(np.sin(phase) * self.coeff_array) @ self.offset_array

    def hessian(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        phase = p @ self.offset_array.T
        w = np.cos(phase) * self.coeff_array
        X = self.offset_array
        return -np.einsum("...n,ni,nj->...ij", w, X, X)

    def grid_values(self, axis: np.ndarray) -> np.ndarray:
        """e on the tensor grid axis^dim, shape (len(axis),) * dim."""
        views = axis_views(np.asarray(axis, dtype=float), self.dim)
        out = np.full((axis.size,) * self.dim, -self.shift, dtype=float)
        for x, c in zip(self.offsets, self.coeffs):
            phase = sum(xi * v for xi, v in zip(x, views) if xi != 0)
            out += c * np.cos(phase)
        return out


# ----- validation -----


def _check_coeffs(coeffs: Mapping[Sequence[int], float]) -> tuple[int, dict[LatticePoint, float]]:
    if not coeffs:
        raise EmptyCoefficients("coeffs must contain at least one entry")
    norm: dict[LatticePoint, float] = {}
    dims = set()
    for key, c in coeffs.items():
        x = tuple(int(k) for k in key)
        dims.add(len(x))
        if not isinstance(c, (int, float)) or math.isnan(float(c)):
            raise BadParameter(f"coefficient at {x} must be a real number. Got: {c!r}")
        if c != 0:
            norm[x] = norm.get(x, 0.0) + float(c)
    if len(dims) != 1 or 0 in dims:
        raise BadParameter(f"coefficient keys must share one dimension >= 1. Got dims: {sorted(dims)}")
    if not norm:
        raise EmptyCoefficients("all coefficients are zero")
    for x, c in norm.items():
        mirror = tuple(-k for k in x)
        c_m = norm.get(mirror)
        if c_m is None or not math.isclose(c, c_m, rel_tol=1e-12, abs_tol=1e-15):
            raise AsymmetricCoefficients(f"c{x} = {c} but c{mirror} = {c_m}")
    return dims.pop(), norm


# ----- critical points -----


def _default_seed_n(e: Dispersion) -> int:
    return max(8, 4 * e.coefficient_range + 4)


def _newton_polish(e: Dispersion, seeds: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton on grad e = 0. Returns (points, converged mask)."""
    p = np.array(seeds, dtype=float)
    active = np.ones(len(p), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        g = e.gradient(p[active])
        gn = np.linalg.norm(g, axis=-1)
        still = gn >= tol
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
        if not active.any():
            break
        H = e.hessian(p[active])
        step = np.einsum("nij,nj->ni", np.linalg.pinv(H), g[still])
        p[active] = wrap(p[active] - step)
    converged = np.linalg.norm(e.gradient(p), axis=-1) < tol
    return p, converged


def _dedup(points: np.ndarray) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for q in points:
        if all(torus_distance(q, k) >= DEDUP_DIST for k in kept):
            kept.append(q)
    return kept


def morse_report(e: Dispersion, seed_grid_n: Optional[int] = None, tol: Optional[float] = None) -> MorseReport:
    """Critical points of e by grid seeding and Newton polishing.

    Seeds that fail to converge are counted in ``diverged_seeds``; a polished
    point with a Hessian eigenvalue below tol in magnitude raises NotMorse.
    """
    tol = e.tol if tol is None else tol
    n = seed_grid_n or _default_seed_n(e)
    seeds = seed_points(n, e.dim)
    pts, ok = _newton_polish(e, seeds, tol)
    diverged = int((~ok).sum())
    if diverged:
        log.debug("morse_report: %d of %d seeds did not converge", diverged, len(seeds))

    crit: list[CriticalPoint] = []
    for q in _dedup(wrap(pts[ok])):
        H = e.hessian(q)
        eigs = np.linalg.eigvalsh(H)
        if np.min(np.abs(eigs)) < tol:
            raise NotMorse(f"degenerate critical point at p={np.round(q, 6).tolist()}, hessian eigs={eigs.tolist()}")
        crit.append(
            CriticalPoint(
                p=tuple(float(v) for v in q),
                energy=float(e.value(q)),
                hessian_eigs=tuple(float(v) for v in eigs),
                hessian=tuple(tuple(float(v) for v in row) for row in H),
            )
        )
    if not crit:
        raise NotMorse("no critical point found; increase seed_grid_n")
    crit.sort(key=lambda c: (c.energy, c.p))
    return _summarize(tuple(crit), diverged)


def _summarize(crit: tuple[CriticalPoint, ...], diverged: int) -> MorseReport:
    """Assemble a MorseReport from critical points with normalized energies."""
    emax = max(c.energy for c in crit)
    cut = MIN_ENERGY_TOL * max(1.0, emax)
    is_min = [c.is_minimum and c.energy <= cut for c in crit]
    others = [c.energy for c, m in zip(crit, is_min) if not m]
    return MorseReport(
        critical_points=crit,
        k_min=min(math.sqrt(abs(ev)) for c in crit for ev in c.hessian_eigs),
        n_min=sum(is_min),
        delta=min(others) if others else math.inf,
        diverged_seeds=diverged,
    )


# ----- construction -----


def _normalization_axis_n(dim: int, coef_range: int) -> int:
    n = max(64, 8 * coef_range)
    while n**dim > NORMALIZATION_MAX_POINTS and n > 8 * max(coef_range, 1):
        n //= 2
    return n


def make_dispersion(
    coeffs: Mapping[Sequence[int], float],
    tol: float = MORSE_TOL,
    seed_grid_n: Optional[int] = None,
) -> Dispersion:
    """Validate coefficients, normalize min e = 0 and attach the Morse report."""
    dim, norm = _check_coeffs(coeffs)
    offsets = tuple(sorted(norm))
    raw = Dispersion(dim=dim, offsets=offsets, coeffs=tuple(norm[x] for x in offsets), tol=tol)

    n = _normalization_axis_n(dim, raw.coefficient_range)
    grid = raw.grid_values(node_axis(n))
    seeds = seed_points(n, dim)[[int(np.argmin(grid)), int(np.argmax(grid))]]
    polished, _ = _newton_polish(raw, seeds, tol)
    pol_vals = raw.value(polished)

    report = morse_report(raw, seed_grid_n, tol)
    crit_e = [c.energy for c in report.critical_points]
    shift = float(min(grid.min(), pol_vals.min(), min(crit_e)))
    top = float(max(grid.max(), pol_vals.max(), max(crit_e)))

    shifted = tuple(
        CriticalPoint(c.p, c.energy - shift, c.hessian_eigs, c.hessian) for c in report.critical_points
    )
    report = _summarize(shifted, report.diverged_seeds)
    e = Dispersion(
        dim=dim, offsets=offsets, coeffs=raw.coeffs, shift=shift, tol=tol, e_max=top - shift, morse=report
    )
    log.debug("dispersion d=%d: shift=%.12g e_max=%.12g n_crit=%d", dim, shift, e.e_max, len(shifted))
    return e


def evaluate(e: Dispersion, p) -> float | np.ndarray:
    """e(p); scalar for a single point, array for stacked points."""
    out = e.value(p)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=None)
def laplacian(d: int) -> Dispersion:
    """Discrete Laplacian: e(p) = sum_i (1 - cos p_i), e_max = 2d."""
    if int(d) != d or d < 1:
        raise BadParameter(f"d must be an integer >= 1. Got: {d!r}")
    coeffs: dict[LatticePoint, float] = {(0,) * d: float(d)}
    for i in range(d):
        for s in (1, -1):
            x = [0] * d
            x[i] = s
            coeffs[tuple(x)] = -0.5
    return make_dispersion(coeffs)


def nearest_neighbor(d: int, t: float) -> Dispersion:
    """Laplacian plus a next-nearest hopping t on every +-(e_i +- e_j)."""
    if d < 2:
        raise BadParameter(f"next-nearest hopping needs d >= 2. Got: {d}")
    base = coeff_map(laplacian(d))
    for i in range(d):
        for j in range(i + 1, d):
            for si in (1, -1):
                for sj in (1, -1):
                    x = [0] * d
                    x[i], x[j] = si, sj
                    base[tuple(x)] = base.get(tuple(x), 0.0) + float(t)
    return make_dispersion(base)


def scaled(e: Dispersion, s: float) -> Dispersion:
    """The dispersion s * e (s > 0)."""
    if s <= 0:
        raise BadParameter(f"scale must be > 0. Got: {s}")
    return make_dispersion({x: s * c for x, c in zip(e.offsets, e.coeffs)}, tol=e.tol)


def coeff_map(e: Dispersion) -> dict[LatticePoint, float]:
    return dict(zip(e.offsets, e.coeffs))
