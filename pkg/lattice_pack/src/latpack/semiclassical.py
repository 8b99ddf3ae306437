"""Phase-space functionals N_sc[e, V] with honest brackets.

Everything here reads one sorted sample store of e on the midpoint grids M and
2M. A cell is certainly inside {e < t} when its sample plus the local variation
stays below t, and may touch the set when the sample minus the variation does.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from latpack.dispersion import Dispersion
from latpack.errors import BadParameter, QuadratureNotConverged
from latpack.green import green_table
from latpack.potential import Potential, level_count, tail_sum
from latpack.torus import ball_volume, midpoint_axis

log = logging.getLogger(__name__)

_GRID_M = {1: 4096, 2: 512, 3: 64}
CLR_WIDTH_LIMIT = 0.1


def default_grid_m(dim: int) -> int:
    return _GRID_M.get(dim, 16)


@dataclass(frozen=True)
class ScBracket:
    lower: float
    upper: float
    grid_m: int = 0
    truncation_note: bool = False

    @classmethod
    def infinite(cls, grid_m: int = 0) -> "ScBracket":
        return cls(math.inf, math.inf, grid_m, True)

    @classmethod
    def exact(cls, value: float) -> "ScBracket":
        return cls(float(value), float(value))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.lower)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def __add__(self, other: "ScBracket") -> "ScBracket":
        return ScBracket(
            self.lower + other.lower,
            self.upper + other.upper,
            max(self.grid_m, other.grid_m),
            self.truncation_note or other.truncation_note,
        )

    def scaled(self, s: float) -> "ScBracket":
        return ScBracket(self.lower * s, self.upper * s, self.grid_m, self.truncation_note)


@dataclass(frozen=True)
class ScConstants:
    c1: float
    c2: float
    clr_c: Optional[float] = None
    clr_total: Optional[float] = None


class SampleStore:
    """Sorted samples of e on the midpoint grids M and 2M."""

    def __init__(self, e: Dispersion, grid_m: int):
        self.e, self.grid_m = e, int(grid_m)
        self.coarse = np.sort(e.grid_values(midpoint_axis(self.grid_m)).ravel())
        fine = e.grid_values(midpoint_axis(2 * self.grid_m))
        var = np.zeros_like(fine)
        for ax in range(e.dim):
            step = np.maximum(np.abs(np.roll(fine, 1, axis=ax) - fine), np.abs(np.roll(fine, -1, axis=ax) - fine))
            var += 0.5 * step
        flat = fine.ravel()
        order = np.argsort(flat)
        self.values = flat[order]
        self.lo = np.sort(flat - var.ravel())
        self.hi = np.sort(flat + var.ravel())
        self.recip_suffix = np.concatenate([np.cumsum((1.0 / self.values)[::-1])[::-1], [0.0]])
        self.n = flat.size

    def fraction_below(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Bracket arrays for mu*{e < t} at each t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        inside = np.searchsorted(self.hi, t, side="left") / self.n
        touching = np.searchsorted(self.lo, t, side="left") / self.n
        coarse = np.searchsorted(self.coarse, t, side="left") / self.coarse.size
        lo = np.minimum(inside, coarse)
        hi = np.maximum(touching, coarse)
        lo = np.where(t <= 0, 0.0, np.where(t > self.e.e_max, 1.0, lo))
        hi = np.where(t <= 0, 0.0, np.where(t > self.e.e_max, 1.0, hi))
        return lo, hi

    def layer_fraction(self, t: float) -> float:
        return float(np.searchsorted(self.lo, t, side="left") - np.searchsorted(self.hi, t, side="left")) / self.n

    def recip_sum_above(self, t: float) -> float:
        """(1/N) sum of 1/e over fine-grid samples with e > t."""
        return float(self.recip_suffix[np.searchsorted(self.values, t, side="right")]) / self.n


@lru_cache(maxsize=16)
def sample_store(e: Dispersion, grid_m: Optional[int] = None) -> SampleStore:
    m = grid_m or default_grid_m(e.dim)
    log.debug("building sample store d=%d M=%d", e.dim, m)
    return SampleStore(e, m)


def sublevel_volume(e: Dispersion, t: float, grid_m: Optional[int] = None) -> ScBracket:
    if t <= 0:
        return ScBracket(0.0, 0.0, 0)
    if t > e.e_max:
        return ScBracket(1.0, 1.0, 0)
    store = sample_store(e, grid_m)
    lo, hi = store.fraction_below(t)
    return ScBracket(float(lo[0]), float(hi[0]), store.grid_m)


# ----- constants -----


def small_t_ratio(e: Dispersion) -> float:
    """lim_{t -> 0} mu*{e < t} / (t / e_max)^(d/2) from the Hessians at the minima."""
    d = e.dim
    total = 0.0
    for m in e.morse.minima:
        total += ball_volume(d) * 2.0 ** (d / 2.0) / math.sqrt(float(np.prod(m.hessian_eigs)))
    return total * e.e_max ** (d / 2.0) / (2.0 * math.pi) ** d


def _default_t_grid(e: Dispersion) -> tuple[float, ...]:
    return tuple(np.geomspace(e.e_max / 20.0, e.e_max, 16))


@lru_cache(maxsize=32)
def _sandwich(e: Dispersion, t_grid: tuple[float, ...], grid_m: Optional[int]) -> ScConstants:
    t = np.asarray(t_grid, dtype=float)
    lo, hi = sample_store(e, grid_m).fraction_below(t)
    den = np.minimum(1.0, t / e.e_max) ** (e.dim / 2.0)
    return ScConstants(c1=float(np.min(lo / den)), c2=float(np.max(hi / den)))


def sandwich_constants(e: Dispersion, t_grid: Optional[Sequence[float]] = None, grid_m: Optional[int] = None) -> ScConstants:
    """c1 <= mu*{e < t} / min(1, t/e_max)^(d/2) <= c2 over the sampled t grid."""
    grid = tuple(float(v) for v in t_grid) if t_grid is not None else _default_t_grid(e)
    if any(v <= 0 for v in grid):
        raise BadParameter(f"t_grid must be positive. Got: {list(grid)}")
    return _sandwich(e, grid, grid_m)


def _tail_c2(e: Dispersion, grid_m: Optional[int]) -> float:
    return max(sandwich_constants(e, grid_m=grid_m).c2, 1.25 * small_t_ratio(e))


def clr_profile(e: Dispersion, E_grid: Optional[Sequence[float]] = None, grid_m: Optional[int] = None) -> pd.DataFrame:
    """f(E) = int_{0 < e <= E} dmu*/e as a bracket, d >= 3."""
    if e.dim < 3:
        raise BadParameter(f"CLR constant needs d >= 3. Got d = {e.dim}")
    grid = np.asarray(E_grid if E_grid is not None else np.geomspace(e.e_max / 20.0, e.e_max, 12), dtype=float)
    table = green_table(e, 0.0, 0)
    g0, gerr = table[(0,) * e.dim], table.err
    store = sample_store(e, grid_m)
    rows = []
    for E in grid:
        mid = g0 - store.recip_sum_above(E)
        layer = store.layer_fraction(E) / E
        rows.append({"E": float(E), "f_lo": mid - layer - gerr, "f_hi": mid + layer + gerr})
    frame = pd.DataFrame(rows)
    frame["ratio"] = frame["f_hi"] / frame["E"] ** ((e.dim - 2) / 2.0)
    return frame


def clr_constant(e: Dispersion, E_grid: Optional[Sequence[float]] = None, grid_m: Optional[int] = None) -> ScConstants:
    prof = clr_profile(e, E_grid, grid_m)
    width = (prof["f_hi"] - prof["f_lo"]).to_numpy()
    mid = 0.5 * (prof["f_hi"] + prof["f_lo"]).to_numpy()
    bad = width > CLR_WIDTH_LIMIT * mid
    if bad.any():
        E = float(prof["E"][bad].iloc[0])
        raise QuadratureNotConverged(
            f"f(E) bracket too wide at E={E:.4g}; refine grid_m", err=float(width[bad].max()),
            grid_m=sample_store(e, grid_m).grid_m,
        )
    d = e.dim
    clr_c = float(prof["ratio"].max())
    clr_total = clr_c * d / 2.0 * (d / (d - 2.0)) ** (d - 2)
    sw = sandwich_constants(e, grid_m=grid_m)
    return ScConstants(sw.c1, sw.c2, clr_c, clr_total)


# ----- N_sc -----


def _sites(V: Potential, radius: Optional[int]) -> tuple[np.ndarray, int]:
    if V.tail is None:
        return np.array([v for v in V.explicit.values() if v > 0], dtype=float), 0
    R = V.effective_radius(radius if radius is not None else V.window_r)
    return V.sites_within(R)[1], R


def n_sc(e: Dispersion, V: Potential, grid_m: Optional[int] = None, radius: Optional[int] = None) -> ScBracket:
    """mu* x counting measure of {(p, x) : e(p) < V(x)}."""
    vals, R = _sites(V, radius)
    store = sample_store(e, grid_m)
    total = ScBracket(0.0, 0.0, store.grid_m)
    if vals.size:
        uniq, counts = np.unique(vals, return_counts=True)
        lo, hi = store.fraction_below(uniq)
        total = ScBracket(float(lo @ counts), float(hi @ counts), store.grid_m)
    if V.tail is None:
        return total
    d = e.dim
    rest = tail_sum(V, lambda v: np.minimum(1.0, np.asarray(v) / e.e_max) ** (d / 2.0), d / 2.0, R)
    if math.isinf(rest):
        return ScBracket.infinite(store.grid_m)
    return total + ScBracket(0.0, _tail_c2(e, grid_m) * rest, 0, True)


def n_sc_lt_sum(e: Dispersion, V: Potential, radius: Optional[int] = None) -> ScBracket:
    """sum over {V < e_max} of V^(d/2)."""
    vals, R = _sites(V, radius)
    d = e.dim
    low = vals[vals < e.e_max]
    inner = float(np.sum(low ** (d / 2.0)))
    if V.tail is None:
        return ScBracket.exact(inner)
    rest = tail_sum(V, lambda v: np.minimum(np.asarray(v), e.e_max) ** (d / 2.0), d / 2.0, R)
    if math.isinf(rest):
        return ScBracket(inner, math.inf, 0, True)
    return ScBracket(inner, inner + rest, 0, True)


def n_sc_split(e: Dispersion, V: Potential, radius: Optional[int] = None) -> tuple[int, ScBracket]:
    """(L_V[e_max], sum of V^(d/2) over V < e_max)."""
    return level_count(V, e.e_max), n_sc_lt_sum(e, V, radius)
