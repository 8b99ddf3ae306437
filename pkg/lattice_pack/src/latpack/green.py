"""Lattice Green's function G_rho(x) = int cos(p.x) / (rho + e(p)) dmu*(p).

The integrand is split into a singular model and a bounded remainder. Near
each minimum xi of e with Hessian A the model is

    chi(|u|) / (rho + |u|^2 / 2),   u = A^{1/2} (p - xi),

with a smooth cutoff chi. The remainder is summed on a midpoint tensor grid
(one FFT gives every x at once); the model is transformed exactly as a radial
integral, or by its closed Bessel-K form far from the origin. The quadrature
error bracket is the difference between grid sizes M and 2M.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import scipy.fft
from scipy import special

from latpack.dispersion import Dispersion
from latpack.errors import BadParameter, QuadratureNotConverged, ZeroRhoLowDimension
from latpack.torus import axis_views, midpoint_axis, sphere_area, torus_distance, wrap

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-5
CHI_REACH = 2.4      # chi(s) is numerically zero beyond CHI_REACH * width
FAR_FACTOR = 40.0    # closed-form model beyond |y| = FAR_FACTOR / width
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)

# starting grid, grid cap, largest table radius before switching to the far model
_M0 = {1: 64, 2: 64, 3: 32}
_M_CAP = {1: 1 << 16, 2: 2048, 3: 128}
_NEAR_CAP = {1: 2048, 2: 48, 3: 16}


def grid_start(dim: int) -> int:
    return _M0.get(dim, 16)


def grid_cap(dim: int) -> int:
    return _M_CAP.get(dim, 32)


def near_cap(dim: int) -> int:
    return _NEAR_CAP.get(dim, 4)


# ----- singular models -----


@dataclass(frozen=True, eq=False)
class _SingularModel:
    xi: np.ndarray
    hessian: np.ndarray
    inv_half: np.ndarray   # A^{-1/2}
    sqrt_det: float
    width: float


@lru_cache(maxsize=64)
def _models(e: Dispersion) -> tuple[_SingularModel, ...]:
    minima = e.morse.minima if e.morse is not None else ()
    if not minima:
        raise BadParameter("dispersion carries no minima; build it with make_dispersion")
    pts = np.array([m.p for m in minima], dtype=float)
    out = []
    for i, m in enumerate(minima):
        A = np.array(m.hessian, dtype=float)
        evals, evecs = np.linalg.eigh(A)
        others = np.delete(pts, i, axis=0)
        half = 0.5 * float(torus_distance(pts[i], others).min()) if len(others) else math.inf
        width = math.sqrt(evals.min()) * min(math.pi, half) / CHI_REACH
        out.append(
            _SingularModel(
                xi=pts[i],
                hessian=A,
                inv_half=(evecs / np.sqrt(evals)) @ evecs.T,
                sqrt_det=float(np.sqrt(np.prod(evals))),
                width=width,
            )
        )
    return tuple(out)


def _chi(s: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-((s / width) ** 8))


def _sphere_average(dim: int, k: np.ndarray) -> np.ndarray:
    """Average of exp(i u.y) over |u| = 1 as a function of k = |y|."""
    if dim == 1:
        return np.cos(k)
    if dim == 2:
        return special.j0(k)
    if dim == 3:
        return np.sinc(k / math.pi)
    nu = dim / 2.0 - 1.0
    safe = np.where(k > 1e-8, k, 1.0)
    val = math.gamma(dim / 2.0) * (2.0 / safe) ** nu * special.jv(nu, safe)
    return np.where(k > 1e-8, val, 1.0)


def _radial_nodes(rho: float, width: float) -> tuple[np.ndarray, np.ndarray]:
    top = 2.5 * width
    scale = math.sqrt(2.0 * rho) if rho > 0 else width
    lo = min(scale, top) * 1e-4
    bp = np.unique(np.concatenate([[0.0], np.geomspace(lo, top, 48), np.linspace(0.0, top, 65)]))
    a, b = bp[:-1, None], bp[1:, None]
    nodes = (0.5 * (a + b) + 0.5 * (b - a) * _GL_X).ravel()
    weights = (0.5 * (b - a) * _GL_W).ravel()
    return nodes, weights


def _transform_near(dim: int, rho: float, width: float, r: np.ndarray) -> np.ndarray:
    """int_{R^d} chi(|u|) exp(i u.y) / (rho + |u|^2/2) du for |y| = r."""
    s, w = _radial_nodes(rho, width)
    base = w * _chi(s, width) * s ** (dim - 1) / (rho + 0.5 * s * s)
    out = np.empty(r.shape, dtype=float)
    for start in range(0, r.size, 2048):
        chunk = r[start:start + 2048]
        out[start:start + 2048] = _sphere_average(dim, np.outer(chunk, s)) @ base
    return sphere_area(dim) * out


def _transform_far(dim: int, rho: float, r: np.ndarray) -> np.ndarray:
    """Same transform with chi = 1 (valid once chi's correction has decayed)."""
    nu = dim / 2.0 - 1.0
    if rho == 0.0:
        return (2 * math.pi) ** (dim / 2.0) * math.gamma(nu) * 2.0**nu * r ** (-2.0 * nu)
    m = math.sqrt(2.0 * rho)
    return 2.0 * (2 * math.pi) ** (dim / 2.0) * (m / r) ** nu * special.kv(nu, m * r)


def _model_at(dim: int, rho: float, mdl: _SingularModel, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    far = r > FAR_FACTOR / mdl.width
    out = np.empty_like(r)
    if (~far).any():
        uniq, inv = np.unique(np.round(r[~far], 12), return_inverse=True)
        out[~far] = _transform_near(dim, rho, mdl.width, uniq)[inv]
    if far.any():
        out[far] = _transform_far(dim, rho, r[far])
    return out / ((2 * math.pi) ** dim * mdl.sqrt_det)


def _phase(xi: np.ndarray, x: Sequence[int]) -> float:
    """cos(xi . x), exact for xi components at 0 or pi even for huge integers."""
    total = 0.0
    for xi_i, x_i in zip(xi, x):
        if x_i == 0 or abs(xi_i) < 1e-12:
            continue
        if abs(abs(xi_i) - math.pi) < 1e-12:
            total += math.pi * (int(x_i) % 2)
        else:
            total += math.fmod(float(xi_i) * float(x_i), 2 * math.pi)
    return math.cos(total)


def model_value(e: Dispersion, rho: float, x: Sequence[int]) -> float:
    """Sum of the transformed singular models at one lattice point."""
    total = 0.0
    xf = np.array([float(v) for v in x])
    for mdl in _models(e):
        r = np.linalg.norm(mdl.inv_half @ xf)
        total += _phase(mdl.xi, x) * float(_model_at(e.dim, rho, mdl, np.array([r]))[0])
    return total


# ----- grid remainder -----


class _Evaluator:
    """Window of lattice points |x|_inf <= radius plus its model values."""

    def __init__(self, e: Dispersion, rho: float, radius: int):
        self.e, self.rho, self.radius = e, rho, radius
        self.models = _models(e)
        ax = np.arange(-radius, radius + 1)
        mesh = np.meshgrid(*([ax] * e.dim), indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1).astype(float)
        shape = (ax.size,) * e.dim
        vals = np.zeros(coords.shape[0])
        for mdl in self.models:
            r = np.linalg.norm(coords @ mdl.inv_half, axis=-1)
            vals += np.cos(coords @ mdl.xi) * _model_at(e.dim, rho, mdl, r)
        self.model_values = vals.reshape(shape)

    def remainder(self, m: int) -> np.ndarray:
        e, rho, d = self.e, self.rho, self.e.dim
        axis = midpoint_axis(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            rem = 1.0 / (rho + e.grid_values(axis))
            views = axis_views(axis, d)
            for mdl in self.models:
                dd = [wrap(v - c) for v, c in zip(views, mdl.xi)]
                q = sum(mdl.hessian[i, j] * dd[i] * dd[j] for i in range(d) for j in range(d))
                rem = rem - np.exp(-((q / mdl.width**2) ** 4)) / (rho + 0.5 * q)
        rem[~np.isfinite(rem)] = 0.0

        coef = scipy.fft.ifftn(rem, workers=-1)
        ax = np.arange(-self.radius, self.radius + 1)
        win = coef[np.ix_(*([ax % m] * d))]
        shift = np.exp(1j * (-math.pi + math.pi / m) * ax)
        for v in axis_views(shift, d):
            win = win * v
        return win.real


# ----- public API -----


@dataclass(frozen=True, eq=False)
class GreenTable:
    dispersion: Dispersion
    rho: float
    radius: int
    values: np.ndarray    # G_rho(x) at index x + radius, |x|_inf <= radius
    err: float            # max |G(M) - G(2M)| over the table
    grid_m: int
    shell_max: float      # max |remainder| on the outer shell, far-field bracket

    def contains(self, x: Sequence[int]) -> bool:
        return all(abs(int(v)) <= self.radius for v in x)

    def __getitem__(self, x: Sequence[int]) -> float:
        return float(self.values[tuple(int(v) + self.radius for v in x)])

    def far_value(self, x: Sequence[int]) -> tuple[float, float]:
        """Model-only value outside the table, bracketed by the outer-shell remainder."""
        return model_value(self.dispersion, self.rho, x), self.err + self.shell_max

    def value(self, x: Sequence[int]) -> float:
        if self.contains(x):
            return self[x]
        return self.far_value(x)[0]

    def err_at(self, x: Sequence[int]) -> float:
        return self.err if self.contains(x) else self.err + self.shell_max

    def items(self):
        ax = range(-self.radius, self.radius + 1)
        for idx in np.ndindex(self.values.shape):
            yield tuple(ax[i] for i in idx), float(self.values[idx])

    def to_frame(self) -> pd.DataFrame:
        rows = [{**{f"x{i + 1}": x[i] for i in range(len(x))}, "value": v, "err": self.err} for x, v in self.items()]
        return pd.DataFrame(rows)


def _check_rho(e: Dispersion, rho: float) -> float:
    if not isinstance(rho, (int, float)) or math.isnan(float(rho)) or rho < 0:
        raise BadParameter(f"rho must be a number >= 0. Got: {rho!r}")
    if rho == 0 and e.dim <= 2:
        raise ZeroRhoLowDimension(f"rho = 0 needs d >= 3. Got d = {e.dim}")
    return float(rho)


def _initial_m(dim: int, radius: int) -> int:
    m = grid_start(dim)
    while m < 2 * radius + 2:
        m *= 2
    return m


@lru_cache(maxsize=128)
def green_table(
    e: Dispersion, rho: float, radius: int, tol: float = DEFAULT_TOL, max_m: Optional[int] = None
) -> GreenTable:
    """G_rho on |x|_inf <= radius, doubling the grid until err <= tol."""
    rho = _check_rho(e, rho)
    if radius < 0:
        raise BadParameter(f"radius must be >= 0. Got: {radius}")
    ev = _Evaluator(e, rho, int(radius))
    m = _initial_m(e.dim, radius)
    cap = max(max_m or grid_cap(e.dim), 2 * m)
    prev = ev.remainder(m)
    while True:
        cur = ev.remainder(2 * m)
        err = float(np.max(np.abs(cur - prev)))
        log.debug("green_table d=%d rho=%g R=%d: M=%d err=%.3g", e.dim, rho, radius, 2 * m, err)
        if err <= tol:
            break
        if 4 * m > cap:
            raise QuadratureNotConverged(
                f"G_rho not converged: err={err:.3g} > tol={tol:.3g} at M={2 * m} (rho={rho})",
                err=err,
                grid_m=2 * m,
            )
        m *= 2
        prev = cur

    shell = np.abs(cur)
    if radius > 0:
        shell[tuple(slice(1, -1) for _ in range(e.dim))] = 0.0
    table = GreenTable(
        dispersion=e,
        rho=rho,
        radius=int(radius),
        values=cur + ev.model_values,
        err=err,
        grid_m=2 * m,
        shell_max=float(shell.max()),
    )
    g0 = table[(0,) * e.dim]
    if rho > 0 and not (1.0 / (rho + e.e_max) - err <= g0 <= 1.0 / rho + err):
        log.warning("G_rho(0)=%.6g outside [1/(rho+e_max), 1/rho] at rho=%g", g0, rho)
    return table


def green_value(
    e: Dispersion,
    rho: float,
    x: Sequence[int],
    grid_m: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> tuple[float, float]:
    """(G_rho(x), err). With grid_m set, err compares exactly M = grid_m and 2M."""
    rho = _check_rho(e, rho)
    x = tuple(int(v) for v in x)
    r_inf = max((abs(v) for v in x), default=0)
    if grid_m is None:
        table = green_table(e, rho, min(r_inf, near_cap(e.dim)), tol)
        return table.value(x), table.err_at(x)
    ev = _Evaluator(e, rho, r_inf)
    m = max(int(grid_m), 2 * r_inf + 2)
    a, b = ev.remainder(m), ev.remainder(2 * m)
    idx = tuple(v + r_inf for v in x)
    return float(b[idx] + ev.model_values[idx]), float(abs(b[idx] - a[idx]))


def eta(e: Dispersion, tol: float = DEFAULT_TOL) -> float:
    """1 / int dmu*/e for d >= 3; exactly 0 for d in {1, 2}."""
    if e.dim <= 2:
        return 0.0
    return 1.0 / green_table(e, 0.0, 0, tol)[(0,) * e.dim]


def watson_integral() -> float:
    """int dmu*/(3 - sum cos p_i) on the simple cubic lattice, Gamma-product closed form."""
    g = math.gamma
    w = math.sqrt(6.0) / (32.0 * math.pi**3) * g(1 / 24) * g(5 / 24) * g(7 / 24) * g(11 / 24)
    return w / 3.0
