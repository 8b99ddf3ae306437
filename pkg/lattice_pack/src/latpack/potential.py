"""Nonnegative decaying potentials on Z^d and their level-set functionals.

A Potential is an explicit finite map plus an optional analytic tail used for
|x|_inf > window_r. Tails are radial in the Euclidean norm with
<x> = 1 + |x|, so every superlevel set of a tail is a union of integer shells
{n_lo <= |x|^2 <= n_hi} and level counts reduce to lattice-ball counts.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from latpack.dispersion import Dispersion
from latpack.errors import (
    BadLambdas,
    BadParameter,
    ChainCollision,
    CoordinateOverflow,
    NegativeValue,
    NonpositiveAlpha,
    TailedPotential,
    WindowTooSmall,
)
from latpack.green import DEFAULT_TOL, eta
from latpack.torus import ball_volume, sphere_area

log = logging.getLogger(__name__)

LatticePoint = tuple[int, ...]

ZERO_CUTOFF = 1e-300
LEVEL_SLACK = 1e-12          # V >= alpha is tested as V >= alpha * (1 - LEVEL_SLACK)
EXACT_BALL_LIMIT = 4_000_000  # largest (2R+1)^(d-1) enumerated exactly


def _clean(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.where(v < ZERO_CUTOFF, 0.0, v)


# ----- tails -----


def _expand_to_level(f: Callable[[float], float], start: float, level: float) -> float:
    hi = max(1.0, 2.0 * start)
    while f(hi) >= level:
        hi *= 2.0
        if hi > 1e300:
            raise BadParameter(f"tail does not drop below {level:g}")
    return hi


@dataclass(frozen=True)
class PowerTail:
    c: float
    alpha: float
    kind: ClassVar[str] = "power"

    def radial(self, r):
        return self.c * (1.0 + np.asarray(r, dtype=float)) ** (-self.alpha)

    def envelope(self, r):
        return self.radial(np.maximum(r, 0.0))

    def level_intervals(self, level: float) -> list[tuple[float, float]]:
        hi = (self.c / level) ** (1.0 / self.alpha) - 1.0
        return [(0.0, hi)] if hi >= 0 else []

    def summable(self, p: float, d: int, m: float = 0.0) -> bool:
        return self.alpha * p > d + m

    def scaled(self, lam: float) -> "PowerTail":
        return replace(self, c=self.c * lam)

    def weighted(self, k: float) -> "PowerTail":
        if self.alpha - k <= 0:
            raise BadParameter(f"weighting Power(alpha={self.alpha}) by <x>^{k} leaves no decay")
        return replace(self, alpha=self.alpha - k)

    def params(self) -> dict:
        return {"c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class ExpTail:
    c: float
    alpha: float
    kind: ClassVar[str] = "exp"

    def radial(self, r):
        return self.c * np.exp(-self.alpha * np.asarray(r, dtype=float))

    def envelope(self, r):
        return self.radial(np.maximum(r, 0.0))

    def level_intervals(self, level: float) -> list[tuple[float, float]]:
        hi = math.log(self.c / level) / self.alpha
        return [(0.0, hi)] if hi >= 0 else []

    def summable(self, p: float, d: int, m: float = 0.0) -> bool:
        return True

    def scaled(self, lam: float) -> "ExpTail":
        return replace(self, c=self.c * lam)

    def weighted(self, k: float) -> "ExpPolyTail":
        return ExpPolyTail(self.c, self.alpha, k)

    def params(self) -> dict:
        return {"c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class PowerLogTail:
    """c <x>^-alpha / max(ln <x>, 1)^eta."""

    c: float
    alpha: float
    eta: float
    kind: ClassVar[str] = "powerlog"

    def radial(self, r):
        t = 1.0 + np.asarray(r, dtype=float)
        return self.c * t ** (-self.alpha) * np.maximum(np.log(t), 1.0) ** (-self.eta)

    def envelope(self, r):
        return self.radial(np.maximum(r, 0.0))

    def level_intervals(self, level: float) -> list[tuple[float, float]]:
        f = lambda r: float(self.radial(r))  # noqa: E731
        if f(0.0) < level:
            return []
        hi = _expand_to_level(f, 1.0, level)
        return [(0.0, optimize.brentq(lambda r: f(r) - level, 0.0, hi, xtol=1e-12, rtol=1e-14))]

    def summable(self, p: float, d: int, m: float = 0.0) -> bool:
        s = self.alpha * p
        return s > d + m or (math.isclose(s, d + m) and self.eta * p > 1.0)

    def scaled(self, lam: float) -> "PowerLogTail":
        return replace(self, c=self.c * lam)

    def weighted(self, k: float) -> "PowerLogTail":
        if self.alpha - k <= 0:
            raise BadParameter(f"weighting PowerLog(alpha={self.alpha}) by <x>^{k} leaves no decay")
        return replace(self, alpha=self.alpha - k)

    def params(self) -> dict:
        return {"c": self.c, "alpha": self.alpha, "eta": self.eta}


@dataclass(frozen=True)
class ExpPolyTail:
    """c exp(-alpha r) <x>^k, the Exp tail after weighting by <x>^k."""

    c: float
    alpha: float
    k: float
    kind: ClassVar[str] = "exp_poly"

    @property
    def peak(self) -> float:
        return max(0.0, self.k / self.alpha - 1.0)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * np.exp(-self.alpha * r) * (1.0 + r) ** self.k

    def envelope(self, r):
        return self.radial(np.maximum(r, self.peak))

    def level_intervals(self, level: float) -> list[tuple[float, float]]:
        f = lambda r: float(self.radial(r))  # noqa: E731
        top = self.peak
        if f(top) < level:
            return []
        lo = 0.0 if f(0.0) >= level else optimize.brentq(lambda r: f(r) - level, 0.0, top, xtol=1e-12)
        hi = _expand_to_level(f, top, level)
        return [(lo, optimize.brentq(lambda r: f(r) - level, top, hi, xtol=1e-12, rtol=1e-14))]

    def summable(self, p: float, d: int, m: float = 0.0) -> bool:
        return True

    def scaled(self, lam: float) -> "ExpPolyTail":
        return replace(self, c=self.c * lam)

    def weighted(self, k: float) -> "ExpPolyTail":
        return replace(self, k=self.k + k)

    def params(self) -> dict:
        return {"c": self.c, "alpha": self.alpha, "k": self.k}


@dataclass(frozen=True)
class InterleavedTail:
    """band(r) for r in a shell band [s0, s1], [s2, s3], ..., rest(r) elsewhere.

    An odd number of shells leaves the last band open to infinity. Either part
    may be None (zero).
    """

    band: Optional["Tail"]
    rest: Optional["Tail"]
    shells: tuple[float, ...]
    kind: ClassVar[str] = "interleaved"

    def _bands(self) -> list[tuple[float, float]]:
        s = list(self.shells) + ([math.inf] if len(self.shells) % 2 else [])
        return list(zip(s[0::2], s[1::2]))

    def in_band(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        mask = np.zeros(r.shape, dtype=bool)
        for a, b in self._bands():
            mask |= (r >= a) & (r <= b)
        return mask

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        b = self.band.radial(r) if self.band is not None else np.zeros(r.shape)
        o = self.rest.radial(r) if self.rest is not None else np.zeros(r.shape)
        return np.where(self.in_band(r), b, o)

    def envelope(self, r):
        b = self.band.envelope(r) if self.band is not None else 0.0
        o = self.rest.envelope(r) if self.rest is not None else 0.0
        return np.maximum(b, o)

    def level_intervals(self, level: float) -> list[tuple[float, float]]:
        bands = self._bands()
        gaps, prev = [], 0.0
        for a, b in bands:
            if a > prev:
                gaps.append((prev, a))
            prev = b
        if prev < math.inf:
            gaps.append((prev, math.inf))
        out = []
        for tail, regions in ((self.band, bands), (self.rest, gaps)):
            if tail is None:
                continue
            for lo, hi in tail.level_intervals(level):
                for a, b in regions:
                    if max(lo, a) <= min(hi, b):
                        out.append((max(lo, a), min(hi, b)))
        return sorted(out)

    def summable(self, p: float, d: int, m: float = 0.0) -> bool:
        parts = [self.rest] + ([self.band] if len(self.shells) % 2 else [])
        return all(t is None or t.summable(p, d, m) for t in parts)

    def scaled(self, lam: float) -> "InterleavedTail":
        return InterleavedTail(
            self.band.scaled(lam) if self.band is not None else None,
            self.rest.scaled(lam) if self.rest is not None else None,
            self.shells,
        )

    def weighted(self, k: float) -> "InterleavedTail":
        return InterleavedTail(
            self.band.weighted(k) if self.band is not None else None,
            self.rest.weighted(k) if self.rest is not None else None,
            self.shells,
        )

    def params(self) -> dict:
        return {
            "band": tail_to_dict(self.band),
            "rest": tail_to_dict(self.rest),
            "shells": list(self.shells),
        }


Tail = Union[PowerTail, ExpTail, PowerLogTail, ExpPolyTail, InterleavedTail]

_TAIL_KINDS = {t.kind: t for t in (PowerTail, ExpTail, PowerLogTail, ExpPolyTail, InterleavedTail)}


def tail_to_dict(tail: Optional[Tail]) -> Optional[dict]:
    if tail is None:
        return None
    return {"kind": tail.kind, "params": tail.params()}


def tail_from_dict(data: Optional[Mapping]) -> Optional[Tail]:
    if data is None:
        return None
    kind = data.get("kind")
    if kind not in _TAIL_KINDS:
        raise BadParameter(f"unknown tail kind: {kind!r}. Expected one of {sorted(_TAIL_KINDS)}")
    params = dict(data.get("params", {}))
    if kind == "interleaved":
        return InterleavedTail(
            tail_from_dict(params.get("band")),
            tail_from_dict(params.get("rest")),
            tuple(float(s) for s in params.get("shells", ())),
        )
    tail = _TAIL_KINDS[kind](**{k: float(v) for k, v in params.items()})
    _check_tail(tail)
    return tail


def _check_tail(tail: Tail) -> None:
    for name in ("c", "alpha", "eta"):
        v = getattr(tail, name, None)
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise BadParameter(f"tail parameter {name} must be > 0. Got: {v!r}")


# ----- lattice-ball counting -----


def _isqrt(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64)
    r = np.floor(np.sqrt(np.maximum(s, 0).astype(float))).astype(np.int64)
    r -= (r * r > s).astype(np.int64)
    r += ((r + 1) * (r + 1) <= s).astype(np.int64)
    return r


def _ball_counts(dim: int, s: np.ndarray) -> np.ndarray:
    """#{x in Z^dim : |x|^2 <= s} for each integer s (0 for s < 0)."""
    s = np.asarray(s, dtype=np.int64)
    if dim == 1:
        return np.where(s >= 0, 2 * _isqrt(s) + 1, 0)
    kmax = int(_isqrt(np.array([max(int(s.max(initial=0)), 0)]))[0])
    k = np.arange(-kmax, kmax + 1, dtype=np.int64)
    inner = s[..., None] - k * k
    return np.where(inner >= 0, _ball_counts(dim - 1, inner), 0).sum(axis=-1)


def ball_count(dim: int, s: float) -> tuple[int, bool]:
    """(count of lattice points with |x|^2 <= s, exact?)."""
    if s < 0:
        return 0, True
    root = math.isqrt(int(s)) if s < 2**62 else int(math.sqrt(s))
    if s < 2**62 and (2 * root + 1) ** (dim - 1) <= EXACT_BALL_LIMIT:
        return int(_ball_counts(dim, np.array([int(s)]))[0]), True
    return int(round(ball_volume(dim) * float(s) ** (dim / 2.0))), False


def _shell_count(dim: int, n_lo: int, n_hi: int) -> tuple[int, bool]:
    hi, ex_hi = ball_count(dim, n_hi)
    lo, ex_lo = ball_count(dim, n_lo - 1)
    return max(hi - lo, 0), ex_hi and ex_lo


def _integer_intervals(tail: Tail, level: float) -> list[tuple[int, int]]:
    """Intervals [n_lo, n_hi] of integers n = |x|^2 with tail(sqrt n) >= level."""
    ok = lambda n: float(tail.radial(math.sqrt(n))) >= level  # noqa: E731
    out = []
    for lo, hi in tail.level_intervals(level):
        n_lo = math.ceil(lo * lo) if lo > 0 else 0
        n_hi = math.floor(hi * hi)
        if hi * hi > 2**52:
            out.append((n_lo, n_hi))
            continue
        # float inversion can be off by a shell either way; settle by direct evaluation
        while n_hi + 1 <= hi * hi + 2 and ok(n_hi + 1):
            n_hi += 1
        while n_hi >= n_lo and not ok(n_hi):
            n_hi -= 1
        while n_lo > 0 and n_lo - 1 >= lo * lo - 2 and ok(n_lo - 1):
            n_lo -= 1
        while n_lo <= n_hi and not ok(n_lo):
            n_lo += 1
        if n_lo <= n_hi:
            out.append((n_lo, n_hi))
    merged: list[tuple[int, int]] = []
    for a, b in sorted(out):
        if merged and a <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


# ----- potential -----


def _box_coords(dim: int, radius: int) -> np.ndarray:
    ax = np.arange(-radius, radius + 1, dtype=np.int64)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class Potential:
    dim: int
    explicit: Mapping[LatticePoint, float] = field(default_factory=dict)
    tail: Optional[Tail] = None
    window_r: int = 0

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def _outside(self, x: Sequence[int]) -> bool:
        return self.tail is not None and max(abs(int(v)) for v in x) > self.window_r

    def value(self, x: Sequence[int]) -> float:
        x = tuple(int(v) for v in x)
        if self._outside(x):
            r = math.sqrt(sum(float(v) ** 2 for v in x))
            return float(_clean(self.tail.radial(r)))
        return float(self.explicit.get(x, 0.0))

    @property
    def support(self) -> list[LatticePoint]:
        if self.tail is not None:
            raise TailedPotential("support of a tailed potential is infinite")
        return sorted(x for x, v in self.explicit.items() if v > 0)

    @property
    def sup(self) -> float:
        vals = [v for x, v in self.explicit.items() if not self._outside(x)]
        top = max(vals, default=0.0)
        if self.tail is not None:
            top = max(top, float(self.tail.envelope(self.window_r + 1.0)))
        return top

    def scaled(self, lam: float) -> "Potential":
        if lam < 0:
            raise BadParameter(f"scale must be >= 0. Got: {lam}")
        return Potential(
            self.dim,
            {x: v * lam for x, v in self.explicit.items() if v * lam >= ZERO_CUTOFF},
            self.tail.scaled(lam) if self.tail is not None and lam > 0 else None,
            self.window_r,
        )

    def translated(self, shift: Sequence[int]) -> "Potential":
        if self.tail is not None:
            raise TailedPotential("only finitely supported potentials can be translated")
        s = tuple(int(v) for v in shift)
        return Potential(self.dim, {tuple(a + b for a, b in zip(x, s)): v for x, v in self.explicit.items()})

    def effective_radius(self, radius: int) -> int:
        return max(int(radius), self.window_r) if self.tail is not None else int(radius)

    def values_on_box(self, radius: int) -> tuple[np.ndarray, np.ndarray]:
        """All sites with |x|_inf <= radius and the potential there."""
        coords = _box_coords(self.dim, radius)
        vals = np.zeros(coords.shape[0])
        if self.tail is not None:
            outside = np.abs(coords).max(axis=1) > self.window_r
            vals[outside] = self.tail.radial(np.linalg.norm(coords[outside].astype(float), axis=1))
        shape = (2 * radius + 1,) * self.dim
        for x, v in self.explicit.items():
            if max(abs(c) for c in x) <= radius and not self._outside(x):
                vals[np.ravel_multi_index(tuple(c + radius for c in x), shape)] = v
        return coords, _clean(vals)

    def sites_within(self, radius: int) -> tuple[np.ndarray, np.ndarray]:
        coords, vals = self.values_on_box(radius)
        keep = vals > 0
        return coords[keep], vals[keep]

    def truncated(self, radius: int) -> "Potential":
        if self.tail is None:
            return Potential(self.dim, {x: v for x, v in self.explicit.items() if max(map(abs, x)) <= radius})
        coords, vals = self.sites_within(radius)
        return Potential(self.dim, {tuple(int(c) for c in x): float(v) for x, v in zip(coords, vals)})

    def nonzero_items(self) -> list[tuple[LatticePoint, float]]:
        """Sorted (x, V(x)) pairs of a finitely supported potential."""
        return [(x, self.explicit[x]) for x in self.support]

    def describe(self) -> str:
        t = "none" if self.tail is None else f"{self.tail.kind}{self.tail.params()}"
        return f"Potential(d={self.dim}, explicit={len(self.explicit)}, tail={t}, window_r={self.window_r})"


def _check_point(dim: int, x: Sequence) -> LatticePoint:
    pt = tuple(int(v) for v in x)
    if len(pt) != dim:
        raise BadParameter(f"point {x!r} does not have dimension {dim}")
    return pt


def _check_continuity(V: Potential) -> None:
    if V.tail is None or not V.explicit:
        return
    edge = float(V.tail.radial(V.window_r + 1.0))
    top = max(V.explicit.values())
    if edge > 10.0 * top:
        log.warning("tail value %.3g at the window edge exceeds 10x the explicit max %.3g", edge, top)


def from_samples(dim: int, samples: Mapping[Sequence[int], float]) -> Potential:
    explicit = {}
    for x, v in samples.items():
        v = float(v)
        if v < 0 or math.isnan(v):
            raise NegativeValue(f"potential values must be >= 0. Got V({tuple(x)}) = {v}")
        if v >= ZERO_CUTOFF:
            explicit[_check_point(dim, x)] = v
    return Potential(dim, explicit)


def from_tail(dim: int, tail: Tail, window_r: int = 0) -> Potential:
    _check_tail(tail)
    if window_r < 0:
        raise BadParameter(f"window_r must be >= 0. Got: {window_r}")
    coords = _box_coords(dim, window_r)
    vals = _clean(tail.radial(np.linalg.norm(coords.astype(float), axis=1)))
    explicit = {tuple(int(c) for c in x): float(v) for x, v in zip(coords, vals) if v > 0}
    V = Potential(dim, explicit, tail, window_r)
    _check_continuity(V)
    return V


def zero(dim: int) -> Potential:
    return Potential(dim)


def indicator(dim: int, sites: Iterable[Sequence[int]], lam: float = 1.0) -> Potential:
    """lam * 1_Lambda."""
    return from_samples(dim, {tuple(x): lam for x in sites})


# ----- level sets -----


def _window_norms(V: Potential) -> np.ndarray:
    coords = _box_coords(V.dim, V.window_r)
    return np.sort((coords * coords).sum(axis=1))


def _level_count(V: Potential, alpha: float) -> tuple[int, bool]:
    if not alpha > 0:
        raise NonpositiveAlpha(f"alpha must be > 0. Got: {alpha}")
    thr = alpha * (1.0 - LEVEL_SLACK)
    total = sum(1 for x, v in V.explicit.items() if v >= thr and not V._outside(x))
    if V.tail is None:
        return total, True
    exact = True
    norms = _window_norms(V)
    for n_lo, n_hi in _integer_intervals(V.tail, thr):
        cnt, ex = _shell_count(V.dim, n_lo, n_hi)
        inside = int(np.searchsorted(norms, n_hi, side="right") - np.searchsorted(norms, n_lo, side="left"))
        total += cnt - inside
        exact = exact and ex
    return total, exact


def level_count(V: Potential, alpha: float) -> int:
    """L_V[alpha] = #{x : V(x) >= alpha}."""
    return _level_count(V, alpha)[0]


@dataclass(frozen=True)
class LevelProfile:
    thresholds: tuple[float, ...]
    counts: tuple[int, ...]
    truncation_exact: bool

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"threshold": self.thresholds, "count": self.counts})


def level_profile(V: Potential, thresholds: Iterable[float]) -> LevelProfile:
    ts = sorted({float(t) for t in thresholds})
    res = [_level_count(V, t) for t in ts]
    return LevelProfile(tuple(ts), tuple(c for c, _ in res), all(ex for _, ex in res))


def _positive_values(V: Potential) -> np.ndarray:
    if V.tail is not None:
        raise TailedPotential("rearrangement checks need finitely supported potentials")
    return np.sort(np.array([v for v in V.explicit.values() if v > 0], dtype=float))


def is_rearrangement(V: Potential, W: Potential) -> bool:
    a, b = _positive_values(V), _positive_values(W)
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=1e-12, atol=0.0))


# ----- sums over the tail -----


def tail_sum(V: Potential, phi: Callable[[np.ndarray], np.ndarray], power: float, radius: int, m: float = 0.0) -> float:
    """Upper bound for sum over |x|_inf > radius of phi(V(x)) <x>^m.

    phi must be nondecreasing with phi(v) ~ v^power as v -> 0; returns inf when
    the tail is not summable. radius is raised to the window radius.
    """
    if V.tail is None:
        return 0.0
    if not V.tail.summable(power, V.dim, m):
        return math.inf
    d = V.dim
    h = 0.5 * math.sqrt(d)
    start = max(V.effective_radius(radius) + 1.0 - h, 0.0)
    area = sphere_area(d)

    def f(t: float) -> float:
        return float(phi(V.tail.envelope(t - h))) * (1.0 + t + h) ** m * area * t ** (d - 1)

    val, _ = integrate.quad(f, start, math.inf, limit=400)
    return float(val) if math.isfinite(val) else math.inf


def weighted_norm(V: Potential, p: float, m: float = 0.0, radius: Optional[int] = None) -> tuple[float, float]:
    """Bracket (lo, hi) for (sum_x V(x)^p <x>^m)^(1/p); lo == hi for finite V."""
    if not p > 0:
        raise BadParameter(f"p must be > 0. Got: {p}")
    if V.tail is None:
        total = sum(v**p * (1.0 + math.sqrt(sum(c * c for c in x))) ** m for x, v in V.explicit.items() if v > 0)
        val = total ** (1.0 / p)
        return val, val
    R = V.effective_radius(radius if radius is not None else V.window_r + 8)
    coords, vals = V.sites_within(R)
    weights = (1.0 + np.linalg.norm(coords.astype(float), axis=1)) ** m
    inner = float(np.sum(vals**p * weights))
    rest = tail_sum(V, lambda v: np.asarray(v) ** p, p, R, m)
    return inner ** (1.0 / p), (inner + rest) ** (1.0 / p)


def lp_norm(V: Potential, p: float, radius: Optional[int] = None) -> tuple[float, float]:
    return weighted_norm(V, p, 0.0, radius)


def weight_by_power(V: Potential, exponent: Optional[float] = None) -> Potential:
    """x -> V(x) <x>^exponent, default exponent d + 5."""
    k = float(V.dim + 5 if exponent is None else exponent)
    explicit = {
        x: v * (1.0 + math.sqrt(sum(c * c for c in x))) ** k for x, v in V.explicit.items()
    }
    tail = V.tail.weighted(k) if V.tail is not None else None
    return Potential(V.dim, explicit, tail, V.window_r)


# ----- growth exponents -----


class GCaveat(enum.Enum):
    WINDOW_ESTIMATE = "window-estimate"
    DEGENERATE_FINITE_SUPPORT = "degenerate-finite-support"


@dataclass(frozen=True)
class GBounds:
    g_minus_hat: float
    g_plus_hat: float
    caveat: GCaveat
    ell_window: tuple[float, float] = (math.nan, math.nan)


def g_bounds(V: Potential, ell_max: float, r_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0), n_ell: int = 9) -> GBounds:
    """Window estimates of g-(V), g+(V) over ell in [0.75 ell_max, ell_max]."""
    if V.tail is None:
        return GBounds(0.0, 0.0, GCaveat.DEGENERATE_FINITE_SUPPORT)
    ells = np.linspace(0.75 * ell_max, ell_max, n_ell)
    gs = []
    for ell in ells:
        base = level_count(V, math.exp(-ell))
        if base == 0:
            raise WindowTooSmall(f"L_V[exp(-{ell:.3g})] = 0; increase ell_max (got {ell_max})")
        for r in r_grid:
            up = level_count(V, math.exp(-ell - r))
            gs.append(2.0 / (V.dim * r) * (math.log(up) - math.log(base)))
    return GBounds(min(gs), max(gs), GCaveat.WINDOW_ESTIMATE, (float(ells[0]), float(ells[-1])))


# ----- constructions -----


def sparse_chain(r0: int, n: int, dim: int = 3, coord_bits: Optional[int] = 64) -> list[LatticePoint]:
    """Points (9^k r0, 0, ..., 0), k = 0..n-1."""
    if r0 < 1 or n < 1:
        raise BadParameter(f"sparse_chain needs r0 >= 1 and n >= 1. Got r0={r0}, n={n}")
    last = 9 ** (n - 1) * int(r0)
    if coord_bits is not None and last > 2 ** (coord_bits - 1) - 1:
        raise CoordinateOverflow(f"9^{n - 1} * {r0} does not fit a signed {coord_bits}-bit coordinate")
    return [(9**k * int(r0),) + (0,) * (dim - 1) for k in range(n)]


def build_prescribed(lambdas: Sequence[float], eta: float, r0: int, dim: int = 3) -> Potential:
    """V(x_j) = eta / lambda_j on chain points x_j, j = 1..n."""
    lams = [float(v) for v in lambdas]
    if any(v < 1 for v in lams) or any(b < a for a, b in zip(lams, lams[1:])):
        raise BadLambdas(f"lambdas must be nondecreasing and >= 1. Got: {lams}")
    if not eta > 0:
        raise BadParameter(f"eta must be > 0. Got: {eta}")
    if not lams:
        return zero(dim)
    chain = sparse_chain(r0, len(lams) + 1, dim, coord_bits=None)
    return Potential(dim, {chain[j]: eta / lams[j - 1] for j in range(1, len(lams) + 1)})


def sparse_values(eta: float, n: int) -> list[float]:
    """eta / ln(4 + j), j = 0..n-1."""
    return [eta / math.log(4.0 + j) for j in range(n)]


def sparse_values_partial_sums(p: float, checkpoints: Sequence[int]) -> dict[int, float]:
    """sum_{j < n} ln(4 + j)^-p at each checkpoint n."""
    top = max(checkpoints)
    cum = np.cumsum(np.log(4.0 + np.arange(top)) ** (-p))
    return {int(n): float(cum[n - 1]) for n in checkpoints if n > 0}


def partial_sums_diverge(sums: Sequence[float]) -> bool:
    """Strictly increasing partial sums whose gains between cut-offs never shrink."""
    if len(sums) < 2:
        return False
    gains = np.diff(np.concatenate([[0.0], np.asarray(sums, dtype=float)]))
    return bool(np.all(gains > 0) and np.all(np.diff(gains) >= 0))


def sparse_potential(vals: Sequence[float], r0: int, dim: int = 3) -> Potential:
    chain = sparse_chain(r0, len(vals), dim, coord_bits=None) if vals else []
    return from_samples(dim, dict(zip(chain, vals)))


def rearrange_sparse(V: Potential, eps: float, e: Dispersion, r0: int, tol: float = DEFAULT_TOL) -> Potential:
    """Keep values >= (1 - eps) eta(e) in place, move the rest onto a sparse chain."""
    if V.tail is not None:
        raise TailedPotential("rearrange_sparse needs a finitely supported potential")
    if V.dim < 3:
        raise BadParameter(f"rearrange_sparse needs d >= 3. Got d = {V.dim}")
    if not 0 < eps < 1:
        raise BadParameter(f"eps must lie in (0, 1). Got: {eps}")
    if e.dim != V.dim:
        raise BadParameter(f"dimension mismatch: dispersion d={e.dim}, potential d={V.dim}")
    cut = (1.0 - eps) * eta(e, tol)
    big = {x: v for x, v in V.nonzero_items() if v >= cut}
    small = sorted((v for x, v in V.nonzero_items() if v < cut), reverse=True)
    if not small:
        return Potential(V.dim, dict(big))
    chain = sparse_chain(r0, len(small), V.dim, coord_bits=None)
    hits = [x for x in chain if x in big]
    if hits:
        raise ChainCollision(f"chain point(s) {hits} coincide with large sites; increase r0 (got {r0})")
    out = dict(big)
    out.update(zip(chain, small))
    return Potential(V.dim, out)


@dataclass(frozen=True)
class Bump:
    """height * (1 - |y|^2 / radius^2)^2 inside the ball, zero outside."""

    radius: float = 1.0
    height: float = 1.0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        q = np.sum(np.asarray(y, dtype=float) ** 2, axis=-1) / self.radius**2
        return self.height * np.where(q < 1.0, (1.0 - q) ** 2, 0.0)


def bump(radius: float = 1.0, height: float = 1.0) -> Bump:
    return Bump(radius, height)


def scale_continuum(v: Callable[[np.ndarray], np.ndarray], L: int, dim: int, support_radius: Optional[float] = None) -> Potential:
    """V_L(x) = L^-2 v(x / L) for a compactly supported continuum profile v."""
    if L < 1:
        raise BadParameter(f"L must be >= 1. Got: {L}")
    R = support_radius if support_radius is not None else getattr(v, "radius", None)
    if R is None:
        raise BadParameter("scale_continuum needs support_radius for profiles without a radius attribute")
    coords = _box_coords(dim, int(math.ceil(L * R)))
    vals = np.asarray(v(coords.astype(float) / L), dtype=float) / L**2
    if np.any(vals < 0):
        raise NegativeValue("continuum profile must be >= 0")
    keep = vals >= ZERO_CUTOFF
    return Potential(dim, {tuple(int(c) for c in x): float(val) for x, val in zip(coords[keep], vals[keep])})


def interleave(V1: Potential, V2: Potential, shells: Sequence[float]) -> Potential:
    """beta V1 + (1 - beta) V2 with beta the indicator of the shell bands."""
    s = tuple(float(r) for r in shells)
    if any(b <= a for a, b in zip(s, s[1:])) or any(r < 0 for r in s):
        raise BadParameter(f"shells must be nonnegative and strictly increasing. Got: {list(s)}")
    if V1.dim != V2.dim:
        raise BadParameter(f"dimension mismatch: {V1.dim} vs {V2.dim}")
    tail = None
    if V1.tail is not None or V2.tail is not None:
        tail = InterleavedTail(V1.tail, V2.tail, s)

    def reach(V: Potential) -> int:
        if V.tail is not None:
            return V.window_r
        return max((max(abs(c) for c in x) for x in V.explicit), default=0)

    W = max(reach(V1), reach(V2))
    coords, v1 = V1.values_on_box(W)
    _, v2 = V2.values_on_box(W)
    probe = InterleavedTail(None, None, s)
    beta = probe.in_band(np.linalg.norm(coords.astype(float), axis=1))
    vals = np.where(beta, v1, v2)
    keep = vals > 0
    explicit = {tuple(int(c) for c in x): float(v) for x, v in zip(coords[keep], vals[keep])}
    return Potential(V1.dim, explicit, tail, W if tail is not None else 0)


def random_finite(dim: int, count: int, radius: int, vmax: float, rng: np.random.Generator) -> Potential:
    """count distinct sites in |x|_inf <= radius with values uniform in (vmax/1000, vmax)."""
    side = 2 * radius + 1
    if count > side**dim:
        raise BadParameter(f"cannot place {count} sites in a box of side {side}")
    idx = rng.choice(side**dim, size=count, replace=False)
    pts = np.stack(np.unravel_index(np.sort(idx), (side,) * dim), axis=-1) - radius
    vals = rng.uniform(vmax * 1e-3, vmax, size=count)
    return from_samples(dim, {tuple(int(c) for c in x): float(v) for x, v in zip(pts, vals)})
