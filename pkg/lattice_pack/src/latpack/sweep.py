"""Coupling-constant sweeps: N[e, lam V] against the semi-classical count.

Each lambda is an independent task. Tasks fan out to a thread pool and are
reduced in sorted-lambda order, so the report does not depend on scheduling.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from latpack.birman import n_bound_states_bs
from latpack.boxop import CountResult, n_bound_states
from latpack.dispersion import Dispersion
from latpack.errors import BadParameter, LatpackError
from latpack.green import DEFAULT_TOL
from latpack.potential import ExpTail, Potential, PowerLogTail, from_tail, interleave, level_count, weight_by_power
from latpack.semiclassical import ScBracket, n_sc
from latpack.stats import ratio_spread

log = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "lambda",
    "n_box",
    "n_box_stabilized",
    "n_bs",
    "n_sc_lo",
    "n_sc_hi",
    "n_sc_gt",
    "ratio_lo",
    "ratio_hi",
    "n_scaled",
]


@dataclass(frozen=True)
class SweepRow:
    lam: float
    n_box: CountResult
    n_bs: Optional[int]
    n_sc: ScBracket        # denominator bracket (1 + N_sc of the weighted potential when d < 3)
    n_sc_gt: int           # L_{lam V}[e_max]
    ratio_lo: float
    ratio_hi: float


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    meta: dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        d = int(self.meta.get("dim", 3))
        records = [
            {
                "lambda": r.lam,
                "n_box": r.n_box.count,
                "n_box_stabilized": r.n_box.stabilized,
                "n_bs": r.n_bs if r.n_bs is not None else -1,
                "n_sc_lo": r.n_sc.lower,
                "n_sc_hi": r.n_sc.upper,
                "n_sc_gt": r.n_sc_gt,
                "ratio_lo": r.ratio_lo,
                "ratio_hi": r.ratio_hi,
                "n_scaled": r.n_box.count * r.lam ** (-d / 2.0) if r.lam > 0 else math.nan,
            }
            for r in self.rows
        ]
        return pd.DataFrame(records, columns=SWEEP_COLUMNS)


def ratio_bracket(n: int, den: ScBracket) -> tuple[float, float]:
    """Conservative bracket for n / den: 0 when n = 0, open above when den may vanish."""
    if n == 0:
        return 0.0, 0.0
    lo = 0.0 if math.isinf(den.upper) else n / den.upper
    hi = math.inf if den.lower <= 0 else n / den.lower
    return lo, hi


def denominator(e: Dispersion, W: Potential, grid_m: Optional[int] = None) -> ScBracket:
    """N_sc[e, W] for d >= 3, 1 + N_sc[e, <x>^(d+5) W] for d < 3."""
    if e.dim >= 3:
        return n_sc(e, W, grid_m)
    try:
        weighted = weight_by_power(W)
    except BadParameter:
        log.info("weighted tail has no decay left; denominator is infinite")
        return ScBracket.infinite()
    return ScBracket.exact(1.0) + n_sc(e, weighted, grid_m)


def _sweep_one(
    e: Dispersion,
    V: Potential,
    lam: float,
    start_l: Optional[int],
    max_l: Optional[int],
    grid_m: Optional[int],
    with_bs: bool,
    tol: float,
    margin: float,
) -> SweepRow:
    W = V.scaled(lam)
    box = n_bound_states(e, W, start_l=start_l, max_l=max_l)
    n_bs = None
    if with_bs and W.is_finite:
        try:
            n_bs = n_bound_states_bs(e, W, margin=margin, tol=tol).count
        except LatpackError as exc:
            log.warning("BS count failed at lambda=%g: %s", lam, exc)
    den = denominator(e, W, grid_m)
    lo, hi = ratio_bracket(box.count, den)
    log.debug("sweep lambda=%g: N=%d den=[%.4g, %.4g]", lam, box.count, den.lower, den.upper)
    return SweepRow(lam, box, n_bs, den, level_count(W, e.e_max), lo, hi)


def weyl_sweep(
    e: Dispersion,
    V: Potential,
    lambdas: Sequence[float],
    threads: int = 1,
    start_l: Optional[int] = None,
    max_l: Optional[int] = None,
    grid_m: Optional[int] = None,
    with_bs: bool = True,
    tol: float = DEFAULT_TOL,
    margin: float = 1e-6,
) -> SweepReport:
    lams = sorted({float(v) for v in lambdas})
    if any(v < 0 for v in lams):
        raise BadParameter(f"lambdas must be >= 0. Got: {lams}")
    args = (start_l, max_l, grid_m, with_bs, tol, margin)

    if threads > 1 and len(lams) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {lam: pool.submit(_sweep_one, e, V, lam, *args) for lam in lams}
            rows = [futures[lam].result() for lam in lams]
    else:
        rows = [_sweep_one(e, V, lam, *args) for lam in lams]

    meta = {
        "dim": e.dim,
        "e_max": e.e_max,
        "potential": V.describe(),
        "start_l": start_l,
        "max_l": max_l,
        "grid_m": grid_m,
    }
    return SweepReport(tuple(rows), meta)


# -------------------------
# Oscillating N_sc / N (long-running)
# -------------------------
def oscillating_potential(shells: Sequence[float], window_r: int = 4) -> Potential:
    """Power-log tail on the shell bands, exponential tail elsewhere (d = 3)."""
    V1 = from_tail(3, PowerLogTail(1.0, 2.0, 1.0), window_r)
    V2 = from_tail(3, ExpTail(1.0, 1.0), window_r)
    return interleave(V1, V2, shells)


def liminf_limsup_probe(
    e: Dispersion,
    shells: Sequence[float],
    lambdas: Optional[Sequence[float]] = None,
    threads: int = 1,
    max_l: Optional[int] = None,
) -> SweepReport:
    """Sweep the interleaved potential over lambda decades and record the N_sc / N spread."""
    if e.dim < 3:
        raise BadParameter(f"liminf_limsup_probe needs d >= 3. Got d = {e.dim}")
    lams = list(lambdas) if lambdas is not None else [10.0**k for k in range(1, 5)]
    V = oscillating_potential(shells)
    report = weyl_sweep(e, V, lams, threads=threads, max_l=max_l, with_bs=False)
    ratios = [r.n_sc.mid / r.n_box.count for r in report.rows if r.n_box.count > 0 and not r.n_sc.is_infinite]
    meta = dict(report.meta, shells=list(shells), spread=ratio_spread(ratios))
    log.info("liminf/limsup probe: N_sc/N spread %.4g over %d decades", meta["spread"], len(ratios))
    return SweepReport(report.rows, meta)


def n_scaled_decay(report: SweepReport) -> np.ndarray:
    """lam^(-d/2) N along the sweep."""
    return report.to_frame()["n_scaled"].to_numpy()
