from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import statsmodels.api as sm


# -------------------------
# Log-log slope fits (evidence columns in reports)
# -------------------------
@dataclass(frozen=True)
class SlopeFit:
    slope: float        # b in ln y = a + b ln x
    intercept: float    # a
    stderr: float       # standard error of b (nan with two points)
    r2: float
    n: int              # points used (positive x and y only)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> SlopeFit:
    """
    OLS fit of ln y against ln x.

    Points with x <= 0 or y <= 0 carry no information on a log scale and are
    dropped. Needs at least two usable points.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if keep.sum() < 2:
        raise ValueError(f"loglog_slope needs >= 2 positive points. Got {int(keep.sum())}")

    X = sm.add_constant(np.log(x[keep]))
    fit = sm.OLS(np.log(y[keep]), X).fit()

    # With exactly two points the residual variance is undefined
    stderr = float(fit.bse[1]) if keep.sum() > 2 else math.nan
    r2 = float(fit.rsquared) if keep.sum() > 2 else 1.0
    return SlopeFit(
        slope=float(fit.params[1]),
        intercept=float(fit.params[0]),
        stderr=stderr,
        r2=r2,
        n=int(keep.sum()),
    )


def ratio_spread(values: Sequence[float]) -> float:
    """max / min over the positive finite values (1.0 when fewer than two)."""
    v = [x for x in values if x > 0 and math.isfinite(x)]
    return max(v) / min(v) if len(v) >= 2 else 1.0


# -------------------------
# Formatting helpers (report-friendly)
# -------------------------
def fmt_float(x: Optional[float], digits: int = 6) -> str:
    if x is None:
        return "n/a"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.{digits}g}"


def fmt_int(n: Optional[int]) -> str:
    return "n/a" if n is None else f"{n:d}"


def fmt_bracket(lo: float, hi: float, digits: int = 6) -> str:
    # Collapse exact brackets to a single number
    if lo == hi:
        return fmt_float(lo, digits)
    return f"[{fmt_float(lo, digits)}, {fmt_float(hi, digits)}]"
