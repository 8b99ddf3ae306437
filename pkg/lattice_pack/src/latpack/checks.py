"""Named, re-runnable checks of the counting inequalities.

Every check returns a CheckOutcome whose verdict is computed only from the
evidence it records. A check whose premise fails (for example a measured
constant that is too large for the chosen parameters) reports
``premise-fail`` instead of ``fail``.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
import pandas as pd

from latpack.birman import (
    DEFAULT_MARGIN,
    BSMatrix,
    bs_matrix,
    bs_norm,
    count_ge_one,
    n_below_via_bs,
    n_bound_states_bs,
    schur_offdiag,
    spread_rearrangement,
)
from latpack.boxop import (
    NEGATIVE_THRESHOLD,
    assemble,
    count_below_jittered,
    default_start_l,
    lowest_eigenvalues,
    n_below_threshold,
    n_bound_states,
)
from latpack.config import RunConfig, resolve_threads
from latpack.dispersion import Dispersion, laplacian
from latpack.errors import BadParameter, LatpackError, SpacingOverflow, ThresholdAmbiguous
from latpack.green import DEFAULT_TOL, eta, green_table, near_cap, watson_integral
from latpack.io import dispersion_for_run, frame_to_csv, potential_from_dict
from latpack.potential import (
    ExpTail,
    Potential,
    PowerTail,
    build_prescribed,
    bump,
    from_samples,
    from_tail,
    level_count,
    partial_sums_diverge,
    random_finite,
    rearrange_sparse,
    scale_continuum,
    sparse_potential,
    sparse_values,
    sparse_values_partial_sums,
    weighted_norm,
)
from latpack.semiclassical import clr_constant, n_sc, n_sc_split, sandwich_constants
from latpack.stats import loglog_slope
from latpack.sweep import liminf_limsup_probe, oscillating_potential, weyl_sweep

log = logging.getLogger(__name__)

STATUSES = ("pass", "fail", "premise-fail", "inconclusive")
HEADROOM = 1.25            # r0 must satisfy the measured premise with 25% to spare
WATSON_ETA = 1.9784
MAX_R0 = 2**40


# -------------------------
# Outcome container
# -------------------------
@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    status: str                      # one of STATUSES
    premise_verified: bool = True
    details: dict[str, Any] = field(default_factory=dict)
    informational: bool = False      # premise-fail / inconclusive do not fail the run

    @property
    def ok(self) -> bool:
        if self.passed:
            return True
        return self.informational and self.status in ("premise-fail", "inconclusive")


def _plain(value: Any) -> Any:
    """Evidence as JSON-ready builtins."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _outcome(
    name: str,
    passed: bool,
    details: dict[str, Any],
    premise: bool = True,
    status: Optional[str] = None,
    informational: bool = False,
) -> CheckOutcome:
    if status is None:
        status = "pass" if (premise and passed) else ("premise-fail" if not premise else "fail")
    if status == "premise-fail":
        log.warning("%s: premise not verified", name)
    return CheckOutcome(name, status == "pass", status, premise, _plain(details), informational)


# -------------------------
# Shared helpers
# -------------------------
_SUITE_SHAPE = {1: (5, 8), 2: (5, 4), 3: (5, 3)}   # (sites, support radius)


def random_suite(
    e: Dispersion,
    draws: int,
    seed: int,
    count: Optional[int] = None,
    radius: Optional[int] = None,
    vmax_factor: float = 3.0,
) -> list[Potential]:
    c0, r0 = _SUITE_SHAPE.get(e.dim, (3, 2))
    rng = np.random.default_rng(seed)
    return [random_finite(e.dim, count or c0, radius or r0, vmax_factor * e.e_max, rng) for _ in range(draws)]


def add_potentials(V1: Potential, V2: Potential) -> Potential:
    out = dict(V1.explicit)
    for x, v in V2.explicit.items():
        out[x] = out.get(x, 0.0) + v
    return from_samples(V1.dim, out)


def _reach(V: Potential) -> int:
    return max((max(abs(c) for c in x) for x in V.explicit), default=0)


def _pow2_at_least(n: float) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def smallest_r0(ok: Callable[[int], bool], start: int = 1) -> int:
    """Smallest power of two r0 >= start with ok(r0)."""
    r0 = _pow2_at_least(start)
    while not ok(r0):
        r0 *= 2
        if r0 > MAX_R0:
            raise SpacingOverflow(f"no r0 in [{start}, 2^40] satisfies the premise")
    return r0


def _scaled_bs(B: BSMatrix, lam: float) -> BSMatrix:
    return BSMatrix(B.rho, B.points, B.values * lam, B.matrix * lam, B.green_err, B.eig_err * lam)


def _slope_or_nan(xs: Sequence[float], ys: Sequence[float]) -> float:
    try:
        return loglog_slope(xs, ys).slope
    except ValueError:
        return math.nan


# -------------------------
# Closed-form oracles
# -------------------------
def check_closed_form_1d(box_l: int = 64, tol: float = DEFAULT_TOL) -> CheckOutcome:
    """0.75 delta_0 in d = 1 has exactly one bound state, at -1/4."""
    e = laplacian(1)
    V = from_samples(1, {(0,): 0.75})
    res = n_bound_states(e, V, start_l=box_l // 4, max_l=box_l)
    low = lowest_eigenvalues(assemble(e, V, box_l), 1)[0]
    B = bs_matrix(e, V, 0.25, tol)
    ev = float(B.eigenvalues()[0])
    passed = res.count == 1 and abs(low + 0.25) <= 1e-8 and abs(ev - 1.0) <= B.green_err + 1e-9
    return _outcome(
        "closed_form_1d",
        passed,
        {"count": res.count, "history": res.history, "lowest": low, "bs_eig": ev, "green_err": B.green_err},
    )


def check_watson(tol: float = DEFAULT_TOL) -> CheckOutcome:
    h = eta(laplacian(3), tol)
    closed = 1.0 / watson_integral()
    passed = abs(h - WATSON_ETA) <= 1e-4 and abs(h - closed) <= 1e-4
    return _outcome("watson", passed, {"eta": h, "closed_form": closed, "target": WATSON_ETA})


def check_single_site_threshold(
    e: Optional[Dispersion] = None, lam_lo: float = 1.9, lam_hi: float = 2.1, max_l: int = 32, tol: float = DEFAULT_TOL
) -> CheckOutcome:
    """No bound state just below eta, one just above, by both protocols."""
    e = e or laplacian(3)
    rows = {}
    for lam, want in ((lam_lo, 0), (lam_hi, 1)):
        V = from_samples(e.dim, {(0,) * e.dim: lam})
        box = n_bound_states(e, V, start_l=4, max_l=max_l)
        bs = n_bound_states_bs(e, V, tol=tol)
        rows[f"{lam:g}"] = {"want": want, "box": box.count, "box_stabilized": box.stabilized, "bs": bs.count}
    passed = all(r["box"] == r["want"] and r["bs"] == r["want"] for r in rows.values())
    return _outcome("single_site_threshold", passed, {"eta": eta(e, tol), "rows": rows})


# -------------------------
# Birman-Schwinger against box counts
# -------------------------
def check_bs_cross_oracle(
    e: Dispersion,
    n_draws: int = 20,
    rho_grid: Sequence[float] = (0.1, 0.5, 1.0),
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    margin: float = DEFAULT_MARGIN,
) -> CheckOutcome:
    cases, ambiguous = 0, 0
    disagree, unresolved = [], []
    for i, V in enumerate(random_suite(e, n_draws, seed)):
        for rho in rho_grid:
            cases += 1
            r, n_bs, hit = float(rho), None, False
            for _ in range(4):
                try:
                    n_bs = n_below_via_bs(e, V, r, margin, tol)
                    break
                except ThresholdAmbiguous as exc:
                    hit = True
                    log.warning("draw %d: %s; jittering rho", i, exc)
                    r *= 1.01
            ambiguous += hit
            if n_bs is None:
                unresolved.append([i, rho])
                continue
            box = n_below_threshold(e, V, -r)
            if box.count != n_bs:
                disagree.append([i, r, n_bs, box.count])
    passed = not disagree and not unresolved and ambiguous < 0.1 * max(cases, 1)
    return _outcome(
        "bs_cross_oracle",
        passed,
        {"dim": e.dim, "cases": cases, "ambiguous": ambiguous, "disagree": disagree, "unresolved": unresolved},
    )


# -------------------------
# Lower and upper bounds
# -------------------------
def check_lower_bound(
    e: Dispersion, V: Potential, c: float, start_l: Optional[int] = None, max_l: Optional[int] = None
) -> CheckOutcome:
    """N >= L_V[c] for c > e_max."""
    details: dict[str, Any] = {"c": c, "e_max": e.e_max}
    if not c > e.e_max:
        return _outcome("lower_bound", False, details, premise=False)
    res = n_bound_states(e, V, start_l=start_l, max_l=max_l)
    L = level_count(V, c)
    details.update(n=res.count, stabilized=res.stabilized, history=res.history, level_count=L)
    return _outcome("lower_bound", res.count >= L, details)


def check_lower_bound_suite(e: Dispersion, draws: int = 20, seed: int = 0, factor: float = 1.01) -> CheckOutcome:
    rows, violations = [], 0
    for V in random_suite(e, draws, seed):
        out = check_lower_bound(e, V, factor * e.e_max)
        violations += not out.passed
        rows.append([out.details["n"], out.details["level_count"]])
    return _outcome("lower_bound_suite", violations == 0, {"dim": e.dim, "rows": rows, "violations": violations})


def check_upper_clr(e: Dispersion, V: Potential, grid_m: Optional[int] = None) -> CheckOutcome:
    """N <= clr_total * sum_{V < e_max} V^(d/2) + L_V[e_max]."""
    if e.dim < 3:
        raise BadParameter(f"check_upper_clr needs d >= 3. Got d = {e.dim}")
    consts = clr_constant(e, grid_m=grid_m)
    n_gt, lt = n_sc_split(e, V)
    bound = consts.clr_total * lt.upper + n_gt
    res = n_bound_states(e, V)
    return _outcome(
        "upper_clr",
        res.count <= bound,
        status=None if res.stabilized else "inconclusive",
        details={
            "n": res.count,
            "stabilized": res.stabilized,
            "clr_total": consts.clr_total,
            "n_lt_upper": lt.upper,
            "n_gt": n_gt,
            "bound": bound,
            "margin": bound - res.count,
        },
    )


def check_upper_clr_suite(e: Dispersion, draws: int = 20, seed: int = 0) -> CheckOutcome:
    rows, violations = [], 0
    unsettled = 0
    for V in random_suite(e, draws, seed):
        out = check_upper_clr(e, V)
        violations += out.status == "fail"
        unsettled += out.status == "inconclusive"
        rows.append([out.details["n"], out.details["bound"], out.details["stabilized"]])
    details = {"rows": rows, "violations": violations, "unsettled": unsettled}
    if violations == 0 and unsettled:
        return _outcome("upper_clr_suite", False, details, status="inconclusive")
    return _outcome("upper_clr_suite", violations == 0, details)


def check_saturation(e: Dispersion, V: Optional[Potential] = None, seed: int = 0) -> CheckOutcome:
    """At lam = 100 e_max / min V every site binds: N = #supp = upper N_sc."""
    V = V if V is not None else random_suite(e, 1, seed)[0]
    vals = [v for _, v in V.nonzero_items()]
    if not vals:
        return _outcome("saturation", True, {"n_supp": 0})
    lam = 100.0 * e.e_max / min(vals)
    W = V.scaled(lam)
    res = n_bound_states(e, W)
    sc = n_sc(e, W)
    n = len(vals)
    passed = res.count == n and math.isclose(sc.upper, n, rel_tol=0.0, abs_tol=1e-12)
    return _outcome("saturation", passed, {"lambda": lam, "n": res.count, "n_supp": n, "n_sc_upper": sc.upper})


def check_subadditivity(
    e: Dispersion, pairs: Optional[Sequence[tuple[Potential, Potential]]] = None, draws: int = 10, seed: int = 0
) -> CheckOutcome:
    """count(V1 + V2) <= count(V1) + #supp V2 on one shared box."""
    if pairs is None:
        pairs = list(zip(random_suite(e, draws, seed), random_suite(e, draws, seed + 1)))
    rows, violations = [], 0
    for V1, V2 in pairs:
        L = max(default_start_l(e.dim), _reach(V1), _reach(V2), e.coefficient_range)
        both, _ = count_below_jittered(assemble(e, add_potentials(V1, V2), L), NEGATIVE_THRESHOLD)
        one, _ = count_below_jittered(assemble(e, V1, L), NEGATIVE_THRESHOLD)
        n2 = len(V2.nonzero_items())
        violations += both > one + n2
        rows.append([L, both, one, n2])
    return _outcome("subadditivity", violations == 0, {"rows": rows, "violations": violations})


# -------------------------
# Resolvent decay and sparse constructions
# -------------------------
def _c_hat(e: Dispersion, radius: int, rho_grid: Sequence[float], tol: float) -> float:
    best = 0.0
    for rho in rho_grid:
        table = green_table(e, float(rho), radius, tol)
        ax = np.arange(-radius, radius + 1, dtype=float)
        mesh = np.meshgrid(*([ax] * e.dim), indexing="ij")
        r = np.sqrt(sum(m**2 for m in mesh))
        mask = (r >= 1.0) & (r <= radius)
        best = max(best, float(np.max(np.sqrt(r[mask]) * np.abs(table.values[mask]))))
    return best


def resolvent_decay_probe(
    e: Dispersion,
    radius: int = 16,
    rho_grid: Sequence[float] = (1.0, 0.1, 0.01, 0.0),
    tol: float = DEFAULT_TOL,
) -> tuple[float, CheckOutcome]:
    """C_hat = max |x|^(1/2) |G_rho(x)| over 1 <= |x| <= radius; stable under halving the radius."""
    if e.dim < 3:
        raise BadParameter(f"resolvent_decay_probe needs d >= 3. Got d = {e.dim}")
    if any(not 0.0 <= r <= 1.0 for r in rho_grid):
        raise BadParameter(f"rho_grid must lie in [0, 1]. Got: {list(rho_grid)}")
    R = min(int(radius), near_cap(e.dim))
    if R < 2:
        raise BadParameter(f"radius must be >= 2. Got: {radius}")
    full = _c_hat(e, R, rho_grid, tol)
    half = _c_hat(e, R // 2, rho_grid, tol)

    table = green_table(e, float(min(rho_grid)), R, tol)
    ks = np.arange(1, R + 1)
    axis_vals = [abs(table[(int(k),) + (0,) * (e.dim - 1)]) for k in ks]
    slope = _slope_or_nan(ks, axis_vals)

    passed = abs(full - half) <= 0.1 * half
    out = _outcome(
        "resolvent_decay",
        passed,
        {"radius": R, "c_hat": full, "c_hat_half": half, "rho_grid": list(rho_grid), "axis_slope": slope},
    )
    return full, out


def measured_decay_constant(e: Dispersion, tol: float = DEFAULT_TOL) -> float:
    return resolvent_decay_probe(e, tol=tol)[0]


def check_sparse_zero(
    e: Dispersion,
    vals: Optional[Sequence[float]] = None,
    r0: Optional[int] = None,
    n: int = 12,
    tol: float = DEFAULT_TOL,
) -> CheckOutcome:
    """Values below eta - C eta^2 / (4 sqrt r0) on the 9^k r0 chain bind nothing."""
    if e.dim < 3:
        raise BadParameter(f"check_sparse_zero needs d >= 3. Got d = {e.dim}")
    h = eta(e, tol)
    default_vals = vals is None
    vals = sparse_values(h, n) if default_vals else [float(v) for v in vals]
    c_hat = measured_decay_constant(e, tol)
    top = max(vals, default=0.0)

    def premise_at(r: int, slack: float = 1.0) -> bool:
        return top < h - slack * 0.25 * c_hat * h * h / math.sqrt(r)

    if r0 is None:
        r0 = smallest_r0(lambda r: premise_at(r, HEADROOM)) if top < h else 1
    details: dict[str, Any] = {"eta": h, "c_hat": c_hat, "sup": top, "r0": r0, "n": len(vals)}
    if not premise_at(r0):
        return _outcome("sparse_zero", False, details, premise=False)

    V = sparse_potential(vals, r0, e.dim)
    norms = {f"{rho:g}": bs_norm(e, V, rho, tol) for rho in (1.0, 0.0)}
    norm_ok = all(lam + err < 1.0 for lam, err in norms.values())
    res = n_bound_states_bs(e, V, tol=tol)
    details.update(bs_norms=norms, count=res.count)
    diverges = True
    if default_vals:
        # sum of V^(d/2) along the ln(4 + j)^-1 sequence, per decade of sites
        sums = sparse_values_partial_sums(e.dim / 2.0, [10**k for k in range(1, 7)])
        diverges = partial_sums_diverge(list(sums.values()))
        details.update(partial_sums=sums, diverges=diverges)
    return _outcome("sparse_zero", norm_ok and diverges and res.count == 0, details)


def check_prescribed(
    e: Dispersion,
    lambdas: Optional[Sequence[float]] = None,
    eps: float = 0.25,
    lambda_grid: Sequence[float] = tuple(range(2, 21)),
    tol: float = DEFAULT_TOL,
    margin: float = DEFAULT_MARGIN,
    rho_grid: Sequence[float] = (1.0, 0.5, 0.25, 0.1),
) -> CheckOutcome:
    """F((1 - eps) lam) <= N[e, lam V] <= F((1 + eps) lam), F counting the jumps."""
    if e.dim < 3:
        raise BadParameter(f"check_prescribed needs d >= 3. Got d = {e.dim}")
    if not 0 < eps < 1:
        raise BadParameter(f"eps must lie in (0, 1). Got: {eps}")
    grid = sorted(float(v) for v in lambda_grid)
    if any(v < 2 for v in grid):
        raise BadParameter(f"lambda_grid must lie in [2, inf). Got: {grid}")
    if lambdas is None:
        top = int(math.floor((1.0 + eps) * max(grid, default=2.0)))
        lambdas = [float(k) for k in range(1, top + 2)]
    lams = sorted(float(v) for v in lambdas)

    def F(lam: float) -> int:
        return bisect.bisect_right(lams, lam)

    h = eta(e, tol)
    c_hat = measured_decay_constant(e, tol)
    eps_prime = 0.9 * eps / (1.0 - eps)
    target = eps_prime / (1.0 + eps_prime)
    r0 = smallest_r0(lambda r: HEADROOM * h * c_hat / (2.0 * math.sqrt(8.0 * r)) < target)
    V = build_prescribed(lams, h, r0, e.dim)
    schur = schur_offdiag(e, V.support, rho_grid, tol=tol) if lams else 0.0
    details: dict[str, Any] = {"eta": h, "c_hat": c_hat, "r0": r0, "schur": schur, "target": target}
    if not h * schur < target:
        return _outcome("prescribed", False, details, premise=False)

    B = bs_matrix(e, V, 0.0, tol)
    rows = []
    for lam in grid:
        hi, lo = count_ge_one(_scaled_bs(B, lam), margin)
        rows.append([lam, F((1.0 - eps) * lam), lo, hi, F((1.0 + eps) * lam)])
    passed = all(f_lo <= lo and hi <= f_hi for _, f_lo, lo, hi, f_hi in rows)
    details["rows"] = rows
    return _outcome("prescribed", passed, details)


def check_rearrangement_optimality(
    e: Dispersion, V: Potential, eps: float = 0.25, tol: float = DEFAULT_TOL
) -> CheckOutcome:
    """Moving the values below (1 - eps) eta onto a sparse chain leaves N <= L_V[(1 - eps) eta]."""
    if e.dim < 3:
        raise BadParameter(f"check_rearrangement_optimality needs d >= 3. Got d = {e.dim}")
    h = eta(e, tol)
    c_hat = measured_decay_constant(e, tol)
    target = eps / (1.0 + eps)
    r0 = smallest_r0(
        lambda r: HEADROOM * h * c_hat / (2.0 * math.sqrt(8.0 * r)) < target,
        start=2 * _reach(V) + 1,
    )
    W = rearrange_sparse(V, eps, e, r0, tol)
    res = n_bound_states_bs(e, W, tol=tol)
    bound = level_count(V, (1.0 - eps) * h)
    return _outcome(
        "rearrangement_optimality",
        res.count <= bound,
        {"eta": h, "eps": eps, "r0": r0, "n": res.count, "stabilized": res.stabilized, "bound": bound},
    )


# -------------------------
# Low dimensions
# -------------------------
def check_d12_saturation(e: Dispersion, V: Potential, tol: float = DEFAULT_TOL) -> CheckOutcome:
    """A spread rearrangement binds one state per site; N / N_sc is unbounded."""
    if e.dim not in (1, 2):
        raise BadParameter(f"check_d12_saturation needs d in {{1, 2}}. Got d = {e.dim}")
    n_supp = len(V.nonzero_items())
    if n_supp == 0:
        return _outcome("d12_saturation", True, {"n_supp": 0})
    W, cert = spread_rearrangement(e, V, tol)
    _, certified = count_ge_one(bs_matrix(e, W, cert.rho, tol))

    details: dict[str, Any] = {"n_supp": n_supp, "rho": cert.rho, "spacing": cert.spacing, "certified": certified}
    if e.dim == 1:
        start = _pow2_at_least(max(2 * _reach(W), default_start_l(1)))
        box = n_bound_states(e, W, start_l=start, max_l=4 * start)
        n, stabilized = box.count, box.stabilized
        details["history"] = box.history
    else:
        # eigenvalues <= -rho are certified; N <= #supp always
        n, stabilized = certified, True
    sc_v, sc_w = n_sc(e, V), n_sc(e, W)
    details.update(
        n=n,
        stabilized=stabilized,
        n_sc_lo=sc_v.lower,
        n_sc_hi=sc_v.upper,
        n_sc_rearranged_hi=sc_w.upper,
        ratio_lo=n / sc_v.upper if sc_v.upper > 0 else math.inf,
    )
    return _outcome("d12_saturation", certified == n_supp and n == n_supp, details)


def check_d12_upper(
    e: Dispersion,
    fit: Optional[Sequence[Potential]] = None,
    holdout: Optional[Sequence[Potential]] = None,
    draws: int = 10,
    seed: int = 0,
) -> CheckOutcome:
    """N <= 2 c_hat |V|_{1/2,2} + #Min(e), c_hat fitted on one suite, tested on another."""
    if e.dim not in (1, 2):
        raise BadParameter(f"check_d12_upper needs d in {{1, 2}}. Got d = {e.dim}")
    fit = list(fit) if fit is not None else random_suite(e, draws, seed)
    holdout = list(holdout) if holdout is not None else random_suite(e, draws, seed + 1)
    n_min = e.morse.n_min

    def measure(V: Potential) -> tuple[int, float]:
        return n_bound_states(e, V).count, weighted_norm(V, 0.5, 2.0)[1]

    c_hat = 0.0
    for V in fit:
        n, norm = measure(V)
        if norm > 0:
            c_hat = max(c_hat, (n - n_min) / norm)
    rows, violations = [], 0
    for V in holdout:
        n, norm = measure(V)
        bound = 2.0 * c_hat * norm + n_min
        violations += n > bound
        rows.append([n, norm, bound])
    return _outcome("d12_upper", violations == 0, {"c_hat": c_hat, "n_min": n_min, "rows": rows, "violations": violations})


# -------------------------
# Growth and decay probes
# -------------------------
def accumulation_probe(e: Dispersion, alpha: float, const: float, box_seq: Sequence[int]) -> CheckOutcome:
    """Counts keep growing with the box for alpha < 2 and settle for alpha > 2."""
    if len(box_seq) < 2:
        raise BadParameter(f"box_seq needs at least two boxes. Got: {list(box_seq)}")
    V = from_tail(e.dim, PowerTail(const, alpha))
    counts = [count_below_jittered(assemble(e, V, int(L)), NEGATIVE_THRESHOLD)[0] for L in box_seq]
    details = {"alpha": alpha, "const": const, "boxes": list(box_seq), "counts": counts,
               "slope": _slope_or_nan(box_seq, counts)}
    if alpha == 2.0:
        return _outcome("accumulation", False, details, status="inconclusive", informational=True)
    if not any(counts):
        # nothing binds, so neither growth nor settling is visible
        return _outcome("accumulation", False, details, status="inconclusive")
    if alpha < 2.0:
        passed = all(b > a for a, b in zip(counts, counts[1:]))
    else:
        passed = counts[-1] == counts[-2]
    return _outcome("accumulation", passed, details)


def check_sc_decay(
    e: Optional[Dispersion] = None,
    V: Optional[Potential] = None,
    lambdas: Sequence[float] = (1e2, 1e3, 1e4),
    start_l: int = 4,
    max_l: int = 16,
) -> CheckOutcome:
    """lam^(-d/2) N drops by at least 2x per decade of lam."""
    e = e or laplacian(3)
    V = V if V is not None else from_tail(e.dim, ExpTail(1.0, 2.0))
    lams = sorted(float(v) for v in lambdas)
    d = e.dim
    rows = []
    for lam in lams:
        W = V.scaled(lam)
        res = n_bound_states(e, W, start_l=start_l, max_l=max_l)
        rows.append([lam, res.count, res.stabilized, res.count * lam ** (-d / 2.0), n_sc(e, W).mid * lam ** (-d / 2.0)])
    scaled = [r[3] for r in rows]
    steps = list(zip(lams, scaled))
    passed = bool(scaled) and scaled[0] > 0 and all(
        b <= a / 2.0 ** math.log10(lb / la) for (la, a), (lb, b) in zip(steps, steps[1:])
    )
    return _outcome(
        "sc_decay",
        passed,
        {"rows": rows, "slope_n": _slope_or_nan(lams, scaled), "slope_sc": _slope_or_nan(lams, [r[4] for r in rows])},
    )


def check_scaled_continuum(
    e: Dispersion,
    v: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    L_seq: Sequence[int] = (2, 4, 8),
    lam: float = 400.0,
    tol: float = DEFAULT_TOL,
    margin: float = DEFAULT_MARGIN,
) -> CheckOutcome:
    """N[e, lam V_L] against lam^(d/2) sum v(x/L)^(d/2) L^-d along L."""
    if e.dim < 3:
        raise BadParameter(f"check_scaled_continuum needs d >= 3. Got d = {e.dim}")
    v = v if v is not None else bump()
    rows = []
    for L in L_seq:
        W = scale_continuum(v, int(L), e.dim).scaled(lam)
        vals = np.array([val for _, val in W.nonzero_items()])
        den = float(np.sum(vals ** (e.dim / 2.0)))
        if den == 0.0:
            rows.append([L, 0, 0, 0.0, math.nan])
            continue
        hi, lo = count_ge_one(bs_matrix(e, W, 0.0, tol), margin)
        rows.append([L, lo, hi, den, lo / den])
    details = {"lambda": lam, "rows": rows, "slope": _slope_or_nan([r[0] for r in rows], [r[1] for r in rows])}
    if all(r[3] == 0.0 for r in rows):
        return _outcome("scaled_continuum", True, details)
    ratios = [r[4] for r in rows]
    if any(not r > 0 for r in ratios):
        return _outcome("scaled_continuum", False, details, status="inconclusive")
    passed = all(b >= 0.8 * a for a, b in zip(ratios, ratios[1:]))
    return _outcome("scaled_continuum", passed, details)


def check_liminf_limsup(
    e: Optional[Dispersion] = None, shells: Sequence[float] = (2.0, 4.0, 8.0, 16.0), threads: int = 1
) -> CheckOutcome:
    report = liminf_limsup_probe(e or laplacian(3), shells, threads=threads)
    spread = report.meta["spread"]
    status = "pass" if spread > 1.5 else "inconclusive"
    return _outcome("liminf_limsup", status == "pass", {"spread": spread, "shells": list(shells)},
                    status=status, informational=True)


def check_determinism(cfg: RunConfig) -> CheckOutcome:
    """Two sweeps from the same config and seed give byte-identical CSV."""
    e = dispersion_for_run(cfg)
    V = potential_from_dict(cfg.potential or {"kind": "random"}, e, cfg.seed)
    csv = []
    for _ in range(2):
        report = weyl_sweep(
            e, V, cfg.lambdas, threads=resolve_threads(cfg),
            start_l=cfg.grids.start_l, max_l=cfg.grids.max_l, grid_m=cfg.grids.sc_grid_m,
            tol=cfg.tolerances.green_tol, margin=cfg.tolerances.bs_margin,
        )
        csv.append(frame_to_csv(report.to_frame()))
    return _outcome("determinism", csv[0] == csv[1], {"rows": len(cfg.lambdas), "bytes": len(csv[0])})


# -------------------------
# Constants and constructions
# -------------------------
def constants_table(e: Dispersion, tol: float = DEFAULT_TOL, grid_m: Optional[int] = None) -> pd.DataFrame:
    rows: list[tuple[str, float]] = [("eta", eta(e, tol)), ("e_max", e.e_max)]
    if e.dim >= 3:
        consts = clr_constant(e, grid_m=grid_m)
        rows += [("c1", consts.c1), ("c2", consts.c2), ("clr_c", consts.clr_c), ("clr_total", consts.clr_total)]
        rows.append(("C_hat", measured_decay_constant(e, tol)))
    else:
        sw = sandwich_constants(e, grid_m=grid_m)
        rows += [("c1", sw.c1), ("c2", sw.c2)]
    m = e.morse
    rows += [("k_min", m.k_min), ("n_min", float(m.n_min)), ("delta", m.delta)]
    return pd.DataFrame(rows, columns=["quantity", "value"])


CONSTRUCT_KINDS = ("chain", "prescribed", "rearranged", "spread", "interleaved", "scaled")


def construct(
    kind: str,
    e: Dispersion,
    V: Optional[Potential] = None,
    n: int = 12,
    r0: Optional[int] = None,
    lambdas: Sequence[float] = (),
    eps: float = 0.25,
    shells: Sequence[float] = (4.0, 8.0),
    L: int = 8,
    lam: float = 1.0,
    tol: float = DEFAULT_TOL,
) -> Potential:
    """Build one of the special potentials as a Potential ready for serialization."""
    if kind not in CONSTRUCT_KINDS:
        raise BadParameter(f"unknown construction: {kind!r}. Expected one of {list(CONSTRUCT_KINDS)}")
    if kind == "interleaved":
        return oscillating_potential(shells)
    if kind == "scaled":
        return scale_continuum(bump(), L, e.dim).scaled(lam)
    if kind == "spread":
        if V is None:
            raise BadParameter("the spread construction needs a potential")
        return spread_rearrangement(e, V, tol)[0]

    h = eta(e, tol)
    if kind == "chain":
        vals = sparse_values(h, n)
        if r0 is None:
            c_hat = measured_decay_constant(e, tol)
            r0 = smallest_r0(lambda r: max(vals) < h - HEADROOM * 0.25 * c_hat * h * h / math.sqrt(r))
        return sparse_potential(vals, r0, e.dim)
    if kind == "prescribed":
        return build_prescribed(lambdas, h, r0 or 1, e.dim)
    if V is None:
        raise BadParameter("the rearranged construction needs a potential")
    return rearrange_sparse(V, eps, e, r0 or _pow2_at_least(2 * _reach(V) + 1), tol)


# -------------------------
# Registry
# -------------------------
@dataclass(frozen=True)
class CheckSpec:
    run: Callable[[RunConfig], CheckOutcome]
    slow: bool = False
    informational: bool = False


def _cfg_dispersion(cfg: RunConfig, dims: Sequence[int]) -> Dispersion:
    e = dispersion_for_run(cfg)
    return e if e.dim in dims else laplacian(max(dims))


def _mixed_potential() -> Potential:
    """Ten sites, half above and half below 0.75 eta (d = 3 Laplacian)."""
    vals = [4.0, 3.2, 2.6, 1.9, 1.6, 1.2, 0.9, 0.6, 0.4, 0.2]
    pts = [(i % 3, (i // 3) % 3, i // 9) for i in range(10)]
    return from_samples(3, dict(zip(pts, vals)))


def _tol(cfg: RunConfig) -> float:
    return cfg.tolerances.green_tol


def _cross_oracle(dim: int, cfg: RunConfig) -> CheckOutcome:
    return check_bs_cross_oracle(laplacian(dim), rho_grid=cfg.rho_grid, seed=cfg.seed, tol=_tol(cfg))


CHECKS: dict[str, CheckSpec] = {
    "closed_form_1d": CheckSpec(lambda cfg: check_closed_form_1d(tol=_tol(cfg))),
    "watson": CheckSpec(lambda cfg: check_watson(_tol(cfg))),
    "single_site_threshold": CheckSpec(lambda cfg: check_single_site_threshold(tol=_tol(cfg)), slow=True),
    "bs_cross_oracle_d1": CheckSpec(lambda cfg: _cross_oracle(1, cfg)),
    "bs_cross_oracle_d2": CheckSpec(lambda cfg: _cross_oracle(2, cfg)),
    "bs_cross_oracle_d3": CheckSpec(lambda cfg: _cross_oracle(3, cfg), slow=True),
    "lower_bound": CheckSpec(lambda cfg: check_lower_bound_suite(_cfg_dispersion(cfg, (1, 2, 3)), seed=cfg.seed)),
    "upper_clr": CheckSpec(lambda cfg: check_upper_clr_suite(_cfg_dispersion(cfg, (3,)), seed=cfg.seed), slow=True),
    "saturation": CheckSpec(lambda cfg: check_saturation(_cfg_dispersion(cfg, (1, 2, 3)), seed=cfg.seed)),
    "subadditivity": CheckSpec(lambda cfg: check_subadditivity(_cfg_dispersion(cfg, (1, 2, 3)), seed=cfg.seed)),
    "resolvent_decay": CheckSpec(lambda cfg: resolvent_decay_probe(_cfg_dispersion(cfg, (3,)), tol=_tol(cfg))[1]),
    "sparse_zero": CheckSpec(lambda cfg: check_sparse_zero(_cfg_dispersion(cfg, (3,)), tol=_tol(cfg))),
    "prescribed": CheckSpec(
        lambda cfg: check_prescribed(_cfg_dispersion(cfg, (3,)), tol=_tol(cfg), rho_grid=cfg.rho_grid)
    ),
    "rearrangement_optimality": CheckSpec(
        lambda cfg: check_rearrangement_optimality(laplacian(3), _mixed_potential(), tol=_tol(cfg))
    ),
    "d12_saturation": CheckSpec(
        lambda cfg: check_d12_saturation(laplacian(1), from_samples(1, {(k,): 0.3 for k in range(6)}), _tol(cfg))
    ),
    "d12_upper": CheckSpec(lambda cfg: check_d12_upper(laplacian(1), seed=cfg.seed)),
    "accumulation_1d": CheckSpec(
        lambda cfg: accumulation_probe(laplacian(1), 1.0, 4.0, (16, 32, 64, 128, 256, 512, 1024))
    ),
    "accumulation": CheckSpec(lambda cfg: accumulation_probe(laplacian(3), 1.5, 4.0, (4, 8, 16, 32)), slow=True),
    "accumulation_control": CheckSpec(lambda cfg: accumulation_probe(laplacian(3), 2.5, 4.0, (4, 8, 16))),
    "sc_decay": CheckSpec(lambda cfg: check_sc_decay(), slow=True),
    "scaled_continuum": CheckSpec(lambda cfg: check_scaled_continuum(laplacian(3), tol=_tol(cfg)), slow=True),
    "liminf_limsup": CheckSpec(
        lambda cfg: check_liminf_limsup(threads=resolve_threads(cfg)), slow=True, informational=True
    ),
    "determinism": CheckSpec(check_determinism),
}


def run_checks(names: Sequence[str], cfg: RunConfig, include_slow: bool = False) -> list[CheckOutcome]:
    """Run the named checks ("all" selects every fast check, plus slow ones on request)."""
    if list(names) == ["all"]:
        selected = [n for n, spec in CHECKS.items() if include_slow or not spec.slow]
    else:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise BadParameter(f"unknown check(s): {unknown}. Known: {sorted(CHECKS)}")
        selected = list(names)

    outcomes = []
    for name in selected:
        spec = CHECKS[name]
        log.info("running check %s", name)
        try:
            out = spec.run(cfg)
        except LatpackError as exc:
            log.warning("check %s raised %s: %s", name, type(exc).__name__, exc)
            out = CheckOutcome(name, False, "inconclusive", True, {"error": f"{type(exc).__name__}: {exc}"})
        if spec.informational and not out.informational:
            out = CheckOutcome(out.name, out.passed, out.status, out.premise_verified, out.details, True)
        outcomes.append(out)
    return outcomes
