from __future__ import annotations

import json
from typing import Sequence

import pandas as pd

from latpack.boxop import CountResult
from latpack.checks import CheckOutcome
from latpack.dispersion import Dispersion
from latpack.potential import Potential
from latpack.semiclassical import ScBracket
from latpack.stats import fmt_bracket, fmt_float, fmt_int
from latpack.sweep import SweepReport


# -------------------------
# Check reports
# -------------------------
def outcomes_frame(outcomes: Sequence[CheckOutcome]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "check": o.name,
                "status": o.status,
                "passed": o.passed,
                "premise_verified": o.premise_verified,
                "informational": o.informational,
            }
            for o in outcomes
        ],
        columns=["check", "status", "passed", "premise_verified", "informational"],
    )


def check_report_markdown(outcomes: Sequence[CheckOutcome]) -> str:
    lines: list[str] = []
    lines.append("# Verification Report\n\n")
    n_ok = sum(o.ok for o in outcomes)
    lines.append(f"- Checks run: {len(outcomes)}\n")
    lines.append(f"- Passed (or informational): {n_ok}\n")
    lines.append(f"- Overall: {'PASS' if n_ok == len(outcomes) else 'FAIL'}\n\n")

    if outcomes:
        lines.append(outcomes_frame(outcomes).to_markdown(index=False))
        lines.append("\n\n")

    for o in outcomes:
        lines.append(f"## {o.name}\n\n")
        lines.append(f"- Status: {o.status.upper()}\n")
        if not o.premise_verified:
            lines.append("- Premise not verified: the conclusion was not tested.\n")
        lines.append("\n```json\n")
        lines.append(json.dumps(o.details, sort_keys=True, indent=2))
        lines.append("\n```\n\n")
    return "".join(lines)


# -------------------------
# Sweep and count reports
# -------------------------
def sweep_report_markdown(report: SweepReport) -> str:
    lines: list[str] = []
    lines.append("# Coupling Sweep\n\n")
    for key in sorted(report.meta):
        lines.append(f"- {key}: {report.meta[key]}\n")
    lines.append("\n")

    frame = report.to_frame()
    view = pd.DataFrame(
        {
            "lambda": [fmt_float(v) for v in frame["lambda"]],
            "N (box)": [fmt_int(int(v)) for v in frame["n_box"]],
            "stabilized": frame["n_box_stabilized"],
            "N (BS)": [fmt_int(int(v)) if v >= 0 else "n/a" for v in frame["n_bs"]],
            "N_sc": [fmt_bracket(lo, hi) for lo, hi in zip(frame["n_sc_lo"], frame["n_sc_hi"])],
            "ratio": [fmt_bracket(lo, hi, 4) for lo, hi in zip(frame["ratio_lo"], frame["ratio_hi"])],
        }
    )
    lines.append(view.to_markdown(index=False))
    lines.append("\n\n")
    lines.append(
        "_ratio brackets N / N_sc using the conservative end of the N_sc bracket; "
        "for d < 3 the denominator is 1 + N_sc of the weighted potential._\n"
    )
    return "".join(lines)


def count_report_markdown(
    e: Dispersion, V: Potential, box: CountResult | None, bs: CountResult | None, sc: ScBracket | None
) -> str:
    lines: list[str] = []
    lines.append("# Bound-State Count\n\n")
    lines.append(f"- Dimension: {e.dim}\n")
    lines.append(f"- e_max: {fmt_float(e.e_max)}\n")
    lines.append(f"- Potential: {V.describe()}\n\n")
    if box is not None:
        lines.append("## Finite-box inertia count\n")
        lines.append(f"- N: {fmt_int(box.count)} ({'stabilized' if box.stabilized else 'NOT stabilized'})\n")
        lines.append(f"- History (box_l, count): {list(box.history)}\n\n")
    if bs is not None:
        lines.append("## Birman-Schwinger count\n")
        lines.append(f"- N: {fmt_int(bs.count)} ({'stabilized' if bs.stabilized else 'NOT stabilized'})\n")
        lines.append(f"- History (rho, count): {[(fmt_float(r), c) for r, c in bs.history]}\n\n")
    if sc is not None:
        lines.append("## Semi-classical count\n")
        lines.append(f"- N_sc: {fmt_bracket(sc.lower, sc.upper)}\n")
        if sc.truncation_note:
            lines.append("- Tail contribution bounded analytically.\n")
        lines.append("\n")
    return "".join(lines)


def constants_markdown(e: Dispersion, frame: pd.DataFrame) -> str:
    lines: list[str] = []
    lines.append("# Dispersion Constants\n\n")
    lines.append(f"- Dimension: {e.dim}\n")
    lines.append(f"- Hopping terms: {len(e.offsets)}\n\n")
    view = frame.assign(value=[fmt_float(v) for v in frame["value"]])
    lines.append(view.to_markdown(index=False))
    lines.append("\n")
    return "".join(lines)
