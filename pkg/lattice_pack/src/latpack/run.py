from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from latpack.birman import n_bound_states_bs
from latpack.boxop import n_bound_states
from latpack.checks import CHECKS, CONSTRUCT_KINDS, constants_table, construct, run_checks
from latpack.config import RunConfig, load_config, resolve_threads, with_overrides
from latpack.errors import BadParameter, LatpackError
from latpack.io import dispersion_for_run, dumps_json, frame_to_csv, potential_from_dict, potential_to_dict
from latpack.reporting import (
    check_report_markdown,
    constants_markdown,
    count_report_markdown,
    outcomes_frame,
    sweep_report_markdown,
)
from latpack.semiclassical import n_sc
from latpack.sweep import weyl_sweep

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _output_dir(cfg: RunConfig) -> Path:
    # run.py lives at lattice_pack/src/latpack/run.py; parents[2] -> lattice_pack/
    root = Path(__file__).resolve().parents[2]
    out = Path(cfg.output_dir)
    return out if out.is_absolute() else root / out


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    print(f"Wrote {path}")


def _inputs(cfg: RunConfig):
    e = dispersion_for_run(cfg)
    V = potential_from_dict(cfg.potential or {"kind": "random"}, e, cfg.seed)
    return e, V


# -------------------------
# Subcommands
# -------------------------
def cmd_count(cfg: RunConfig, args: argparse.Namespace) -> int:
    e, V = _inputs(cfg)
    box = bs = None
    if args.method in ("box", "both"):
        box = n_bound_states(e, V, start_l=cfg.grids.start_l, max_l=cfg.grids.max_l)
    if args.method in ("bs", "both"):
        if not V.is_finite:
            raise BadParameter("the Birman-Schwinger count needs a finitely supported potential")
        bs = n_bound_states_bs(e, V, margin=cfg.tolerances.bs_margin, tol=cfg.tolerances.green_tol)
    sc = n_sc(e, V, cfg.grids.sc_grid_m)
    _write(_output_dir(cfg) / "count_report.md", count_report_markdown(e, V, box, bs, sc))
    return 0


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    e, V = _inputs(cfg)
    report = weyl_sweep(
        e,
        V,
        cfg.lambdas,
        threads=resolve_threads(cfg),
        start_l=cfg.grids.start_l,
        max_l=cfg.grids.max_l,
        grid_m=cfg.grids.sc_grid_m,
        with_bs=not args.no_bs,
        tol=cfg.tolerances.green_tol,
        margin=cfg.tolerances.bs_margin,
    )
    out = _output_dir(cfg)
    _write(out / "sweep.csv", frame_to_csv(report.to_frame()))
    _write(out / "sweep_report.md", sweep_report_markdown(report))
    return 0


def cmd_verify(cfg: RunConfig, args: argparse.Namespace) -> int:
    outcomes = run_checks(args.checks, cfg, include_slow=args.include_slow)
    out = _output_dir(cfg)
    _write(out / "verify_summary.csv", frame_to_csv(outcomes_frame(outcomes)))
    _write(out / "verify_report.md", check_report_markdown(outcomes))
    return 0 if all(o.ok for o in outcomes) else 1


def cmd_constants(cfg: RunConfig, args: argparse.Namespace) -> int:
    e = dispersion_for_run(cfg)
    frame = constants_table(e, tol=cfg.tolerances.green_tol, grid_m=cfg.grids.sc_grid_m)
    out = _output_dir(cfg)
    _write(out / "constants.csv", frame_to_csv(frame))
    _write(out / "constants.md", constants_markdown(e, frame))
    return 0


def cmd_construct(cfg: RunConfig, args: argparse.Namespace) -> int:
    e = dispersion_for_run(cfg)
    V = potential_from_dict(cfg.potential, e, cfg.seed) if cfg.potential is not None else None
    W = construct(
        args.kind,
        e,
        V,
        n=args.n,
        r0=args.r0,
        lambdas=cfg.lambdas,
        eps=args.eps,
        shells=args.shells,
        L=args.L,
        lam=args.lam,
        tol=cfg.tolerances.green_tol,
    )
    _write(_output_dir(cfg) / f"construct_{args.kind}.json", dumps_json(potential_to_dict(W)))
    return 0


COMMANDS = {
    "count": cmd_count,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "constants": cmd_constants,
    "construct": cmd_construct,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument("--out", default=None, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="latpack", description="Bound-state counting for lattice Schrodinger operators")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count bound states of one potential")
    p.add_argument("--method", choices=["box", "bs", "both"], default="both")

    p = sub.add_parser("sweep", parents=[common], help="N against N_sc over the lambda grid")
    p.add_argument("--no-bs", action="store_true", help="skip the Birman-Schwinger column")

    p = sub.add_parser("verify", parents=[common], help="run named checks ('all' for every fast check)")
    p.add_argument("checks", nargs="+", choices=["all", *CHECKS])
    p.add_argument("--include-slow", action="store_true")

    sub.add_parser("constants", parents=[common], help="eta, e_max, sandwich and CLR constants, Morse data")

    p = sub.add_parser("construct", parents=[common], help="write a special potential as JSON")
    p.add_argument("kind", choices=CONSTRUCT_KINDS)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--r0", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--shells", type=float, nargs="*", default=[4.0, 8.0])
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--lam", type=float, default=1.0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        cfg = with_overrides(load_config(args.config), seed=args.seed, out=args.out, threads=args.threads)
        return COMMANDS[args.command](cfg, args)
    except LatpackError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
