"""Run configuration: one JSON document per run, strict about unknown keys."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from latpack.errors import BadParameter


@dataclass(frozen=True)
class GridConfig:
    sc_grid_m: Optional[int] = None   # semi-classical sample grid, per-dimension default when None
    start_l: Optional[int] = None
    max_l: Optional[int] = None


@dataclass(frozen=True)
class Tolerances:
    green_tol: float = 1e-5
    morse_tol: float = 1e-8
    bs_margin: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    dispersion: Mapping[str, Any] = field(default_factory=lambda: {"kind": "laplacian", "dim": 3})
    potential: Optional[Mapping[str, Any]] = None
    lambdas: tuple[float, ...] = (10.0, 100.0, 1000.0)
    rho_grid: tuple[float, ...] = (0.1, 0.5, 1.0)
    grids: GridConfig = field(default_factory=GridConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    threads: Optional[int] = None
    output_dir: str = "reports"


def _check_keys(section: str, data: Mapping[str, Any], allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise BadParameter(f"unknown key(s) in {section}: {sorted(unknown)}. Allowed: {sorted(allowed)}")


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    _check_keys("config", data, set(RunConfig.__dataclass_fields__))
    grids = dict(data.get("grids") or {})
    _check_keys("grids", grids, set(GridConfig.__dataclass_fields__))
    tols = dict(data.get("tolerances") or {})
    _check_keys("tolerances", tols, set(Tolerances.__dataclass_fields__))

    base = RunConfig()
    cfg = RunConfig(
        dispersion=dict(data.get("dispersion", base.dispersion)),
        potential=data.get("potential"),
        lambdas=tuple(float(v) for v in data.get("lambdas", base.lambdas)),
        rho_grid=tuple(float(v) for v in data.get("rho_grid", base.rho_grid)),
        grids=GridConfig(**grids),
        tolerances=Tolerances(**{k: float(v) for k, v in tols.items()}),
        seed=int(data.get("seed", base.seed)),
        threads=data.get("threads"),
        output_dir=str(data.get("output_dir", base.output_dir)),
    )
    if cfg.threads is not None and int(cfg.threads) < 1:
        raise BadParameter(f"threads must be >= 1. Got: {cfg.threads}")
    if any(r <= 0 for r in cfg.rho_grid):
        raise BadParameter(f"rho_grid must be positive. Got: {list(cfg.rho_grid)}")
    return cfg


def load_config(path: Optional[str | Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    out = asdict(cfg)
    out["lambdas"] = list(cfg.lambdas)
    out["rho_grid"] = list(cfg.rho_grid)
    return out


def with_overrides(cfg: RunConfig, seed: Optional[int] = None, out: Optional[str] = None, threads: Optional[int] = None) -> RunConfig:
    """Apply CLI flags on top of the file values."""
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = int(seed)
    if out is not None:
        changes["output_dir"] = str(out)
    if threads is not None:
        changes["threads"] = int(threads)
    return replace(cfg, **changes)


def resolve_threads(cfg: RunConfig) -> int:
    """Worker count: config/CLI value (or CPU count), capped by NUM_THREADS."""
    n = int(cfg.threads) if cfg.threads else (os.cpu_count() or 1)
    env = os.environ.get("NUM_THREADS", "").strip()
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError as exc:
            raise BadParameter(f"NUM_THREADS must be an integer. Got: {env!r}") from exc
    return max(1, n)
