from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import pandas as pd

from latpack.boxop import BoxOperator, to_triplets
from latpack.config import RunConfig
from latpack.dispersion import MORSE_TOL, Dispersion, coeff_map, laplacian, make_dispersion, nearest_neighbor
from latpack.errors import BadParameter
from latpack.potential import Potential, from_samples, random_finite, tail_from_dict, tail_to_dict

CSV_FLOAT_FORMAT = "%.12g"

# Dispersion JSON kinds
DISPERSION_KINDS = ("laplacian", "nearest_neighbor", "coeffs")


# -------------------------
# Dispersion
# -------------------------
def dispersion_to_dict(e: Dispersion) -> dict[str, Any]:
    return {
        "dim": e.dim,
        "coeffs": [{"x": list(x), "c": c} for x, c in sorted(coeff_map(e).items())],
        "tol": e.tol,
    }


def dispersion_from_dict(data: Mapping[str, Any], morse_tol: Optional[float] = None) -> Dispersion:
    """Build a dispersion; a "tol" entry wins over morse_tol, which wins over MORSE_TOL."""
    kind = data.get("kind", "coeffs")
    if kind not in DISPERSION_KINDS:
        raise BadParameter(f"unknown dispersion kind: {kind!r}. Expected one of {list(DISPERSION_KINDS)}")
    tol = float(data.get("tol", MORSE_TOL if morse_tol is None else morse_tol))
    if kind in ("laplacian", "nearest_neighbor"):
        if kind == "laplacian":
            base = laplacian(int(data["dim"]))
        else:
            base = nearest_neighbor(int(data["dim"]), float(data["t"]))
        return base if tol == base.tol else make_dispersion(coeff_map(base), tol=tol)

    entries = data.get("coeffs")
    if not entries:
        raise BadParameter("dispersion 'coeffs' must be a non-empty list of {x, c} entries")
    coeffs = {tuple(int(v) for v in item["x"]): float(item["c"]) for item in entries}
    return make_dispersion(coeffs, tol=tol)


def dispersion_for_run(cfg: RunConfig) -> Dispersion:
    return dispersion_from_dict(cfg.dispersion, morse_tol=cfg.tolerances.morse_tol)


# -------------------------
# Potential
# -------------------------
def potential_to_dict(V: Potential) -> dict[str, Any]:
    return {
        "dim": V.dim,
        "explicit": [{"x": list(x), "v": v} for x, v in sorted(V.explicit.items())],
        "tail": tail_to_dict(V.tail),
        "window_r": V.window_r,
    }


def potential_from_dict(data: Mapping[str, Any], e: Optional[Dispersion] = None, seed: int = 0) -> Potential:
    """
    Explicit potentials come back exactly. ``{"kind": "random", ...}`` draws a
    seeded random finite potential; its values are scaled by e_max, so it needs
    the dispersion.
    """
    if data.get("kind") == "random":
        if e is None:
            raise BadParameter("a random potential needs the dispersion for its value scale")
        rng = np.random.default_rng(seed)
        return random_finite(
            e.dim,
            int(data.get("count", 5)),
            int(data.get("radius", 3)),
            float(data.get("vmax_factor", 3.0)) * e.e_max,
            rng,
        )

    dim = int(data["dim"])
    samples = {tuple(item["x"]): float(item["v"]) for item in data.get("explicit", [])}
    V = from_samples(dim, samples)
    tail = tail_from_dict(data.get("tail"))
    if tail is None:
        return V
    return Potential(dim, dict(V.explicit), tail, int(data.get("window_r", 0)))


# -------------------------
# Files
# -------------------------
def dumps_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, data: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    return path


def read_json(path: Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_dispersion(path: Path) -> Dispersion:
    return dispersion_from_dict(read_json(path))


def load_potential(path: Path, e: Optional[Dispersion] = None, seed: int = 0) -> Potential:
    return potential_from_dict(read_json(path), e, seed)


def frame_to_csv(frame: pd.DataFrame) -> str:
    # Fixed float format so reruns are byte-identical
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(frame_to_csv(frame), encoding="utf-8")
    return path


def write_triplets(path: Path, H: BoxOperator) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_triplets(H), encoding="utf-8")
    return path
