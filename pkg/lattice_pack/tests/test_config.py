import json

import pytest

from latpack.checks import run_checks
from latpack.config import (
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    resolve_threads,
    with_overrides,
)
from latpack.errors import BadParameter, NotMorse
from latpack.io import dispersion_for_run


def test_defaults_without_a_file():
    cfg = load_config(None)
    assert cfg == RunConfig()
    assert cfg.dispersion == {"kind": "laplacian", "dim": 3}
    assert cfg.tolerances.green_tol == 1e-5
    assert cfg.grids.start_l is None


def test_load_from_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "dispersion": {"kind": "laplacian", "dim": 1},
                "lambdas": [1, 2],
                "grids": {"max_l": 64},
                "tolerances": {"bs_margin": 1e-5},
                "seed": 3,
            }
        ),
        encoding="utf-8",
    )
    cfg = load_config(path)
    assert cfg.lambdas == (1.0, 2.0)
    assert cfg.grids.max_l == 64
    assert cfg.tolerances.bs_margin == 1e-5
    assert cfg.tolerances.green_tol == 1e-5
    assert cfg.seed == 3


@pytest.mark.parametrize(
    "data",
    [
        {"colour": "blue"},
        {"grids": {"box": 4}},
        {"tolerances": {"eps": 0.1}},
    ],
)
def test_unknown_keys_rejected(data):
    with pytest.raises(BadParameter):
        config_from_dict(data)


@pytest.mark.parametrize("data", [{"threads": 0}, {"rho_grid": [0.5, 0.0]}])
def test_invalid_values_rejected(data):
    with pytest.raises(BadParameter):
        config_from_dict(data)


def test_round_trip_through_dict():
    cfg = with_overrides(RunConfig(), seed=9, out="elsewhere", threads=2)
    again = config_from_dict(config_to_dict(cfg))
    assert again == cfg


def test_overrides_leave_unset_fields_alone():
    cfg = with_overrides(RunConfig(seed=4))
    assert cfg.seed == 4
    assert cfg.output_dir == "reports"


def test_num_threads_caps_workers(monkeypatch):
    monkeypatch.setenv("NUM_THREADS", "2")
    assert resolve_threads(RunConfig(threads=8)) == 2
    assert resolve_threads(RunConfig(threads=1)) == 1


def test_bad_num_threads(monkeypatch):
    monkeypatch.setenv("NUM_THREADS", "many")
    with pytest.raises(BadParameter):
        resolve_threads(RunConfig())


def test_threads_default_to_cpu_count(monkeypatch):
    monkeypatch.delenv("NUM_THREADS", raising=False)
    monkeypatch.setattr("os.cpu_count", lambda: 6)
    assert resolve_threads(RunConfig()) == 6


def _flat_top_dispersion():
    # e(p) = -cos p + a cos 2p with a = -0.24999: the maximum at p = pi has curvature -4e-5
    c2 = -0.124995
    return {
        "kind": "coeffs",
        "coeffs": [
            {"x": [0], "c": 1.0},
            {"x": [1], "c": -0.5},
            {"x": [-1], "c": -0.5},
            {"x": [2], "c": c2},
            {"x": [-2], "c": c2},
        ],
    }


def test_morse_tol_reaches_the_dispersion():
    loose = config_from_dict({"dispersion": _flat_top_dispersion()})
    e = dispersion_for_run(loose)
    assert e.tol == loose.tolerances.morse_tol
    strict = config_from_dict({"dispersion": _flat_top_dispersion(), "tolerances": {"morse_tol": 1e-3}})
    with pytest.raises(NotMorse):
        dispersion_for_run(strict)


def test_morse_tol_applies_to_named_dispersions():
    cfg = config_from_dict({"dispersion": {"kind": "laplacian", "dim": 2}, "tolerances": {"morse_tol": 1e-6}})
    assert dispersion_for_run(cfg).tol == 1e-6


def test_rho_grid_drives_the_cross_oracle():
    cfg = config_from_dict({"rho_grid": [0.5]})
    (out,) = run_checks(["bs_cross_oracle_d1"], cfg)
    assert out.details["cases"] == 20
