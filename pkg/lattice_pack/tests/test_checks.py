import math

import pytest

from latpack.checks import (
    CHECKS,
    CONSTRUCT_KINDS,
    CheckOutcome,
    CheckSpec,
    accumulation_probe,
    check_closed_form_1d,
    check_d12_saturation,
    check_d12_upper,
    check_determinism,
    check_lower_bound,
    check_prescribed,
    check_rearrangement_optimality,
    check_saturation,
    check_scaled_continuum,
    check_sparse_zero,
    check_subadditivity,
    check_upper_clr,
    check_watson,
    constants_table,
    construct,
    random_suite,
    resolvent_decay_probe,
    run_checks,
    smallest_r0,
)
from latpack.config import RunConfig
from latpack.dispersion import laplacian
from latpack.errors import BadParameter, QuadratureNotConverged, SpacingOverflow
from latpack.potential import from_samples


@pytest.mark.parametrize(
    "passed, status, informational, ok",
    [
        (True, "pass", False, True),
        (False, "fail", False, False),
        (False, "premise-fail", False, False),
        (False, "premise-fail", True, True),
        (False, "inconclusive", True, True),
        (False, "fail", True, False),
    ],
)
def test_outcome_ok(passed, status, informational, ok):
    assert CheckOutcome("x", passed, status, informational=informational).ok is ok


def test_smallest_r0_is_a_power_of_two():
    assert smallest_r0(lambda r: r >= 10) == 16
    assert smallest_r0(lambda r: True, start=3) == 4
    with pytest.raises(SpacingOverflow):
        smallest_r0(lambda r: False)


def test_closed_form_oracle_passes():
    out = check_closed_form_1d()
    assert out.passed, out.details
    assert out.details["count"] == 1
    assert out.details["lowest"] == pytest.approx(-0.25, abs=1e-8)


def test_watson_check_passes():
    out = check_watson()
    assert out.status == "pass"
    assert out.details["eta"] == pytest.approx(1.9784, abs=1e-4)


def test_lower_bound_premise():
    e = laplacian(1)
    V = from_samples(1, {(0,): 5.0, (7,): 3.0, (20,): 1.0})
    out = check_lower_bound(e, V, 2.5)
    assert out.passed
    assert out.details["level_count"] == 2
    assert out.details["n"] >= 2
    bad = check_lower_bound(e, V, 1.0)
    assert bad.status == "premise-fail"
    assert not bad.premise_verified
    assert not bad.ok


@pytest.mark.parametrize("d", [1, 2])
def test_saturation_at_strong_coupling(d):
    out = check_saturation(laplacian(d), seed=4)
    assert out.passed, out.details
    assert out.details["n"] == out.details["n_supp"]


def test_subadditivity_on_small_suite():
    out = check_subadditivity(laplacian(2), draws=3, seed=1)
    assert out.passed
    assert out.details["violations"] == 0
    assert len(out.details["rows"]) == 3


def test_random_suite_is_seeded():
    a = random_suite(laplacian(2), 2, seed=8)
    b = random_suite(laplacian(2), 2, seed=8)
    assert [V.explicit for V in a] == [V.explicit for V in b]


def test_accumulation_at_the_critical_exponent_is_informational():
    out = accumulation_probe(laplacian(1), 2.0, 1.0, (16, 32))
    assert out.status == "inconclusive"
    assert out.informational
    assert out.ok
    with pytest.raises(BadParameter):
        accumulation_probe(laplacian(1), 1.0, 1.0, (16,))


def test_fast_decay_control_settles_on_a_bound_state():
    out = accumulation_probe(laplacian(3), 2.5, 4.0, (4, 8, 16))
    assert out.passed, out.details
    assert out.details["counts"][-1] > 0


def test_accumulation_without_bound_states_is_inconclusive():
    # V(0) = 0.2 is far below eta, nothing binds
    out = accumulation_probe(laplacian(3), 2.5, 0.2, (2, 4, 8))
    assert out.details["counts"] == [0, 0, 0]
    assert out.status == "inconclusive"
    assert not out.ok


def test_d12_saturation_in_one_dimension():
    out = check_d12_saturation(laplacian(1), from_samples(1, {(k,): 0.3 for k in range(4)}))
    assert out.passed, out.details
    assert out.details["certified"] == 4
    assert out.details["ratio_lo"] > 1.0
    with pytest.raises(BadParameter):
        check_d12_saturation(laplacian(3), from_samples(3, {(0, 0, 0): 1.0}))


def test_d12_upper_on_its_own_fit_suite():
    e = laplacian(1)
    suite = random_suite(e, 3, seed=2)
    out = check_d12_upper(e, fit=suite, holdout=suite)
    assert out.passed
    assert out.details["c_hat"] >= 0


@pytest.mark.slow
def test_resolvent_decay_constant_is_stable():
    c_hat, out = resolvent_decay_probe(laplacian(3))
    assert out.passed, out.details
    assert 0 < c_hat < 1
    assert out.details["axis_slope"] < 0


@pytest.mark.slow
def test_sparse_chain_binds_nothing():
    out = check_sparse_zero(laplacian(3), n=6)
    assert out.passed, out.details
    assert out.details["count"] == 0
    sums = list(out.details["partial_sums"].values())
    assert out.details["diverges"]
    assert all(b > a for a, b in zip(sums, sums[1:]))


@pytest.mark.slow
def test_prescribed_counts_track_the_jumps():
    out = check_prescribed(laplacian(3), lambda_grid=(2.0, 3.5, 6.0))
    assert out.passed, out.details


@pytest.mark.slow
def test_rearrangement_bound():
    V = from_samples(3, {(0, 0, 0): 4.0, (1, 0, 0): 3.0, (0, 1, 0): 1.0, (1, 1, 0): 0.5})
    out = check_rearrangement_optimality(laplacian(3), V)
    assert out.passed, out.details


def test_low_dimension_guards():
    for fn in (check_sparse_zero, check_prescribed):
        with pytest.raises(BadParameter):
            fn(laplacian(2))
    with pytest.raises(BadParameter):
        resolvent_decay_probe(laplacian(1))
    with pytest.raises(BadParameter):
        check_scaled_continuum(laplacian(2))


def test_constants_table_in_one_dimension():
    frame = constants_table(laplacian(1))
    assert list(frame["quantity"]) == ["eta", "e_max", "c1", "c2", "k_min", "n_min", "delta"]
    values = dict(zip(frame["quantity"], frame["value"]))
    assert values["eta"] == 0.0
    assert values["e_max"] == pytest.approx(2.0)
    assert values["n_min"] == 1.0


def test_constructions():
    e = laplacian(3)
    V = construct("prescribed", e, lambdas=(1.0, 2.0), r0=2)
    assert len(V.support) == 2
    W = construct("interleaved", e, shells=(4.0, 8.0))
    assert not W.is_finite
    S = construct("scaled", e, L=2, lam=3.0)
    assert S.value((0, 0, 0)) == pytest.approx(3.0 / 4.0)
    spread = construct("spread", laplacian(1), from_samples(1, {(0,): 0.5, (1,): 0.5}))
    assert len(spread.support) == 2
    assert set(CONSTRUCT_KINDS) >= {"chain", "rearranged"}
    with pytest.raises(BadParameter):
        construct("lattice-gas", e)
    with pytest.raises(BadParameter):
        construct("spread", laplacian(1))


def test_run_checks_selects_and_reports():
    outcomes = run_checks(["watson"], RunConfig())
    assert [o.name for o in outcomes] == ["watson"]
    assert outcomes[0].ok
    with pytest.raises(BadParameter):
        run_checks(["no_such_check"], RunConfig())


def test_run_checks_turns_errors_into_inconclusive(monkeypatch):
    def boom(cfg):
        raise QuadratureNotConverged("grid exhausted", err=1.0, grid_m=64)

    monkeypatch.setitem(CHECKS, "watson", CheckSpec(boom))
    (out,) = run_checks(["watson"], RunConfig())
    assert out.status == "inconclusive"
    assert "QuadratureNotConverged" in out.details["error"]
    assert not out.ok


def test_informational_registry_flag_is_applied(monkeypatch):
    monkeypatch.setitem(
        CHECKS, "watson", CheckSpec(lambda cfg: CheckOutcome("watson", False, "inconclusive"), informational=True)
    )
    (out,) = run_checks(["watson"], RunConfig())
    assert out.informational and out.ok


def test_all_skips_slow_checks_unless_asked(monkeypatch):
    calls = []
    fake = {
        "fast": CheckSpec(lambda cfg: calls.append("fast") or CheckOutcome("fast", True, "pass")),
        "slow": CheckSpec(lambda cfg: calls.append("slow") or CheckOutcome("slow", True, "pass"), slow=True),
    }
    monkeypatch.setattr("latpack.checks.CHECKS", fake)
    run_checks(["all"], RunConfig())
    assert calls == ["fast"]
    run_checks(["all"], RunConfig(), include_slow=True)
    assert calls == ["fast", "fast", "slow"]


def test_details_are_json_ready():
    out = check_lower_bound(laplacian(1), from_samples(1, {(0,): 5.0}), 2.5)
    assert isinstance(out.details["history"], list)
    assert all(isinstance(h, list) for h in out.details["history"])
    assert not any(isinstance(v, float) and math.isnan(v) for v in out.details.values())


def test_determinism_on_a_small_config():
    cfg = RunConfig(
        dispersion={"kind": "laplacian", "dim": 1},
        potential={"dim": 1, "explicit": [{"x": [0], "v": 1.0}, {"x": [2], "v": 0.5}]},
        lambdas=(1.0, 4.0),
        threads=2,
    )
    out = check_determinism(cfg)
    assert out.passed
    assert out.details["rows"] == 2
    assert out.details["bytes"] > 0


def test_upper_clr_needs_three_dimensions():
    with pytest.raises(BadParameter):
        check_upper_clr(laplacian(2), from_samples(2, {(0, 0): 1.0}))


@pytest.mark.slow
def test_upper_clr_on_a_single_site():
    out = check_upper_clr(laplacian(3), from_samples(3, {(0, 0, 0): 3.0}))
    assert out.passed, out.details
    assert out.details["n"] == 1
    assert out.details["n_gt"] == 0
    assert out.details["margin"] == pytest.approx(out.details["bound"] - 1)
