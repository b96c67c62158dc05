import json
import math
import pathlib

import numpy as np
import pytest

import jdconvex

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "fixtures"
BS_ATM = 0.0796557  # zero-rate call, x = K = 1, sigma = 0.2, tau = 1


def fixture(name):
    return jdconvex.load_model(str(FIXTURES / name))


def test_load_and_round_trip():
    m = fixture("merton1d.json")
    assert m.dimension == 1
    assert m.finite_atoms
    again = jdconvex.parse_model(m.to_json())
    assert again.to_json() == m.to_json()


def test_evaluate():
    assert jdconvex.evaluate("max(x1 - 1, 0) + x2^2", [1.5, 2.0]) == pytest.approx(4.5)
    with pytest.raises(jdconvex.Error):
        jdconvex.evaluate("x1 +", [1.0])


def test_validate_reports_checks():
    r = jdconvex.validate(fixture("cev2d.json"))
    assert r["ok"]
    assert {c["id"] for c in r["checks"]} >= {"A1", "A7"}


def test_black_scholes_matches_closed_form():
    assert jdconvex.black_scholes_call(1.0, 1.0, 0.2, 1.0) == pytest.approx(BS_ATM, abs=1e-7)


def test_mc_and_pide_agree_with_black_scholes():
    m = fixture("gbm1d.json")
    mean, se = jdconvex.price_mc(m, "max(x1 - 1, 0)", [1.0], paths=20000, seed=3)
    assert abs(mean - BS_ATM) < 4 * se
    sol = jdconvex.solve(m, "max(x1 - 1, 0)", [1.0], nodes=401)
    assert sol["value"] == pytest.approx(BS_ATM, abs=1e-4)
    assert sol["convexity"]["pass"]
    assert sol["u"].shape == (len(sol["times"]), 401)


def test_simulate_is_shard_invariant():
    m = fixture("merton1d.json")
    a = jdconvex.simulate(m, [1.0], paths=500, shards=1)
    b = jdconvex.simulate(m, [1.0], paths=500, shards=4)
    assert a.shape == (500, 1)
    np.testing.assert_array_equal(a, b)


def test_lcp_scan_flags_sqrt_jumps():
    points = [[0.5], [1.0], [2.0]]
    bad = jdconvex.lcp_scan(fixture("sqrtjump1d.json"), "B", points)
    assert bad["violation"]
    assert bad["certificate"]["value"] < 0
    good = jdconvex.lcp_scan(fixture("merton1d.json"), "B", points)
    assert not good["violation"]


def test_bildt_and_volatility():
    m = fixture("sqrtjump1d.json")
    assert jdconvex.bildt_value(m, [1.0], 0, [1.0]) < 0
    r = jdconvex.volatility_monotonicity(m, 0, [0.5, 1.0, 2.0], [1.0])
    assert not r["pass"]


def test_ordering_identical_models():
    m = fixture("merton1d.json")
    r = jdconvex.verify_ordering(m, m, "1", "max(x1 - 1, 0)", [[1.0]])
    assert r["pass"]
    assert r["hypotheses_pass"]
    assert abs(r["points"][0]["gap"]) <= r["points"][0]["slack"]


def test_payoff_set():
    assert len(jdconvex.convex_payoff_set(2)) == 3


def test_run_cli(tmp_path):
    code, out, err = jdconvex.run_cli(
        ["solve", "--model", str(FIXTURES / "gbm1d.json"), "--payoff", "2*x1 + 1", "--grid", "51", "--out", str(tmp_path)]
    )
    assert code == 0, err
    assert out.startswith("value=")
    report = json.loads((tmp_path / "solve.json").read_text())
    assert report["command"] == "solve"
    assert jdconvex.run_cli(["frobnicate"])[0] == 2
