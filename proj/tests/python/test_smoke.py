import json
import math

import pytest

import mixlab


def test_version_and_cli_roundtrip():
    assert mixlab.__version__ == "0.1.0"
    code, out, err = mixlab.run(
        ["walk", "mix", "--group", "Z:3", "--law", "lazy", "--metric", "tv", "--clock", "discrete", "--eps", "0.1"]
    )
    assert code == 0 and err == ""
    assert json.loads(out)["result"]["mixing_time"] == 2
    code, _, err = mixlab.run(["walk", "mix", "--bogus"])
    assert code == 1 and err


def test_cycle_diameters():
    for n in range(2, 21):
        assert mixlab.growth_profile(f"Z:{n}", "0,1,-1")["diameter"] == n // 2
    prof = mixlab.growth_profile("Z:10", "0,1,-1")
    assert prof["volumes"] == [3, 5, 7, 9, 10]
    assert mixlab.minimal_A("Z:10", "0,1,-1", 1.0) <= 1.0


def test_walk_against_closed_form():
    # lazy Z_3: P^m(0) = 1/3 + (2/3) 4^-m, so d_TV(m) = (2/3) 4^-m
    w = mixlab.Walk("Z:3@lazy")
    assert w.order == 3 and w.symmetric and w.lazy
    for m, tv, h in w.discrete_curve(6):
        assert tv == pytest.approx(2 / 3 * 4.0**-m, rel=1e-12, abs=1e-15)
        assert h * h <= tv + 1e-12
    p = w.distribution(5)
    assert sum(p) == pytest.approx(1.0)
    assert mixlab.tv_distance(p) == pytest.approx(2 / 3 * 4.0**-5)
    assert w.spectral_gap() == pytest.approx(0.75)


def test_product_identity_matches_flat_chain():
    for t in (0.0, 0.5, 3.0):
        a = mixlab.product_hellinger(["Z:3@lazy", "Z:4@lazy"], [0.3, 0.7], t)
        b = mixlab.product_flat_hellinger(["Z:3@lazy", "Z:4@lazy"], [0.3, 0.7], t)
        assert a == pytest.approx(b, abs=1e-10)


def test_laplace_values():
    j, lam, tau = mixlab.lambda_tau([1, 1, 1], [1, 2, 3], 1.5)
    assert tau == pytest.approx(max(math.log(3) / 2, math.log(4) / 3), abs=1e-12)
    assert mixlab.lambda_tau([1, 1, 1], [1, 2, 3], 5.0) is None
    t = mixlab.exp_sum_mixing([2.0, 1.0], [1.0, 3.0], 0.1)
    assert mixlab.exp_sum_eval([2.0, 1.0], [1.0, 3.0], t) == pytest.approx(0.1, rel=1e-9)


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        mixlab.Walk("Q:3@lazy")
    with pytest.raises(ValueError):
        mixlab.Walk("Z:5@explicit:0.5,0.2,0.1,0.1,0.0")


def test_verify_is_deterministic():
    a = mixlab.verify(suites=["sandwich", "product-identity"])
    b = mixlab.verify(suites=["sandwich", "product-identity"])
    assert a == b
    assert a["failed"] == 0
    assert {c["suite"] for c in a["checks"]} == {"sandwich", "product-identity"}


def test_experiments_run():
    h = mixlab.experiment_heisenberg(1.5, list(range(1, 21)))
    assert h["verdict"] == "bounded"
    assert len(h["statistic"]) == 20
    r = mixlab.experiment_randomized("poly", 3.0, "uniform:0:2", 42, 3, list(range(1, 60)))
    assert r["growing"] + r["bounded"] + r["inconclusive"] == 3
