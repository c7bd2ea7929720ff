import json
import math
from pathlib import Path

import pytest

import stratbid

DATA = Path(__file__).resolve().parents[2] / "data"


def oracle_scenario():
    def generator(name, bid, pmax):
        return {"id": name, "base_price_bid_usd_per_mwh": bid, "p_max_mw": pmax, "p_min_mw": 0.0,
                "reserve_ramp_mw": 0.2 * pmax, "regulation_ramp_mw": 0.1 * pmax, "mileage_multiplier": 10.0}

    def interval(k, load):
        return {
            "index": k, "delta_t_h": 0.25, "load_mw": load,
            "reserve_req_mw": 4.0, "regcap_req_mw": 2.0, "mileage_req_mw": 3.5,
            "generator_bids_usd_per_mwh": [
                {"energy": b, "reserve": 0.15 * b, "reg_capacity": 0.4 * b, "reg_mileage": 0.07 * b}
                for b in (10.0, 30.0)
            ],
            "bess_bids_usd_per_mwh": {"supply": 0.0, "demand": 80.0, "reserve": 0.0,
                                      "reg_capacity": 0.0, "reg_mileage": 0.0},
        }

    doc = {
        "schema": "stratbid.scenario/1",
        "bess": {"energy_capacity_mwh": 10.0, "power_rate_mw": 5.0, "soc_init_mwh": 5.0,
                 "soc_min_mwh": 0.0, "soc_max_mwh": 10.0, "mileage_multiplier": 10.0},
        "generators": [generator("G1", 10.0, 60.0), generator("G2", 30.0, 60.0)],
        "intervals": [interval(1, 50.0), interval(2, 90.0)],
        "market_mask": {"energy": True, "reserve": True, "regulation": True},
    }
    return stratbid.Scenario.from_json(json.dumps(doc))


@pytest.fixture(scope="module")
def desk():
    return stratbid.desk_scenario(DATA / "price_pattern_96.csv", DATA / "load_pattern_96.csv")


def test_desk_shape(desk):
    assert desk.num_intervals == 24
    assert desk.num_generators == 3
    assert desk.validate() == []
    again = stratbid.Scenario.from_json(desk.to_json())
    assert again.digest() == desk.digest()


def test_zero_bids_match_removed_battery(desk):
    for t in range(desk.num_intervals):
        r = stratbid.clear_interval(desk, t)
        assert r["bess"]["supply"] == 0.0
        assert r["duality_gap"] <= 1e-6
        assert r["prices"]["energy"] > 0.0


def test_price_maker_supply_bid_lowers_energy_price(desk):
    t = 18
    base = stratbid.clear_interval(desk, t)["prices"]["energy"]
    bid = stratbid.clear_interval(desk, t, stratbid.Bids(supply=desk.bess.power_rate))["prices"]["energy"]
    assert bid <= base


def test_masks():
    assert stratbid.MarketMask.for_case(1).label() == "E"
    assert stratbid.MarketMask.for_case(2).subset_of(stratbid.MarketMask.for_case(4))
    assert not stratbid.MarketMask.for_case(3).subset_of(stratbid.MarketMask.for_case(2))


def test_small_case_solves_and_beats_oracle():
    s = oracle_scenario()
    assert s.validate() == []
    report = stratbid.run_case(s, 4)
    assert report.verified
    assert report.status in ("optimal", "gap-limit")
    assert math.isclose(report.totals["total"], report.objective, rel_tol=1e-6)
    assert report.agc_excursions == 0
    assert len(report.schedule) == 2
    oracle = stratbid.brute_force_oracle(s, 2.5)
    assert report.objective >= oracle["revenue"] - 1e-5
    summary = json.loads(report.summary_json())
    assert summary["case"] == 4
    assert report.interval_csv().count("\n") >= 3


def test_case_comparison_on_small_case():
    s = oracle_scenario()
    reports = [stratbid.run_case(s, k) for k in (1, 2, 3, 4)]
    c = stratbid.compare_cases(reports)
    assert c["monotone"]
    assert len(c["checks"]) == 5


def test_mps_text(desk):
    text = stratbid.milp_mps(desk)
    assert text.startswith("NAME")
    assert text.rstrip().endswith("ENDATA")


def test_regulation_is_soc_neutral():
    bess = stratbid.BessParams()
    bess.energy_capacity, bess.power_rate, bess.soc_init, bess.soc_max = 100.0, 10.0, 50.0, 100.0
    for seed in range(10):
        sig = stratbid.generate_signal(seed)
        assert len(sig) == 225
        assert abs(sum(sig)) <= 1e-9
        delta, excursion, flag = stratbid.regulation_soc_delta(bess, 50.0, 10.0, sig)
        assert abs(delta) <= 1e-9
        assert excursion > 0.0
        assert not flag
