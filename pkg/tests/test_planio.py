import json

import pytest

import corralwalk as cw
from corralwalk.coins import HADAMARD
from corralwalk.engine import CoinField, RecordPolicy, evolve
from corralwalk.planio import (build_report, export_frames,
                               export_heatmap, fmt, parse_plan, plan_from_dict,
                               plan_to_dict, serialize_plan, REPORT_KEYS)


def test_reference_plans_parse(plans_dir):
    corral_pf = parse_plan(plans_dir / "corral.json")
    assert len(corral_pf.plan.stations) == 1
    assert corral_pf.plan.gaussian.s == 10.0
    herd_pf = parse_plan(plans_dir / "single_shot.json")
    assert (herd_pf.plan.stations[1].left, herd_pf.plan.stations[1].right) == (50, 250)
    multi_pf = parse_plan(plans_dir / "multistation.json")
    assert len(multi_pf.plan.stations) == 3
    assert multi_pf.disorder is not None and multi_pf.disorder.kind == "fluctuating"


def test_plan_round_trip(plans_dir, tmp_path):
    pf = parse_plan(plans_dir / "multistation.json")
    out = tmp_path / "replay.json"
    serialize_plan(pf, out)
    again = parse_plan(out)
    assert plan_to_dict(again) == plan_to_dict(pf)
    assert again.plan == pf.plan
    assert again.disorder == pf.disorder


def test_unknown_keys_rejected_with_context():
    doc = {"initial": {"s": 10.0}, "stations": [{"left": -50, "right": 50}],
           "surprise": 1}
    with pytest.raises(cw.PlanParseError) as err:
        plan_from_dict(doc)
    assert "surprise" in str(err.value)
    doc = {"initial": {"s": 10.0, "mean": 3},
           "stations": [{"left": -50, "right": 50}]}
    with pytest.raises(cw.PlanParseError) as err:
        plan_from_dict(doc)
    assert "initial" in str(err.value)


def test_missing_and_empty_sections_rejected():
    with pytest.raises(cw.PlanParseError):
        plan_from_dict({"stations": [{"left": -50, "right": 50}]})
    with pytest.raises(cw.PlanParseError):
        plan_from_dict({"initial": {"s": 10.0}, "stations": []})


def test_wall_distance_rule_rejected_at_parse():
    doc = {"initial": {"s": 10.0}, "stations": [{"left": -25, "right": 25}]}
    with pytest.raises(cw.PlanParseError) as err:
        plan_from_dict(doc)
    assert "standard deviation" in str(err.value)


def test_malformed_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(cw.PlanParseError):
        parse_plan(bad)
    with pytest.raises(cw.PlanParseError):
        parse_plan(tmp_path / "absent.json")


def test_non_integer_station_rejected():
    doc = {"initial": {"s": 10.0},
           "stations": [{"left": -50.5, "right": 50}]}
    with pytest.raises(cw.PlanParseError):
        plan_from_dict(doc)


def test_report_structure():
    rep = build_report("corral", {"a": 1}, {"t": 574})
    assert tuple(sorted(rep)) == tuple(sorted(REPORT_KEYS))
    assert rep["error"] is None
    assert rep["versions"]["backend"] in ("numba", "numpy")


def test_fmt_twelve_significant_digits():
    assert fmt(1 / 3) == "3.33333333333e-01"
    assert fmt(0.0399) == "3.99000000000e-02"


def test_heatmap_rows_and_sums(tmp_path):
    lat = cw.Lattice(-8, 8)
    st = cw.delta_state(lat, 0)
    traj = evolve(st, CoinField.uniform(lat, HADAMARD), 3,
                  record=RecordPolicy.distributions(1))
    out = tmp_path / "heat.csv"
    n = export_heatmap(traj, out, stride=1, floor=0.0)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,j,P"
    assert len(lines) - 1 == n
    # nonzero support of a delta walk: 1, 2, 3, 4 sites at t = 0..3
    assert n == 1 + 2 + 3 + 4
    by_t = {}
    for line in lines[1:]:
        t, j, p = line.split(",")
        by_t.setdefault(int(t), 0.0)
        by_t[int(t)] += float(p)
    for t, total in by_t.items():
        assert total == pytest.approx(1.0, abs=1e-9)


def test_heatmap_floor_accounting(tmp_path):
    lat = cw.Lattice(-60, 60)
    st = cw.gaussian_state(cw.GaussianSpec(5.0, 0), cw.BlochSpin(0.0), lat)
    traj = evolve(st, CoinField.with_walls(lat, [-55, 55]), 20,
                  record=RecordPolicy.distributions(5))
    full = tmp_path / "full.csv"
    floored = tmp_path / "floored.csv"
    n_full = export_heatmap(traj, full, floor=0.0)
    n_floored = export_heatmap(traj, floored, floor=1e-12)
    assert n_floored < n_full
    sums = {}
    for line in floored.read_text().strip().splitlines()[1:]:
        t, _, p = line.split(",")
        sums[t] = sums.get(t, 0.0) + float(p)
    assert all(total >= 1.0 - 1e-9 for total in sums.values())


def test_heatmap_stride_subsamples(tmp_path):
    lat = cw.Lattice(-8, 8)
    traj = evolve(cw.delta_state(lat, 0), CoinField.uniform(lat, HADAMARD), 4,
                  record=RecordPolicy.distributions(1))
    out = tmp_path / "heat.csv"
    export_heatmap(traj, out, stride=2, floor=0.0)
    ts = {int(line.split(",")[0]) for line in out.read_text().splitlines()[1:]}
    assert ts == {0, 2, 4}


def test_frames_export(tmp_path):
    lat = cw.Lattice(-10, 10)
    st = cw.delta_state(lat, 0)
    traj = evolve(st, CoinField.with_walls(lat, [-9, 9]), 6,
                  record=RecordPolicy.states_at(range(7)))
    out = tmp_path / "frames.csv"
    n = export_frames(traj, out, floor=0.0)
    assert n == 7
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "frame,j,P_up,P_down"
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0"
    assert float(first[2]) == pytest.approx(1.0)


def test_plan_file_lattice_override(tmp_path):
    doc = {"initial": {"s": 4.0},
           "stations": [{"left": -16, "right": 16}],
           "lattice": {"j_min": -130, "j_max": 130}}
    pf = plan_from_dict(doc)
    assert pf.lattice == cw.Lattice(-130, 130)
    comp = cw.compile_plan(pf.plan, pf.lattice)
    assert comp.lattice == cw.Lattice(-130, 130)
