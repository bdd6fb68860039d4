import json

from corralwalk.cli import main


def _load(out_dir):
    return json.loads((out_dir / "report.json").read_text())


def _strip_timings(report):
    return {k: v for k, v in report.items() if k != "timings"}


def test_corral_subcommand(plans_dir, tmp_path):
    out = tmp_path / "run"
    code = main(["corral", "--plan", str(plans_dir / "corral.json"),
                 "--out", str(out), "--stride", "10"])
    assert code == 0
    rep = _load(out)
    assert rep["error"] is None
    assert rep["protocol"] == "corral"
    assert rep["fidelity"]["t"] == 574
    assert rep["fidelity"]["value"] > 0.995
    assert (out / "heatmap.csv").exists()
    assert sorted(rep) == sorted(
        ["protocol", "parameters", "fidelity", "seeds", "versions",
         "timings", "error"])


def test_reports_reproducible_modulo_timings(plans_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["corral", "--plan", str(plans_dir / "corral.json"),
            "--no-heatmap"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert _strip_timings(_load(a)) == _strip_timings(_load(b))


def test_station_count_guard(plans_dir, tmp_path):
    out = tmp_path / "bad"
    code = main(["herd", "--plan", str(plans_dir / "corral.json"),
                 "--out", str(out)])
    assert code == 1
    rep = _load(out)
    assert rep["error"] is not None and "station" in rep["error"]


def test_parse_failure_still_writes_report(tmp_path):
    bad_plan = tmp_path / "bad.json"
    bad_plan.write_text('{"initial": {"s": 10.0}, "stations": []}')
    out = tmp_path / "run"
    code = main(["corral", "--plan", str(bad_plan), "--out", str(out)])
    assert code == 1
    assert _load(out)["error"]


def test_herd_subcommand(plans_dir, tmp_path):
    out = tmp_path / "herd"
    code = main(["herd", "--plan", str(plans_dir / "single_shot.json"),
                 "--out", str(out), "--no-heatmap"])
    assert code == 0
    rep = _load(out)
    assert abs(rep["fidelity"]["t"] - 995) <= 6
    assert rep["fidelity"]["value"] > 0.99
    assert rep["parameters"]["x"] == rep["fidelity"]["x"]


def test_multistation_subcommand(plans_dir, tmp_path):
    out = tmp_path / "multi"
    code = main(["multistation", "--plan", str(plans_dir / "multistation.json"),
                 "--out", str(out), "--no-heatmap"])
    assert code == 0
    rep = _load(out)
    assert rep["fidelity"]["value"] > 0.99
    assert rep["parameters"]["estimates"]["gate_opens"] == [282, 850]
    assert rep["parameters"]["estimates"]["gate_closes"] == [566, 1134]


def test_disorder_sweep_subcommand(plans_dir, tmp_path):
    out = tmp_path / "sweep"
    code = main(["disorder-sweep", "--plan",
                 str(plans_dir / "corral.json"), "--out", str(out),
                 "--p-max", "0.0002", "--p-step", "0.0002",
                 "--realizations", "3", "--kinds", "fluctuating",
                 "--seed", "11"])
    assert code == 0
    rep = _load(out)
    sweep = rep["fidelity"]["sweep"]
    assert sweep["realizations"] == 3
    assert len(sweep["entries"]) == 2  # p = 0 and p = 2e-4
    assert sweep["entries"][0]["mean"] > 0.99
    assert rep["seeds"]["master_seed"] == 11


def test_sigma_sweep_subcommand(plans_dir, tmp_path):
    out = tmp_path / "sigma"
    code = main(["sigma-sweep", "--plan",
                 str(plans_dir / "sigma_sweep.json"), "--out", str(out),
                 "--s-min", "8"])
    assert code == 0
    rep = _load(out)
    curve = dict((int(s), f) for s, f in rep["fidelity"]["sigma_curve"])
    assert set(curve) == {8, 9, 10}
    assert all(f > 0.9 for f in curve.values())


def test_oracle_check_subcommand(tmp_path):
    out = tmp_path / "oracle"
    code = main(["oracle-check", "--s", "8", "--t", "60", "--out", str(out)])
    assert code == 0
    rep = _load(out)
    assert rep["fidelity"]["max_amplitude_difference"] < 1e-10
    assert rep["fidelity"]["semigroup_difference"] < 1e-12
    assert rep["fidelity"]["split_approx_overlap"]["overlap"] > 0.99


def test_frames_subcommand(tmp_path):
    plan = tmp_path / "small.json"
    plan.write_text(json.dumps({
        "initial": {"s": 4.0, "center": 0, "alpha": 0.0, "beta": 0.0},
        "stations": [{"left": -16, "right": 16, "hold": 0}],
    }))
    out = tmp_path / "frames"
    code = main(["frames", "--plan", str(plan), "--out", str(out)])
    assert code == 0
    rep = _load(out)
    n_frames = rep["fidelity"]["frames_written"]
    assert n_frames == rep["fidelity"]["t"] + 1
    frames = (out / "frames.csv").read_text().strip().splitlines()
    assert frames[0] == "frame,j,P_up,P_down"
    seen = {int(line.split(",")[0]) for line in frames[1:]}
    assert seen == set(range(n_frames))
