import json

import numpy as np
import pytest

from sreplan.cli import main
from sreplan.scenario import (ScenarioConfig, apply_overrides, config_from_dict,
                              config_to_dict, generate_scene, load_scene, save_scene)
from sreplan.scene import Building, Point3, Scene


def write_config(path, scene_name, **overrides):
    cfg = ScenarioConfig(scene=scene_name)
    d = config_to_dict(cfg)
    for k, v in overrides.items():
        if isinstance(v, dict):
            d[k].update(v)
        else:
            d[k] = v
    path.write_text(json.dumps(d, indent=2))
    return path


@pytest.fixture
def open_field(tmp_path):
    scene = Scene((), (0, 0, 100, 100), Point3(50, 50, 7.5))
    save_scene(scene, tmp_path / "scene.json")
    cfg = write_config(tmp_path / "config.json", "scene.json", tp_step_m=25.0)
    return cfg


@pytest.fixture
def shadow_field(tmp_path):
    a = Building([[50, 40], [70, 40], [70, 60], [50, 60]], 6.0)
    b = Building([[40, 10], [60, 10], [60, 20], [40, 20]], 6.0)
    scene = Scene((a, b), (0, 0, 120, 120), Point3(10, 50, 7.5))
    save_scene(scene, tmp_path / "scene.json")
    cfg = write_config(tmp_path / "config.json", "scene.json", tp_step_m=30.0)
    return cfg


class TestConfigRoundTrip:
    def test_default_round_trip(self):
        cfg = ScenarioConfig(scene="scene.json")
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_modified_round_trip(self):
        cfg = ScenarioConfig(scene="s.json", ris_dims=(50, 150), ncr_gains_db=(38.0,),
                             snr_threshold_db=12.5, multiplicity=2, tp_step_m=7.5,
                             seed=42)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_overrides(self):
        cfg = ScenarioConfig(scene="s.json")
        cfg2 = apply_overrides(cfg, ["snr_threshold_db=20", "radio.tx_power_dbm=30",
                                     "catalog.ris_dims=[50,100]"])
        assert cfg2.snr_threshold_db == 20.0
        assert cfg2.radio.tx_power_dbm == 30.0
        assert cfg2.ris_dims == (50, 100)

    def test_unknown_override_rejected(self):
        with pytest.raises(ValueError, match="unknown config key"):
            apply_overrides(ScenarioConfig(scene="s.json"), ["nope=1"])

    def test_scene_round_trip(self, tmp_path):
        scene = generate_scene(seed=3, size=150.0, n_buildings=4)
        save_scene(scene, tmp_path / "s.json")
        back = load_scene(tmp_path / "s.json")
        assert back.bounds == scene.bounds
        assert back.bs_position == scene.bs_position
        assert len(back.buildings) == len(scene.buildings)
        for b1, b2 in zip(back.buildings, scene.buildings):
            assert np.array_equal(b1.footprint, b2.footprint)
            assert b1.height == b2.height


class TestPlanCommand:
    def test_open_field_costs_nothing(self, open_field, tmp_path):
        out = tmp_path / "run"
        code = main(["plan", "--config", str(open_field), "--out", str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["result"]["status"] == "optimal"
        assert manifest["result"]["total_cost"] == 0.0
        plan_lines = (out / "plan.tsv").read_text().splitlines()
        assert plan_lines[2] == "# total_cost: 0.000000"
        assert len(plan_lines) == 4  # schema, status, cost, header; no installs

    def test_impossible_threshold_reports_every_tp(self, open_field, tmp_path):
        out = tmp_path / "run"
        code = main(["plan", "--config", str(open_field), "--out", str(out),
                     "--param", "snr_threshold_db=200"])
        assert code == 2
        rows = (out / "uncoverable.tsv").read_text().splitlines()[2:]
        n_tps = json.loads((out / "manifest.json").read_text())["counts"]["test_points"]
        assert len(rows) == n_tps

    def test_byte_identical_reruns_and_threads(self, shadow_field, tmp_path):
        outs = []
        for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
            out = tmp_path / name
            code = main(["plan", "--config", str(shadow_field), "--out", str(out),
                         "--threads", threads])
            assert code == 0
            outs.append({p.name: p.read_bytes()
                         for p in sorted(out.iterdir())})
        assert outs[0] == outs[1]
        # The thread count is recorded in the manifest; all planning outputs
        # must still be identical.
        for name in ("plan.tsv", "coverage.tsv"):
            assert outs[0][name] == outs[2][name]

    def test_audit_flag_writes_table(self, shadow_field, tmp_path):
        out = tmp_path / "run"
        assert main(["plan", "--config", str(shadow_field), "--out", str(out),
                     "--audit"]) == 0
        assert (out / "activation.tsv").exists()

    def test_missing_config_is_io_error(self, tmp_path):
        assert main(["plan", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 1

    def test_usage_error(self):
        assert main(["plan"]) == 1


class TestCoverageCommand:
    def test_open_field_monotone_decay(self, open_field, tmp_path):
        out = tmp_path / "cov"
        assert main(["coverage", "--config", str(open_field), "--out", str(out)]) == 0
        rows = [l.split("\t") for l in
                (out / "coverage_grid.tsv").read_text().splitlines()[2:]]
        dist = {}
        for tp_id, x, y, snr, server in rows:
            assert server == "bs"
            d = np.hypot(float(x) - 50.0, float(y) - 50.0)
            dist[round(d, 6)] = float(snr)
        pairs = sorted(dist.items())
        snrs = [s for _, s in pairs]
        assert all(b <= a + 1e-9 for a, b in zip(snrs, snrs[1:]))

    def test_shadow_served_by_device(self, shadow_field, tmp_path):
        out = tmp_path / "cov"
        assert main(["coverage", "--config", str(shadow_field), "--out", str(out)]) == 0
        rows = [l.split("\t") for l in
                (out / "coverage_grid.tsv").read_text().splitlines()[2:]]
        servers = {r[4].split(":")[0] for r in rows}
        assert any(s.startswith("cs") for s in servers)

    def test_empty_catalog_equals_bs_only(self, shadow_field, tmp_path):
        out = tmp_path / "cov"
        assert main(["coverage", "--config", str(shadow_field), "--out", str(out),
                     "--param", "catalog.ris_dims=[]",
                     "--param", "catalog.ncr_gains_db=[]"]) == 0
        rows = [l.split("\t") for l in
                (out / "coverage_grid.tsv").read_text().splitlines()[2:]]
        assert all(r[4] in ("bs", "none") for r in rows)


class TestSweepCommand:
    def test_price_ratio_strictly_increasing_when_ncr_forced(self, tmp_path):
        # High threshold leaves repeaters as the only usable devices, so the
        # repeater count is pinned and total cost rises with the price ratio.
        a = Building([[60, 50], [90, 50], [90, 70], [60, 70]], 6.0)
        scene = Scene((a,), (0, 0, 150, 150), Point3(40, 60, 7.5))
        save_scene(scene, tmp_path / "scene.json")
        cfg = write_config(tmp_path / "config.json", "scene.json",
                           tp_step_m=50.0, snr_threshold_db=70.0)
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps(
            {"schema": "sreplan-sweep/1", "parameter": "price_ratio",
             "values": [1.0, 2.0, 3.0], "scenes": []}))
        out = tmp_path / "run"
        assert main(["sweep", "--config", str(cfg), "--out", str(out),
                     "--sweep", str(sweep)]) == 0
        rows = [l.split("\t") for l in (out / "sweep.tsv").read_text().splitlines()[2:]]
        cell_rows = [r for r in rows if r[0] != "(average)"]
        assert all(r[3] == "optimal" for r in cell_rows)
        assert all(int(r[7]) >= 1 and int(r[6]) == 0 for r in cell_rows)
        costs = [float(r[4]) for r in cell_rows]
        assert costs == sorted(costs) and len(set(costs)) == len(costs)

    def test_single_value_sweep_matches_plan(self, shadow_field, tmp_path):
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps({"parameter": "ris_dim", "values": [100]}))
        out_s = tmp_path / "s"
        out_p = tmp_path / "p"
        assert main(["sweep", "--config", str(shadow_field), "--out", str(out_s),
                     "--sweep", str(sweep)]) == 0
        assert main(["plan", "--config", str(shadow_field), "--out", str(out_p)]) == 0
        row = (out_s / "sweep.tsv").read_text().splitlines()[2].split("\t")
        manifest = json.loads((out_p / "manifest.json").read_text())
        assert float(row[4]) == pytest.approx(manifest["result"]["total_cost"])

    def test_rows_cover_every_scenario_value_pair(self, shadow_field, tmp_path):
        scn2 = generate_scene(seed=9, size=150.0, n_buildings=4)
        save_scene(scn2, shadow_field.parent / "scene2.json")
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps({"parameter": "multiplicity", "values": [1, 2],
                                     "scenes": ["scene.json", "scene2.json"]}))
        out = tmp_path / "run"
        assert main(["sweep", "--config", str(shadow_field), "--out", str(out),
                     "--sweep", str(sweep), "--threads", "2"]) == 0
        rows = [l.split("\t") for l in (out / "sweep.tsv").read_text().splitlines()[2:]]
        cells = [(r[0], r[2]) for r in rows if r[0] != "(average)"]
        assert len(cells) == 4 and len(set(cells)) == 4
        averages = [r for r in rows if r[0] == "(average)"]
        assert len(averages) == 2


class TestGenSceneAndValidate:
    def test_gen_scene_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["gen-scene", "--seed", "5", "--out", str(p1)]) == 0
        assert main(["gen-scene", "--seed", "5", "--out", str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()
        scn = load_scene(p1)
        assert len(scn.buildings) >= 8
        assert scn.bounds == (0.0, 0.0, 400.0, 400.0)

    def test_validate_ok(self, shadow_field):
        assert main(["validate", "--config", str(shadow_field)]) == 0

    def test_validate_bad_scene(self, tmp_path):
        (tmp_path / "scene.json").write_text(json.dumps(
            {"schema": "sreplan-scene/1", "bounds": [0, 0, 10, 10],
             "bs": {"x": 5, "y": 5, "z": 3},
             "buildings": [{"vertices": [[0, 0], [0, 5], [5, 5]], "height": 6}]}))
        cfg = write_config(tmp_path / "config.json", "scene.json")
        assert main(["validate", "--config", str(cfg)]) == 1
