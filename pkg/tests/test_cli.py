import json

import numpy as np
import pytest

from cli.main import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, build_parser, load_config, main
from common.channel import gain_db
from common.env import MeasurementRecord
from common.scenarios import build_desk
from common.storage import RunStore
from common.world import GridPos
from config import ChannelParams, config


@pytest.fixture
def config_file(tiny_config, tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config.model_dump(mode="json")), encoding="utf-8")
    return path


@pytest.fixture
def trained(config_file, tmp_path):
    out = tmp_path / "trained"
    assert main(["train", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    return out


def desk_measurements(path, seed=0):
    """Синтетический CSV измерений desk-сценария по эталонному каналу."""
    city = build_desk()
    rng = np.random.default_rng(seed)
    records = []
    for device in city.devices:
        ground = np.array([*city.center(*device.cell), 0.0])
        for ix in range(1, 20, 3):
            for iy in range(1, 20, 3):
                pos = GridPos(ix, iy, 30.0)
                flag = bool(city.los_raster(ix, iy, 30.0)[device.cell[1], device.cell[0]])
                distance = float(np.linalg.norm(city.xyz(pos) - ground))
                records.append(MeasurementRecord(0, len(records), pos, device.id,
                                                 gain_db(ChannelParams(), distance, flag, rng.normal())))
    RunStore(path.parent).measurements.write(records)
    return path


class TestUsage:
    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_algorithm(self):
        assert main(["train", "--algo", "sac"]) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "absent.json")]) == EXIT_VALIDATION

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"fed": {"learners": 0}}))
        assert main(["train", "--config", str(path)]) == EXIT_VALIDATION

    def test_broken_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        assert main(["train", "--config", str(path)]) == EXIT_VALIDATION

    def test_default_config_with_seed(self):
        loaded = load_config(build_parser().parse_args(["train", "--seed", "7"]))
        assert loaded.seed == 7
        assert loaded.map == config.map
        assert loaded.source_dir is None
        assert loaded is not config


class TestTrain:
    def test_writes_run_files(self, trained):
        store = RunStore(trained)
        assert len(store.metrics.read()) == 2
        assert store.checkpoints.final_path.exists()
        assert store.plot_path("performance").exists()
        assert store.plot_path("real_world_last").exists()

    def test_same_seed_same_metrics(self, trained, config_file, tmp_path):
        again = tmp_path / "again"
        assert main(["train", "--config", str(config_file), "--out", str(again)]) == EXIT_OK
        assert (trained / "metrics.csv").read_bytes() == (again / "metrics.csv").read_bytes()
        assert (trained / "plots" / "performance.svg").read_bytes() == (again / "plots" / "performance.svg").read_bytes()

    def test_baseline(self, config_file, tmp_path):
        out = tmp_path / "qmix"
        cfg = json.loads(config_file.read_text())
        cfg["fed"]["baseline_episodes"] = 3
        config_file.write_text(json.dumps(cfg))
        assert main(["train", "--config", str(config_file), "--out", str(out), "--algo", "qmix"]) == EXIT_OK
        assert len(RunStore(out).metrics.read()) == 3


class TestEval:
    def test_greedy_rollout(self, trained, config_file, capsys):
        assert main(["eval", "--config", str(config_file), "--out", str(trained)]) == EXIT_OK
        line = capsys.readouterr().out.strip().splitlines()[-1]
        assert line.startswith("collection_ratio=")
        assert 0.0 <= float(line.split("=")[1]) <= 1.0
        assert (trained / "trajectories" / "eval.json").exists()
        assert (trained / "plots" / "eval.svg").exists()

    def test_wrong_architecture(self, trained, config_file):
        assert main(["eval", "--config", str(config_file), "--out", str(trained), "--algo", "iql"]) == EXIT_VALIDATION

    def test_missing_checkpoint(self, config_file, tmp_path):
        assert main(["eval", "--config", str(config_file), "--out", str(tmp_path / "empty")]) == EXIT_VALIDATION


class TestLocalize:
    def test_report(self, config_file, tmp_path):
        out = tmp_path / "loc"
        csv = desk_measurements(out / "measurements.csv")
        assert main(["localize", "--config", str(config_file), "--out", str(out), "--measurements", str(csv)]) == EXIT_OK
        rows = RunStore(out).localization.read()
        unknown = sorted(d.id for d in build_desk().devices if not d.anchor)
        assert [int(r["device_id"]) for r in rows] == unknown
        assert all(float(r["error_m"]) >= 0.0 for r in rows)

    def test_empty_measurements(self, config_file, tmp_path):
        out = tmp_path / "loc"
        RunStore(out).measurements.write([])
        assert main(["localize", "--config", str(config_file), "--out", str(out)]) == EXIT_VALIDATION

    def test_bad_measurements(self, config_file, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("uav_id,t,ix,iy,altitude_m,device_id,gain_db\n0,0,1,1,30.0,zero,-80.0\n")
        assert main(["localize", "--config", str(config_file), "--measurements", str(path),
                     "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


class TestPlot:
    def test_rerender(self, trained, config_file):
        store = RunStore(trained)
        before = store.plot_path("real_world_last").read_bytes()
        trajectory = store.trajectories.path_for("real_world_last")
        assert main(["plot", "--config", str(config_file), "--out", str(trained),
                     "--trajectory", str(trajectory)]) == EXIT_OK
        assert store.plot_path("real_world_last").read_bytes() == before

    def test_nothing_to_plot(self, config_file, tmp_path):
        assert main(["plot", "--config", str(config_file), "--out", str(tmp_path / "none")]) == EXIT_OK
