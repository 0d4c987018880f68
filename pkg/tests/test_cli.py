import json

import pytest

from aistrack.cli import main

FAST = [
    "--vessels", "3",
    "--points", "120",
    "--seed", "42",
]


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def pipeline_dirs(tmp_path):
    data = tmp_path / "data"
    models = tmp_path / "models"
    return data, models, tmp_path


def _synth(data):
    assert run(["synth", "--out", data, *FAST]) == 0


def _train(data, models, epochs=3):
    assert (
        run(
            [
                "train",
                "--data", data / "fleet.csv",
                "--out", models,
                "--min-points", 100,
                "--epochs", epochs,
                "--test-len", 20,
                "--seed", 42,
            ]
        )
        == 0
    )


def test_synth_writes_fleet_and_truth(pipeline_dirs):
    data, _, _ = pipeline_dirs
    _synth(data)
    assert (data / "fleet.csv").exists()
    assert (data / "truth.csv").exists()
    assert (data / "run_config.json").exists()


def test_synth_is_idempotent(pipeline_dirs):
    data, _, _ = pipeline_dirs
    _synth(data)
    first = (data / "fleet.csv").read_bytes()
    _synth(data)
    assert (data / "fleet.csv").read_bytes() == first


def test_missing_required_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["synth"])
    assert exc.value.code == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert "aistrack" in capsys.readouterr().out


def test_full_pipeline_and_report(pipeline_dirs):
    data, models, tmp = pipeline_dirs
    _synth(data)
    _train(data, models)
    assert (models / "manifest.json").exists()
    assert (models / "train_report.json").exists()
    assert (models / "holdout.csv").exists()
    decisions = tmp / "decisions.csv"
    assert run(["associate", "--models", models, "--obs", models / "holdout.csv", "--out", decisions]) == 0
    report = tmp / "report.json"
    assert (
        run(["evaluate", "--decisions", decisions, "--truth", models / "holdout_truth.csv", "--out", report]) == 0
    )
    doc = json.loads(report.read_text())
    assert len(doc["per_vessel"]) == 3
    assert doc["meta"]["seed"] == 42
    assert "config_sha256" in doc["meta"]
    assert report.with_suffix(".txt").exists()


def test_corrupted_model_is_data_error(pipeline_dirs):
    data, models, tmp = pipeline_dirs
    _synth(data)
    _train(data, models)
    victim = next(models.glob("model_*.json"))
    victim.write_text(victim.read_text().replace("0.", "1.", 1))
    rc = run(["associate", "--models", models, "--obs", models / "holdout.csv", "--out", tmp / "d.csv"])
    assert rc == 2


def test_mismatched_truth_is_data_error(pipeline_dirs):
    data, models, tmp = pipeline_dirs
    _synth(data)
    _train(data, models)
    decisions = tmp / "decisions.csv"
    run(["associate", "--models", models, "--obs", models / "holdout.csv", "--out", decisions])
    (tmp / "bad_truth.csv").write_text("OBJECT_ID,VID\n999999,zz\n")
    rc = run(["evaluate", "--decisions", decisions, "--truth", tmp / "bad_truth.csv", "--out", tmp / "r.json"])
    assert rc == 2


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vessels": 2, "points": 60, "seed": 7}))
    assert run(["synth", "--config", cfg, "--out", tmp_path / "d", "--seed", "9"]) == 0
    meta = json.loads((tmp_path / "d" / "run_config.json").read_text())
    assert meta["config"]["vessels"] == 2
    assert meta["seed"] == 9  # flag beats config file


def test_unknown_config_key_is_data_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["synth", "--config", cfg, "--out", tmp_path / "d"]) == 2


def test_short_track_excluded_with_warning(tmp_path, capsys):
    data = tmp_path / "data"
    assert run(["synth", "--out", data, "--vessels", "2", "--points", "120", "--seed", "1"]) == 0
    # append a vessel with too few points
    extra = "\n".join(
        f"{9000 + i},feedf00d,2020-03-01T01:{i:02d}:00Z,10.0,10.0,0.0,0.0" for i in range(5)
    )
    fleet = data / "fleet.csv"
    fleet.write_text(fleet.read_text() + extra + "\n")
    assert (
        run(
            [
                "train",
                "--data", fleet,
                "--out", tmp_path / "m",
                "--min-points", 100,
                "--epochs", 1,
                "--test-len", 20,
            ]
        )
        == 0
    )
    assert "feedf00d" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert len(manifest["models"]) == 2
