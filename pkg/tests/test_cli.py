import json
import math

import numpy as np
import pytest

from shapcloud.cli import RUN_ARTIFACTS, main
from shapcloud.data import write_csv
from shapcloud.pooling import read_pooled_csv
from shapcloud.reliance import ModelReliance, write_reliance_csv
from shapcloud.synthetic import make_logistic_dataset

SMALL_SETTINGS = {
    "outcome": "outcome",
    "train_fraction": 0.85,
    "seed": 1,
    "epsilon": 0.05,
    "m0": 500,
    "target_min": 30,
    "target_max": 50,
    "models": 40,
    "coverage_bins": 5,
    "max_rounds": 4,
    "n_permutations": 16,
    "background_rows": 128,
    "instance_cap": 12,
    "n_slices": 8,
    "vic_permutations": 3,
}


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "toy.csv"
    ds = make_logistic_dataset(800, -0.4, (1.0, -0.6, 0.0), seed=19)
    write_csv(ds, path, "outcome")
    return str(path)


def _config_file(tmp_path, data_csv, out_dir, **extra):
    doc = dict(SMALL_SETTINGS, data=data_csv, out=str(out_dir), **extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory, data_csv):
    tmp = tmp_path_factory.mktemp("run")
    out = tmp / "out"
    config = _config_file(tmp, data_csv, out)
    assert main(["run", "--config", config]) == 0
    return out, config


def test_run_produces_all_artifacts(finished_run):
    out, _ = finished_run
    for name in RUN_ARTIFACTS:
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["completed_stages"][-1] == "report"
    assert manifest["config"]["models"] == 40
    assert len(manifest["inputs"]) == 1
    # Every recorded artifact hash is a sha256 hex digest.
    assert all(len(h) == 64 for h in manifest["artifacts"].values())


def test_stagewise_execution_is_byte_identical_to_run(
    finished_run, tmp_path, data_csv
):
    out_run, _ = finished_run
    out_stages = tmp_path / "staged"
    config = _config_file(tmp_path, data_csv, out_stages)
    for stage in ("fit", "sample", "explain-optimal", "importance", "pool", "rank", "report"):
        assert main([stage, "--config", config]) == 0, stage
    for name in RUN_ARTIFACTS + ("train.csv", "test.csv", "bar.csv", "violin.csv"):
        assert (out_run / name).read_bytes() == (out_stages / name).read_bytes(), name


def test_run_is_deterministic_across_invocations(finished_run, tmp_path, data_csv):
    out_a, _ = finished_run
    out_b = tmp_path / "again"
    config = _config_file(tmp_path, data_csv, out_b)
    assert main(["run", "--config", config]) == 0
    for name in RUN_ARTIFACTS:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_seed_changes_sampled_models(finished_run, tmp_path, data_csv):
    out_a, _ = finished_run
    out_b = tmp_path / "seeded"
    config = _config_file(tmp_path, data_csv, out_b)
    assert main(["run", "--config", config, "--seed", "2"]) == 0
    assert (out_a / "models.csv").read_bytes() != (out_b / "models.csv").read_bytes()


def test_pool_subcommand_reproduces_hand_case(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    rels = [
        ModelReliance(
            model_id=i,
            variable_names=("a", "b"),
            values=np.array([float(i + 1), 0.1]),
            se=np.array([0.5, 0.05]),
            vif_gated=np.array([False, False]),
            empirical_loss=0.5,
        )
        for i in range(3)
    ]
    write_reliance_csv(rels, out / "importance.csv")
    assert main(["pool", "--out", str(out)]) == 0
    pooled = {p.variable: p for p in read_pooled_csv(out / "pooled.csv")}
    p = pooled["a"]
    assert p.pooled_mean == pytest.approx(2.0, abs=1e-9)
    assert p.tau2 == pytest.approx(0.75, abs=1e-9)
    half = 12.706204736174694 * math.sqrt(13.0 / 12.0)
    assert p.pi_low == pytest.approx(2.0 - half, abs=1e-9)
    assert not p.significant
    assert pooled["b"].pooled_mean == pytest.approx(0.1, abs=1e-9)


def test_rank_filter_writes_model_ids(finished_run, tmp_path, data_csv):
    out, config = finished_run
    pooled = read_pooled_csv(out / "pooled.csv")
    top = pooled[0].variable
    code = main(
        ["rank", "--config", config, "--filter-variable", top, "--rank-at-most", "1"]
    )
    assert code == 0
    lines = (out / "filtered_models.csv").read_text().splitlines()
    assert lines[0] == "model_id"
    assert len(lines) > 1  # the top pooled variable leads in at least one model


def test_rank_filter_requires_threshold(finished_run):
    _, config = finished_run
    assert main(["rank", "--config", config, "--filter-variable", "x0"]) == 2


def test_vic_permutation_subcommand(finished_run):
    out, config = finished_run
    assert main(["vic-permutation", "--config", config]) == 0
    lines = (out / "vic_permutation.csv").read_text().splitlines()
    assert lines[0] == "model_id,variable,vic_minus_one,n_permutations"
    assert len(lines) == 1 + 40 * 3  # 40 models x 3 variables


def test_unknown_config_key_is_exit_2(tmp_path, data_csv):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"data": data_csv, "bogus_key": 1}), encoding="utf-8")
    assert main(["run", "--config", str(config)]) == 2


def test_missing_data_flag_is_exit_2(tmp_path):
    assert main(["fit", "--out", str(tmp_path / "o")]) == 2


def test_missing_outcome_column_is_exit_3(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n" + "1,0\n" * 30, encoding="utf-8")
    assert main(["fit", "--data", str(bad), "--out", str(tmp_path / "o")]) == 3


def test_schema_mismatch_is_exit_3(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    (out / "importance.csv").write_text("model_id,variable\n0,a\n", encoding="utf-8")
    assert main(["pool", "--out", str(out)]) == 3


def test_failed_run_records_stage_in_manifest(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n" + "1,0\n" * 30, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "--data", str(bad), "--out", str(out)]) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert manifest["failed_stage"] == "fit"
    assert "cause" in manifest


def test_no_subcommand_is_exit_2():
    assert main([]) == 2


def test_unknown_subcommand_raises_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_flag_overrides_config_value(tmp_path, data_csv):
    out = tmp_path / "out"
    config = _config_file(tmp_path, data_csv, out, n_slices=8)
    assert main(["fit", "--config", config, "--train-fraction", "0.5"]) == 0
    # 800 rows at 0.5 -> 400/400 rather than the config's 0.85 split.
    train_lines = (out / "train.csv").read_text().splitlines()
    assert len(train_lines) == 401
