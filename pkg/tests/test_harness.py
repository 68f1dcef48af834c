import dataclasses

import numpy as np
import pytest

from enzood.errors import DatasetError
from enzood.harness import (
    LAMBDA_GRID,
    LOG_COLUMNS,
    MASK_GRID,
    NestedSplit,
    best_lambda_index,
    evaluate_params,
    good_evaluation,
    lambda_sweep,
    mask_sweep,
    nested_identity_split,
    read_checkpoint,
    select_records,
    train_on_split,
    two_arm_comparison,
    write_checkpoint,
    write_report,
    write_train_log,
)
from enzood.io import RunConfig, config_hash
from enzood.metrics import METRIC_IDS
from enzood.seqid import build_ood_splits, max_identity_to_train
from enzood.synth import SynthConfig, generate

# small benchmark and a deliberately light model: harness plumbing is
# under test here, not learning quality
QUICK = RunConfig(
    epochs=6,
    batch_size=8,
    learning_rate=0.05,
    hidden_enzyme=8,
    hidden_substrate=4,
    embed_dim=8,
)


@pytest.fixture(scope="module")
def bench():
    records, _ = generate(SynthConfig(family_count=6, members_per_family=12, seed=3))
    return records


@pytest.fixture(scope="module")
def split(bench):
    return nested_identity_split(bench, 0.6, 0.3, 0.3, seed=0)


def test_nested_split_partitions_dataset(bench, split):
    ids = {r.id for r in bench}
    taken = set(split.train_ids) | set(split.val_ids) | set(split.test_ids)
    assert taken == ids
    assert len(split.train_ids) + len(split.val_ids) + len(split.test_ids) == len(ids)


def test_nested_split_identity_soundness(bench, split):
    by_id = {r.id: r for r in bench}
    train_seqs = [by_id[i].sequence for i in split.train_ids]
    fit_seqs = train_seqs + [by_id[i].sequence for i in split.val_ids]
    for i in split.test_ids:
        assert max_identity_to_train(by_id[i].sequence, fit_seqs) <= 0.6
    for i in split.val_ids:
        assert max_identity_to_train(by_id[i].sequence, train_seqs) <= 0.6


def test_nested_split_rejects_overlap():
    with pytest.raises(ValueError):
        NestedSplit(0.6, ("a", "b"), ("b",), ("c",))


def test_select_records_unknown_id(bench):
    with pytest.raises(DatasetError):
        select_records(bench, ["no-such-record"])


def test_train_on_split_deterministic(bench, split):
    params_a, log_a, scores_a = train_on_split(bench, split, QUICK)
    params_b, log_b, scores_b = train_on_split(bench, split, QUICK)
    assert log_a == log_b
    assert scores_a == scores_b
    assert all(
        np.array_equal(a, b) for a, b in zip(params_a.arrays(), params_b.arrays())
    )
    assert len(log_a) == QUICK.epochs
    assert {"val", "test"} <= set(scores_a)
    assert {"n", "mse", "r2", "mae"} == set(scores_a["val"])


def test_evaluate_params_counts(bench, split):
    params, _, _ = train_on_split(bench, split, QUICK)
    scores = evaluate_params(params, select_records(bench, split.test_ids))
    assert scores["n"] == len(split.test_ids)
    assert scores["mse"] >= 0 and scores["mae"] >= 0


def test_two_arm_comparison_shape(bench, split):
    res = two_arm_comparison(bench, split, QUICK, seeds=[0, 1])
    assert [row["seed"] for row in res["rows"]] == [0, 1]
    mean_treated = np.mean([row["treated_r2"] for row in res["rows"]])
    assert res["mean_treated_r2"] == pytest.approx(mean_treated, abs=0)
    assert res["r2_gain"] == pytest.approx(
        res["mean_treated_r2"] - res["mean_control_r2"], abs=0
    )
    assert res["mae_drop"] == pytest.approx(
        res["mean_control_mae"] - res["mean_treated_mae"], abs=0
    )


def test_lambda_sweep_rows_and_best_index(bench, split):
    rows = lambda_sweep(bench, split, QUICK, grid=(0.0, 0.5, 5.0))
    assert [row["lam"] for row in rows] == [0.0, 0.5, 5.0]
    for row in rows:
        assert {"lam", "val_mse", "val_r2", "val_mae", "test_r2", "test_mae"} <= set(row)
    k = best_lambda_index(rows)
    assert rows[k]["val_mse"] == min(row["val_mse"] for row in rows)
    assert len(LAMBDA_GRID) == 5


def test_mask_sweep_shape(bench, split):
    rows = mask_sweep(bench, split, QUICK, grid=(0.05, 0.30))
    assert len(rows) == 4
    assert [(row["side"], row["ratio"]) for row in rows] == [
        ("enzyme", 0.05),
        ("enzyme", 0.30),
        ("substrate", 0.05),
        ("substrate", 0.30),
    ]
    assert MASK_GRID == (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


def test_good_evaluation_structure(bench, split):
    params, _, _ = train_on_split(bench, split, QUICK)
    splits = build_ood_splits(bench, [0.8, 0.4], test_fraction=0.3, seed=1)
    result = good_evaluation(bench, splits, params)
    thresholds = [row["threshold"] for row in result["per_threshold"]]
    assert thresholds == [0.4, 0.8]
    assert set(result["curves"]) == set(METRIC_IDS)
    for metric in METRIC_IDS:
        risks = [row[metric] for row in result["per_threshold"]]
        assert result["au_good"][metric] == pytest.approx(np.mean(risks), rel=1e-12)


def test_write_report_deterministic(tmp_path, bench, split):
    rows = lambda_sweep(bench, split, QUICK, grid=(0.0, 0.5))
    sections = [
        (
            "lambda-sweep",
            ("lam", "val_mse", "test_r2"),
            [(row["lam"], row["val_mse"], row["test_r2"]) for row in rows],
        )
    ]
    a, b = tmp_path / "a.report", tmp_path / "b.report"
    write_report(a, "ablate-lambda", QUICK, sections)
    write_report(b, "ablate-lambda", QUICK, sections)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    lines = text.splitlines()
    assert lines[0] == "# report: ablate-lambda"
    assert any(line.startswith("# seed: ") for line in lines)
    assert any(line.startswith(f"# config_hash: {config_hash(QUICK)}") for line in lines)
    assert "[lambda-sweep]" in lines
    body = lines[lines.index("[lambda-sweep]") + 1 :]
    assert body[0] == "lam\tval_mse\ttest_r2"
    assert len(body) == 3


def test_checkpoint_roundtrip(tmp_path, bench, split):
    params, _, _ = train_on_split(bench, split, QUICK)
    path = tmp_path / "model.ckpt"
    write_checkpoint(path, params, QUICK, extra={"note": "t"})
    loaded, data = read_checkpoint(path)
    assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), loaded.arrays()))
    assert data["config_hash"] == config_hash(QUICK)
    assert data["seed"] == QUICK.seed
    assert data["note"] == "t"
    write_checkpoint(tmp_path / "again.ckpt", params, QUICK, extra={"note": "t"})
    assert path.read_bytes() == (tmp_path / "again.ckpt").read_bytes()


def test_checkpoint_read_errors(tmp_path):
    with pytest.raises(DatasetError):
        read_checkpoint(tmp_path / "missing.ckpt")
    bad = tmp_path / "bad.ckpt"
    bad.write_text("{not json")
    with pytest.raises(DatasetError):
        read_checkpoint(bad)
    empty = tmp_path / "empty.ckpt"
    empty.write_text("{}")
    with pytest.raises(DatasetError):
        read_checkpoint(empty)


def test_write_train_log(tmp_path, bench, split):
    _, log, _ = train_on_split(bench, split, QUICK)
    a, b = tmp_path / "a.log", tmp_path / "b.log"
    write_train_log(a, log, QUICK)
    write_train_log(b, log, QUICK)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "# log: train"
    header = next(line for line in lines if not line.startswith("#"))
    assert tuple(header.split("\t")) == LOG_COLUMNS
    data_rows = [line for line in lines if not line.startswith("#")][1:]
    assert len(data_rows) == QUICK.epochs
