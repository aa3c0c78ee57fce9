import json
import math

import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigError, InvalidMethodMetricError
from app.schemas.experiment import ExperimentConfig, MethodKind, MethodSpec, ResultRecord
from app.services.experiment import (
    build_cells,
    output_paths,
    run_experiment,
    summarize,
    validate_pairs,
    write_records,
)
from app.services.methods import PIPELINES


def _config(**overrides) -> ExperimentConfig:
    payload = {
        "dataset": {"name": "beta", "n": 2000, "buckets": 32},
        "methods": ["sw-ems", "cfo-binning:8", "hh-admm"],
        "epsilons": [1.0, 2.0],
        "repetitions": 2,
        "metrics": ["w1", "ks", "range:0.25", "mean", "var", "quantiles"],
        "seed": 17,
        "threads": 2,
        "range_trials": 50,
    }
    payload.update(overrides)
    return ExperimentConfig.model_validate(payload)


def _record(value: float, repetition: int = 0) -> ResultRecord:
    return ResultRecord(
        method="sw-ems",
        dataset="beta",
        epsilon=1.0,
        repetition=repetition,
        metric="w1",
        value=value,
        seed=0,
        config_hash="abc",
    )


@pytest.mark.parametrize(
    "text, label",
    [
        ("sw-ems", "sw-ems"),
        ("cfo-binning:16", "cfo-binning:16"),
        ("gw-ems:triangle", "gw-ems:triangle"),
        ("gw-ems:trapezoid:0.4", "gw-ems:trapezoid:0.4"),
    ],
)
def test_method_labels(text, label):
    assert MethodSpec.parse(text).label == label


@pytest.mark.parametrize("text", ["cfo-binning", "hh:3", "sw-unknown"])
def test_method_parse_errors(text):
    with pytest.raises(ValueError):
        MethodSpec.parse(text)


def test_invalid_pair_lists_valid_pairs():
    cfg = _config(methods=["hh"], metrics=["w1"])
    with pytest.raises(InvalidMethodMetricError) as error:
        validate_pairs(cfg)
    assert "hh: range" in str(error.value)
    assert error.value.exit_code == 2


def test_unknown_metric_is_rejected():
    with pytest.raises(ValidationError):
        _config(metrics=["median"])
    with pytest.raises(ValidationError):
        _config(metrics=["range"])


def test_cells_cover_grid():
    cells = build_cells(_config())
    assert len(cells) == 3 * 2 * 2
    assert len({cell.seed for cell in cells}) == 2 * 2
    seeds_by_draw = {}
    for cell in cells:
        seeds_by_draw.setdefault((cell.epsilon, cell.repetition), set()).add(cell.seed)
    assert all(len(seeds) == 1 for seeds in seeds_by_draw.values())


def test_b_sweep_shares_seeds():
    cells = build_cells(_config(methods=["sw-ems"], metrics=["w1"], b_grid=[0.1, 0.2, 0.3]))
    for repetition in range(2):
        seeds = {cell.seed for cell in cells if cell.repetition == repetition and cell.epsilon == 1.0}
        assert len(seeds) == 1


def test_sweeps_label_cells():
    cfg = _config(methods=["sw-ems", "sr"], metrics=["mean"], b_grid=[0.1, 0.2], bucket_grid=[16, 32])
    labels = {cell.label for cell in build_cells(cfg)}
    assert "sw-ems@b=0.1@d=16" in labels
    assert "sr@d=32" in labels
    assert not any(label.startswith("sr@b") for label in labels)


def test_binning_must_divide_buckets():
    with pytest.raises(ConfigError):
        build_cells(_config(methods=["cfo-binning:3"]))


def test_config_hash_ignores_output_and_threads(tmp_path):
    assert _config().config_hash == _config(output=str(tmp_path), threads=7).config_hash
    assert _config().config_hash != _config(seed=18).config_hash


def test_run_is_deterministic():
    cfg = _config()
    first = run_experiment(cfg)
    second = run_experiment(cfg)
    assert len(first) == 12 * 6
    assert [r.model_dump(exclude={"wall_ms"}) for r in first] == [r.model_dump(exclude={"wall_ms"}) for r in second]
    assert all(math.isfinite(r.value) and r.value >= 0 for r in first)
    assert first == sorted(first, key=lambda record: record.sort_key)


def test_range_only_and_moment_methods():
    hierarchy = run_experiment(_config(methods=["hh", "haar"], metrics=["range:0.25"], repetitions=1))
    assert {r.method for r in hierarchy} == {"hh", "haar"}
    moments = run_experiment(_config(methods=["sr", "pm"], metrics=["mean", "var"], repetitions=1))
    assert all(r.value < 0.2 for r in moments)


def test_summary_statistics():
    summary = summarize([_record(1.0, 0), _record(3.0, 1)])
    row = summary.iloc[0]
    assert row["mean"] == pytest.approx(2.0)
    assert row["std"] == pytest.approx(math.sqrt(2))
    assert row["count"] == 2
    assert summarize([_record(1.0)]).iloc[0]["std"] == 0.0


def test_records_file_is_reproducible(tmp_path):
    cfg = _config(methods=["sr"], metrics=["mean"], output=str(tmp_path), repetitions=3)
    records_path, summary_path = output_paths(cfg)
    write_records(run_experiment(cfg), records_path)
    content = records_path.read_bytes()
    write_records(run_experiment(cfg), records_path)
    assert records_path.read_bytes() == content
    lines = [json.loads(line) for line in content.decode().splitlines()]
    assert len(lines) == 6
    assert "wall_ms" not in lines[0]
    assert lines[0]["config_hash"] == cfg.config_hash
    assert summary_path.name.endswith(".summary.csv")


SHAPES = [
    "gw-ems:square",
    "gw-ems:trapezoid:0.2",
    "gw-ems:trapezoid:0.4",
    "gw-ems:trapezoid:0.6",
    "gw-ems:trapezoid:0.8",
    "gw-ems:triangle",
]


def test_worker_validation_error_becomes_config_error(mocker):
    def broken(*args, **kwargs):
        return ResultRecord.model_validate({"method": "sr"})

    mocker.patch("app.services.experiment.run_method", side_effect=broken)
    with pytest.raises(ConfigError) as error:
        run_experiment(_config(methods=["sr"], metrics=["mean"], repetitions=1))
    assert error.value.exit_code == 2
    assert "Ячейка sr" in str(error.value)


def test_worker_error_is_not_wrapped(mocker):
    mocker.patch("app.services.experiment.run_method", side_effect=RuntimeError("сбой ячейки"))
    with pytest.raises(RuntimeError, match="сбой ячейки"):
        run_experiment(_config(methods=["sr"], metrics=["mean"], repetitions=1))


@pytest.mark.slow
def test_square_wave_beats_binning_on_beta():
    baselines = ["cfo-binning:16", "cfo-binning:32", "cfo-binning:64", "hh-admm"]
    cfg = ExperimentConfig(
        dataset={"name": "beta", "n": 100_000},
        methods=["sw-ems", *baselines],
        epsilons=[0.5, 1.0, 2.0],
        repetitions=20,
        metrics=["w1"],
        seed=1,
    )
    summary = summarize(run_experiment(cfg)).pivot(index="epsilon", columns="method", values="mean")
    for epsilon, row in summary.iterrows():
        assert row["sw-ems"] < row[baselines].min(), epsilon


@pytest.mark.slow
def test_square_wave_is_best_shape():
    cfg = ExperimentConfig(
        dataset={"name": "beta", "n": 100_000},
        methods=SHAPES,
        epsilons=[1.0],
        repetitions=20,
        metrics=["w1"],
    )
    summary = summarize(run_experiment(cfg)).set_index("method")["mean"]
    assert summary["gw-ems:square"] <= summary[SHAPES[1:]].min()


@pytest.mark.slow
def test_optimal_b_is_near_grid_minimum():
    grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
    base = {"dataset": {"name": "beta", "n": 100_000}, "epsilons": [1.0], "repetitions": 20, "metrics": ["w1"]}
    optimal = summarize(run_experiment(ExperimentConfig(methods=["sw-ems"], **base)))
    swept = summarize(run_experiment(ExperimentConfig(methods=["sw-ems"], b_grid=grid, **base)))
    assert set(swept["method"]) == {f"sw-ems@b={b:g}" for b in grid}
    assert optimal["mean"].iloc[0] <= 1.1 * swept["mean"].min()


def test_method_kinds_have_pipelines():
    assert set(PIPELINES) == set(MethodKind)
