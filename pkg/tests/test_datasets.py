import json

import numpy as np
import pytest

from opt_synth.api.objective import get_objective
from opt_synth.datasets import (
    Dataset,
    DatasetError,
    Example,
    NormalizationParams,
    load_dataset,
    normalize,
    save_dataset,
    select_examples,
)
from opt_synth.datasets.synthetic import PLANTED_PROGRAMS, SYNTHETIC_TASKS, generate_synthetic
from opt_synth.dsls import get_space


def _write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return str(path)


def test_load_labeling_dataset(tmp_path):
    path = _write_lines(
        tmp_path / "data.jsonl",
        [
            {"features": [[101], [65]], "labels": [False, True]},
            {"features": [[3], [4], [5]], "labels": [True, True, False]},
        ],
    )
    dataset = load_dataset(path, "labeling")
    assert len(dataset) == 2
    assert dataset.num_features == 1
    np.testing.assert_array_equal(dataset.labels, [False, True, True, True, False])
    np.testing.assert_array_equal(dataset.lengths(), [2, 3])
    X, mask = dataset.padded()
    assert X.shape == (2, 3, 1)
    np.testing.assert_array_equal(mask, [[True, True, False], [True, True, True]])


def test_load_query_dataset_skips_blank_lines(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(
        json.dumps({"features": [[0.2, 1.0], [0.9, 0.0]], "label": True})
        + "\n\n"
        + json.dumps({"features": [[0.5, 0.5]], "label": False})
        + "\n"
    )
    dataset = load_dataset(str(path), "query")
    np.testing.assert_array_equal(dataset.labels, [True, False])
    np.testing.assert_array_equal(dataset.example_is_positive(), [True, False])


@pytest.mark.parametrize(
    "line,message",
    [
        ("not json", "invalid JSON"),
        ("[1, 2]", "expected a JSON object"),
        ('{"labels": [true]}', "missing field `features`"),
        ('{"features": [[1]]}', "missing field `labels`"),
        ('{"features": [], "labels": []}', "non-empty list"),
        ('{"features": [[1], [2, 3]], "labels": [true, false]}', "different dimensions"),
        ('{"features": [["a"]], "labels": [true]}', "numbers"),
        ('{"features": [[true]], "labels": [true]}', "numbers"),
        ('{"features": [[1], [2]], "labels": [true]}', "has length 1"),
        ('{"features": [[1]], "labels": [1]}', "list of booleans"),
    ],
)
def test_load_rejects_malformed_lines(tmp_path, line, message):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"features": [[0]], "labels": [false]}\n' + line + "\n")
    with pytest.raises(DatasetError, match=message) as info:
        load_dataset(str(path), "labeling")
    assert info.value.line == 2
    assert str(info.value).startswith("line 2:")


def test_load_rejects_inconsistent_feature_counts(tmp_path):
    path = _write_lines(
        tmp_path / "data.jsonl",
        [
            {"features": [[1]], "label": True},
            {"features": [[1, 2]], "label": False},
        ],
    )
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset(path, "query")


def test_load_rejects_non_boolean_query_label(tmp_path):
    path = _write_lines(tmp_path / "data.jsonl", [{"features": [[1]], "label": [True]}])
    with pytest.raises(DatasetError, match="boolean"):
        load_dataset(path, "query")


def test_load_rejects_empty_file_and_unknown_kind(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n")
    with pytest.raises(DatasetError, match="no examples"):
        load_dataset(str(path), "labeling")
    with pytest.raises(ValueError):
        load_dataset(str(path), "ranking")


def test_save_and_load(tmp_path):
    task = generate_synthetic("labeling", seed=2, num_examples=4, length=3, min_length=1)
    path = str(tmp_path / "data.jsonl")
    save_dataset(task.dataset, path)
    loaded = load_dataset(path, "labeling")
    np.testing.assert_array_equal(loaded.labels, task.dataset.labels)
    np.testing.assert_array_equal(loaded.lengths(), task.dataset.lengths())
    for a, b in zip(loaded, task.dataset):
        np.testing.assert_allclose(a.features, b.features)


def _dataset(trajectories):
    return Dataset(
        tuple(
            Example(np.asarray(x, dtype=float), np.zeros(len(x), dtype=bool))
            for x in trajectories
        ),
        "labeling",
    )


def test_normalize_maps_onto_unit_box():
    dataset = _dataset([[[0.0, 5.0], [10.0, 5.0]], [[5.0, 5.0]]])
    normalized, params = normalize(dataset)
    assert params == NormalizationParams((0.0, 5.0), (10.0, 5.0))
    np.testing.assert_allclose(normalized[0].features, [[-1.0, 5.0], [1.0, 5.0]])
    np.testing.assert_allclose(normalized[1].features, [[0.0, 5.0]])
    restored = params.invert(normalized)
    for a, b in zip(restored, dataset):
        np.testing.assert_allclose(a.features, b.features)


def test_normalize_reuses_training_parameters():
    params = NormalizationParams((0.0,), (100.0,))
    normalized, same = normalize(_dataset([[[150.0], [50.0]]]), params)
    assert same is params
    # Out-of-range values are not clamped.
    np.testing.assert_allclose(normalized[0].features, [[2.0], [0.0]])
    with pytest.raises(ValueError):
        params.apply(_dataset([[[1.0, 2.0]]]))


def test_normalization_params_json():
    params = NormalizationParams((0.0, -1.0), (100.0, 1.0))
    assert NormalizationParams.from_json(json.loads(json.dumps(params.to_json()))) == params
    with pytest.raises(ValueError):
        NormalizationParams((0.0,), (1.0, 2.0))


def test_select_examples():
    labels = [True, False, False, False, False, True, False, False]
    dataset = Dataset(
        tuple(Example(np.array([[float(i)]]), np.array([y])) for i, y in enumerate(labels)),
        "labeling",
    )
    subset = select_examples(dataset, 3, seed=0, designated_positive=2)
    assert len(subset) == 3
    assert subset.example_is_positive().sum() == 2
    order = [int(example.features[0, 0]) for example in subset]
    assert order == sorted(order)

    again = select_examples(dataset, 3, seed=0, designated_positive=2)
    assert [e.features[0, 0] for e in again] == [e.features[0, 0] for e in subset]
    assert select_examples(dataset, 20, seed=0) is dataset
    with pytest.raises(ValueError):
        select_examples(dataset, -1, seed=0)
    with pytest.raises(ValueError):
        select_examples(dataset, 2, seed=0, designated_positive=2, designated_negative=1)


@pytest.mark.parametrize("task_kind", SYNTHETIC_TASKS)
def test_synthetic_tasks_are_deterministic(task_kind):
    a = generate_synthetic(task_kind, seed=9, num_examples=5, length=4)
    b = generate_synthetic(task_kind, seed=9, num_examples=5, length=4)
    c = generate_synthetic(task_kind, seed=10, num_examples=5, length=4)
    np.testing.assert_array_equal(a.dataset.labels, b.dataset.labels)
    for x, y in zip(a.dataset, b.dataset):
        np.testing.assert_array_equal(x.features, y.features)
    assert any(
        not np.array_equal(x.features, y.features) for x, y in zip(a.dataset, c.dataset)
    )
    assert a.planted == PLANTED_PROGRAMS[task_kind]


@pytest.mark.parametrize("task_kind", SYNTHETIC_TASKS)
def test_planted_program_is_perfect_without_noise(task_kind):
    task = generate_synthetic(task_kind, seed=1, num_examples=8, length=5)
    space = get_space(task.dsl, task.dataset)
    program = space.parse(task.planted)
    assert space.evaluate(program, task.dataset, get_objective("accuracy")) == 1.0


def test_synthetic_task_options():
    task = generate_synthetic("labeling", seed=0, num_examples=6, length=5, min_length=2, num_features=3)
    assert task.dataset.num_features == 3
    assert all(2 <= n <= 5 for n in task.dataset.lengths())
    toy = generate_synthetic("toy")
    assert toy.sketch == "map(-1*z0 + [0,100])"
    assert not toy.normalize
    assert toy.to_json()["task_kind"] == "labeling"
    query = generate_synthetic("query", num_examples=3)
    assert query.dataset.task_kind == "query"
    assert query.to_json()["dsl"] == "quivr"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"task_kind": "ranking"},
        {"task_kind": "toy", "num_examples": 0},
        {"task_kind": "toy", "noise": 1.5},
        {"task_kind": "toy", "length": 3, "min_length": 4},
    ],
)
def test_synthetic_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        generate_synthetic(**kwargs)
