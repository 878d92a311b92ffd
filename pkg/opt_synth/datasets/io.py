"""
Dataset ingestion, validation and normalization.

Datasets are stored as JSON Lines, one example per line:

    {"features": [[101], [65]], "labels": [false, true]}   # labeling task
    {"features": [[0.2], [0.9]], "label": true}            # query task

`features` is a non-empty list of equally sized numeric vectors (one per
step). Labeling tasks carry one boolean per step; query tasks carry a single
boolean for the whole trajectory.
"""
import dataclasses
import functools
import json
import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np


logger = logging.getLogger(__name__)


TASK_KINDS = ("labeling", "query")


class DatasetError(ValueError):
    """Invalid dataset contents. `line` is the 1-based line number, if known."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclasses.dataclass(frozen=True, eq=False)
class Example:
    """One trajectory. `features` has shape (time, features); `label` has
    shape (time,) for labeling tasks and () for query tasks."""

    features: np.ndarray
    label: np.ndarray

    @property
    def length(self) -> int:
        return self.features.shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    examples: Tuple[Example, ...]
    task_kind: str

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(
                f"Unknown task kind `{self.task_kind}`; expected one of {TASK_KINDS}"
            )
        dims = {example.features.shape[1] for example in self.examples}
        if len(dims) > 1:
            raise DatasetError(f"Inconsistent feature dimensions {sorted(dims)}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __getitem__(self, i) -> Example:
        return self.examples[i]

    @property
    def num_features(self) -> int:
        return self.examples[0].features.shape[1] if self.examples else 0

    @functools.cached_property
    def labels(self) -> np.ndarray:
        """Labels of every labeled unit (steps or whole trajectories), flattened
        in example order."""
        if not self.examples:
            return np.zeros(0, dtype=bool)
        return np.concatenate([np.atleast_1d(example.label) for example in self.examples])

    @functools.cached_property
    def _padded(self) -> Tuple[np.ndarray, np.ndarray]:
        max_length = max((example.length for example in self.examples), default=0)
        X = np.zeros((len(self), max_length, self.num_features))
        mask = np.zeros((len(self), max_length), dtype=bool)
        for b, example in enumerate(self.examples):
            X[b, : example.length] = example.features
            mask[b, : example.length] = True
        return X, mask

    def padded(self) -> Tuple[np.ndarray, np.ndarray]:
        """Features padded to `(batch, max_time, features)` with a `(batch,
        max_time)` validity mask."""
        return self._padded

    def lengths(self) -> np.ndarray:
        return np.array([example.length for example in self.examples], dtype=int)

    def example_is_positive(self) -> np.ndarray:
        """Per example: does it carry any positive label?"""
        return np.array([bool(np.any(example.label)) for example in self.examples])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.examples[i] for i in indices), self.task_kind)

    def with_features(self, features: Sequence[np.ndarray]) -> "Dataset":
        return Dataset(
            tuple(
                Example(np.asarray(x, dtype=float), example.label)
                for x, example in zip(features, self.examples)
            ),
            self.task_kind,
        )


def make_example(features, label, task_kind: str, line: Optional[int] = None) -> Example:
    """Validates raw JSON-like values and builds an `Example`."""
    if not isinstance(features, list) or not features:
        raise DatasetError("`features` must be a non-empty list of vectors", line)
    if not all(isinstance(step, list) and step for step in features):
        raise DatasetError("every step of `features` must be a non-empty list", line)
    widths = {len(step) for step in features}
    if len(widths) > 1:
        raise DatasetError(f"steps have different dimensions {sorted(widths)}", line)
    if not all(
        isinstance(v, (int, float)) and not isinstance(v, bool)
        for step in features
        for v in step
    ):
        raise DatasetError("feature values must be numbers", line)
    X = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DatasetError("feature values must be finite", line)

    if task_kind == "labeling":
        if not isinstance(label, list) or not all(isinstance(y, bool) for y in label):
            raise DatasetError("`labels` must be a list of booleans", line)
        if len(label) != X.shape[0]:
            raise DatasetError(
                f"`labels` has length {len(label)} but `features` has length {X.shape[0]}",
                line,
            )
        y = np.asarray(label, dtype=bool)
    elif task_kind == "query":
        if not isinstance(label, bool):
            raise DatasetError("`label` must be a boolean", line)
        y = np.asarray(label, dtype=bool)
    else:
        raise ValueError(f"Unknown task kind `{task_kind}`; expected one of {TASK_KINDS}")
    return Example(X, y)


def load_dataset(path: str, task_kind: str) -> Dataset:
    """Reads a JSONL dataset, rejecting malformed lines with their line number."""
    if task_kind not in TASK_KINDS:
        raise ValueError(f"Unknown task kind `{task_kind}`; expected one of {TASK_KINDS}")
    label_key = "labels" if task_kind == "labeling" else "label"
    examples = []
    dims = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"invalid JSON ({e.msg})", lineno) from e
            if not isinstance(record, dict):
                raise DatasetError("expected a JSON object", lineno)
            for key in ("features", label_key):
                if key not in record:
                    raise DatasetError(f"missing field `{key}`", lineno)
            example = make_example(record["features"], record[label_key], task_kind, lineno)
            if dims is None:
                dims = example.features.shape[1]
            elif example.features.shape[1] != dims:
                raise DatasetError(
                    f"expected {dims} features per step, got {example.features.shape[1]}",
                    lineno,
                )
            examples.append(example)
    if not examples:
        raise DatasetError(f"`{path}` contains no examples")
    logger.info(f"Loaded {len(examples)} {task_kind} examples from `{path}`")
    return Dataset(tuple(examples), task_kind)


def save_dataset(dataset: Dataset, path: str):
    label_key = "labels" if dataset.task_kind == "labeling" else "label"
    with open(path, "w", encoding="utf-8") as f:
        for example in dataset:
            record = {
                "features": example.features.tolist(),
                label_key: example.label.tolist(),
            }
            f.write(json.dumps(record) + "\n")


# Normalization


@dataclasses.dataclass(frozen=True)
class NormalizationParams:
    """Per-dimension (min, max) of the training features."""

    mins: Tuple[float, ...]
    maxs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins and maxs must have the same length")

    def scaled(self) -> np.ndarray:
        """Which dimensions are rescaled (the others are constant and pass through)."""
        return np.asarray(self.mins) < np.asarray(self.maxs)

    def _check(self, dataset: Dataset):
        if dataset.num_features != len(self.mins):
            raise ValueError(
                f"Normalization expects {len(self.mins)} features, got {dataset.num_features}"
            )

    def apply(self, dataset: Dataset) -> Dataset:
        """Affine map of each scaled dimension sending [min, max] onto [-1, 1].
        Values outside the training range are not clamped."""
        self._check(dataset)
        lo, hi, scaled = np.asarray(self.mins), np.asarray(self.maxs), self.scaled()
        span = np.where(scaled, hi - lo, 1.0)
        return dataset.with_features(
            [
                np.where(scaled, 2 * (example.features - lo) / span - 1, example.features)
                for example in dataset
            ]
        )

    def invert(self, dataset: Dataset) -> Dataset:
        self._check(dataset)
        lo, hi, scaled = np.asarray(self.mins), np.asarray(self.maxs), self.scaled()
        span = np.where(scaled, hi - lo, 1.0)
        return dataset.with_features(
            [
                np.where(scaled, (example.features + 1) * span / 2 + lo, example.features)
                for example in dataset
            ]
        )

    def to_json(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_json(cls, record: dict) -> "NormalizationParams":
        return cls(tuple(float(v) for v in record["mins"]), tuple(float(v) for v in record["maxs"]))


def normalize(
    dataset: Dataset, params: Optional[NormalizationParams] = None
) -> Tuple[Dataset, NormalizationParams]:
    """Normalizes features into [-1, 1] with min-max parameters computed from
    `dataset` (or the given `params`, e.g. from a training set)."""
    if params is None:
        stacked = np.concatenate([example.features for example in dataset], axis=0)
        params = NormalizationParams(
            tuple(float(v) for v in stacked.min(axis=0)),
            tuple(float(v) for v in stacked.max(axis=0)),
        )
    constant = np.flatnonzero(~params.scaled())
    if constant.size:
        logger.warning(
            f"Feature dimensions {constant.tolist()} are constant and are left unscaled."
        )
    return params.apply(dataset), params


def select_examples(
    dataset: Dataset,
    limit: int,
    seed: int,
    designated_positive: int = 0,
    designated_negative: int = 0,
) -> Dataset:
    """Subsamples `limit` examples, always including at least the given number
    of positive and negative examples (as far as the dataset has them).

    An example is positive when it carries any positive label. The original
    example order is preserved.
    """
    if limit < 0:
        raise ValueError(f"limit must be >= 0, got {limit}")
    if designated_positive + designated_negative > limit:
        raise ValueError(
            f"Cannot designate {designated_positive} positive and "
            f"{designated_negative} negative examples within a limit of {limit}"
        )
    if limit >= len(dataset):
        return dataset
    rng = np.random.default_rng(seed)
    positive = dataset.example_is_positive()
    pos_idx = np.flatnonzero(positive)
    neg_idx = np.flatnonzero(~positive)
    chosen: List[int] = []
    chosen.extend(rng.permutation(pos_idx)[:designated_positive].tolist())
    chosen.extend(rng.permutation(neg_idx)[:designated_negative].tolist())
    rest = np.setdiff1d(np.arange(len(dataset)), chosen)
    chosen.extend(rng.permutation(rest)[: limit - len(chosen)].tolist())
    return dataset.subset(sorted(chosen))
