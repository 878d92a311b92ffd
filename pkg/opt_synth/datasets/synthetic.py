"""
Seeded synthetic benchmark tasks with a planted ground-truth program.

    labeling  features ~ U[-1, 1]; each step labeled by `map(-1*z0 + 0.3)`
    query     trajectories of a per-example amplitude; labeled by
              `(max0 >= 0.7) ; (max0 >= 0.2)`
    toy       one-feature distances in [0, 100]; labeled by `map(-1*z0 + 50)`
              (distance <= 50), searched from the sketch `map(-1*z0 + [0,100])`
              on unnormalized features

With zero label noise the planted program labels every example correctly.
"""
import dataclasses
import logging
from typing import Final, Optional

import numpy as np

from opt_synth.api.utils import DEFAULT_SEED
from opt_synth.datasets.io import Dataset, Example
from opt_synth.dsls.near import NearSpace
from opt_synth.dsls.quivr import PredicateLibrary, QuivrSpace


logger = logging.getLogger(__name__)


SYNTHETIC_TASKS = ("labeling", "query", "toy")

PLANTED_PROGRAMS: Final = {
    "labeling": "map(-1*z0 + 0.3)",
    "query": "(max0 >= 0.7) ; (max0 >= 0.2)",
    "toy": "map(-1*z0 + 50)",
}
TOY_SKETCH: Final[str] = "map(-1*z0 + [0,100])"


@dataclasses.dataclass(frozen=True)
class SyntheticTask:
    dataset: Dataset
    planted: str
    dsl: str
    # Root the search starts from; None means the DSL's unrestricted root.
    sketch: Optional[str] = None
    # Whether features are meant to be normalized before synthesis.
    normalize: bool = True

    def to_json(self) -> dict:
        return {
            "planted": self.planted,
            "dsl": self.dsl,
            "sketch": self.sketch,
            "normalize": self.normalize,
            "task_kind": self.dataset.task_kind,
            "num_examples": len(self.dataset),
        }


def _flip(labels: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    if noise <= 0:
        return labels
    return labels ^ (rng.random(labels.shape) < noise)


def _label_steps(space: NearSpace, features, noise, rng) -> Dataset:
    unlabeled = Dataset(
        tuple(Example(x, np.zeros(x.shape[0], dtype=bool)) for x in features),
        "labeling",
    )
    program = space.root()
    predictions = space.predict(program, unlabeled)
    splits = np.split(predictions, np.cumsum(unlabeled.lengths())[:-1])
    return Dataset(
        tuple(
            Example(x, _flip(y.astype(bool), noise, rng))
            for x, y in zip(features, splits)
        ),
        "labeling",
    )


def generate_synthetic(
    task_kind: str,
    seed: int = DEFAULT_SEED,
    num_examples: int = 20,
    length: int = 10,
    min_length: Optional[int] = None,
    num_features: int = 1,
    noise: float = 0.0,
) -> SyntheticTask:
    """Generates a labeled dataset from a planted program.

    Args:
        task_kind (str):
            One of "labeling", "query" or "toy".
        seed (int, optional, defaults to `DEFAULT_SEED`):
            Seed of the generator; the same arguments give the same dataset.
        num_examples (int, optional, defaults to 20):
            Number of trajectories.
        length (int, optional, defaults to 10):
            Maximum trajectory length.
        min_length (int, optional, defaults to None):
            Minimum trajectory length; lengths are drawn uniformly in
            `[min_length, length]`. Defaults to `length`.
        num_features (int, optional, defaults to 1):
            Feature dimension. Only feature 0 influences the planted labels.
            The toy task always has one feature.
        noise (float, optional, defaults to 0.0):
            Probability of flipping each label.
    """
    if task_kind not in SYNTHETIC_TASKS:
        raise ValueError(f"Unknown synthetic task `{task_kind}`; expected one of {SYNTHETIC_TASKS}")
    if num_examples < 1 or length < 1 or num_features < 1:
        raise ValueError("num_examples, length and num_features must be >= 1")
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must be in [0, 1], got {noise}")
    min_length = length if min_length is None else min_length
    if not 1 <= min_length <= length:
        raise ValueError(f"min_length must be in [1, {length}], got {min_length}")

    rng = np.random.default_rng(seed)
    lengths = rng.integers(min_length, length + 1, size=num_examples)
    planted = PLANTED_PROGRAMS[task_kind]

    if task_kind == "labeling":
        features = [rng.uniform(-1.0, 1.0, size=(t, num_features)) for t in lengths]
        space = NearSpace(num_features, sketch=planted)
        task = SyntheticTask(_label_steps(space, features, noise, rng), planted, "near")
    elif task_kind == "toy":
        features = [np.round(rng.uniform(0.0, 100.0, size=(t, 1)), 2) for t in lengths]
        space = NearSpace(1, sketch=planted)
        task = SyntheticTask(
            _label_steps(space, features, noise, rng),
            planted,
            "near",
            sketch=TOY_SKETCH,
            normalize=False,
        )
    else:
        # A per-trajectory amplitude mixes matching and non-matching examples.
        amplitude = rng.uniform(0.3, 1.0, size=num_examples)
        features = [
            a * rng.uniform(0.0, 1.0, size=(t, num_features))
            for a, t in zip(amplitude, lengths)
        ]
        unlabeled = Dataset(
            tuple(Example(x, np.asarray(False)) for x in features), "query"
        )
        library = PredicateLibrary(num_features)
        space = QuivrSpace(library, library.score_ranges(unlabeled))
        labels = _flip(space.predict(space.parse(planted), unlabeled), noise, rng)
        task = SyntheticTask(
            Dataset(
                tuple(Example(x, np.asarray(bool(y))) for x, y in zip(features, labels)),
                "query",
            ),
            planted,
            "quivr",
        )
    logger.info(
        f"Generated {num_examples} {task_kind} examples with seed {seed} "
        f"(planted `{planted}`, noise {noise})"
    )
    return task
