"""
Brute-force reference optima.

`grid_optimum` discretizes every constant hole of every sketch of a space and
evaluates all resulting programs; `enumerate_resolutions` resolves every
undetermined prediction of an abstract outcome set both ways. Both are exact
or refuse to run.
"""
import dataclasses
import itertools
import logging
import math
from typing import Any, Final, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from opt_synth.api.interval import Interval, contains
from opt_synth.api.objective import ObjectiveSpec
from opt_synth.api.space import ProgramSpace


logger = logging.getLogger(__name__)


MAX_CANDIDATES: Final[int] = 10**6
MAX_UNDETERMINED: Final[int] = 20


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """A grid of `steps` evenly spaced values from `lo` to `hi` (both
    included) for every constant hole. `points` overrides the grid for holes
    whose key it names (e.g. a Quivr predicate id)."""

    lo: float = -1.0
    hi: float = 1.0
    steps: int = 21
    points: Optional[Mapping[str, Sequence[float]]] = None
    max_candidates: int = MAX_CANDIDATES

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"A grid needs at least 2 steps, got {self.steps}")
        if not self.lo < self.hi:
            raise ValueError(f"Grid bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    def values(self, key: str) -> List[float]:
        if self.points is not None and key in self.points:
            return [float(v) for v in self.points[key]]
        return np.linspace(self.lo, self.hi, self.steps).tolist()


def _hole_values(space: ProgramSpace, sketch, grid: GridSpec) -> List[List[float]]:
    """Grid values per constant hole, restricted to the hole's box."""
    return [
        [v for v in grid.values(key) if contains(hole.box, v)]
        for hole, key in zip(space.constant_holes(sketch), space.hole_keys(sketch))
    ]


def grid_optimum(
    space: ProgramSpace, grid: GridSpec, dataset, objective: ObjectiveSpec
) -> Tuple[Any, float]:
    """Returns the best program (and its objective) among every sketch of
    `space` with its constant holes set to grid values. Ties keep the first
    program in enumeration order: sketches depth-first, then grid values in
    lexicographic order.
    """
    sketches = []
    total = 0
    for sketch in space.sketches():
        values = _hole_values(space, sketch, grid)
        total += math.prod(len(v) for v in values)
        if total > grid.max_candidates:
            raise ValueError(
                f"The grid has more than {grid.max_candidates} candidate programs; "
                "use a coarser grid or a smaller space."
            )
        sketches.append((sketch, values))
    if total == 0:
        raise ValueError("The discretized program space is empty.")
    logger.info(f"Evaluating {total} candidate programs from {len(sketches)} sketches")

    best_program, best_value = None, -math.inf
    for sketch, values in sketches:
        for assignment in itertools.product(*values):
            program = space.instantiate(sketch, assignment)
            value = space.evaluate(program, dataset, objective)
            if value > best_value:
                best_program, best_value = program, value
    return best_program, best_value


def enumerate_resolutions(
    predictions: Interval, labels, objective: ObjectiveSpec
) -> Tuple[float, float]:
    """Exact (min, max) of the concrete objective over every way of resolving
    the undetermined predictions.

    Example:
        predictions ([t,t],[f,t],[f,t]), labels (t,t,f), f1 -> (0.5, 1.0)
    """
    lo = np.asarray(predictions.lo, dtype=bool)
    hi = np.asarray(predictions.hi, dtype=bool)
    undetermined = np.flatnonzero(lo != hi)
    if undetermined.size > MAX_UNDETERMINED:
        raise ValueError(
            f"{undetermined.size} undetermined predictions exceed the limit of "
            f"{MAX_UNDETERMINED}."
        )
    values = []
    for resolution in itertools.product((False, True), repeat=undetermined.size):
        resolved = lo.copy()
        resolved[undetermined] = resolution
        values.append(objective.concrete(resolved, labels))
    return min(values), max(values)
