import abc
import dataclasses
import logging
from abc import abstractmethod
from typing import TYPE_CHECKING, Any, Iterator, List, Mapping, Optional, Sequence, Union

from opt_synth.api.interval import Interval, partition_interval
from opt_synth.api.objective import ObjectiveSpec

if TYPE_CHECKING:
    from opt_synth.datasets.io import Dataset


logger = logging.getLogger(__name__)


DEFAULT_SPLIT_DEPTH = 30
DEFAULT_HOLE_KEY = "const"


@dataclasses.dataclass(frozen=True)
class ConstantHole:
    """A real-valued hole annotated with the interval of values it may take.

    `depth` counts how many times the annotation has been split since the hole
    was introduced.
    """

    box: Interval
    depth: int = 0

    def split(self):
        """The part of the box below its midpoint, the midpoint itself and the
        part above it."""
        return tuple(
            ConstantHole(part, self.depth + 1) for part in partition_interval(self.box)
        )

    def is_splittable(self) -> bool:
        lo, hi = self.box
        return self.box.is_finite() and bool(lo < self.box.midpoint() < hi)

    def midpoint(self) -> float:
        return float(self.box.midpoint())

    def is_singleton(self) -> bool:
        return bool(self.box.is_singleton())

    def __str__(self):
        left = "(" if self.box.lo_open else "["
        right = ")" if self.box.hi_open else "]"
        lo, hi = _format_number(self.box.lo), _format_number(self.box.hi)
        return f"{left}{lo},{hi}{right}"


Constant = Union[float, ConstantHole]


def _format_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_constant(c: Constant) -> str:
    """Text form of a coefficient or threshold: a number or a box such as
    `[lo,hi]` or `(lo,hi]`."""
    if isinstance(c, ConstantHole):
        return str(c)
    return _format_number(c)


def widest_splittable_hole(
    holes: Sequence[ConstantHole], max_split_depth: int = DEFAULT_SPLIT_DEPTH
) -> Optional[int]:
    """Index of the hole to split next: the widest box that is neither
    too narrow to split nor at the split-depth cutoff, lowest index on ties."""
    best, best_width = None, 0.0
    for i, hole in enumerate(holes):
        if hole.depth >= max_split_depth or not hole.is_splittable():
            continue
        width = float(hole.box.width())
        if width > best_width:
            best, best_width = i, width
    return best


class ProgramSpace(abc.ABC):
    """A space of generalized partial programs.

    A node denotes a set of concrete programs: its structural holes range over
    grammar productions and its constant holes range over their annotated
    boxes. Subclasses define the grammar, its concrete and abstract semantics,
    and a text syntax; this class assembles the node-refinement moves the
    search needs out of those pieces.

    Implementations must be pure: every method depends only on its arguments
    (and immutable construction-time settings), so nodes may be evaluated in
    worker processes.
    """

    # Registry name of the DSL.
    NAME: str = None

    @abstractmethod
    def root(self):
        """The node denoting the whole space."""
        pass

    @abstractmethod
    def has_structural_holes(self, node) -> bool:
        pass

    @abstractmethod
    def expand_structural_hole(self, node) -> List:
        """Fills the first structural hole with every admissible production.

        Newly introduced constants are constant holes carrying their initial
        box.
        """
        pass

    @abstractmethod
    def constant_holes(self, node) -> List[ConstantHole]:
        """The constant holes of `node` in pre-order."""
        pass

    @abstractmethod
    def fill_constant_holes(self, node, values: Sequence[Constant]):
        """Returns `node` with its constant holes replaced, in pre-order, by
        `values` (numbers or new holes)."""
        pass

    @abstractmethod
    def abstract_predictions(self, node, dataset: "Dataset") -> Interval:
        """Boolean interval predictions on every labeled unit of `dataset`,
        aligned with `dataset.labels`. Structural holes evaluate to top."""
        pass

    @abstractmethod
    def predict(self, program, dataset: "Dataset"):
        """Boolean predictions of a program without holes of any kind."""
        pass

    @abstractmethod
    def to_text(self, node) -> str:
        pass

    @abstractmethod
    def parse(self, text: str):
        pass

    def hole_keys(self, node) -> List[str]:
        """A key per constant hole naming what it parameterizes, used to look
        up per-hole oracle grids."""
        return [DEFAULT_HOLE_KEY] * len(self.constant_holes(node))

    def hole_annotations(self, node) -> Mapping[int, Interval]:
        """The annotation map from constant-hole index to its box."""
        return {i: hole.box for i, hole in enumerate(self.constant_holes(node))}

    def is_concrete(self, node) -> bool:
        if self.has_structural_holes(node):
            return False
        return all(hole.is_singleton() for hole in self.constant_holes(node))

    def children(self, node, max_split_depth: int = DEFAULT_SPLIT_DEPTH) -> List:
        """Refinements of `node` whose denotations jointly cover it.

        Structural holes are filled first; otherwise the widest constant box is
        split into the part below its midpoint, the midpoint and the part above. Nodes with nothing left to refine (concrete programs, or boxes
        all at the split-depth cutoff) have no children.
        """
        if self.has_structural_holes(node):
            return self.expand_structural_hole(node)
        holes = self.constant_holes(node)
        index = widest_splittable_hole(holes, max_split_depth)
        if index is None:
            return []
        children = []
        for half in holes[index].split():
            values = list(holes)
            values[index] = half
            children.append(self.fill_constant_holes(node, values))
        return children

    def concrete_witness(self, node) -> Optional[Any]:
        """The midpoint instantiation of every constant box, or None when
        structural holes remain."""
        if self.has_structural_holes(node):
            return None
        holes = self.constant_holes(node)
        return self.fill_constant_holes(node, [hole.midpoint() for hole in holes])

    def instantiate(self, node, values: Sequence[float]):
        """Replaces each constant hole with the matching concrete value."""
        holes = self.constant_holes(node)
        if len(values) != len(holes):
            raise ValueError(
                f"Expected {len(holes)} constant values, got {len(values)}"
            )
        return self.fill_constant_holes(node, list(values))

    def bounds(self, node, dataset: "Dataset", objective: ObjectiveSpec) -> Interval:
        """The abstract objective of `node` on `dataset`."""
        return objective.abstract(
            self.abstract_predictions(node, dataset), dataset.labels
        )

    def evaluate(self, program, dataset: "Dataset", objective: ObjectiveSpec) -> float:
        """The concrete objective of a program without holes."""
        return objective.concrete(self.predict(program, dataset), dataset.labels)

    def sketches(self, node=None) -> Iterator:
        """Depth-first enumeration of the nodes reachable by structural
        expansion alone that have no structural holes left."""
        stack = [self.root() if node is None else node]
        while stack:
            current = stack.pop()
            if not self.has_structural_holes(current):
                yield current
                continue
            stack.extend(reversed(self.expand_structural_hole(current)))
