"""
A trajectory-query DSL: Kleene algebra with tests over threshold predicates,
without iteration.

    Q ::= f | g >= c | Q ; Q | Q & Q

`f` is a Boolean predicate over a trajectory segment and `g >= c` compares a
real-valued segment score with a threshold `c`. `Q1 ; Q2` matches when some
split point divides the trajectory into a prefix matching `Q1` and a suffix
matching `Q2` (either side may be empty); `Q1 & Q2` matches when both do.

A query is evaluated on every segment `x[i:j]` at once: each subquery yields a
Boolean matrix indexed by `(i, j)` (upper triangular, `i <= j`), and
sequencing is a Boolean matrix product. Abstract evaluation carries a pair of
such matrices, the lower and upper ends of a Boolean interval per segment.
"""
import dataclasses
import logging
import re
import weakref
from typing import Dict, Final, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from opt_synth.api.interval import (
    NEG_INF,
    POS_INF,
    Interval,
    abstract_singleton,
    bool_and,
    threshold_ge,
)
from opt_synth.api.space import Constant, ConstantHole, ProgramSpace, format_constant
from opt_synth.dsls.syntax import Parser


logger = logging.getLogger(__name__)


DEFAULT_MAX_PREDICATES: Final[int] = 3
DEFAULT_MAX_PARAMETERIZED: Final[int] = 2
# Padding around the realized score range of a fresh threshold box.
BOX_MARGIN: Final[float] = 1e-6

SCORE_KINDS = ("max", "min", "avg")
BOOLEAN_PREDICATES = ("true",)


# Syntax


@dataclasses.dataclass(frozen=True)
class Hole:
    pass


@dataclasses.dataclass(frozen=True)
class Pred0:
    name: str


@dataclasses.dataclass(frozen=True)
class PredC:
    name: str
    threshold: Constant


@dataclasses.dataclass(frozen=True)
class Seq:
    first: "Query"
    second: "Query"


@dataclasses.dataclass(frozen=True)
class And:
    left: "Query"
    right: "Query"


Query = Union[Pred0, PredC, Seq, And, Hole]


def to_text(q: Query) -> str:
    """Pretty-prints a query, e.g. `(max0 >= [0.1,0.8]) ; (avg1 >= 0.3)`."""

    def wrap(sub):
        text = to_text(sub)
        return f"({text})" if isinstance(sub, (Seq, And)) else text

    if isinstance(q, Hole):
        return "??"
    if isinstance(q, Pred0):
        return q.name
    if isinstance(q, PredC):
        return f"({q.name} >= {format_constant(q.threshold)})"
    if isinstance(q, Seq):
        return f"{wrap(q.first)} ; {wrap(q.second)}"
    if isinstance(q, And):
        return f"{wrap(q.left)} & {wrap(q.right)}"
    raise TypeError(f"Not a query: {q!r}")


class _QuivrParser(Parser):
    def __init__(self, text: str, library: "PredicateLibrary"):
        super().__init__(text)
        self.library = library

    def parse(self) -> Query:
        q = self._query()
        self._expect_end()
        return q

    def _query(self) -> Query:
        q = self._term()
        while self._check(";") or self._check("&"):
            op = self._advance().text
            rhs = self._term()
            q = Seq(q, rhs) if op == ";" else And(q, rhs)
        return q

    def _term(self) -> Query:
        if self._check("??"):
            self._advance()
            return Hole()
        if self._check("("):
            self._advance()
            q = self._query()
            self._consume(")")
            return q
        if self.current.kind != "name":
            self._error("expected a predicate")
        name = self._advance().text
        if self._check(">="):
            self._advance()
            if name not in self.library.parameterized:
                self._error(f"unknown parameterized predicate `{name}`")
            return PredC(name, self._constant())
        if name not in self.library.boolean:
            self._error(f"unknown predicate `{name}`")
        return Pred0(name)


def parse_query(text: str, library: "PredicateLibrary") -> Query:
    return _QuivrParser(text, library).parse()


def count_predicates(q: Query) -> Tuple[int, int]:
    """(predicates, parameterized predicates); a structural hole counts as one
    unparameterized predicate, the fewest any completion can have."""
    if isinstance(q, (Hole, Pred0)):
        return 1, 0
    if isinstance(q, PredC):
        return 1, 1
    if isinstance(q, Seq):
        a, b = count_predicates(q.first), count_predicates(q.second)
    else:
        a, b = count_predicates(q.left), count_predicates(q.right)
    return a[0] + b[0], a[1] + b[1]


# Predicate library

_SCORE_NAME_RE = re.compile(r"^(max|min|avg)(\d+)$")


def _parse_score_name(name: str) -> Tuple[str, int]:
    match = _SCORE_NAME_RE.match(name)
    if match is None:
        raise KeyError(f"Unknown predicate `{name}`")
    return match.group(1), int(match.group(2))


def empty_score(name: str) -> float:
    """Score of the empty segment: -inf for max/avg, +inf for min, so that
    `g >= c` fails on empty segments for max/avg and holds for min."""
    kind, _ = _parse_score_name(name)
    return POS_INF if kind == "min" else NEG_INF


def segment_scores(name: str, X: np.ndarray) -> np.ndarray:
    """Scores of every segment of every trajectory.

    Args:
        name: Score predicate id, `max<j>`, `min<j>` or `avg<j>`.
        X: Padded features of shape (batch, time, features).

    Returns:
        Array of shape (batch, time + 1, time + 1) whose entry (b, i, j) is the
        score of `X[b, i:j]`. Empty segments and entries below the diagonal
        hold the empty-segment score.
    """
    kind, j = _parse_score_name(name)
    if j >= X.shape[-1]:
        raise KeyError(f"Predicate `{name}` needs feature {j} but there are {X.shape[-1]}")
    batch, time = X.shape[:2]
    values = X[:, :, j]
    out = np.full((batch, time + 1, time + 1), empty_score(name))
    for i in range(time):
        segment = values[:, i:]
        if kind == "max":
            acc = np.maximum.accumulate(segment, axis=1)
        elif kind == "min":
            acc = np.minimum.accumulate(segment, axis=1)
        else:
            acc = np.cumsum(segment, axis=1) / np.arange(1, time - i + 1)
        out[:, i, i + 1 :] = acc
    return out


def predicate_score(name: str, segment) -> float:
    """Score of one segment (a sequence of feature vectors).

    Example:
        predicate_score("avg0", [[0.2], [0.9]]) -> 0.55
    """
    X = np.asarray(segment, dtype=float)
    if X.shape[0] == 0:
        _parse_score_name(name)
        return empty_score(name)
    return float(segment_scores(name, X[None])[0, 0, X.shape[0]])


class PredicateLibrary:
    """Boolean predicates and real-valued score predicates over segments.

    Ships the constant `true` predicate and `max<j>`, `min<j>`, `avg<j>` of
    every feature j.
    """

    def __init__(self, num_features: int, score_kinds: Sequence[str] = SCORE_KINDS):
        for kind in score_kinds:
            if kind not in SCORE_KINDS:
                raise ValueError(f"Unknown score kind `{kind}`; expected one of {SCORE_KINDS}")
        self.num_features = num_features
        self.boolean: Tuple[str, ...] = BOOLEAN_PREDICATES
        self.parameterized: Tuple[str, ...] = tuple(
            f"{kind}{j}" for j in range(num_features) for kind in score_kinds
        )

    def score_ranges(self, dataset) -> Dict[str, Tuple[float, float]]:
        """Range containing every non-empty segment score on `dataset`. Max,
        min and average of a feature all lie within the feature's range."""
        stacked = np.concatenate([example.features for example in dataset], axis=0)
        ranges = {}
        for name in self.parameterized:
            _, j = _parse_score_name(name)
            ranges[name] = (float(stacked[:, j].min()), float(stacked[:, j].max()))
        return ranges

    def realized_scores(self, name: str, dataset) -> np.ndarray:
        """Sorted distinct scores of all non-empty segments of `dataset`."""
        X, _ = dataset.padded()
        scores = segment_scores(name, X)
        time = X.shape[1]
        i, j = np.meshgrid(np.arange(time + 1), np.arange(time + 1), indexing="ij")
        valid = (i[None] < j[None]) & (j[None] <= dataset.lengths()[:, None, None])
        return np.unique(scores[valid])


def decision_thresholds(library: PredicateLibrary, dataset) -> Dict[str, List[float]]:
    """Thresholds covering every distinct behavior of each score predicate on
    `dataset`: the realized scores plus one value just above the largest,
    inside the initial threshold box."""
    thresholds = {}
    for name in library.parameterized:
        realized = library.realized_scores(name, dataset)
        thresholds[name] = [float(v) for v in realized] + [
            float(realized[-1]) + BOX_MARGIN / 2
        ]
    return thresholds


# Semantics


def _upper_triangle(time: int) -> np.ndarray:
    return np.triu(np.ones((time + 1, time + 1), dtype=bool))


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean matrix product: (i, j) holds when some k has a[i, k] and b[k, j]."""
    return np.matmul(a.astype(np.int32), b.astype(np.int32)) > 0


class _ScoreCache:
    """Segment scores per predicate, computed on first use."""

    def __init__(self, X: np.ndarray):
        self.X = X
        self._scores = {}

    def __call__(self, name: str) -> np.ndarray:
        if name not in self._scores:
            self._scores[name] = segment_scores(name, self.X)
        return self._scores[name]


def _concrete_threshold(c: Constant) -> float:
    if isinstance(c, ConstantHole):
        raise ValueError(f"Cannot evaluate unresolved threshold {c}")
    return c


def segment_table(q: Query, scores: _ScoreCache, triangle: np.ndarray) -> np.ndarray:
    """Boolean table (batch, time + 1, time + 1) of `q` on every segment."""
    if isinstance(q, Hole):
        raise ValueError("Cannot evaluate a structural hole")
    if isinstance(q, Pred0):
        if q.name != "true":
            raise KeyError(f"Unknown predicate `{q.name}`")
        return np.broadcast_to(triangle, scores.X.shape[:1] + triangle.shape)
    if isinstance(q, PredC):
        return (scores(q.name) >= _concrete_threshold(q.threshold)) & triangle
    if isinstance(q, Seq):
        return _compose(
            segment_table(q.first, scores, triangle),
            segment_table(q.second, scores, triangle),
        )
    return segment_table(q.left, scores, triangle) & segment_table(
        q.right, scores, triangle
    )


def abstract_segment_table(q: Query, scores: _ScoreCache, triangle: np.ndarray) -> Interval:
    """Boolean-interval table of `q`: `lo` holds where every instantiation of
    the threshold boxes matches, `hi` where some instantiation may."""
    shape = scores.X.shape[:1] + triangle.shape
    if isinstance(q, Hole):
        return Interval(np.zeros(shape, dtype=bool), np.broadcast_to(triangle, shape))
    if isinstance(q, Pred0):
        table = segment_table(q, scores, triangle)
        return Interval(table, table)
    if isinstance(q, PredC):
        c = q.threshold.box if isinstance(q.threshold, ConstantHole) else abstract_singleton(q.threshold)
        test = threshold_ge(abstract_singleton(scores(q.name)), c)
        return Interval(test.lo & triangle, test.hi & triangle)
    if isinstance(q, Seq):
        # Sequencing is monotone in both arguments, endpoint-wise.
        a = abstract_segment_table(q.first, scores, triangle)
        b = abstract_segment_table(q.second, scores, triangle)
        return Interval(_compose(a.lo, b.lo), _compose(a.hi, b.hi))
    return bool_and(
        abstract_segment_table(q.left, scores, triangle),
        abstract_segment_table(q.right, scores, triangle),
    )


def _whole(table: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    return table[np.arange(table.shape[0]), 0, lengths]


def eval_query(q: Query, trajectory) -> bool:
    """Does the whole trajectory match `q`?"""
    X = np.asarray(trajectory, dtype=float)
    if X.ndim != 2 and X.size == 0:
        X = X.reshape(0, 0)
    table = segment_table(q, _ScoreCache(X[None]), _upper_triangle(X.shape[0]))
    return bool(table[0, 0, X.shape[0]])


def abs_eval_query(q: Query, trajectory) -> Interval:
    """Boolean interval containing `eval_query` of every instantiation of the
    threshold boxes of `q`."""
    X = np.asarray(trajectory, dtype=float)
    if X.ndim != 2 and X.size == 0:
        X = X.reshape(0, 0)
    table = abstract_segment_table(q, _ScoreCache(X[None]), _upper_triangle(X.shape[0]))
    n = X.shape[0]
    return Interval(bool(table.lo[0, 0, n]), bool(table.hi[0, 0, n]))


# Search space


class QuivrSpace(ProgramSpace):
    """Queries with a bounded number of predicates.

    Args:
        library (PredicateLibrary):
            Predicates available to queries.
        score_ranges (Mapping[str, Tuple[float, float]]):
            Realized score range per parameterized predicate; a fresh threshold
            box spans it padded by `BOX_MARGIN`. See
            `PredicateLibrary.score_ranges`.
        max_predicates (int, optional, defaults to 3):
            Bound on the number of predicates in a query.
        max_parameterized (int, optional, defaults to 2):
            Bound on the number of parameterized predicates in a query.
        sketch (str, optional, defaults to None):
            Text of a partial query to search from instead of `??`.
    """

    NAME = "quivr"

    def __init__(
        self,
        library: PredicateLibrary,
        score_ranges: Mapping[str, Tuple[float, float]],
        max_predicates: int = DEFAULT_MAX_PREDICATES,
        max_parameterized: int = DEFAULT_MAX_PARAMETERIZED,
        sketch: Optional[str] = None,
    ):
        if max_predicates < 1:
            raise ValueError(f"max_predicates must be >= 1, got {max_predicates}")
        if max_parameterized < 0:
            raise ValueError(f"max_parameterized must be >= 0, got {max_parameterized}")
        self.library = library
        self.initial_boxes = {
            name: Interval(lo - BOX_MARGIN, hi + BOX_MARGIN)
            for name, (lo, hi) in score_ranges.items()
        }
        self.max_predicates = max_predicates
        self.max_parameterized = max_parameterized
        self.sketch = sketch
        self._caches = weakref.WeakKeyDictionary()

    @classmethod
    def from_dataset(cls, dataset, **kwargs) -> "QuivrSpace":
        library = PredicateLibrary(dataset.num_features)
        return cls(library, library.score_ranges(dataset), **kwargs)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_caches"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._caches = weakref.WeakKeyDictionary()

    def _scores(self, dataset) -> _ScoreCache:
        if dataset not in self._caches:
            X, _ = dataset.padded()
            self._caches[dataset] = _ScoreCache(X)
        return self._caches[dataset]

    def root(self):
        if self.sketch is None:
            return Hole()
        return self.parse(self.sketch)

    def has_structural_holes(self, node) -> bool:
        if isinstance(node, Hole):
            return True
        if isinstance(node, (Pred0, PredC)):
            return False
        if isinstance(node, Seq):
            return self.has_structural_holes(node.first) or self.has_structural_holes(
                node.second
            )
        return self.has_structural_holes(node.left) or self.has_structural_holes(
            node.right
        )

    def productions(self) -> List[Query]:
        """Every way to fill a hole, before the predicate bounds apply."""
        return (
            [Pred0(name) for name in self.library.boolean]
            + [
                PredC(name, ConstantHole(self.initial_boxes[name]))
                for name in self.library.parameterized
            ]
            + [Seq(Hole(), Hole()), And(Hole(), Hole())]
        )

    def expand_structural_hole(self, node) -> List:
        predicates, parameterized = count_predicates(node)

        def admissible(production) -> bool:
            p, c = count_predicates(production)
            # Filling replaces the hole, which counted as one predicate.
            return (
                predicates - 1 + p <= self.max_predicates
                and parameterized + c <= self.max_parameterized
            )

        candidates = [p for p in self.productions() if admissible(p)]
        return _expand_first_hole(node, candidates) or []

    def constant_holes(self, node) -> List[ConstantHole]:
        holes = []

        def collect(c):
            if isinstance(c, ConstantHole):
                holes.append(c)
            return c

        _map_thresholds(node, collect)
        return holes

    def hole_keys(self, node) -> List[str]:
        keys = []

        def collect(q):
            if isinstance(q, PredC) and isinstance(q.threshold, ConstantHole):
                keys.append(q.name)

        _walk(node, collect)
        return keys

    def fill_constant_holes(self, node, values: Sequence[Constant]):
        values = iter(values)
        return _map_thresholds(
            node, lambda c: next(values) if isinstance(c, ConstantHole) else c
        )

    def abstract_predictions(self, node, dataset) -> Interval:
        X, _ = dataset.padded()
        table = abstract_segment_table(node, self._scores(dataset), _upper_triangle(X.shape[1]))
        lengths = dataset.lengths()
        return Interval(_whole(table.lo, lengths), _whole(table.hi, lengths))

    def predict(self, program, dataset) -> np.ndarray:
        X, _ = dataset.padded()
        table = segment_table(program, self._scores(dataset), _upper_triangle(X.shape[1]))
        return _whole(table, dataset.lengths())

    def to_text(self, node) -> str:
        return to_text(node)

    def parse(self, text: str):
        return parse_query(text, self.library)


def _map_thresholds(q: Query, replace) -> Query:
    if isinstance(q, (Hole, Pred0)):
        return q
    if isinstance(q, PredC):
        return PredC(q.name, replace(q.threshold))
    if isinstance(q, Seq):
        first = _map_thresholds(q.first, replace)
        return Seq(first, _map_thresholds(q.second, replace))
    left = _map_thresholds(q.left, replace)
    return And(left, _map_thresholds(q.right, replace))


def _walk(q: Query, visit):
    """Calls `visit` on every subquery in pre-order."""
    visit(q)
    if isinstance(q, Seq):
        _walk(q.first, visit)
        _walk(q.second, visit)
    elif isinstance(q, And):
        _walk(q.left, visit)
        _walk(q.right, visit)


def _expand_first_hole(q: Query, candidates: List[Query]) -> Optional[List[Query]]:
    if isinstance(q, Hole):
        return list(candidates)
    if isinstance(q, (Pred0, PredC)):
        return None
    if isinstance(q, Seq):
        filled = _expand_first_hole(q.first, candidates)
        if filled is not None:
            return [Seq(f, q.second) for f in filled]
        filled = _expand_first_hole(q.second, candidates)
        return None if filled is None else [Seq(q.first, s) for s in filled]
    filled = _expand_first_hole(q.left, candidates)
    if filled is not None:
        return [And(f, q.right) for f in filled]
    filled = _expand_first_hole(q.right, candidates)
    return None if filled is None else [And(q.left, r) for r in filled]
