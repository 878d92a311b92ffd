"""
A trajectory-labeling DSL of folding combinators.

Programs map a featurized trajectory (a sequence of feature vectors) to one
real value per step; a step is labeled positive when its value is `>= 0`.

    vv ::= polynomial over z_i, z_f and ind(vv)      (sum-of-products form)
    lv ::= fold(vv) | ite(lv, lv, lv)
    ll ::= map(vv) | mapprefix(lv) | ite(lv, ll, ll)

`z_i` is the i-th feature of the current step and `z_f` the running state of
the enclosing fold (0 outside of a fold). Every monomial carries a
coefficient, which is either a number or a constant hole annotated with an
interval.

Datasets are evaluated in batch: trajectories are padded into a
`(batch, time, features)` array with a validity mask, and folds are masked
scans over time. Every list-to-real expression is evaluated as its scan,
i.e. its value on each prefix of the trajectory.
"""
import dataclasses
import itertools
import logging
from typing import Callable, Final, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from opt_synth.api.interval import (
    NEG_INF,
    POS_INF,
    Interval,
    abstract_singleton,
    bool_not,
    interval_add,
    interval_indicator,
    interval_mul,
    threshold_ge,
)
from opt_synth.api.space import Constant, ConstantHole, ProgramSpace, format_constant
from opt_synth.dsls.syntax import Parser


logger = logging.getLogger(__name__)


DEFAULT_MAX_COST: Final[int] = 4
COEFFICIENT_BOX: Final[Interval] = Interval(-1.0, 1.0)

_ZERO = abstract_singleton(0.0)


# Syntax


@dataclasses.dataclass(frozen=True)
class Hole:
    """A structural hole standing for any `kind` expression ("vv", "lv", "ll")."""

    kind: str


@dataclasses.dataclass(frozen=True)
class Feature:
    index: int


@dataclasses.dataclass(frozen=True)
class FoldState:
    pass


@dataclasses.dataclass(frozen=True)
class Indicator:
    body: "VVExpr"


Atom = Union[Feature, FoldState, Indicator]


@dataclasses.dataclass(frozen=True)
class Monomial:
    coefficient: Constant
    atoms: Tuple[Atom, ...] = ()


@dataclasses.dataclass(frozen=True)
class Polynomial:
    monomials: Tuple[Monomial, ...]

    def __post_init__(self):
        if not self.monomials:
            raise ValueError("A polynomial needs at least one monomial.")


@dataclasses.dataclass(frozen=True)
class Fold:
    body: "VVExpr"


@dataclasses.dataclass(frozen=True)
class Map:
    body: "VVExpr"


@dataclasses.dataclass(frozen=True)
class MapPrefix:
    body: "LVExpr"


@dataclasses.dataclass(frozen=True)
class Ite:
    """`ite(cond, then, orelse)` at list-to-real or list-to-list level."""

    cond: "LVExpr"
    then: Union["LVExpr", "LLExpr"]
    orelse: Union["LVExpr", "LLExpr"]


VVExpr = Union[Polynomial, Hole]
LVExpr = Union[Fold, Ite, Hole]
LLExpr = Union[Map, MapPrefix, Ite, Hole]

# Cost of the cheapest completion of a structural hole.
HOLE_COST = {"ll": 2, "lv": 1, "vv": 1}


def to_text(e) -> str:
    """Pretty-prints an expression, e.g. `map(-1*z0 + [0,100])`."""
    if isinstance(e, Hole):
        return "??"
    if isinstance(e, Feature):
        return f"z{e.index}"
    if isinstance(e, FoldState):
        return "zf"
    if isinstance(e, Indicator):
        return f"ind({to_text(e.body)})"
    if isinstance(e, Monomial):
        return "*".join([format_constant(e.coefficient)] + [to_text(a) for a in e.atoms])
    if isinstance(e, Polynomial):
        return " + ".join(to_text(m) for m in e.monomials)
    if isinstance(e, Fold):
        return f"fold({to_text(e.body)})"
    if isinstance(e, Map):
        return f"map({to_text(e.body)})"
    if isinstance(e, MapPrefix):
        return f"mapprefix({to_text(e.body)})"
    if isinstance(e, Ite):
        return f"ite({to_text(e.cond)}, {to_text(e.then)}, {to_text(e.orelse)})"
    raise TypeError(f"Not a program: {e!r}")


class _NearParser(Parser):
    def parse(self, kind: str = "ll"):
        e = self._expr(kind)
        self._expect_end()
        return e

    def _expr(self, kind: str):
        if self._check("??"):
            self._advance()
            return Hole(kind)
        if kind == "vv":
            return self._polynomial()
        name = self.current.text if self.current.kind == "name" else None
        if kind == "ll" and name == "map":
            return Map(self._call_body("vv"))
        if kind == "ll" and name == "mapprefix":
            return MapPrefix(self._call_body("lv"))
        if kind == "lv" and name == "fold":
            return Fold(self._call_body("vv"))
        if name == "ite":
            self._advance()
            self._consume("(")
            cond = self._expr("lv")
            self._consume(",")
            then = self._expr(kind)
            self._consume(",")
            orelse = self._expr(kind)
            self._consume(")")
            return Ite(cond, then, orelse)
        self._error(f"expected a {kind} expression")

    def _call_body(self, kind: str):
        self._advance()
        self._consume("(")
        body = self._expr(kind)
        self._consume(")")
        return body

    def _polynomial(self) -> Polynomial:
        monomials = [self._monomial()]
        # A signed number directly after a monomial starts the next one: `z0-1`.
        while self._check("+") or (
            self.current.kind == "number" and self.current.text[0] in "+-"
        ):
            if self._check("+"):
                self._advance()
            monomials.append(self._monomial())
        return Polynomial(tuple(monomials))

    def _monomial(self) -> Monomial:
        if self.current.kind == "number" or self._at_box():
            coefficient = self._constant()
            atoms = []
        else:
            coefficient = 1.0
            atoms = [self._atom()]
        while self._check("*"):
            self._advance()
            atoms.append(self._atom())
        return Monomial(coefficient, tuple(atoms))

    def _atom(self) -> Atom:
        token = self.current
        if token.kind == "name" and token.text == "zf":
            self._advance()
            return FoldState()
        if token.kind == "name" and token.text == "ind":
            return Indicator(self._call_body("vv"))
        if token.kind == "name" and token.text[0] == "z" and token.text[1:].isdigit():
            self._advance()
            return Feature(int(token.text[1:]))
        self._error("expected an atom (`z<i>`, `zf` or `ind(...)`)")


def parse_program(text: str, kind: str = "ll"):
    """Parses the text form produced by `to_text`."""
    return _NearParser(text).parse(kind)


# Structure


def near_cost(e) -> int:
    """Structural cost. `map`, `mapprefix` and `ite` cost 1, `fold` costs 0,
    every monomial and every atom cost 1, and an indicator atom additionally
    costs its body. Structural holes count as their cheapest completion, so
    the cost of a partial program bounds the cost of all its completions."""
    if isinstance(e, Hole):
        return HOLE_COST[e.kind]
    if isinstance(e, (Feature, FoldState)):
        return 1
    if isinstance(e, Indicator):
        return 1 + near_cost(e.body)
    if isinstance(e, Monomial):
        return 1 + sum(near_cost(a) for a in e.atoms)
    if isinstance(e, Polynomial):
        return sum(near_cost(m) for m in e.monomials)
    if isinstance(e, Fold):
        return near_cost(e.body)
    if isinstance(e, (Map, MapPrefix)):
        return 1 + near_cost(e.body)
    if isinstance(e, Ite):
        return 1 + near_cost(e.cond) + near_cost(e.then) + near_cost(e.orelse)
    raise TypeError(f"Not a program: {e!r}")


def _map_constants(e, replace: Callable[[Constant], Constant]):
    """Rebuilds `e` with every coefficient passed through `replace`, visiting
    coefficients in pre-order."""
    if isinstance(e, (Hole, Feature, FoldState)):
        return e
    if isinstance(e, Monomial):
        coefficient = replace(e.coefficient)
        return Monomial(coefficient, tuple(_map_constants(a, replace) for a in e.atoms))
    if isinstance(e, Polynomial):
        return Polynomial(tuple(_map_constants(m, replace) for m in e.monomials))
    if isinstance(e, (Indicator, Fold, Map, MapPrefix)):
        return type(e)(_map_constants(e.body, replace))
    if isinstance(e, Ite):
        cond = _map_constants(e.cond, replace)
        then = _map_constants(e.then, replace)
        return Ite(cond, then, _map_constants(e.orelse, replace))
    raise TypeError(f"Not a program: {e!r}")


def _has_hole(e) -> bool:
    if isinstance(e, Hole):
        return True
    if isinstance(e, (Feature, FoldState)):
        return False
    if isinstance(e, Monomial):
        return any(_has_hole(a) for a in e.atoms)
    if isinstance(e, Polynomial):
        return any(_has_hole(m) for m in e.monomials)
    if isinstance(e, (Indicator, Fold, Map, MapPrefix)):
        return _has_hole(e.body)
    if isinstance(e, Ite):
        return _has_hole(e.cond) or _has_hole(e.then) or _has_hole(e.orelse)
    raise TypeError(f"Not a program: {e!r}")


def _replace_in_tuple(items: tuple, i: int, item) -> tuple:
    return items[:i] + (item,) + items[i + 1 :]


def _expand_first_hole(e, fill: Callable[[Hole, bool], List], in_fold: bool = False):
    """Replaces the first structural hole in pre-order with each expression
    returned by `fill(hole, in_fold)`. Returns None when `e` has no hole."""
    if isinstance(e, Hole):
        return fill(e, in_fold)
    if isinstance(e, (Feature, FoldState)):
        return None
    if isinstance(e, Indicator):
        filled = _expand_first_hole(e.body, fill, in_fold)
        return None if filled is None else [Indicator(b) for b in filled]
    if isinstance(e, Monomial):
        for i, atom in enumerate(e.atoms):
            filled = _expand_first_hole(atom, fill, in_fold)
            if filled is not None:
                return [
                    Monomial(e.coefficient, _replace_in_tuple(e.atoms, i, a))
                    for a in filled
                ]
        return None
    if isinstance(e, Polynomial):
        for i, monomial in enumerate(e.monomials):
            filled = _expand_first_hole(monomial, fill, in_fold)
            if filled is not None:
                return [
                    Polynomial(_replace_in_tuple(e.monomials, i, m)) for m in filled
                ]
        return None
    if isinstance(e, Fold):
        filled = _expand_first_hole(e.body, fill, True)
        return None if filled is None else [Fold(b) for b in filled]
    if isinstance(e, (Map, MapPrefix)):
        filled = _expand_first_hole(e.body, fill, False)
        return None if filled is None else [type(e)(b) for b in filled]
    if isinstance(e, Ite):
        filled = _expand_first_hole(e.cond, fill, in_fold)
        if filled is not None:
            return [Ite(c, e.then, e.orelse) for c in filled]
        filled = _expand_first_hole(e.then, fill, in_fold)
        if filled is not None:
            return [Ite(e.cond, t, e.orelse) for t in filled]
        filled = _expand_first_hole(e.orelse, fill, in_fold)
        if filled is not None:
            return [Ite(e.cond, e.then, o) for o in filled]
        return None
    raise TypeError(f"Not a program: {e!r}")


def _atom_key(atom: Atom) -> tuple:
    # Features first, then the fold state, then indicators.
    if isinstance(atom, Feature):
        return (0, atom.index, "")
    if isinstance(atom, FoldState):
        return (1, 0, "")
    return (2, 0, to_text(atom))


def enumerate_polynomials(
    num_features: int, budget: int, in_fold: bool = False
) -> Iterator[Polynomial]:
    """All sum-of-products shapes of cost at most `budget`.

    Atoms within a monomial and monomials within a polynomial are taken as
    multisets in canonical order, so commutative variants appear once. A
    monomial without indicators is never repeated (its copies would merge
    into one coefficient). Indicator bodies are left as structural holes and
    every coefficient is a fresh hole annotated with [-1, 1].
    """
    alphabet: List[Atom] = [Feature(i) for i in range(num_features)]
    if in_fold:
        alphabet.append(FoldState())
    alphabet.append(Indicator(Hole("vv")))
    alphabet.sort(key=_atom_key)

    shapes = []
    for num_atoms in range(budget):
        for combo in itertools.combinations_with_replacement(alphabet, num_atoms):
            cost = 1 + sum(near_cost(a) for a in combo)
            if cost <= budget:
                repeatable = any(isinstance(a, Indicator) for a in combo)
                shapes.append((cost, combo, repeatable))

    def combine(start: int, remaining: int) -> Iterator[Tuple[int, ...]]:
        for i in range(start, len(shapes)):
            cost, _, repeatable = shapes[i]
            if cost > remaining:
                continue
            yield (i,)
            for rest in combine(i if repeatable else i + 1, remaining - cost):
                yield (i,) + rest

    for picks in combine(0, budget):
        yield Polynomial(
            tuple(Monomial(ConstantHole(COEFFICIENT_BOX), shapes[i][1]) for i in picks)
        )


# Concrete semantics


def _check_feature(V: np.ndarray, index: int):
    if not 0 <= index < V.shape[-1]:
        raise ValueError(
            f"Feature index z{index} out of range for {V.shape[-1]} features"
        )


def _concrete_coefficient(c: Constant) -> float:
    if isinstance(c, ConstantHole):
        raise ValueError(f"Cannot evaluate unresolved constant {c}")
    return c


def _eval_vv(e, V: np.ndarray, S: np.ndarray) -> np.ndarray:
    if isinstance(e, Hole):
        raise ValueError("Cannot evaluate a structural hole")
    total = None
    for monomial in e.monomials:
        value = _concrete_coefficient(monomial.coefficient)
        for atom in monomial.atoms:
            if isinstance(atom, Feature):
                _check_feature(V, atom.index)
                value = value * V[..., atom.index]
            elif isinstance(atom, FoldState):
                value = value * S
            else:
                value = value * (_eval_vv(atom.body, V, S) >= 0).astype(float)
        total = value if total is None else total + value
    return np.broadcast_to(np.asarray(total, dtype=float), V.shape[:-1])


def _last_valid(scan: np.ndarray, mask: np.ndarray) -> np.ndarray:
    lengths = mask.sum(axis=1)
    return scan[np.arange(scan.shape[0]), np.maximum(lengths - 1, 0)]


def _eval_lv_scan(e, X: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Value of `e` on every prefix of every trajectory, shape (batch, time)."""
    if isinstance(e, Fold):
        batch, time = mask.shape
        state = np.zeros(batch)
        out = np.zeros((batch, time))
        for t in range(time):
            state = np.where(mask[:, t], _eval_vv(e.body, X[:, t], state), state)
            out[:, t] = state
        return out
    if isinstance(e, Ite):
        cond = _eval_lv_scan(e.cond, X, mask)
        then = _eval_lv_scan(e.then, X, mask)
        orelse = _eval_lv_scan(e.orelse, X, mask)
        return np.where(cond >= 0, then, orelse)
    raise ValueError(f"Cannot evaluate `{to_text(e)}` as a list-to-real expression")


def _eval_ll(e, X: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if isinstance(e, Map):
        return _eval_vv(e.body, X, np.zeros(mask.shape))
    if isinstance(e, MapPrefix):
        return _eval_lv_scan(e.body, X, mask)
    if isinstance(e, Ite):
        cond = _last_valid(_eval_lv_scan(e.cond, X, mask), mask)[:, None]
        then = _eval_ll(e.then, X, mask)
        orelse = _eval_ll(e.orelse, X, mask)
        return np.where(cond >= 0, then, orelse)
    raise ValueError(f"Cannot evaluate `{to_text(e)}` as a list-to-list expression")


def _as_batch(trajectory) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(trajectory, dtype=float)
    if X.size == 0:
        X = X.reshape(0, 0)
    if X.ndim != 2:
        raise ValueError(f"A trajectory must be a (time, features) array, got {X.shape}")
    return X[None], np.ones((1, X.shape[0]), dtype=bool)


def eval_vv(e: VVExpr, v, s: float = 0.0) -> float:
    """Evaluates a polynomial on one feature vector `v` and fold state `s`.

    Example:
        eval_vv(parse_program("-1*z0 + 66", "vv"), [65]) -> 1.0
    """
    return float(_eval_vv(e, np.asarray(v, dtype=float), np.asarray(s, dtype=float)))


def eval_lv(e: LVExpr, trajectory) -> float:
    """Evaluates a list-to-real expression; folds start from 0."""
    X, mask = _as_batch(trajectory)
    if X.shape[1] == 0:
        return 0.0
    return float(_eval_lv_scan(e, X, mask)[0, -1])


def eval_ll(e: LLExpr, trajectory) -> np.ndarray:
    """Evaluates a list-to-list expression; the output has one value per step."""
    X, mask = _as_batch(trajectory)
    return _eval_ll(e, X, mask)[0]


def threshold_labels(r) -> np.ndarray:
    """Per-step labels: positive iff the value is `>= 0`."""
    return np.asarray(r, dtype=float) >= 0


# Abstract semantics


def _top(shape) -> Interval:
    return Interval(np.full(shape, NEG_INF), np.full(shape, POS_INF))


def _parts(iv: Interval) -> tuple:
    return iv.lo, iv.hi, iv.lo_open, iv.hi_open


def _broadcast(iv: Interval, shape) -> Interval:
    return Interval(
        np.broadcast_to(np.asarray(iv.lo, dtype=float), shape),
        np.broadcast_to(np.asarray(iv.hi, dtype=float), shape),
        np.broadcast_to(np.asarray(iv.lo_open, dtype=bool), shape),
        np.broadcast_to(np.asarray(iv.hi_open, dtype=bool), shape),
    )


def _abstract_coefficient(c: Constant) -> Interval:
    if isinstance(c, ConstantHole):
        return c.box
    return abstract_singleton(float(c))


def _abs_eval_vv(e, V: np.ndarray, S: Interval) -> Interval:
    shape = V.shape[:-1]
    if isinstance(e, Hole):
        return _top(shape)
    total = None
    for monomial in e.monomials:
        value = _abstract_coefficient(monomial.coefficient)
        for atom in monomial.atoms:
            if isinstance(atom, Feature):
                _check_feature(V, atom.index)
                value = interval_mul(value, abstract_singleton(V[..., atom.index]))
            elif isinstance(atom, FoldState):
                value = interval_mul(value, S)
            else:
                test = threshold_ge(_abs_eval_vv(atom.body, V, S), _ZERO)
                value = interval_mul(value, interval_indicator(test))
        total = value if total is None else interval_add(total, value)
    return _broadcast(total, shape)


def abstract_ite(cond: Interval, then: Interval, orelse: Interval) -> Interval:
    """`ite(c, a, b)` encoded as `ind(c >= 0) * a + ind(c < 0) * b`."""
    test = threshold_ge(cond, _ZERO)
    return interval_add(
        interval_mul(interval_indicator(test), then),
        interval_mul(interval_indicator(bool_not(test)), orelse),
    )


def _abs_eval_lv_scan(e, X: np.ndarray, mask: np.ndarray) -> Interval:
    if isinstance(e, Hole):
        return _top(mask.shape)
    if isinstance(e, Fold):
        batch, time = mask.shape
        # lo, hi, lo_open, hi_open
        state = [np.zeros(batch)] * 2 + [np.zeros(batch, bool)] * 2
        out = [np.zeros((batch, time)) for _ in range(2)]
        out += [np.zeros((batch, time), bool) for _ in range(2)]
        for t in range(time):
            step = _abs_eval_vv(e.body, X[:, t], Interval(*state))
            for i, value in enumerate(_parts(step)):
                state[i] = np.where(mask[:, t], value, state[i])
                out[i][:, t] = state[i]
        return Interval(*out)
    if isinstance(e, Ite):
        return abstract_ite(
            _abs_eval_lv_scan(e.cond, X, mask),
            _abs_eval_lv_scan(e.then, X, mask),
            _abs_eval_lv_scan(e.orelse, X, mask),
        )
    raise ValueError(f"Cannot evaluate `{to_text(e)}` as a list-to-real expression")


def _abs_eval_ll(e, X: np.ndarray, mask: np.ndarray) -> Interval:
    if isinstance(e, Hole):
        return _top(mask.shape)
    if isinstance(e, Map):
        zeros = np.zeros(mask.shape)
        return _abs_eval_vv(e.body, X, Interval(zeros, zeros))
    if isinstance(e, MapPrefix):
        return _abs_eval_lv_scan(e.body, X, mask)
    if isinstance(e, Ite):
        cond = _abs_eval_lv_scan(e.cond, X, mask)
        cond = Interval(
            *(
                _last_valid(np.broadcast_to(part, mask.shape), mask)[:, None]
                for part in _parts(cond)
            )
        )
        result = abstract_ite(
            cond, _abs_eval_ll(e.then, X, mask), _abs_eval_ll(e.orelse, X, mask)
        )
        return _broadcast(result, mask.shape)
    raise ValueError(f"Cannot evaluate `{to_text(e)}` as a list-to-list expression")


def abs_eval_vv(e: VVExpr, v, s: Optional[Interval] = None) -> Interval:
    V = np.asarray(v, dtype=float)
    s = _ZERO if s is None else s
    result = _abs_eval_vv(e, V, s)
    return Interval(float(result.lo), float(result.hi))


def abs_eval_lv(e: LVExpr, trajectory) -> Interval:
    X, mask = _as_batch(trajectory)
    if X.shape[1] == 0:
        return _ZERO
    result = _abs_eval_lv_scan(e, X, mask)
    return Interval(float(result.lo[0, -1]), float(result.hi[0, -1]))


def abs_eval_ll(e: LLExpr, trajectory) -> Interval:
    """Per-step intervals containing the output of every instantiation of the
    constant holes of `e`."""
    X, mask = _as_batch(trajectory)
    result = _abs_eval_ll(e, X, mask)
    return Interval(result.lo[0], result.hi[0])


# Search space


class NearSpace(ProgramSpace):
    """Labeling programs of bounded structural cost.

    Args:
        num_features (int):
            Dimension of the feature vectors.
        max_cost (int, optional, defaults to 4):
            Bound on the structural cost of every program in the space.
        sketch (str, optional, defaults to None):
            Text of a partial program to search from instead of `??`.
    """

    NAME = "near"

    def __init__(
        self,
        num_features: int,
        max_cost: int = DEFAULT_MAX_COST,
        sketch: Optional[str] = None,
    ):
        if num_features < 1:
            raise ValueError(f"num_features must be >= 1, got {num_features}")
        if max_cost < 1:
            raise ValueError(f"max_cost must be >= 1, got {max_cost}")
        self.num_features = num_features
        self.max_cost = max_cost
        self.sketch = sketch
        self._polynomials = {}

    def root(self):
        if self.sketch is None:
            return Hole("ll")
        return self.parse(self.sketch)

    def has_structural_holes(self, node) -> bool:
        return _has_hole(node)

    def _fill(self, base_cost: int, hole: Hole, in_fold: bool) -> List:
        budget = self.max_cost - base_cost + near_cost(hole)
        if hole.kind == "ll":
            candidates = [
                Map(Hole("vv")),
                MapPrefix(Hole("lv")),
                Ite(Hole("lv"), Hole("ll"), Hole("ll")),
            ]
        elif hole.kind == "lv":
            candidates = [Fold(Hole("vv")), Ite(Hole("lv"), Hole("lv"), Hole("lv"))]
        else:
            key = (budget, in_fold)
            if key not in self._polynomials:
                self._polynomials[key] = list(
                    enumerate_polynomials(self.num_features, budget, in_fold)
                )
            candidates = self._polynomials[key]
        return [c for c in candidates if near_cost(c) <= budget]

    def expand_structural_hole(self, node) -> List:
        base_cost = near_cost(node)
        filled = _expand_first_hole(
            node, lambda hole, in_fold: self._fill(base_cost, hole, in_fold)
        )
        return [] if filled is None else filled

    def constant_holes(self, node) -> List[ConstantHole]:
        holes = []

        def collect(c):
            if isinstance(c, ConstantHole):
                holes.append(c)
            return c

        _map_constants(node, collect)
        return holes

    def fill_constant_holes(self, node, values: Sequence[Constant]):
        values = iter(values)

        def replace(c):
            if isinstance(c, ConstantHole):
                return next(values)
            return c

        return _map_constants(node, replace)

    def abstract_predictions(self, node, dataset) -> Interval:
        X, mask = dataset.padded()
        labels = threshold_ge(_abs_eval_ll(node, X, mask), _ZERO)
        return Interval(np.asarray(labels.lo)[mask], np.asarray(labels.hi)[mask])

    def predict(self, program, dataset) -> np.ndarray:
        X, mask = dataset.padded()
        return threshold_labels(_eval_ll(program, X, mask))[mask]

    def to_text(self, node) -> str:
        return to_text(node)

    def parse(self, text: str):
        return parse_program(text, "ll")
