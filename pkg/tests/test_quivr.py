import math
import pickle

import numpy as np
import pytest

from opt_synth.api.interval import Interval, contains
from opt_synth.api.space import ConstantHole
from opt_synth.api.utils import DEFAULT_SEED
from opt_synth.datasets.io import Dataset, Example
from opt_synth.dsls.quivr import (
    BOX_MARGIN,
    And,
    Hole,
    Pred0,
    PredC,
    PredicateLibrary,
    QuivrSpace,
    Seq,
    abs_eval_query,
    count_predicates,
    decision_thresholds,
    eval_query,
    parse_query,
    predicate_score,
    segment_scores,
    to_text,
)


LIBRARY = PredicateLibrary(2)


def _query(text, library=LIBRARY):
    return parse_query(text, library)


def _dataset(trajectories, labels=None):
    labels = [False] * len(trajectories) if labels is None else labels
    return Dataset(
        tuple(
            Example(np.asarray(x, dtype=float), np.asarray(y))
            for x, y in zip(trajectories, labels)
        ),
        "query",
    )


def _space(**kwargs):
    ranges = {name: (0.0, 1.0) for name in LIBRARY.parameterized}
    return QuivrSpace(LIBRARY, ranges, **kwargs)


def _naive_match(q, segment):
    """Direct recursion over split points."""
    if isinstance(q, Pred0):
        return True
    if isinstance(q, PredC):
        return predicate_score(q.name, segment) >= q.threshold
    if isinstance(q, And):
        return _naive_match(q.left, segment) and _naive_match(q.right, segment)
    return any(
        _naive_match(q.first, segment[:k]) and _naive_match(q.second, segment[k:])
        for k in range(len(segment) + 1)
    )


def _random_query(rng, depth, boxes=False):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            return Pred0("true")
        name = LIBRARY.parameterized[rng.integers(len(LIBRARY.parameterized))]
        if boxes:
            lo, hi = sorted(rng.uniform(-0.1, 1.1, size=2))
            return PredC(name, ConstantHole(Interval(float(lo), float(hi))))
        return PredC(name, float(rng.uniform(-0.1, 1.1)))
    op = Seq if rng.random() < 0.5 else And
    return op(_random_query(rng, depth - 1, boxes), _random_query(rng, depth - 1, boxes))


def test_predicate_scores():
    assert predicate_score("avg0", [[0.2], [0.9]]) == pytest.approx(0.55)
    assert predicate_score("max0", [[0.2], [0.9]]) == 0.9
    assert predicate_score("min1", [[0.2, 0.4], [0.9, -0.1]]) == -0.1


@pytest.mark.parametrize("name,expected", [("max0", -math.inf), ("avg0", -math.inf), ("min0", math.inf)])
def test_empty_segment_scores(name, expected):
    assert predicate_score(name, np.zeros((0, 1))) == expected


def test_segment_scores_table():
    X = np.array([[[1.0], [3.0], [2.0]]])
    scores = segment_scores("max0", X)
    assert scores.shape == (1, 4, 4)
    assert scores[0, 0, 3] == 3.0
    assert scores[0, 2, 3] == 2.0
    assert scores[0, 1, 1] == -math.inf
    assert scores[0, 2, 1] == -math.inf
    avg = segment_scores("avg0", X)
    assert avg[0, 0, 2] == 2.0
    assert avg[0, 1, 3] == 2.5
    with pytest.raises(KeyError):
        segment_scores("max1", X)
    with pytest.raises(KeyError):
        segment_scores("median0", X)


def test_sequencing_order_matters():
    trajectory = [[0.2, 0.0], [0.9, 0.0]]
    assert eval_query(_query("(max0 >= 0.1) ; (max0 >= 0.8)"), trajectory)
    assert not eval_query(_query("(max0 >= 0.8) ; (max0 >= 0.1)"), trajectory)
    assert eval_query(_query("(max0 >= 0.8) & (max0 >= 0.1)"), trajectory)
    assert eval_query(_query("true ; true"), trajectory)


def test_empty_trajectory():
    empty = np.zeros((0, 1))
    library = PredicateLibrary(1)
    assert eval_query(_query("true", library), empty)
    assert eval_query(_query("min0 >= 5", library), empty)
    assert not eval_query(_query("max0 >= -5", library), empty)
    # Either side of a sequence may be empty.
    assert eval_query(_query("(max0 >= 0.5) ; (min0 >= 2)", library), [[0.7]])


def test_segment_table_matches_direct_recursion():
    rng = np.random.default_rng(DEFAULT_SEED)
    checked = 0
    while checked < 150:
        q = _random_query(rng, depth=3)
        if count_predicates(q)[0] > 3:
            continue
        checked += 1
        trajectory = rng.uniform(0.0, 1.0, size=(rng.integers(1, 9), 2))
        n = len(trajectory)
        for i in range(n + 1):
            for j in range(i, n + 1):
                segment = trajectory[i:j]
                assert eval_query(q, segment) == _naive_match(q, segment), to_text(q)


@pytest.mark.parametrize("length", [7, 8])
def test_segment_table_matches_direct_recursion_on_long_trajectories(length):
    rng = np.random.default_rng(DEFAULT_SEED + length)
    queries = [
        _query("(max0 >= 0.5) ; (min1 >= 0.3) ; (avg0 >= 0.4)"),
        _query("((max0 >= 0.7) & (min0 >= 0.2)) ; (max1 >= 0.6)"),
        _query("(avg1 >= 0.5) ; true ; (max0 >= 0.9)"),
    ]
    for q in queries:
        assert count_predicates(q)[0] == 3
        for _ in range(10):
            trajectory = rng.uniform(0.0, 1.0, size=(length, 2))
            assert eval_query(q, trajectory) == _naive_match(q, trajectory), to_text(q)


def test_abstract_evaluation_with_boxes():
    trajectory = [[0.2, 0.0], [0.9, 0.0]]
    box = _query("(max0 >= [0,0.05]) ; (max0 >= [0,0.05])")
    assert abs_eval_query(box, trajectory) == Interval(True, True)
    wide = _query("(max0 >= 0.1) ; (max0 >= [0.5,1])")
    assert abs_eval_query(wide, trajectory) == Interval(False, True)
    assert abs_eval_query(_query("max0 >= [0.95,1]"), trajectory) == Interval(False, False)
    assert abs_eval_query(_query("??"), trajectory) == Interval(False, True)


def test_abstract_evaluation_contains_every_instantiation():
    rng = np.random.default_rng(DEFAULT_SEED)
    space = _space(max_predicates=20, max_parameterized=20)
    for _ in range(100):
        node = _random_query(rng, depth=3, boxes=True)
        holes = space.constant_holes(node)
        trajectory = rng.uniform(0.0, 1.0, size=(rng.integers(1, 6), 2))
        abstract = abs_eval_query(node, trajectory)
        for _ in range(10):
            values = [float(rng.uniform(h.box.lo, h.box.hi)) for h in holes]
            program = space.instantiate(node, values)
            assert contains(abstract, eval_query(program, trajectory))


def _hole_count(q):
    return to_text(q).count("??")


def test_structural_holes_contain_every_completion():
    rng = np.random.default_rng(DEFAULT_SEED)
    space = _space(max_predicates=20, max_parameterized=20)
    for _ in range(50):
        node = _random_query(rng, depth=2, boxes=True)
        node = Seq(node, Hole()) if rng.random() < 0.5 else And(Hole(), node)
        trajectory = rng.uniform(0.0, 1.0, size=(rng.integers(1, 5), 2))
        abstract = abs_eval_query(node, trajectory)
        for _ in range(5):
            completion = node
            while space.has_structural_holes(completion):
                leaves = [
                    c
                    for c in space.expand_structural_hole(completion)
                    if _hole_count(c) < _hole_count(completion)
                ]
                completion = leaves[rng.integers(len(leaves))]
            values = [float(rng.uniform(h.box.lo, h.box.hi)) for h in space.constant_holes(completion)]
            program = space.instantiate(completion, values)
            assert contains(abstract, eval_query(program, trajectory))


def test_splitting_a_box_never_widens_the_result():
    rng = np.random.default_rng(DEFAULT_SEED)
    space = _space(max_predicates=20, max_parameterized=20)
    for _ in range(100):
        node = _random_query(rng, depth=3, boxes=True)
        if not space.constant_holes(node):
            continue
        trajectory = rng.uniform(0.0, 1.0, size=(rng.integers(1, 6), 2))
        parent = abs_eval_query(node, trajectory)
        for child in space.children(node):
            assert parent.subsumes(abs_eval_query(child, trajectory))


def test_to_text_round_trips():
    for text in [
        "(max0 >= 0.1) ; (max0 >= 0.8)",
        "((max0 >= [0,1]) ; true) & ??",
        "(avg1 >= -0.5) & ((min0 >= 0.25) ; ??)",
    ]:
        q = _query(text)
        assert to_text(q) == text
        assert _query(to_text(q)) == q


def test_sequencing_and_conjunction_associate_left():
    q = _query("true ; (max0 >= 1) & ??")
    assert q == And(Seq(Pred0("true"), PredC("max0", 1.0)), Hole())


@pytest.mark.parametrize("text", ["foo", "true >= 0.5", "max5 >= 1", "(max0 >= 1", "max0 >= [1,0]", ";"])
def test_parser_rejects_malformed_queries(text):
    with pytest.raises(ValueError):
        _query(text)


def test_count_predicates():
    assert count_predicates(_query("((max0 >= 0.1) ; true) & ??")) == (3, 1)
    assert count_predicates(Hole()) == (1, 0)


def test_root_children():
    space = QuivrSpace.from_dataset(_dataset([[[0.2], [0.9]]]))
    children = [to_text(c) for c in space.children(space.root())]
    assert len(children) == 6
    assert children[0] == "true"
    assert [c.split(" >= ")[0] for c in children[1:4]] == ["(max0", "(min0", "(avg0"]
    assert children[4:] == ["?? ; ??", "?? & ??"]
    box = space.constant_holes(space.expand_structural_hole(space.root())[1])[0].box
    assert box.lo == pytest.approx(0.2 - BOX_MARGIN)
    assert box.hi == pytest.approx(0.9 + BOX_MARGIN)


def test_children_respect_predicate_bounds():
    assert len(_space(max_predicates=1).children(Hole())) == 1 + len(LIBRARY.parameterized)
    no_params = [to_text(c) for c in _space(max_parameterized=0).children(Hole())]
    assert no_params == ["true", "?? ; ??", "?? & ??"]
    space = _space(max_predicates=2, max_parameterized=1)
    children = space.children(_query("(max0 >= 0.5) ; ??"))
    assert [to_text(c) for c in children] == ["(max0 >= 0.5) ; true"]
    for sketch in _space(max_predicates=2, max_parameterized=1).sketches():
        predicates, parameterized = count_predicates(sketch)
        assert predicates <= 2 and parameterized <= 1


def test_hole_keys():
    node = _query("(max0 >= [0,1]) ; (avg1 >= 0.5) & (min1 >= [0,1])")
    assert _space().hole_keys(node) == ["max0", "min1"]


def test_predict_matches_eval_query():
    rng = np.random.default_rng(DEFAULT_SEED)
    trajectories = [rng.uniform(0.0, 1.0, size=(n, 2)) for n in (1, 3, 4, 2)]
    dataset = _dataset(trajectories)
    space = QuivrSpace.from_dataset(dataset)
    q = space.parse("(max0 >= 0.5) ; (avg1 >= 0.3)")
    np.testing.assert_array_equal(
        space.predict(q, dataset), [eval_query(q, x) for x in trajectories]
    )
    abstract = space.abstract_predictions(space.root(), dataset)
    np.testing.assert_array_equal(abstract.lo, [False] * 4)
    np.testing.assert_array_equal(abstract.hi, [True] * 4)


def test_decision_thresholds():
    dataset = _dataset([[[0.2], [0.9]], [[0.5]]])
    library = PredicateLibrary(1)
    thresholds = decision_thresholds(library, dataset)
    assert thresholds["max0"] == pytest.approx([0.2, 0.5, 0.9, 0.9 + BOX_MARGIN / 2])
    assert thresholds["min0"] == pytest.approx([0.2, 0.5, 0.9, 0.9 + BOX_MARGIN / 2])
    assert thresholds["avg0"] == pytest.approx([0.2, 0.5, 0.55, 0.9, 0.9 + BOX_MARGIN / 2])
    space = QuivrSpace.from_dataset(dataset)
    for name, values in thresholds.items():
        assert all(contains(space.initial_boxes[name], v) for v in values)


def test_space_survives_pickling():
    dataset = _dataset([[[0.2], [0.9]], [[0.5]]])
    space = QuivrSpace.from_dataset(dataset)
    q = space.parse("max0 >= 0.6")
    space.predict(q, dataset)
    clone = pickle.loads(pickle.dumps(space))
    np.testing.assert_array_equal(clone.predict(q, dataset), [True, False])


def test_space_rejects_bad_settings():
    with pytest.raises(ValueError):
        _space(max_predicates=0)
    with pytest.raises(ValueError):
        _space(max_parameterized=-1)
    with pytest.raises(ValueError):
        PredicateLibrary(1, score_kinds=("median",))
