"""
Best-first (A*) and breadth-first search over generalized partial programs.

Every node on the frontier carries an interval `[lower, upper]` bracketing the
objective of the best concrete program it denotes. The search maintains an
anytime certificate: the best lower bound found so far (achieved by a concrete
witness program) and the greatest upper bound over all nodes that still cover
part of the space. It stops once the two are within `epsilon`.
"""
import collections
import csv
import dataclasses
import heapq
import itertools
import logging
import math
import multiprocessing as mp
import sys
from typing import Any, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from tqdm import tqdm

from opt_synth.api.interval import Interval
from opt_synth.api.objective import ObjectiveSpec
from opt_synth.api.space import DEFAULT_SPLIT_DEPTH, ProgramSpace
from opt_synth.api.utils import Stopwatch


logger = logging.getLogger(__name__)
logger.setLevel(logging.NOTSET)
logger.addHandler(logging.StreamHandler(sys.stdout))


LOWER_BOUND_MODES = ("midpoint", "abstract")
ALGORITHMS = ("astar", "bfs")


@dataclasses.dataclass(frozen=True)
class SearchBudget:
    """Limits on a single search. `None` means unlimited."""

    max_seconds: Optional[float] = None
    max_expansions: Optional[int] = None
    max_split_depth: int = DEFAULT_SPLIT_DEPTH

    def __post_init__(self):
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ValueError(f"max_seconds must be >= 0, got {self.max_seconds}")
        if self.max_expansions is not None and self.max_expansions < 0:
            raise ValueError(
                f"max_expansions must be >= 0, got {self.max_expansions}"
            )
        if self.max_split_depth < 0:
            raise ValueError(
                f"max_split_depth must be >= 0, got {self.max_split_depth}"
            )


@dataclasses.dataclass
class SearchNode:
    program: Any
    upper: float
    lower: float
    seq: int
    # Midpoint instantiation of the node and its concrete objective, if any.
    witness: Optional[Any] = None
    witness_value: Optional[float] = None

    def __post_init__(self):
        assert self.lower <= self.upper, f"lower {self.lower} > upper {self.upper}"

    @property
    def interval(self) -> Interval:
        return Interval(self.lower, self.upper)

    def sort_key(self) -> Tuple[float, float, int]:
        return (-self.upper, -self.lower, self.seq)


class ProgressEntry(NamedTuple):
    time_s: float
    best_lower: float
    frontier_upper: float
    nodes_expanded: int


@dataclasses.dataclass
class SynthesisResult:
    best_program: Optional[Any]
    certified_lower: float
    certified_upper: float
    epsilon_used: float
    nodes_expanded: int
    wall_time: float
    converged: bool
    progress_log: List[ProgressEntry]
    expanded: List[Any]
    frontier: List[SearchNode]
    lower_bound_mode: str
    cutoff_hit: bool
    algorithm: str
    # Nodes discarded because their upper bound could not beat the incumbent.
    nodes_pruned: int = 0

    @property
    def gap(self) -> float:
        return self.certified_upper - self.certified_lower


def frontier_bounds(nodes: Iterable[SearchNode]) -> Tuple[float, float]:
    """Returns `(max lower, max upper)` over a nonempty collection of nodes.

    Example:
        bounds [1/2, 1], [1, 1], [1/2, 1/2] -> (1, 1)
    """
    nodes = list(nodes)
    if not nodes:
        raise ValueError("Cannot compute bounds of an empty frontier.")
    lower = max(node.lower for node in nodes)
    upper = max(node.upper for node in nodes)
    assert lower <= upper
    return lower, upper


# Frontiers


class _BestFirstFrontier:
    """Max-heap on upper bound; ties by larger lower bound, then FIFO."""

    def __init__(self):
        self._heap = []

    def push(self, node: SearchNode):
        heapq.heappush(self._heap, (node.sort_key(), node))

    def pop(self) -> SearchNode:
        return heapq.heappop(self._heap)[1]

    def clear(self) -> int:
        dropped = len(self._heap)
        self._heap = []
        return dropped

    def max_upper(self) -> float:
        return self._heap[0][1].upper

    def nodes(self) -> List[SearchNode]:
        return [node for _, node in sorted(self._heap, key=lambda x: x[0])]

    def __len__(self):
        return len(self._heap)


class _FifoFrontier:
    """FIFO queue with a lazily pruned max-heap of upper bounds.

    Popped nodes stay in the heap until they reach its top; the heap is rebuilt
    from the queue once such stale entries outnumber the live ones.
    """

    def __init__(self):
        self._queue = collections.deque()
        self._uppers = []
        self._live = set()

    def push(self, node: SearchNode):
        self._queue.append(node)
        self._live.add(node.seq)
        heapq.heappush(self._uppers, (-node.upper, node.seq))

    def pop(self) -> SearchNode:
        node = self._queue.popleft()
        self._live.discard(node.seq)
        if len(self._uppers) > 2 * len(self._live):
            self._uppers = [(-n.upper, n.seq) for n in self._queue]
            heapq.heapify(self._uppers)
        return node

    def clear(self) -> int:
        dropped = len(self._queue)
        self._queue.clear()
        self._uppers = []
        self._live = set()
        return dropped

    def max_upper(self) -> float:
        while self._uppers[0][1] not in self._live:
            heapq.heappop(self._uppers)
        return -self._uppers[0][0]

    def nodes(self) -> List[SearchNode]:
        return list(self._queue)

    def __len__(self):
        return len(self._queue)


# Node evaluation


class _NodeEvaluator:
    """Computes the bounds of a node. Picklable, so it can be mapped over a
    `multiprocessing.Pool`."""

    def __init__(
        self,
        space: ProgramSpace,
        dataset,
        objective: ObjectiveSpec,
        lower_bound: str,
    ):
        self.space = space
        self.dataset = dataset
        self.objective = objective
        self.lower_bound = lower_bound

    def __call__(self, program) -> Tuple[Interval, Optional[Any], Optional[float]]:
        abstract = self.space.bounds(program, self.dataset, self.objective)
        witness = self.space.concrete_witness(program)
        witness_value = None
        if witness is not None and (
            self.lower_bound == "midpoint" or self.space.is_concrete(program)
        ):
            witness_value = self.space.evaluate(witness, self.dataset, self.objective)
        return abstract, witness, witness_value


def _make_node(program, evaluation, seq: int) -> SearchNode:
    abstract, witness, witness_value = evaluation
    lower = abstract.lo if witness_value is None else witness_value
    return SearchNode(
        program=program,
        upper=abstract.hi,
        lower=lower,
        seq=seq,
        witness=witness,
        witness_value=witness_value,
    )


# Search


def synthesize(
    space: ProgramSpace,
    dataset,
    objective: ObjectiveSpec,
    *,
    algorithm: str = "astar",
    epsilon: float = 0.0,
    budget: Optional[SearchBudget] = None,
    lower_bound: str = "midpoint",
    root=None,
    num_workers: int = 1,
    progress: bool = False,
) -> SynthesisResult:
    """Searches `space` for a program maximizing `objective` on `dataset`.

    Nodes whose upper bound does not exceed the best lower bound found so far
    are dropped, and the search stops once no queued node can beat it.

    Args:
        space (ProgramSpace):
            The space of generalized partial programs to search.
        dataset (opt_synth.datasets.io.Dataset):
            Input-output examples the objective is measured on.
        objective (ObjectiveSpec):
            Concrete objective with its abstract transformer.
        algorithm (str, optional, defaults to "astar"):
            "astar" pops the node with the greatest upper bound; "bfs" pops
            nodes in insertion order.
        epsilon (float, optional, defaults to 0.0):
            Stop once the certified upper and lower bounds are within epsilon.
        budget (SearchBudget, optional, defaults to None):
            Time, expansion and split-depth limits. Unlimited when None
            (split depth still defaults to 30).
        lower_bound (str, optional, defaults to "midpoint"):
            "midpoint" scores each hole-free node by the concrete objective
            of its midpoint program; "abstract" uses the lower endpoint of its
            abstract objective.
        root (optional, defaults to None):
            Node to start from instead of `space.root()`, e.g. a user sketch.
        num_workers (int, optional, defaults to 1):
            Number of processes used to evaluate the children of an expansion.
        progress (bool, optional, defaults to False):
            Show a progress bar over expansions.

    Returns:
        A `SynthesisResult` whose `certified_lower` is the recomputed
        objective of `best_program`.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"Unknown algorithm `{algorithm}`; expected one of {ALGORITHMS}")
    if lower_bound not in LOWER_BOUND_MODES:
        raise ValueError(
            f"Unknown lower bound mode `{lower_bound}`; expected one of {LOWER_BOUND_MODES}"
        )
    if epsilon < 0 or math.isnan(epsilon):
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if len(dataset) == 0:
        raise ValueError("Cannot synthesize from an empty dataset.")
    budget = SearchBudget() if budget is None else budget

    stopwatch = Stopwatch()
    evaluator = _NodeEvaluator(space, dataset, objective, lower_bound)
    frontier = _BestFirstFrontier() if algorithm == "astar" else _FifoFrontier()
    counter = itertools.count()
    exhausted: List[SearchNode] = []
    expanded: List[Any] = []
    progress_log: List[ProgressEntry] = []
    incumbent: Optional[SearchNode] = None
    cutoff_hit = False
    converged = False
    nodes_pruned = 0

    def consider(node: SearchNode):
        nonlocal incumbent
        if node.witness is None:
            return
        if incumbent is None or node.lower > incumbent.lower:
            incumbent = node

    def incumbent_lower() -> float:
        return -math.inf if incumbent is None else incumbent.lower

    root = space.root() if root is None else root
    root_node = _make_node(root, evaluator(root), next(counter))
    frontier.push(root_node)
    consider(root_node)
    logger.info(
        f"» Starting {algorithm} search (epsilon={epsilon}, lower bound={lower_bound}) "
        f"from `{space.to_text(root)}` with root bounds {root_node.interval}"
    )
    if root_node.lower == root_node.upper:
        logger.info("» Root bounds are already degenerate.")

    pool = mp.Pool(num_workers) if num_workers > 1 else None
    pbar = tqdm(total=budget.max_expansions, disable=not progress, desc=algorithm)
    try:
        while True:
            best_lower = incumbent_lower()
            if len(frontier) and frontier.max_upper() <= best_lower:
                # No queued node can improve on the incumbent.
                nodes_pruned += frontier.clear()
            uppers = [best_lower] + [node.upper for node in exhausted]
            if len(frontier):
                uppers.append(frontier.max_upper())
            best_upper = max(uppers)
            progress_log.append(
                ProgressEntry(stopwatch.elapsed(), best_lower, best_upper, len(expanded))
            )
            if best_upper - best_lower <= epsilon:
                converged = True
                break
            if not len(frontier):
                break
            if (
                budget.max_expansions is not None
                and len(expanded) >= budget.max_expansions
            ):
                logger.warning(
                    f"» Expansion budget of {budget.max_expansions} exhausted."
                )
                break
            if budget.max_seconds is not None and stopwatch.elapsed() >= budget.max_seconds:
                logger.warning(f"» Time budget of {budget.max_seconds}s exhausted.")
                break

            node = frontier.pop()
            while node.upper <= best_lower:
                nodes_pruned += 1
                node = frontier.pop()
            expanded.append(node.program)
            pbar.update(1)
            children = space.children(node.program, budget.max_split_depth)
            logger.debug(
                f"Expanding `{space.to_text(node.program)}` {node.interval} "
                f"into {len(children)} children"
            )
            if not children:
                if not space.is_concrete(node.program):
                    cutoff_hit = True
                exhausted.append(node)
                continue
            if pool is not None:
                evaluations = pool.map(evaluator, children)
            else:
                evaluations = [evaluator(child) for child in children]
            for child, evaluation in zip(children, evaluations):
                child_node = _make_node(child, evaluation, next(counter))
                consider(child_node)
                if child_node.upper <= incumbent_lower():
                    nodes_pruned += 1
                    continue
                frontier.push(child_node)
    finally:
        pbar.close()
        if pool is not None:
            pool.close()
            pool.join()

    if cutoff_hit:
        logger.warning(
            f"» Split-depth cutoff of {budget.max_split_depth} reached; some boxes "
            "could not be refined further."
        )

    best_program = None
    certified_lower = -math.inf
    if incumbent is not None:
        best_program = incumbent.witness
        certified_lower = space.evaluate(best_program, dataset, objective)
        assert certified_lower >= incumbent.lower
    certified_upper = progress_log[-1].frontier_upper

    result = SynthesisResult(
        best_program=best_program,
        certified_lower=certified_lower,
        certified_upper=certified_upper,
        epsilon_used=epsilon,
        nodes_expanded=len(expanded),
        wall_time=stopwatch.elapsed(),
        converged=converged,
        progress_log=progress_log,
        expanded=expanded,
        frontier=frontier.nodes() + exhausted,
        lower_bound_mode=lower_bound,
        cutoff_hit=cutoff_hit,
        algorithm=algorithm,
        nodes_pruned=nodes_pruned,
    )
    logger.info(
        f"» Finished after {result.nodes_expanded} expansions ({nodes_pruned} pruned) "
        f"in {result.wall_time:.3f}s: "
        f"best={result.certified_lower} range=[{result.certified_lower}, "
        f"{result.certified_upper}] converged={result.converged}"
    )
    return result


def astar_synthesize(space, dataset, objective, epsilon=0.0, budget=None, **kwargs):
    return synthesize(
        space, dataset, objective, algorithm="astar", epsilon=epsilon, budget=budget, **kwargs
    )


def bfs_synthesize(space, dataset, objective, epsilon=0.0, budget=None, **kwargs):
    return synthesize(
        space, dataset, objective, algorithm="bfs", epsilon=epsilon, budget=budget, **kwargs
    )


# Progress sink

PROGRESS_COLUMNS = ("time_s", "best_lower", "frontier_upper", "nodes_expanded")


def sample_progress(
    progress_log: Sequence[ProgressEntry], checkpoints: Optional[Sequence[float]] = None
) -> List[ProgressEntry]:
    """Picks the latest log entry at or before each checkpoint time that the
    run reached, followed by the final entry. Without checkpoints, returns the
    full log."""
    if checkpoints is None:
        return list(progress_log)
    if not progress_log:
        return []
    sampled = []
    final_time = progress_log[-1].time_s
    for checkpoint in sorted(checkpoints):
        if checkpoint > final_time:
            break
        latest = None
        for entry in progress_log:
            if entry.time_s > checkpoint:
                break
            latest = entry
        if latest is not None:
            sampled.append(latest._replace(time_s=float(checkpoint)))
    sampled.append(progress_log[-1])
    return sampled


def write_progress_csv(
    result: SynthesisResult, path: str, checkpoints: Optional[Sequence[float]] = None
):
    """Writes the progress log of `result` as CSV with columns
    `time_s,best_lower,frontier_upper,nodes_expanded`."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(PROGRESS_COLUMNS)
        for entry in sample_progress(result.progress_log, checkpoints):
            writer.writerow(entry)
