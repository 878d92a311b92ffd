import dataclasses
import logging
import math
from typing import Final, Optional, Tuple

import opt_synth.dsls
from opt_synth.api.objective import get_objective, list_objectives
from opt_synth.api.search import (
    ALGORITHMS,
    LOWER_BOUND_MODES,
    SearchBudget,
    SynthesisResult,
    synthesize,
)
from opt_synth.api.space import DEFAULT_SPLIT_DEPTH
from opt_synth.api.utils import DEFAULT_SEED, set_seed
from opt_synth.datasets.io import (
    Dataset,
    NormalizationParams,
    load_dataset,
    normalize,
    select_examples,
)
from opt_synth.dsls.quivr import QuivrSpace, decision_thresholds
from opt_synth.oracle import GridSpec, grid_optimum


logger = logging.getLogger(__name__)


# Anytime reporting times, in seconds.
DEFAULT_CHECKPOINTS: Final = (10.0, 30.0, 60.0, 120.0, 300.0, 600.0)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Settings of one synthesis run. See `main.py --help` for the meaning of
    each field; `None` bounds fall back to the DSL defaults."""

    dsl: str = "near"
    objective: str = "accuracy"
    algorithm: str = "astar"
    epsilon: float = 0.0
    lower_bound: str = "midpoint"
    sketch: Optional[str] = None
    space_args: str = ""
    max_cost: Optional[int] = None
    max_predicates: Optional[int] = None
    max_parameterized: Optional[int] = None
    max_seconds: Optional[float] = None
    max_expansions: Optional[int] = None
    max_split_depth: int = DEFAULT_SPLIT_DEPTH
    data_path: Optional[str] = None
    normalize: bool = True
    limit: Optional[int] = None
    designated_positive: int = 0
    designated_negative: int = 0
    num_workers: int = 1
    seed: int = DEFAULT_SEED
    progress: bool = False

    def __post_init__(self):
        if self.dsl not in opt_synth.dsls.list_dsls():
            raise ValueError(
                f"Unknown DSL `{self.dsl}`; expected one of {opt_synth.dsls.list_dsls()}"
            )
        if self.objective not in list_objectives():
            raise ValueError(
                f"Unknown objective `{self.objective}`; expected one of {list_objectives()}"
            )
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"Unknown algorithm `{self.algorithm}`; expected one of {ALGORITHMS}")
        if self.lower_bound not in LOWER_BOUND_MODES:
            raise ValueError(
                f"Unknown lower bound mode `{self.lower_bound}`; "
                f"expected one of {LOWER_BOUND_MODES}"
            )
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        for name in ("max_cost", "max_predicates"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.max_parameterized is not None and self.max_parameterized < 0:
            raise ValueError(f"max_parameterized must be >= 0, got {self.max_parameterized}")
        if self.num_workers < 1:
            raise ValueError(f"num_workers must be >= 1, got {self.num_workers}")

    def budget(self) -> SearchBudget:
        return SearchBudget(self.max_seconds, self.max_expansions, self.max_split_depth)

    def space_kwargs(self) -> dict:
        """Constructor kwargs of the DSL's space; unset bounds are left out."""
        if self.dsl == "near":
            kwargs = {"max_cost": self.max_cost}
        else:
            kwargs = {
                "max_predicates": self.max_predicates,
                "max_parameterized": self.max_parameterized,
            }
        kwargs["sketch"] = self.sketch
        return kwargs


def prepare_dataset(config: RunConfig) -> Tuple[Dataset, Optional[NormalizationParams]]:
    """Loads, subsamples and (optionally) normalizes the dataset of a run."""
    if config.data_path is None:
        raise ValueError("A `data_path` is required.")
    dataset = load_dataset(config.data_path, opt_synth.dsls.DSL_TASK_KINDS[config.dsl])
    if config.limit is not None:
        dataset = select_examples(
            dataset,
            config.limit,
            config.seed,
            config.designated_positive,
            config.designated_negative,
        )
    params = None
    if config.normalize:
        dataset, params = normalize(dataset)
    return dataset, params


def build_space(config: RunConfig, dataset: Dataset):
    return opt_synth.dsls.get_space_from_args_string(
        config.dsl, dataset, config.space_args, config.space_kwargs()
    )


def synthesize_from_config(
    config: RunConfig, dataset: Dataset, space=None
) -> SynthesisResult:
    """Runs the search described by `config` on an already prepared dataset."""
    set_seed(config.seed)
    space = build_space(config, dataset) if space is None else space
    return synthesize(
        space,
        dataset,
        get_objective(config.objective),
        algorithm=config.algorithm,
        epsilon=config.epsilon,
        budget=config.budget(),
        lower_bound=config.lower_bound,
        num_workers=config.num_workers,
        progress=config.progress,
    )


def _finite_or_none(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None


def result_to_dict(result: SynthesisResult, space) -> dict:
    """The JSON-serializable summary of a run. Unbounded values become null."""
    best = None if result.best_program is None else space.to_text(result.best_program)
    return {
        "best_program": best,
        "certified_lower": _finite_or_none(result.certified_lower),
        "certified_upper": _finite_or_none(result.certified_upper),
        "range": _finite_or_none(result.gap),
        "epsilon_used": result.epsilon_used,
        "converged": result.converged,
        "nodes_expanded": result.nodes_expanded,
        "nodes_pruned": result.nodes_pruned,
        "wall_time": result.wall_time,
        "algorithm": result.algorithm,
        "lower_bound_mode": result.lower_bound_mode,
        "cutoff_hit": result.cutoff_hit,
    }


def cli_synthesize(config: RunConfig) -> Tuple[dict, SynthesisResult]:
    """Synthesizes a program for the dataset at `config.data_path`. This is a
    wrapper around `synthesize` for command-line interface (CLI) like usage.

    Returns:
        The report dictionary (with "results", "config" and "normalization"
        keys) and the raw search result.
    """
    dataset, params = prepare_dataset(config)
    space = build_space(config, dataset)
    result = synthesize_from_config(config, dataset, space)
    report = {
        "results": {
            **result_to_dict(result, space),
            "dsl": config.dsl,
            "objective": config.objective,
            "num_examples": len(dataset),
        },
        "config": dataclasses.asdict(config),
        "normalization": None if params is None else params.to_json(),
    }
    return report, result


def cli_oracle(config: RunConfig, grid: GridSpec) -> dict:
    """Runs the grid oracle on the space and dataset described by `config`.

    Quivr thresholds default to the decision-relevant thresholds of the
    dataset (see `decision_thresholds`) instead of the uniform grid.
    """
    dataset, params = prepare_dataset(config)
    space = build_space(config, dataset)
    if isinstance(space, QuivrSpace) and grid.points is None:
        grid = dataclasses.replace(grid, points=decision_thresholds(space.library, dataset))
    program, value = grid_optimum(space, grid, dataset, get_objective(config.objective))
    return {
        "results": {
            "best_program": space.to_text(program),
            "value": value,
            "dsl": config.dsl,
            "objective": config.objective,
            "num_examples": len(dataset),
        },
        "config": {
            **dataclasses.asdict(config),
            "grid": {"lo": grid.lo, "hi": grid.hi, "steps": grid.steps},
        },
        "normalization": None if params is None else params.to_json(),
    }


def make_table(report: dict) -> str:
    """Returns a markdown table from a synthesis report `dict`.

    Args:
        report (dict):
            A report as returned by `cli_synthesize`.

    Returns:
        The markdown table of results as a string.
    """
    from pytablewriter import MarkdownTableWriter

    def fmt(x):
        return "-" if x is None else "%.4f" % x

    md_writer = MarkdownTableWriter()
    md_writer.headers = [
        "DSL",
        "Objective",
        "Algorithm",
        "Best",
        "Range",
        "Converged",
        "Expanded",
        "Time (s)",
        "Program",
    ]
    r = report["results"]
    md_writer.value_matrix = [
        [
            r["dsl"],
            r["objective"],
            r["algorithm"],
            fmt(r["certified_lower"]),
            fmt(r["range"]),
            r["converged"],
            r["nodes_expanded"],
            "%.3f" % r["wall_time"],
            r["best_program"] or "-",
        ]
    ]
    return md_writer.dumps()
