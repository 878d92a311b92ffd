"""
Anytime comparison of search algorithms on seeded synthetic tasks.

Every (task, algorithm) pair is one row; for each checkpoint time the row
records the best objective found so far and the range between it and the
certified upper bound, as they stood at that time.
"""
import csv
import dataclasses
import logging
from typing import List, Optional, Sequence

from opt_synth.api.search import ProgressEntry
from opt_synth.datasets.io import Dataset, normalize
from opt_synth.datasets.synthetic import generate_synthetic
from opt_synth.synthesizer import RunConfig, synthesize_from_config


logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class BenchTask:
    name: str
    dataset: Dataset
    config: RunConfig


@dataclasses.dataclass
class BenchRow:
    task: str
    algorithm: str
    # Per checkpoint: (best, range), or None when the run had not started yet.
    cells: List[Optional[tuple]]
    best: Optional[float] = None
    range: Optional[float] = None
    converged: bool = False
    nodes_expanded: int = 0
    wall_time: float = 0.0
    error: Optional[str] = None


def make_bench_tasks(
    task_kinds: Sequence[str],
    seeds: Sequence[int],
    base_config: RunConfig,
    num_examples: int = 20,
    length: int = 10,
    noise: float = 0.0,
) -> List[BenchTask]:
    """One synthetic task per (task kind, seed). The DSL, sketch and
    normalization of each run follow the task; everything else comes from
    `base_config`."""
    tasks = []
    for kind in task_kinds:
        for seed in seeds:
            synthetic = generate_synthetic(
                kind, seed, num_examples=num_examples, length=length, noise=noise
            )
            config = dataclasses.replace(
                base_config,
                dsl=synthetic.dsl,
                sketch=synthetic.sketch,
                normalize=synthetic.normalize,
                seed=seed,
            )
            dataset = synthetic.dataset
            if config.normalize:
                dataset, _ = normalize(dataset)
            tasks.append(BenchTask(f"{kind}/seed={seed}/n={num_examples}", dataset, config))
    return tasks


def progress_at(progress_log: Sequence[ProgressEntry], time_s: float) -> Optional[ProgressEntry]:
    """The latest entry logged at or before `time_s`."""
    latest = None
    for entry in progress_log:
        if entry.time_s > time_s:
            break
        latest = entry
    return latest


def cmd_bench(
    tasks: Sequence[BenchTask],
    algorithms: Sequence[str],
    checkpoints: Sequence[float],
) -> List[BenchRow]:
    """Runs every task with every algorithm. A failing run is recorded in its
    row's `error` and does not stop the others.

    Runs without a time budget stop at the last checkpoint.
    """
    rows = []
    horizon = max(checkpoints) if checkpoints else None
    for task in tasks:
        for algorithm in algorithms:
            row = BenchRow(task.name, algorithm, cells=[None] * len(checkpoints))
            try:
                config = dataclasses.replace(task.config, algorithm=algorithm)
                if config.max_seconds is None:
                    config = dataclasses.replace(config, max_seconds=horizon)
                result = synthesize_from_config(config, task.dataset)
            except Exception as e:
                logger.exception(f"Run {task.name} / {algorithm} failed")
                row.error = f"{type(e).__name__}: {e}"
                rows.append(row)
                continue
            for i, checkpoint in enumerate(checkpoints):
                entry = progress_at(result.progress_log, checkpoint)
                if entry is not None:
                    row.cells[i] = (entry.best_lower, entry.frontier_upper - entry.best_lower)
            row.best = result.certified_lower
            row.range = result.gap
            row.converged = result.converged
            row.nodes_expanded = result.nodes_expanded
            row.wall_time = result.wall_time
            rows.append(row)
    return rows


def _checkpoint_label(t: float) -> str:
    return f"{t:g}s"


def bench_headers(checkpoints: Sequence[float]) -> List[str]:
    headers = ["task", "algorithm"]
    for t in checkpoints:
        headers += [f"best@{_checkpoint_label(t)}", f"range@{_checkpoint_label(t)}"]
    return headers + [
        "best",
        "range",
        "converged",
        "nodes_expanded",
        "wall_time",
        "error",
    ]


def _bench_record(row: BenchRow) -> list:
    record = [row.task, row.algorithm]
    for cell in row.cells:
        record += ["", ""] if cell is None else [cell[0], cell[1]]
    return record + [
        "" if row.best is None else row.best,
        "" if row.range is None else row.range,
        row.converged,
        row.nodes_expanded,
        row.wall_time,
        row.error or "",
    ]


def write_bench_csv(rows: Sequence[BenchRow], checkpoints: Sequence[float], path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(bench_headers(checkpoints))
        for row in rows:
            writer.writerow(_bench_record(row))


def make_bench_table(rows: Sequence[BenchRow], checkpoints: Sequence[float]) -> str:
    """Markdown table with one "best (range)" cell per checkpoint."""
    from pytablewriter import MarkdownTableWriter

    if not rows:
        return ""

    def cell(best, gap):
        return "%.4f (%.4f)" % (best, gap)

    md_writer = MarkdownTableWriter()
    md_writer.headers = (
        ["Task", "Algorithm"]
        + [_checkpoint_label(t) for t in checkpoints]
        + ["Final", "Expanded"]
    )
    values = []
    for row in rows:
        if row.error is not None:
            values.append(
                [row.task, row.algorithm] + ["-"] * len(checkpoints) + [row.error, "-"]
            )
            continue
        values.append(
            [row.task, row.algorithm]
            + ["-" if c is None else cell(*c) for c in row.cells]
            + [cell(row.best, row.range), row.nodes_expanded]
        )
    md_writer.value_matrix = values
    return md_writer.dumps()
