import argparse
import dataclasses
import datetime
import json
import logging
import os
import sys

from opt_synth import bench, synthesizer
from opt_synth.api import utils
from opt_synth.api.search import write_progress_csv
from opt_synth.api.space import DEFAULT_SPLIT_DEPTH
from opt_synth.datasets.io import DatasetError, save_dataset
from opt_synth.datasets.synthetic import SYNTHETIC_TASKS, generate_synthetic
from opt_synth.dsls import DSL_TASK_KINDS
from opt_synth.oracle import GridSpec


logger = logging.getLogger("main")


def _float_list(value) -> list:
    """Checkpoint lists may come from flags ("10,30") or a config file (10)."""
    if isinstance(value, (int, float)):
        return [float(value)]
    return utils.parse_float_list(value)


def _str_list(value) -> list:
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _int_list(value) -> list:
    return [int(v) for v in _str_list(value)]


def _add_space_args(parser):
    parser.add_argument(
        "--dsl",
        default="near",
        help="Name of the DSL to synthesize in. See `opt_synth.dsls.list_dsls()`",
    )
    parser.add_argument(
        "--objective",
        default="accuracy",
        help="Objective to maximize. See `opt_synth.api.objective.list_objectives()`",
    )
    parser.add_argument(
        "--sketch",
        default=None,
        help="""Partial program to start from instead of the empty program, e.g.
        `map(-1*z0 + [0,100])`. Constant boxes are written `[lo,hi]` and
        structural holes `??`.""",
    )
    parser.add_argument(
        "--space_args",
        default="",
        help="Additional space constructor args as comma-separated `key=value` "
        "pairs with no spaces. WARNING: Values must NOT contain commas.",
    )
    parser.add_argument("--max_cost", type=int, default=None, help="NEAR structural cost bound")
    parser.add_argument(
        "--max_predicates", type=int, default=None, help="Quivr bound on predicates"
    )
    parser.add_argument(
        "--max_parameterized",
        type=int,
        default=None,
        help="Quivr bound on parameterized predicates",
    )


def _add_search_args(parser):
    parser.add_argument("--algorithm", default="astar", choices=["astar", "bfs"])
    parser.add_argument(
        "--epsilon",
        type=float,
        default=0.0,
        help="Stop once the certified bounds are within epsilon",
    )
    parser.add_argument(
        "--lower_bound",
        default="midpoint",
        choices=["midpoint", "abstract"],
        help="How hole-free nodes are scored from below: the objective of their "
        "midpoint program, or the lower end of their abstract objective",
    )
    parser.add_argument("--max_seconds", type=float, default=None)
    parser.add_argument("--max_expansions", type=int, default=None)
    parser.add_argument("--max_split_depth", type=int, default=DEFAULT_SPLIT_DEPTH)
    parser.add_argument(
        "--num_workers",
        type=int,
        default=1,
        help="Processes used to evaluate the bounds of children",
    )
    parser.add_argument(
        "--checkpoints",
        default=",".join(f"{t:g}" for t in synthesizer.DEFAULT_CHECKPOINTS),
        help="Comma-separated progress sampling times in seconds",
    )
    parser.add_argument(
        "--progress", action="store_true", help="Show a progress bar over expansions"
    )


def _add_data_args(parser):
    parser.add_argument("--data_path", required=False, default=None, help="JSONL dataset")
    parser.add_argument(
        "--task_kind",
        default=None,
        choices=["labeling", "query"],
        help="Expected task kind of the dataset; defaults to the DSL's",
    )
    parser.add_argument(
        "--no_normalize",
        action="store_true",
        help="Keep features as they are instead of scaling them into [-1, 1]",
    )
    parser.add_argument(
        "--limit",
        type=int,
        default=None,
        help="Subsample the dataset to this many examples",
    )
    parser.add_argument("--designated_positive", type=int, default=0)
    parser.add_argument("--designated_negative", type=int, default=0)


def _add_output_args(parser):
    parser.add_argument(
        "--config",
        default=None,
        help="File of `key=value` lines giving defaults for the other flags; "
        "flags given on the command line win",
    )
    parser.add_argument("--seed", type=int, default=utils.DEFAULT_SEED)
    parser.add_argument(
        "--output_path",
        default=None,
        help="""Use output_path as the output file name. For example:

    `> python main.py synth ... --output_path blop`
    # saves files into `outputs/result.blop.json` and `outputs/progress.blop.csv`
    """,
    )


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with the generic error exit code, keeping exit
    code 2 for exhausted search budgets."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise utils.ExitCodeError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        description="Optimal synthesis of trajectory programs with certified bounds."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="Synthesize a program from a dataset")
    _add_space_args(synth)
    _add_search_args(synth)
    _add_data_args(synth)
    _add_output_args(synth)
    synth.set_defaults(func=run_synth)

    oracle = subparsers.add_parser(
        "oracle", help="Brute-force optimum over a discretized program space"
    )
    _add_space_args(oracle)
    _add_data_args(oracle)
    _add_output_args(oracle)
    oracle.add_argument("--grid_lo", type=float, default=-1.0)
    oracle.add_argument("--grid_hi", type=float, default=1.0)
    oracle.add_argument("--grid_steps", type=int, default=21)
    oracle.add_argument("--max_candidates", type=int, default=10**6)
    oracle.set_defaults(func=run_oracle)

    bench_parser = subparsers.add_parser(
        "bench", help="Compare search algorithms on synthetic tasks over time"
    )
    _add_space_args(bench_parser)
    _add_search_args(bench_parser)
    _add_output_args(bench_parser)
    bench_parser.add_argument(
        "--tasks",
        default="labeling,query",
        help=f"Comma-separated synthetic tasks from {SYNTHETIC_TASKS}",
    )
    bench_parser.add_argument("--algorithms", default="astar,bfs")
    bench_parser.add_argument(
        "--seeds", default=str(utils.DEFAULT_SEED), help="Comma-separated task seeds"
    )
    bench_parser.add_argument(
        "--num_examples",
        default="20",
        help="Comma-separated trajectory counts, e.g. `10,100` for a scaling curve",
    )
    bench_parser.add_argument("--length", type=int, default=10)
    bench_parser.add_argument("--noise", type=float, default=0.0)
    bench_parser.set_defaults(func=run_bench)

    gen = subparsers.add_parser("gen", help="Generate a synthetic dataset")
    gen.add_argument("--task", default="labeling", choices=list(SYNTHETIC_TASKS))
    gen.add_argument("--num_examples", type=int, default=20)
    gen.add_argument("--length", type=int, default=10)
    gen.add_argument("--min_length", type=int, default=None)
    gen.add_argument("--num_features", type=int, default=1)
    gen.add_argument("--noise", type=float, default=0.0)
    _add_output_args(gen)
    gen.set_defaults(func=run_gen)

    parser.subparsers = subparsers
    return parser


def _apply_config_file(parser, argv) -> None:
    """Installs the `key=value` lines of `--config` as subcommand defaults, so
    that flags given explicitly still take precedence."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    config = utils.parse_config_file(known.config)
    for name, subparser in parser.subparsers.choices.items():
        dests = {action.dest for action in subparser._actions}
        subparser.set_defaults(**{k: v for k, v in config.items() if k in dests})
    known_dests = {
        action.dest
        for subparser in parser.subparsers.choices.values()
        for action in subparser._actions
    }
    unknown = sorted(set(config) - known_dests)
    if unknown:
        raise utils.ExitCodeError(f"Unknown config keys in `{known.config}`: {unknown}")


def parse_args(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config_file(parser, argv)
    return parser.parse_args(argv)


def args_to_name(args, separator):
    """Map `args` to file name. If output_path is set, we use that instead."""
    if args.output_path is not None:
        return args.output_path
    fields = {
        "command": args.command,
        "dsl": getattr(args, "dsl", None),
        "objective": getattr(args, "objective", None),
        "algorithm": getattr(args, "algorithm", None),
        "epsilon": getattr(args, "epsilon", None),
        "task": getattr(args, "task", None),
        "seed": str(args.seed),
        "timestamp": datetime.datetime.now().isoformat("T", "seconds"),
    }
    fields = [f"{k}={v}" for k, v in fields.items() if v is not None]
    filename = f"{separator}".join(fields).replace("/", "-")
    if getattr(args, "limit", None) is not None:
        # Runs on a subsample are not certificates for the full dataset.
        return f"limited={args.limit}{separator}" + filename
    return filename


def config_from_args(args, **overrides) -> synthesizer.RunConfig:
    fields = {f.name for f in dataclasses.fields(synthesizer.RunConfig)}
    values = {k: v for k, v in vars(args).items() if k in fields}
    if hasattr(args, "no_normalize"):
        values["normalize"] = not args.no_normalize
    values.update(overrides)
    config = synthesizer.RunConfig(**values)
    task_kind = getattr(args, "task_kind", None)
    if task_kind is not None and task_kind != DSL_TASK_KINDS[config.dsl]:
        raise utils.ExitCodeError(
            f"DSL `{config.dsl}` expects a {DSL_TASK_KINDS[config.dsl]} dataset, "
            f"not `{task_kind}`"
        )
    return config


def _write_normalization(report, output_path, path_separator):
    if report["normalization"] is None:
        return
    with open(f"./outputs/normalization{path_separator}{output_path}.json", "w") as f:
        json.dump(report["normalization"], f, indent=2)


def run_synth(args, output_path, path_separator):
    config = config_from_args(args)
    report, result = synthesizer.cli_synthesize(config)

    with open(f"./outputs/result{path_separator}{output_path}.json", "w") as f:
        json.dump(report, f, indent=2)
    write_progress_csv(
        result,
        f"./outputs/progress{path_separator}{output_path}.csv",
        _float_list(args.checkpoints),
    )
    _write_normalization(report, output_path, path_separator)

    print(f"\n{synthesizer.make_table(report)}")
    if not result.converged:
        raise utils.ExitCodeError(
            "Search stopped before the bounds met; the report holds the best "
            "program found and its certified range.",
            code=utils.EXIT_BUDGET_EXHAUSTED,
        )


def run_oracle(args, output_path, path_separator):
    config = config_from_args(args)
    grid = GridSpec(
        lo=args.grid_lo,
        hi=args.grid_hi,
        steps=args.grid_steps,
        max_candidates=args.max_candidates,
    )
    report = synthesizer.cli_oracle(config, grid)
    with open(f"./outputs/oracle{path_separator}{output_path}.json", "w") as f:
        json.dump(report, f, indent=2)
    _write_normalization(report, output_path, path_separator)
    print(f"\n{report['results']['best_program']}: {report['results']['value']}")


def run_bench(args, output_path, path_separator):
    base_config = config_from_args(args)
    checkpoints = _float_list(args.checkpoints)
    tasks = []
    for num_examples in _int_list(args.num_examples):
        tasks += bench.make_bench_tasks(
            _str_list(args.tasks),
            _int_list(args.seeds),
            base_config,
            num_examples=num_examples,
            length=args.length,
            noise=args.noise,
        )
    rows = bench.cmd_bench(tasks, _str_list(args.algorithms), checkpoints)
    bench.write_bench_csv(
        rows, checkpoints, f"./outputs/bench{path_separator}{output_path}.csv"
    )
    print(f"\n{bench.make_bench_table(rows, checkpoints)}")


def run_gen(args, output_path, path_separator):
    task = generate_synthetic(
        args.task,
        seed=args.seed,
        num_examples=args.num_examples,
        length=args.length,
        min_length=args.min_length,
        num_features=args.num_features,
        noise=args.noise,
    )
    data_path = f"./outputs/data{path_separator}{output_path}.jsonl"
    save_dataset(task.dataset, data_path)
    with open(f"./outputs/planted{path_separator}{output_path}.json", "w") as f:
        json.dump(task.to_json(), f, indent=2)
    print(f"\nWrote {len(task.dataset)} examples to `{data_path}` (planted `{task.planted}`)")


def main(argv=None):
    os.makedirs("./outputs", exist_ok=True)
    try:
        args = parse_args(argv)
        if getattr(args, "limit", None):
            logger.warning(
                "\n» WARNING: `--limit` SHOULD ONLY BE USED FOR TESTING. CERTIFICATES "
                "ONLY COVER THE SELECTED EXAMPLES."
            )

        print()  # Ensure a newline after `main` command for readability.

        path_separator = "."
        output_path = args_to_name(args, separator=path_separator)
        args.func(args, output_path, path_separator)
    except utils.ExitCodeError as e:
        if e.code == utils.EXIT_BUDGET_EXHAUSTED:
            logger.warning(f"» {e}")
        else:
            logger.error(f"» {e}")
        sys.exit(e.code)
    except (DatasetError, ValueError, KeyError, OSError) as e:
        logger.error(f"» {type(e).__name__}: {e}")
        sys.exit(utils.EXIT_ERROR)


if __name__ == "__main__":
    main()
