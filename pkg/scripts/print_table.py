"""
Prints a markdown table of a saved run.

    python scripts/print_table.py outputs/result.NAME.json
    python scripts/print_table.py outputs/bench.NAME.csv
"""
import csv
import json
import sys

from pytablewriter import MarkdownTableWriter

from opt_synth.synthesizer import make_table


def _fmt(value):
    return "-" if value == "" else "{0:.5g}".format(float(value))


def bench_csv_table(path: str) -> str:
    with open(path, newline="") as f:
        records = list(csv.DictReader(f))
    if not records:
        return ""
    checkpoints = [k[len("best@") :] for k in records[0] if k.startswith("best@")]
    results = []
    for r in records:
        row = [r["task"], r["algorithm"]]
        for t in checkpoints:
            row.append(f"{_fmt(r['best@' + t])} ({_fmt(r['range@' + t])})")
        row += [_fmt(r["best"]), _fmt(r["range"]), r["nodes_expanded"], r["error"] or "-"]
        results.append(row)
    writer = MarkdownTableWriter(
        table_name=path,
        headers=["task", "algorithm"] + checkpoints + ["best", "range", "expanded", "error"],
        value_matrix=results,
        margin=1,
    )
    return writer.dumps()


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        sys.exit("usage: print_table.py RESULT_JSON_OR_BENCH_CSV")
    path = argv[0]
    if path.endswith(".csv"):
        print(bench_csv_table(path))
    else:
        with open(path) as f:
            print(make_table(json.load(f)))


if __name__ == "__main__":
    main()
