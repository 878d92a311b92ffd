import pathlib
import random
import time
from typing import Final, List, Optional

import numpy as np


# General Utils


class ExitCodeError(Exception):
    """Raised to terminate the CLI with a specific process exit code."""

    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


EXIT_CONVERGED: Final[int] = 0
EXIT_ERROR: Final[int] = 1
EXIT_BUDGET_EXHAUSTED: Final[int] = 2


# Reproducibility utils


DEFAULT_SEED: Final[int] = 1234


def set_seed(seed: Optional[int] = DEFAULT_SEED):
    random.seed(seed)
    np.random.seed(seed)


class Stopwatch:
    """Monotonic wall-clock timer started at construction."""

    def __init__(self):
        self._start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._start


# CLI utils


def parse_cli_args_string(args: str) -> dict:
    """Parses a string in the following format to a kwargs dictionary.
    "args1=val1,arg2=val2"
    """
    # Remove leading whitespace but not trailing in case a `val` contains necessary whitespace.
    args = args.lstrip()
    if not args:
        return {}
    arg_list = args.split(",")
    args_dict = {}
    for arg in arg_list:
        # Split on the first `=` to allow for `=`s in `val`.
        k, v = arg.split("=", 1)
        args_dict[k] = str_to_builtin_type(v)
    return args_dict


def parse_config_file(path: str) -> dict:
    """Parses a config file of `key=value` lines into a kwargs dictionary.

    Blank lines and lines starting with `#` are ignored. Values are coerced
    with `str_to_builtin_type`.

    Example:
        # search settings
        dsl=quivr
        epsilon=0.0
    """
    config = {}
    text = pathlib.Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(
                f"{path}:{lineno}: expected `key=value`, got `{line}`"
            )
        k, v = line.split("=", 1)
        config[k.strip()] = str_to_builtin_type(v.strip())
    return config


def parse_float_list(s: str) -> List[float]:
    """Parses a comma-separated list of numbers, e.g. "10,30,60"."""
    s = s.strip()
    if not s:
        return []
    return [float(x) for x in s.split(",")]


def str_to_builtin_type(s: str) -> str:
    for fn in (to_bool, int, float):
        try:
            return fn(s)
        except ValueError:
            pass
    return s


# https://stackoverflow.com/questions/7019283/automatically-type-cast-parameters-in-python
def to_bool(s: str):
    if s == "True" or s == "true":
        return True
    if s == "False" or s == "false":
        return False
    raise ValueError(f"The input `{s}` is not of boolean form.")
