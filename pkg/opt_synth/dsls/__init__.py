import logging
from typing import List, Mapping, Optional, Type

import opt_synth.api.utils
from opt_synth.api.space import ProgramSpace

from . import near
from . import quivr


logger = logging.getLogger(__name__)


DSL_REGISTRY = {
    "near": near.NearSpace,
    "quivr": quivr.QuivrSpace,
}

# The dataset task kind each DSL's programs produce labels for.
DSL_TASK_KINDS = {
    "near": "labeling",
    "quivr": "query",
}


def list_dsls() -> List[str]:
    """Returns a list of all the DSL names available for synthesis."""
    return sorted(list(DSL_REGISTRY))


def get_space(dsl_name: str, dataset, **space_kwargs) -> ProgramSpace:
    """Returns the program space of the specified DSL for `dataset`.

    Args:
        dsl_name: Name of the DSL as found in the DSL registry.
        dataset: The dataset to synthesize from. Its task kind must match the
            DSL and its feature dimension sizes the space.
        **space_kwargs: Keyword arguments to pass to the space constructor, e.g.
            `max_cost` and `sketch` for "near" or `max_predicates` for "quivr".

    Returns:
        A program space instance.
    """
    space_class = _get_dsl_from_registry(dsl_name)
    task_kind = DSL_TASK_KINDS[dsl_name]
    if dataset.task_kind != task_kind:
        raise ValueError(
            f"DSL `{dsl_name}` synthesizes {task_kind} programs but the dataset "
            f"is a {dataset.task_kind} dataset."
        )
    if space_class is quivr.QuivrSpace:
        return quivr.QuivrSpace.from_dataset(dataset, **space_kwargs)
    return space_class(dataset.num_features, **space_kwargs)


def get_space_from_args_string(
    dsl_name: str,
    dataset,
    space_args: str,
    additional_config: Optional[Mapping[str, str]] = None,
) -> ProgramSpace:
    """Returns the program space of the specified DSL, instantiated with the
    kwargs in `space_args`, e.g. "max_cost=3,sketch=map(??)". Entries of
    `additional_config` that are not None override it."""
    additional_config = {} if additional_config is None else additional_config
    additional_args = {k: v for k, v in additional_config.items() if v is not None}
    kwargs = opt_synth.api.utils.parse_cli_args_string(space_args)
    kwargs.update(additional_args)
    return get_space(dsl_name, dataset, **kwargs)


def _get_dsl_from_registry(dsl_name: str) -> Type[ProgramSpace]:
    try:
        return DSL_REGISTRY[dsl_name]
    except KeyError:
        logger.warning(f"Available DSLs:\n{list_dsls()}")
        raise KeyError(f"DSL `{dsl_name}` is missing.")
