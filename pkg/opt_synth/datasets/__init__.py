from .io import (
    TASK_KINDS,
    Dataset,
    DatasetError,
    Example,
    NormalizationParams,
    load_dataset,
    make_example,
    normalize,
    save_dataset,
    select_examples,
)
