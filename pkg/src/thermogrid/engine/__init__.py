from .tiling import Tile, split, aggregate_grids, aggregate_labels
from .scheduler import (TaskError, WorkerDescriptor, parse_worker,
                        reduce_histogram, run_task)

__all__ = [
    "Tile", "split", "aggregate_grids", "aggregate_labels",
    "TaskError", "WorkerDescriptor", "parse_worker",
    "reduce_histogram", "run_task",
]
