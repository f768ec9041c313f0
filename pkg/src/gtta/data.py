"""Datasets: a 2-D input matrix plus optional targets and a task descriptor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .tensorio import load_tensor

CLASSIFICATION = "classification"
REGRESSION = "regression"
SEGMENTATION = "segmentation"


@dataclass(frozen=True)
class Task:
    kind: str
    num_classes: int | None = None

    def __post_init__(self):
        if self.kind not in (CLASSIFICATION, REGRESSION, SEGMENTATION):
            raise DataError(f"unknown task kind {self.kind!r}")
        if self.kind == CLASSIFICATION and (self.num_classes is None or self.num_classes < 2):
            raise DataError("classification task needs num_classes >= 2")

    @staticmethod
    def classification(num_classes: int) -> "Task":
        return Task(CLASSIFICATION, num_classes)

    @staticmethod
    def regression() -> "Task":
        return Task(REGRESSION)

    @staticmethod
    def segmentation() -> "Task":
        return Task(SEGMENTATION)


@dataclass(frozen=True)
class Dataset:
    """Rows of flattened samples, with optional aligned targets.

    Targets are ``[n]`` class indices, ``[n]`` real values, or ``[n, H, W]``
    per-pixel masks depending on the task.
    """

    inputs: np.ndarray
    targets: np.ndarray | None
    task: Task

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise DataError(f"inputs must be [n, d] with n >= 1, got shape {self.inputs.shape}")
        if self.targets is not None:
            if self.targets.shape[0] != self.n:
                raise DataError(
                    f"targets first dimension {self.targets.shape[0]} != n {self.n}"
                )
            if self.task.kind == CLASSIFICATION:
                t = self.targets
                if not np.all(t == np.round(t)):
                    raise DataError("classification targets must be integers")
                if t.min() < 0 or t.max() >= self.task.num_classes:
                    raise DataError(
                        f"class indices must lie in [0, {self.task.num_classes})"
                    )

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def subset(self, index) -> "Dataset":
        targets = None if self.targets is None else self.targets[index]
        return Dataset(self.inputs[index], targets, self.task)


def load_dataset(inputs_path, task: Task, targets_path=None, *,
                 target_col_last: bool = False, header: bool = False) -> Dataset:
    """Load a dataset from GTT/CSV files.

    With ``target_col_last`` the final column of ``inputs_path`` becomes the
    target and the rest are inputs; otherwise all columns are inputs and
    targets come from ``targets_path`` when given.
    """
    raw = load_tensor(inputs_path, header=header)
    if raw.ndim == 1:
        raw = raw[None, :]
    if target_col_last:
        if raw.shape[1] < 2:
            raise DataError("need at least 2 columns to split off a target column")
        return Dataset(np.ascontiguousarray(raw[:, :-1]), raw[:, -1].copy(), task)
    targets = None
    if targets_path is not None:
        targets = load_tensor(targets_path, header=header)
        if task.kind in (CLASSIFICATION, REGRESSION):
            targets = targets.reshape(-1)
    return Dataset(raw, targets, task)
