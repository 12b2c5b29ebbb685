# -*- coding: utf-8 -*-

"""Bundled tables: U.S. Navy active duty personnel by rank, race and gender.

The counts are transcribed as printed, one file per gender and corps, with
races as rows and ranks as columns. The bundled datasets stack them into
``rank × race × gender`` tables with male first.

``latin_3x3x3`` is the Latin square table, which is isolated in its fiber
when only basic moves are allowed.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .resources import get_navy_path
from .table import DimensionMismatch, Table3D
from .util import InputError

__all__ = [
    "Dataset",
    "load_dataset",
    "list_datasets",
    "UnknownDataset",
    "NAVY_RACES",
    "NAVY_GENDERS",
]

logger = logging.getLogger(__name__)

#: Race categories in the order of the printed tables
NAVY_RACES = ["NatAm", "Asian", "AfAm", "PacIsl", "Multi", "White"]
NAVY_GENDERS = ["male", "female"]
NAVY_AXES = ["rank", "race", "gender"]


class UnknownDataset(InputError):
    """Raised when a table source is neither a file nor a bundled dataset."""


class Dataset:
    """A named table with category labels for each axis."""

    def __init__(
        self,
        name: str,
        table: Table3D,
        labels: Optional[Sequence[Sequence[str]]] = None,
        axes: Optional[Sequence[str]] = None,
    ):
        if labels is None:
            labels = [[str(n + 1) for n in range(size)] for size in table.dims]
        labels = [list(axis_labels) for axis_labels in labels]
        if len(labels) != 3 or any(len(a) != n for a, n in zip(labels, table.dims)):
            raise DimensionMismatch(
                f"labels of sizes {[len(a) for a in labels]} do not match dims {table.dims}"
            )
        axes = ["i", "j", "k"] if axes is None else list(axes)
        if len(axes) != 3:
            raise DimensionMismatch(f"need three axis names, got {axes}")
        self.name = name
        self.table = table
        self.labels: List[List[str]] = labels
        self.axes: List[str] = axes

    def to_frame(self) -> pd.DataFrame:
        """Get the table in long format, one row per cell."""
        index = pd.MultiIndex.from_product(self.labels, names=self.axes)
        return pd.DataFrame({"count": self.table.cells}, index=index).reset_index()

    def __repr__(self) -> str:
        return f"Dataset(name={self.name!r}, dims={self.table.dims}, total={self.table.total})"


def _read_navy(gender: str, corps: str) -> pd.DataFrame:
    return pd.read_csv(get_navy_path(gender, corps), sep="\t", index_col=0)


def _navy_dataset(name: str, corps: Sequence[str]) -> Dataset:
    blocks, ranks = [], []
    for part in corps:
        male, female = (_read_navy(gender, part) for gender in NAVY_GENDERS)
        if list(male.index) != NAVY_RACES or list(female.columns) != list(male.columns):
            raise DimensionMismatch(f"Navy {part} tables are not aligned")
        # race × rank × gender, then rank first
        blocks.append(np.stack([male.to_numpy(), female.to_numpy()], axis=-1).transpose(1, 0, 2))
        ranks.extend(male.columns)
    table = Table3D.from_array(np.concatenate(blocks, axis=0))
    return Dataset(name, table, labels=[ranks, NAVY_RACES, NAVY_GENDERS], axes=NAVY_AXES)


#: A 3×3×3 table that basic moves leave isolated unless cells may drop to -1
LATIN_3X3X3 = [
    [[3, 0, 0], [0, 3, 0], [0, 0, 3]],
    [[0, 3, 0], [0, 0, 3], [3, 0, 0]],
    [[0, 0, 3], [3, 0, 0], [0, 3, 0]],
]

#: Builders of the bundled datasets
DATASETS: Dict[str, Callable[[], Dataset]] = {
    "latin_3x3x3": lambda: Dataset("latin_3x3x3", Table3D.from_array(LATIN_3X3X3)),
    "navy_officer_10x6x2": lambda: _navy_dataset("navy_officer_10x6x2", ["officer"]),
    "navy_enlisted_9x6x2": lambda: _navy_dataset("navy_enlisted_9x6x2", ["enlisted"]),
    "navy_full_19x6x2": lambda: _navy_dataset("navy_full_19x6x2", ["officer", "enlisted"]),
}


def list_datasets() -> List[str]:
    """Get the names of the bundled datasets."""
    return sorted(DATASETS)


def load_dataset(name: str) -> Dataset:
    """Load a bundled dataset by name.

    Raises
    ------
    UnknownDataset
        If there is no dataset with that name.
    """
    try:
        builder = DATASETS[name]
    except KeyError:
        raise UnknownDataset(
            f"unknown dataset {name!r}; choose from {', '.join(list_datasets())}"
        ) from None
    dataset = builder()
    logger.debug("loaded dataset %s with dims %s", name, dataset.table.dims)
    return dataset
