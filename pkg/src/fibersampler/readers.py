# -*- coding: utf-8 -*-

"""Readers that load three-way tables from files.

Readers register themselves by subclassing :class:`TableReader` and are
looked up through :data:`reader_resolver`, either by name (``"json"``,
``"csv"``) or by file suffix.
"""

import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, ClassVar, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from class_resolver import Resolver

from .datasets import Dataset
from .table import DimensionMismatch, Dims, Table3D
from .util import InputError, ParseError

__all__ = [
    "TableReader",
    "JsonTableReader",
    "CsvTableReader",
    "reader_resolver",
    "get_reader",
    "load_table",
]

logger = logging.getLogger(__name__)


class TableReader(ABC):
    """A reader turns a file into a :class:`Dataset`."""

    name: ClassVar[str]
    suffixes: ClassVar[Tuple[str, ...]]

    @abstractmethod
    def read(self, path: Path, dims: Optional[Dims] = None) -> Dataset:
        """Read the file at the given path, checking it against ``dims`` if given."""


class JsonTableReader(TableReader):
    """Read ``{"dims": [I, J, K], "counts": [...]}`` documents.

    Optional keys are ``name``, ``labels`` (three lists of category labels)
    and ``axes`` (three axis names).
    """

    name = "json"
    suffixes = (".json",)

    def read(self, path: Path, dims: Optional[Dims] = None) -> Dataset:
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ParseError(f"{path} is not valid JSON: {err}") from err
        if not isinstance(data, dict) or "dims" not in data or "counts" not in data:
            raise ParseError(f"{path} needs 'dims' and 'counts' keys")
        if dims is not None and tuple(data["dims"]) != tuple(dims):
            raise DimensionMismatch(f"{path} has dims {data['dims']}, expected {tuple(dims)}")
        table = Table3D(data["dims"], data["counts"])
        return Dataset(
            name=data.get("name", path.stem),
            table=table,
            labels=data.get("labels"),
            axes=data.get("axes"),
        )


def _categories(column: pd.Series) -> List[Any]:
    values = column.drop_duplicates().tolist()
    if pd.api.types.is_integer_dtype(column):
        return sorted(values)
    return values


class CsvTableReader(TableReader):
    """Read tables from CSV or TSV files.

    Two layouts are understood. In the long layout the first three columns
    hold the categories of the ``i``, ``j`` and ``k`` axes and the last one
    the count; integer categories are sorted, other categories keep the order
    of their first appearance and cells that do not appear are zero. In the
    flat layout a single ``count`` column lists every cell in row-major order,
    and the dimensions have to be given.
    """

    name = "csv"
    suffixes = (".csv", ".tsv")

    def read(self, path: Path, dims: Optional[Dims] = None) -> Dataset:
        sep = "\t" if path.suffix == ".tsv" else ","
        try:
            df = pd.read_csv(path, sep=sep)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
            raise ParseError(f"could not parse {path}: {err}") from err
        if df.isna().any().any():
            raise ParseError(f"{path} has missing values")
        if not pd.api.types.is_integer_dtype(df.iloc[:, -1]):
            raise ParseError(f"{path} has non-integer counts")
        if df.shape[1] == 1:
            return self._read_flat(path, df, dims)
        if df.shape[1] != 4:
            raise ParseError(f"{path} needs four columns (i, j, k, count), got {df.shape[1]}")
        return self._read_long(path, df, dims)

    @staticmethod
    def _read_flat(path: Path, df: pd.DataFrame, dims: Optional[Dims]) -> Dataset:
        if dims is None:
            raise ParseError(f"{path} only has counts, so the dimensions must be given")
        return Dataset(name=path.stem, table=Table3D(dims, df.iloc[:, 0].to_numpy()))

    @staticmethod
    def _read_long(path: Path, df: pd.DataFrame, dims: Optional[Dims]) -> Dataset:
        if df.iloc[:, :3].duplicated().any():
            raise ParseError(f"{path} lists a cell more than once")
        labels = [_categories(df.iloc[:, axis]) for axis in range(3)]
        shape = tuple(len(axis_labels) for axis_labels in labels)
        if dims is not None and shape != tuple(dims):
            raise DimensionMismatch(f"{path} has {shape} categories, expected {tuple(dims)}")
        positions = tuple(
            df.iloc[:, axis].map({label: n for n, label in enumerate(labels[axis])}).to_numpy()
            for axis in range(3)
        )
        arr = np.zeros(shape, dtype=np.int64)
        arr[positions] = df.iloc[:, 3].to_numpy()
        return Dataset(
            name=path.stem,
            table=Table3D.from_array(arr),
            labels=[[str(label) for label in axis_labels] for axis_labels in labels],
            axes=[str(c) for c in df.columns[:3]],
        )


reader_resolver = Resolver.from_subclasses(TableReader)


def get_reader(path: Path, format: Optional[str] = None) -> TableReader:  # noqa:A002
    """Get a reader by format name, or by the path's suffix if no name is given."""
    if format is not None:
        try:
            return reader_resolver.make(format)
        except (KeyError, ValueError):
            raise InputError(f"unknown table format {format!r}") from None
    for reader_cls in reader_resolver:
        if path.suffix.lower() in reader_cls.suffixes:
            return reader_cls()
    raise InputError(f"can not guess the table format of {path}")


def load_table(
    path: Union[str, Path],
    format: Optional[str] = None,  # noqa:A002
    dims: Optional[Dims] = None,
) -> Dataset:
    """Load a table from a file.

    Parameters
    ----------
    path :
        A JSON or CSV/TSV table file.
    format :
        The reader name. Guessed from the suffix if not given.
    dims :
        The expected dimensions. Needed for flat count files.

    Returns
    -------
    :
        The table with its labels.

    Raises
    ------
    ParseError
        If the file can not be parsed.
    DimensionMismatch
        If the cells or categories do not match the dimensions.
    NegativeCount
        If a count is negative.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    reader = get_reader(path, format)
    dataset = reader.read(path, dims=dims)
    logger.info(f"loaded {dataset.table.dims} table with total {dataset.table.total} from {path}")
    return dataset

