"""Shared exception bases and JSON helpers."""

import json
from typing import Any

import numpy as np

__all__ = [
    "InputError",
    "NumericalError",
    "CapExceeded",
    "ReplayError",
    "ParseError",
    "to_jsonable",
    "dump_json",
]


class InputError(ValueError):
    """Raised when user-provided tables, margins or settings are invalid."""


class NumericalError(ArithmeticError):
    """Raised when a numerical procedure cannot produce a usable answer."""


class CapExceeded(RuntimeError):
    """Raised when an enumeration grows past its configured cap."""


class ReplayError(Exception):
    """Raised when a move or a sequence of moves cannot be applied."""


class ParseError(InputError):
    """Raised when a table or decomposition file can not be parsed."""


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars and arrays nested in an object to plain Python.

    Parameters
    ----------
    obj :
        An object possibly containing numpy values inside dicts, lists and
        tuples.

    Returns
    -------
    :
        The same structure with numpy values replaced by ints, floats and
        lists.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj: Any, indent: int = 2) -> str:
    """Serialize an object to JSON with sorted keys.

    Sorted keys make the output stable so that a report can be parsed and
    re-emitted without any textual difference.

    Parameters
    ----------
    obj :
        A JSON-compatible object (numpy values are converted).
    indent :
        The indentation used for pretty printing.

    Returns
    -------
    :
        The JSON string.
    """
    return json.dumps(to_jsonable(obj), indent=indent, sort_keys=True)
