# -*- coding: utf-8 -*-

"""Integer three-way tables, their two-way margins and the χ² statistic.

Cells are stored as a flat ``int64`` array in row-major ``(i, j, k)`` order so
that the cell ``(i, j, k)`` (0-based) lives at ``i * J * K + j * K + k``. Every
table carries its floor ``t``: a standard table has ``t = 0`` and no negative
cells, a relaxed table at depth ``t`` may hold cells down to ``-t``.
"""

from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .constants import ZERO_FITTED_THRESHOLD
from .util import InputError, NumericalError, ReplayError

if TYPE_CHECKING:
    from .model import FittedTable
    from .moves import SignedMove

__all__ = [
    "Dims",
    "Table3D",
    "MarginSet",
    "check_dims",
    "check_floor",
    "flat_index",
    "compute_margins",
    "apply_move",
    "chi_square",
    "relabel",
    "DimensionMismatch",
    "NegativeCount",
    "FloorViolation",
    "ZeroFittedCell",
]

Dims = Tuple[int, int, int]
TableJson = Dict[str, Any]


class DimensionMismatch(InputError):
    """Raised when cell counts, margins or labels disagree with the dimensions."""


class NegativeCount(InputError):
    """Raised when a table holds a cell below its floor."""


class FloorViolation(ReplayError):
    """Raised when applying a move would push a cell below the floor."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class ZeroFittedCell(NumericalError):
    """Raised when a structurally zero fitted cell has a nonzero observation."""


def check_dims(dims: Iterable[int], minimum: int = 1) -> Dims:
    """Validate a dimension triple.

    Parameters
    ----------
    dims :
        The sizes ``(I, J, K)``.
    minimum :
        The smallest size allowed on every axis.

    Returns
    -------
    :
        The dimensions as a tuple of three ints.

    Raises
    ------
    DimensionMismatch
        If there are not exactly three sizes or one of them is too small.
    """
    rv = tuple(int(d) for d in dims)
    if len(rv) != 3:
        raise DimensionMismatch(f"expected three dimensions, got {rv}")
    if any(d < minimum for d in rv):
        raise DimensionMismatch(f"every dimension must be at least {minimum}: {rv}")
    return rv  # type: ignore


def check_floor(floor: int) -> int:
    """Validate a relaxation depth and return it as an int."""
    floor = int(floor)
    if floor < 0:
        raise InputError(f"relaxation depth must be non-negative, got {floor}")
    return floor


def flat_index(dims: Dims, i: int, j: int, k: int) -> int:
    """Get the flat position of the 0-based cell ``(i, j, k)``."""
    _, J, K = dims
    return (i * J + j) * K + k


class Table3D:
    """An immutable integer ``I × J × K`` table with an explicit floor."""

    __slots__ = ("dims", "floor", "_cells")

    def __init__(
        self,
        dims: Iterable[int],
        cells: Union[Sequence[int], np.ndarray],
        floor: int = 0,
    ):
        """Initialize the table.

        Parameters
        ----------
        dims :
            The sizes ``(I, J, K)``.
        cells :
            The ``I * J * K`` counts in row-major order.
        floor :
            The relaxation depth ``t``; every cell must be at least ``-t``.

        Raises
        ------
        DimensionMismatch
            If the number of cells does not match the dimensions.
        NegativeCount
            If a cell lies below ``-floor``.
        """
        self.dims = check_dims(dims)
        self.floor = check_floor(floor)
        arr = np.array(cells, dtype=np.int64).ravel()
        size = self.dims[0] * self.dims[1] * self.dims[2]
        if arr.shape[0] != size:
            raise DimensionMismatch(
                f"dims {self.dims} need {size} cells, got {arr.shape[0]}"
            )
        if size and arr.min() < -self.floor:
            raise NegativeCount(
                f"cell value {arr.min()} is below the floor -{self.floor}"
            )
        arr.flags.writeable = False
        self._cells = arr

    @classmethod
    def from_array(cls, array: Any, floor: int = 0) -> "Table3D":
        """Build a table from a nested list or a three-dimensional array."""
        arr = np.asarray(array, dtype=np.int64)
        if arr.ndim != 3:
            raise DimensionMismatch(f"expected a 3-d array, got {arr.ndim} dims")
        return cls(arr.shape, arr.ravel(), floor=floor)

    @classmethod
    def zeros(cls, dims: Iterable[int], floor: int = 0) -> "Table3D":
        """Build the all-zeros table."""
        dims = check_dims(dims)
        return cls(dims, np.zeros(dims[0] * dims[1] * dims[2]), floor=floor)

    @classmethod
    def ones(cls, dims: Iterable[int], floor: int = 0) -> "Table3D":
        """Build the all-ones table."""
        dims = check_dims(dims)
        return cls(dims, np.ones(dims[0] * dims[1] * dims[2]), floor=floor)

    @property
    def cells(self) -> np.ndarray:
        """The read-only flat cell array."""
        return self._cells

    @property
    def size(self) -> int:
        """The number of cells."""
        return self._cells.shape[0]

    @property
    def total(self) -> int:
        """The grand total."""
        return int(self._cells.sum())

    @property
    def min_cell(self) -> int:
        """The smallest cell value."""
        return int(self._cells.min())

    @property
    def key(self) -> Tuple[int, ...]:
        """The cells as a tuple, usable as a hash key."""
        return tuple(self._cells.tolist())

    def is_nonnegative(self) -> bool:
        """Return if no cell is negative."""
        return bool((self._cells >= 0).all())

    def negative_cells(self) -> np.ndarray:
        """Get the flat positions of the negative cells."""
        return np.flatnonzero(self._cells < 0)

    def to_array(self) -> np.ndarray:
        """Get a read-only ``(I, J, K)`` view of the cells."""
        return self._cells.reshape(self.dims)

    def with_floor(self, floor: int) -> "Table3D":
        """Get the same cells under another floor."""
        return Table3D(self.dims, self._cells, floor=floor)

    def to_json(self) -> TableJson:
        """Serialize the table to the ``{"dims", "counts"}`` format."""
        return {"dims": list(self.dims), "counts": self._cells.tolist()}

    @classmethod
    def from_json(cls, data: TableJson, floor: int = 0) -> "Table3D":
        """Load a table from the ``{"dims", "counts"}`` format.

        Parameters
        ----------
        data :
            A dictionary with ``dims`` and ``counts`` keys.
        floor :
            The floor to validate against.

        Returns
        -------
        :
            The table.
        """
        try:
            dims = data["dims"]
            counts = data["counts"]
        except (KeyError, TypeError) as err:
            raise DimensionMismatch(f"table JSON is missing {err}") from err
        return cls(dims, counts, floor=floor)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Table3D):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._cells, other._cells)

    def __hash__(self) -> int:
        return hash((self.dims, self._cells.tobytes()))

    def __repr__(self) -> str:
        return f"Table3D(dims={self.dims}, floor={self.floor}, cells={self._cells.tolist()})"


class MarginSet:
    """The three two-way margins of a table, the vector ``b`` of the fiber."""

    __slots__ = ("jk", "ik", "ij")

    def __init__(self, jk: Any, ik: Any, ij: Any):
        """Initialize the margins.

        Parameters
        ----------
        jk :
            The ``J × K`` sums over ``i``.
        ik :
            The ``I × K`` sums over ``j``.
        ij :
            The ``I × J`` sums over ``k``.
        """
        jk, ik, ij = (np.array(m, dtype=np.int64) for m in (jk, ik, ij))
        if jk.ndim != 2 or ik.ndim != 2 or ij.ndim != 2:
            raise DimensionMismatch("margins must be matrices")
        J, K = jk.shape
        I = ik.shape[0]  # noqa:E741
        if ik.shape != (I, K) or ij.shape != (I, J):
            raise DimensionMismatch(
                f"margin shapes disagree: jk {jk.shape}, ik {ik.shape}, ij {ij.shape}"
            )
        for m in (jk, ik, ij):
            m.flags.writeable = False
        self.jk = jk
        self.ik = ik
        self.ij = ij

    @property
    def dims(self) -> Dims:
        """The table dimensions these margins belong to."""
        return self.ik.shape[0], self.jk.shape[0], self.jk.shape[1]

    @property
    def totals(self) -> Tuple[int, int, int]:
        """The grand totals of the jk, ik and ij margins."""
        return int(self.jk.sum()), int(self.ik.sum()), int(self.ij.sum())

    def is_consistent(self) -> bool:
        """Check that the three margins describe the same one-way marginals.

        Equal grand totals are necessary but not sufficient: the ``i``, ``j``
        and ``k`` marginals implied by each pair of matrices have to agree too.
        """
        return (
            len(set(self.totals)) == 1
            and np.array_equal(self.jk.sum(axis=1), self.ij.sum(axis=0))
            and np.array_equal(self.jk.sum(axis=0), self.ik.sum(axis=0))
            and np.array_equal(self.ik.sum(axis=1), self.ij.sum(axis=1))
        )

    def flatten(self) -> np.ndarray:
        """Get ``b`` in design-matrix row order (jk, ik, then ij blocks)."""
        return np.concatenate([self.jk.ravel(), self.ik.ravel(), self.ij.ravel()])

    def shifted(self, t: int) -> "MarginSet":
        """Get the margins of ``u + t`` for any ``u`` with these margins.

        A cell floor of ``-t`` on tables with margins ``b`` is the same as a
        floor of zero on tables with margins ``b + t * A * 1``.
        """
        I, J, K = self.dims  # noqa:E741
        return MarginSet(self.jk + t * I, self.ik + t * J, self.ij + t * K)

    def to_json(self) -> Dict[str, List[List[int]]]:
        """Serialize the margins."""
        return {
            "jk": self.jk.tolist(),
            "ik": self.ik.tolist(),
            "ij": self.ij.tolist(),
        }

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, MarginSet):
            return NotImplemented
        return (
            np.array_equal(self.jk, other.jk)
            and np.array_equal(self.ik, other.ik)
            and np.array_equal(self.ij, other.ij)
        )

    def __hash__(self) -> int:
        return hash((self.jk.tobytes(), self.ik.tobytes(), self.ij.tobytes()))

    def __repr__(self) -> str:
        return f"MarginSet(dims={self.dims}, totals={self.totals})"


def compute_margins(table: Table3D) -> MarginSet:
    """Compute the jk, ik and ij margins of a table."""
    arr = table.to_array()
    return MarginSet(arr.sum(axis=0), arr.sum(axis=1), arr.sum(axis=2))


def apply_move(
    table: Table3D,
    move: "SignedMove",
    floor: Optional[int] = None,
) -> Table3D:
    """Add a signed move to a table.

    Parameters
    ----------
    table :
        The starting table.
    move :
        The move and the sign it is added with.
    floor :
        The relaxation depth to enforce. Defaults to the table's own floor.

    Returns
    -------
    :
        A new table with the same margins, carrying ``floor``.

    Raises
    ------
    FloorViolation
        If a resulting cell is below ``-floor``.
    """
    floor = table.floor if floor is None else check_floor(floor)
    cells = table.cells + move.flat_delta(table.dims)
    low = int(cells.min())
    if low < -floor:
        raise FloorViolation(f"applying {move} gives a cell of {low} below -{floor}")
    return Table3D(table.dims, cells, floor=floor)


def chi_square(observed: Table3D, fitted: "FittedTable") -> float:
    """Compute Pearson's χ² of a table against fitted means.

    Parameters
    ----------
    observed :
        The integer table.
    fitted :
        The fitted means with the same dimensions.

    Returns
    -------
    :
        ``sum((observed - fitted) ** 2 / fitted)``, where cells with a fitted
        mean below the structural-zero threshold and no observation
        contribute nothing.

    Raises
    ------
    DimensionMismatch
        If the dimensions differ.
    ZeroFittedCell
        If a structurally zero fitted cell has a nonzero observation.
    """
    if tuple(observed.dims) != tuple(fitted.dims):
        raise DimensionMismatch(f"{observed.dims} vs {fitted.dims}")
    obs = observed.cells.astype(float)
    mu = np.asarray(fitted.cells, dtype=float)
    zero = mu < ZERO_FITTED_THRESHOLD
    if np.any(obs[zero] != 0):
        bad = int(np.flatnonzero(zero & (obs != 0))[0])
        raise ZeroFittedCell(
            f"cell {np.unravel_index(bad, observed.dims)} has a zero fitted mean "
            f"but an observed count of {int(obs[bad])}"
        )
    live = ~zero
    return float(np.sum((obs[live] - mu[live]) ** 2 / mu[live]))


def relabel(table: Table3D, perms: Sequence[Sequence[int]]) -> Table3D:
    """Permute the categories of each axis.

    Parameters
    ----------
    table :
        The table to relabel.
    perms :
        Three permutations, one per axis, giving the old index for every new
        position.

    Returns
    -------
    :
        The relabelled table.
    """
    if len(perms) != 3:
        raise DimensionMismatch("need one permutation per axis")
    for perm, n in zip(perms, table.dims):
        if sorted(perm) != list(range(n)):
            raise DimensionMismatch(f"{list(perm)} is not a permutation of {n} items")
    arr = table.to_array()[np.ix_(*[list(p) for p in perms])]
    return Table3D.from_array(arr, floor=table.floor)
