# -*- coding: utf-8 -*-

"""Exhaustive enumeration of small fibers by depth-first cell assignment.

Cells are assigned in flat order (``i`` outermost, ``k`` innermost) and values
are tried in increasing order, so tables come out in lexicographic order of
their flat cells. Every cell lies on three lines (one per margin). A value is
only tried if each of its lines can still be completed: the other open cells of
a line can absorb at most their static capacity and at least ``-t`` each. The
last open cell of a line is therefore forced, and every leaf of the search is
a member of the fiber.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..constants import get_fiber_cap
from ..table import Dims, MarginSet, Table3D, check_floor
from ..util import CapExceeded, InputError

__all__ = [
    "Fiber",
    "enumerate_fiber",
    "FiberTooLarge",
    "InfeasibleMargins",
]

logger = logging.getLogger(__name__)


class FiberTooLarge(CapExceeded):
    """Raised when a fiber has more members than the enumeration cap allows."""

    def __init__(self, message: str, cap: int, partial_count: int):
        super().__init__(message)
        self.cap = cap
        self.partial_count = partial_count


class InfeasibleMargins(InputError):
    """Raised when no table has the requested margins and floor."""


class Fiber:
    """All integer tables with given margins and every cell at least ``-floor``."""

    def __init__(
        self,
        margins: MarginSet,
        floor: int,
        tables: np.ndarray,
        max_negative: Optional[int] = None,
    ):
        self.margins = margins
        self.floor = floor
        self.max_negative = max_negative
        self.dims: Dims = margins.dims
        tables = np.asarray(tables, dtype=np.int64).reshape(-1, int(np.prod(self.dims)))
        tables.flags.writeable = False
        self.tables = tables
        self._index: Optional[Dict[Tuple[int, ...], int]] = None

    def __len__(self) -> int:
        return self.tables.shape[0]

    def __getitem__(self, index: int) -> Table3D:
        return Table3D(self.dims, self.tables[index], floor=self.floor)

    def __iter__(self) -> Iterator[Table3D]:
        for index in range(len(self)):
            yield self[index]

    @property
    def index(self) -> Dict[Tuple[int, ...], int]:
        """A lookup from flat cell tuples to positions in the fiber."""
        if self._index is None:
            self._index = {row: i for i, row in enumerate(map(tuple, self.tables.tolist()))}
        return self._index

    def index_of(self, table: Table3D) -> int:
        """Get the position of a table in the fiber, raising :class:`KeyError` if absent."""
        return self.index[table.key]

    def __contains__(self, table: Table3D) -> bool:
        return table.dims == self.dims and table.key in self.index

    def nonnegative_mask(self) -> np.ndarray:
        """Get a boolean mask of the members with no negative cell."""
        return (self.tables >= 0).all(axis=1)

    def nonnegative_indices(self) -> np.ndarray:
        """Get the positions of the members with no negative cell."""
        return np.flatnonzero(self.nonnegative_mask())

    def __repr__(self) -> str:
        return f"Fiber(dims={self.dims}, floor={self.floor}, size={len(self)})"


class _CapReached(Exception):
    pass


class _FiberSearch:
    """The static plan of a depth-first fiber search."""

    def __init__(
        self,
        margins: MarginSet,
        floor: int,
        cap: int,
        max_negative: Optional[int],
    ):
        I, J, K = dims = margins.dims  # noqa:E741
        t = floor
        self.floor = floor
        self.cap = cap
        self.max_negative = max_negative
        self.size = I * J * K
        self.rem = margins.flatten().tolist()

        # Largest value any cell can take, from each of its three lines
        cap0 = np.minimum(
            np.minimum(
                margins.jk[None, :, :] + t * (I - 1),
                margins.ik[:, None, :] + t * (J - 1),
            ),
            margins.ij[:, :, None] + t * (K - 1),
        )
        self.cell_cap = cap0

        def _later(axis: int) -> np.ndarray:
            rev = np.flip(np.cumsum(np.flip(cap0, axis=axis), axis=axis), axis=axis)
            return rev - cap0

        later_jk, later_ik, later_ij = _later(0), _later(1), _later(2)
        self.plan: List[Tuple[int, int, int, int, int, int, int, int, int]] = []
        for flat in range(self.size):
            i, j, k = np.unravel_index(flat, dims)
            self.plan.append(
                (
                    int(j * K + k),
                    int(J * K + i * K + k),
                    int(J * K + I * K + i * J + j),
                    int(I - 1 - i),
                    int(J - 1 - j),
                    int(K - 1 - k),
                    int(later_jk[i, j, k]),
                    int(later_ik[i, j, k]),
                    int(later_ij[i, j, k]),
                )
            )

    def bounds(self, rem: List[int], cell: int) -> Tuple[int, int]:
        """Get the range of values a cell may take given the line remainders."""
        l0, l1, l2, a0, a1, a2, c0, c1, c2 = self.plan[cell]
        t = self.floor
        r0, r1, r2 = rem[l0], rem[l1], rem[l2]
        lo = max(-t, r0 - c0, r1 - c1, r2 - c2)
        hi = min(r0 + t * a0, r1 + t * a1, r2 + t * a2)
        return lo, hi

    def first_values(self) -> List[int]:
        """Get the candidate values of the first cell, the unit of parallel work."""
        lo, hi = self.bounds(self.rem, 0)
        return list(range(lo, hi + 1))

    def run(self, first_value: int) -> List[Tuple[int, ...]]:
        """Enumerate every table whose first cell equals ``first_value``."""
        plan, size, t = self.plan, self.size, self.floor
        cap, max_negative = self.cap, self.max_negative
        rem = list(self.rem)
        cells = [0] * size
        out: List[Tuple[int, ...]] = []

        def visit(cell: int, n_negative: int) -> None:
            if cell == size:
                out.append(tuple(cells))
                if len(out) > cap:
                    raise _CapReached
                return
            l0, l1, l2, a0, a1, a2, c0, c1, c2 = plan[cell]
            r0, r1, r2 = rem[l0], rem[l1], rem[l2]
            lo = max(-t, r0 - c0, r1 - c1, r2 - c2)
            hi = min(r0 + t * a0, r1 + t * a1, r2 + t * a2)
            if cell == 0:
                lo = hi = first_value
            for x in range(lo, hi + 1):
                negative = n_negative + (x < 0)
                if max_negative is not None and negative > max_negative:
                    continue
                cells[cell] = x
                rem[l0], rem[l1], rem[l2] = r0 - x, r1 - x, r2 - x
                visit(cell + 1, negative)
            rem[l0], rem[l1], rem[l2] = r0, r1, r2

        try:
            visit(0, 0)
        except _CapReached:
            pass
        return out


def _run_search(search: _FiberSearch, first_value: int) -> List[Tuple[int, ...]]:
    return search.run(first_value)


def _check_feasible(margins: MarginSet, floor: int) -> None:
    if not margins.is_consistent():
        raise InfeasibleMargins(
            f"margins are inconsistent (grand totals {margins.totals})"
        )
    I, J, K = margins.dims  # noqa:E741
    for name, matrix, length in (("jk", margins.jk, I), ("ik", margins.ik, J), ("ij", margins.ij, K)):
        if matrix.size and matrix.min() < -floor * length:
            raise InfeasibleMargins(
                f"{name} margin entry {matrix.min()} is below what {length} cells "
                f"at -{floor} can reach"
            )


def enumerate_fiber(
    margins: MarginSet,
    floor: int = 0,
    cap: Optional[int] = None,
    workers: int = 1,
    max_negative: Optional[int] = None,
    progress: bool = False,
) -> Fiber:
    """Enumerate every integer table with the given margins and floor.

    Parameters
    ----------
    margins :
        The jk, ik and ij margins.
    floor :
        The relaxation depth ``t``; cells may go down to ``-t``.
    cap :
        The largest number of tables to produce. Defaults to the
        ``FIBERSAMPLER_CAP`` setting.
    workers :
        Split the candidate values of the first cell over this many
        processes. Results are concatenated in value order, so the output
        does not depend on the number of workers.
    max_negative :
        If given, only keep tables with at most this many negative cells.
    progress :
        Show a progress bar over the values of the first cell.

    Returns
    -------
    :
        The fiber, with members in lexicographic order of their flat cells.

    Raises
    ------
    InfeasibleMargins
        If the margins are inconsistent or no table has them.
    FiberTooLarge
        If the fiber has more than ``cap`` members.
    """
    floor = check_floor(floor)
    if cap is None:
        cap = get_fiber_cap()
    if max_negative is not None and max_negative < 0:
        raise InputError(f"max_negative must be non-negative, got {max_negative}")
    _check_feasible(margins, floor)

    search = _FiberSearch(margins, floor, cap, max_negative)
    values = search.first_values()
    chunks: List[List[Tuple[int, ...]]] = []
    total = 0
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(_run_search, [search] * len(values), values)
            for chunk in tqdm(results, total=len(values), desc="Enumerating", unit="branch", disable=not progress):
                chunks.append(chunk)
                total += len(chunk)
    else:
        for value in tqdm(values, desc="Enumerating", unit="branch", disable=not progress):
            chunk = search.run(value)
            chunks.append(chunk)
            total += len(chunk)
            if total > cap:
                break
    if total > cap:
        raise FiberTooLarge(
            f"fiber has more than {cap} tables (stopped after {total})",
            cap=cap,
            partial_count=total,
        )
    if total == 0:
        raise InfeasibleMargins(f"no table has these margins at floor {floor}")

    tables = np.array([row for chunk in chunks for row in chunk], dtype=np.int64)
    logger.info(f"enumerated {total} tables with dims {margins.dims} at floor {floor}")
    return Fiber(margins, floor, tables, max_negative=max_negative)
