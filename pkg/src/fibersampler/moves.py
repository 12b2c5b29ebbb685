# -*- coding: utf-8 -*-

"""Basic moves, general kernel moves and replay of move decompositions.

A basic move ``(i, i'; j, j'; k, k')`` is the ±1 pattern on a 2×2×2 minor::

    (i, j, k)   +1    (i, j, k')   -1    (i, j', k)   -1    (i, j', k')   +1
    (i', j, k)  -1    (i', j, k')  +1    (i', j', k)  +1    (i', j', k')  -1

Indices are 1-based here and in every file format, matching the usual
notation. Flat cell positions are 0-based.
"""

import json
import logging
from dataclasses import dataclass
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .table import (
    DimensionMismatch,
    Dims,
    FloorViolation,
    Table3D,
    apply_move,
    check_dims,
    check_floor,
    compute_margins,
    flat_index,
)
from .util import InputError, ParseError, ReplayError

__all__ = [
    "BasicMove",
    "GeneralMove",
    "SignedMove",
    "MoveSet",
    "Decomposition",
    "ReplayReport",
    "enumerate_basic_moves",
    "n_basic_moves",
    "kernel_check",
    "replay_decomposition",
    "load_decomposition",
    "indispensable_decompositions",
    "indispensable_move",
    "DimensionTooSmall",
    "EndMismatch",
    "MarginMismatch",
]

logger = logging.getLogger(__name__)


class DimensionTooSmall(InputError):
    """Raised when an axis has fewer than two categories and so carries no moves."""


class MarginMismatch(InputError):
    """Raised when the two ends of a decomposition are not in the same fiber."""


class EndMismatch(ReplayError):
    """Raised when a replayed decomposition does not land on the expected table."""

    def __init__(self, message: str, diff: np.ndarray):
        super().__init__(message)
        self.diff = diff


@dataclass(frozen=True, order=True)
class BasicMove:
    """A canonical basic move ``(i, i2; j, j2; k, k2)`` with 1-based indices."""

    i: int
    i2: int
    j: int
    j2: int
    k: int
    k2: int

    def __post_init__(self):
        for lo, hi, axis in ((self.i, self.i2, "i"), (self.j, self.j2, "j"), (self.k, self.k2, "k")):
            if not 1 <= lo < hi:
                raise InputError(
                    f"basic move needs 1 <= {axis} < {axis}2, got {axis}={lo}, {axis}2={hi}"
                )

    def check_within(self, dims: Dims) -> None:
        """Raise :class:`DimensionMismatch` if the move does not fit in ``dims``."""
        I, J, K = dims  # noqa:E741
        if self.i2 > I or self.j2 > J or self.k2 > K:
            raise DimensionMismatch(f"{self} does not fit in dims {tuple(dims)}")

    def cells(self, dims: Dims) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Get the flat positions of the ``+1`` cells and of the ``-1`` cells."""
        self.check_within(dims)
        i, i2, j, j2, k, k2 = (v - 1 for v in (self.i, self.i2, self.j, self.j2, self.k, self.k2))
        plus = (
            flat_index(dims, i, j, k),
            flat_index(dims, i, j2, k2),
            flat_index(dims, i2, j, k2),
            flat_index(dims, i2, j2, k),
        )
        minus = (
            flat_index(dims, i, j, k2),
            flat_index(dims, i, j2, k),
            flat_index(dims, i2, j, k),
            flat_index(dims, i2, j2, k2),
        )
        return plus, minus

    def flat_delta(self, dims: Dims) -> np.ndarray:
        """Get the dense expansion as a flat array."""
        plus, minus = self.cells(dims)
        delta = np.zeros(dims[0] * dims[1] * dims[2], dtype=np.int64)
        delta[list(plus)] = 1
        delta[list(minus)] = -1
        return delta

    def to_dense(self, dims: Dims) -> np.ndarray:
        """Get the dense expansion as an ``(I, J, K)`` array."""
        return self.flat_delta(dims).reshape(dims)

    def __str__(self) -> str:
        return f"({self.i},{self.i2};{self.j},{self.j2};{self.k},{self.k2})"


class GeneralMove:
    """An arbitrary integer move, given by its dense ``(I, J, K)`` delta."""

    def __init__(self, delta: Any):
        arr = np.array(delta, dtype=np.int64)
        if arr.ndim != 3:
            raise DimensionMismatch(f"a move needs a 3-d delta, got {arr.ndim} dims")
        arr.flags.writeable = False
        self.delta = arr

    @classmethod
    def between(cls, plus: Table3D, minus: Table3D) -> "GeneralMove":
        """Build the move ``plus - minus``."""
        if plus.dims != minus.dims:
            raise DimensionMismatch(f"{plus.dims} vs {minus.dims}")
        return cls((plus.cells - minus.cells).reshape(plus.dims))

    @property
    def dims(self) -> Dims:
        return self.delta.shape  # type: ignore

    def flat_delta(self, dims: Dims) -> np.ndarray:
        if tuple(dims) != self.dims:
            raise DimensionMismatch(f"move has dims {self.dims}, table has {tuple(dims)}")
        return self.delta.ravel()

    def to_dense(self, dims: Dims) -> np.ndarray:
        return self.flat_delta(dims).reshape(dims)

    def kernel_check(self) -> bool:
        """Return if all three two-way margins of the delta vanish."""
        return _margins_vanish(self.delta)

    def __str__(self) -> str:
        return f"GeneralMove(dims={self.dims}, degree={int(np.abs(self.delta).sum()) // 2})"


Move = Union[BasicMove, GeneralMove]


@dataclass(frozen=True)
class SignedMove:
    """A move together with the sign it is added with."""

    move: Move
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InputError(f"sign must be +1 or -1, got {self.sign}")

    @classmethod
    def from_indices(
        cls, i: int, i2: int, j: int, j2: int, k: int, k2: int, sign: int = 1
    ) -> "SignedMove":
        """Build a signed basic move from indices in any order.

        Swapping the two indices on one axis negates a basic move, so the
        indices are sorted and the sign is flipped once per swapped axis.
        """
        for a, b in ((i, i2), (j, j2), (k, k2)):
            if a > b:
                sign = -sign
        return cls(
            BasicMove(min(i, i2), max(i, i2), min(j, j2), max(j, j2), min(k, k2), max(k, k2)),
            sign,
        )

    def flat_delta(self, dims: Dims) -> np.ndarray:
        """Get the signed dense expansion as a flat array."""
        return self.sign * self.move.flat_delta(dims)

    def negated(self) -> "SignedMove":
        """Get the same move with the opposite sign."""
        return SignedMove(self.move, -self.sign)

    def to_json(self) -> Dict[str, int]:
        """Serialize a signed basic move to the decomposition step format."""
        if not isinstance(self.move, BasicMove):
            raise TypeError("only basic moves have an index representation")
        m = self.move
        return dict(i=m.i, i2=m.i2, j=m.j, j2=m.j2, k=m.k, k2=m.k2, sign=self.sign)

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}{self.move}"


class MoveSet:
    """All canonical basic moves for a set of dimensions.

    Besides the moves themselves this keeps two ``n × 4`` arrays with the flat
    positions of the ``+1`` and ``-1`` cells of every move, which is what the
    sampler and the fiber oracle work with.
    """

    def __init__(self, dims: Dims, moves: Sequence[BasicMove]):
        self.dims = check_dims(dims)
        self.moves: List[BasicMove] = list(moves)
        if len(set(self.moves)) != len(self.moves):
            raise InputError("duplicate moves in move set")
        pairs = [m.cells(self.dims) for m in self.moves]
        self.plus = np.array([p for p, _ in pairs], dtype=np.int64).reshape(-1, 4)
        self.minus = np.array([m for _, m in pairs], dtype=np.int64).reshape(-1, 4)

    def __len__(self) -> int:
        return len(self.moves)

    def __iter__(self) -> Iterator[BasicMove]:
        return iter(self.moves)

    def __getitem__(self, index: int) -> BasicMove:
        return self.moves[index]

    def dense(self) -> np.ndarray:
        """Get every move's flat dense expansion as the rows of a matrix."""
        rv = np.zeros((len(self), self.dims[0] * self.dims[1] * self.dims[2]), dtype=np.int64)
        rows = np.arange(len(self))[:, None]
        rv[rows, self.plus] = 1
        rv[rows, self.minus] = -1
        return rv


def n_basic_moves(dims: Dims) -> int:
    """Count the basic moves, ``C(I, 2) * C(J, 2) * C(K, 2)``."""
    I, J, K = dims  # noqa:E741
    return comb(I, 2) * comb(J, 2) * comb(K, 2)


def enumerate_basic_moves(dims: Dims) -> MoveSet:
    """Generate the catalog of basic moves.

    Parameters
    ----------
    dims :
        The sizes ``(I, J, K)``, each at least two.

    Returns
    -------
    :
        All canonical basic moves in lexicographic order of their indices.

    Raises
    ------
    DimensionTooSmall
        If an axis has fewer than two categories.
    """
    dims = check_dims(dims)
    if min(dims) < 2:
        raise DimensionTooSmall(f"basic moves need at least 2 categories per axis: {dims}")
    I, J, K = dims  # noqa:E741
    moves = [
        BasicMove(i, i2, j, j2, k, k2)
        for i, i2 in combinations(range(1, I + 1), 2)
        for j, j2 in combinations(range(1, J + 1), 2)
        for k, k2 in combinations(range(1, K + 1), 2)
    ]
    return MoveSet(dims, moves)


def _margins_vanish(delta: np.ndarray) -> bool:
    return not (delta.sum(axis=0).any() or delta.sum(axis=1).any() or delta.sum(axis=2).any())


def kernel_check(move: Union[Move, SignedMove], dims: Union[Dims, None] = None) -> bool:
    """Return if a move lies in the kernel of the design matrix.

    Parameters
    ----------
    move :
        A general move, a basic move or a signed move.
    dims :
        The dimensions, needed to expand basic moves.

    Returns
    -------
    :
        True if all three two-way margins of the move are identically zero.
    """
    if isinstance(move, SignedMove):
        move = move.move
    if isinstance(move, GeneralMove):
        return move.kernel_check()
    if dims is None:
        raise ValueError("dims are needed to expand a basic move")
    return _margins_vanish(move.to_dense(check_dims(dims)))


class ReplayReport(BaseModel):
    """The outcome of replaying a decomposition."""

    success: bool
    floor: int
    steps: int
    #: Smallest cell over the start, every intermediate and the end table
    min_cell: int
    #: 1-based ``(i, j, k)`` of every cell that was negative at some point
    negative_cells: List[Tuple[int, int, int]]
    n_negative_cells: int
    max_simultaneous_negative: int
    final: Dict[str, List[int]]


class Decomposition:
    """A path of signed moves from ``start`` to ``expected_end``."""

    def __init__(
        self,
        start: Table3D,
        steps: Sequence[SignedMove],
        expected_end: Table3D,
        floor: int = 1,
    ):
        if start.dims != expected_end.dims:
            raise DimensionMismatch(f"{start.dims} vs {expected_end.dims}")
        self.start = start
        self.steps = list(steps)
        self.expected_end = expected_end
        self.floor = check_floor(floor)

    def with_floor(self, floor: int) -> "Decomposition":
        """Get the same decomposition replayed under another floor."""
        return Decomposition(self.start, self.steps, self.expected_end, floor=floor)

    def to_json(self) -> Dict[str, Any]:
        """Serialize to ``{"start", "end", "floor", "steps"}``."""
        return {
            "start": self.start.to_json(),
            "end": self.expected_end.to_json(),
            "floor": self.floor,
            "steps": [step.to_json() for step in self.steps],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Decomposition":
        """Load a decomposition from its JSON form."""
        try:
            steps = [
                SignedMove.from_indices(
                    s["i"], s["i2"], s["j"], s["j2"], s["k"], s["k2"], s.get("sign", 1)
                )
                for s in data["steps"]
            ]
            return cls(
                Table3D.from_json(data["start"]),
                steps,
                Table3D.from_json(data["end"]),
                floor=data.get("floor", 1),
            )
        except (KeyError, TypeError) as err:
            raise ParseError(f"malformed decomposition: missing {err}") from err


def load_decomposition(path: Union[str, Path]) -> Decomposition:
    """Load a decomposition JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path} is not valid JSON: {err}") from err
    return Decomposition.from_json(data)


def replay_decomposition(decomposition: Decomposition) -> ReplayReport:
    """Apply the steps of a decomposition in order with the floor enforced.

    Parameters
    ----------
    decomposition :
        The start table, the steps, the expected end and the floor.

    Returns
    -------
    :
        A report with the minimum cell seen and the cells that went negative.

    Raises
    ------
    MarginMismatch
        If start and expected end are not in the same fiber.
    FloorViolation
        If a step pushes a cell below the floor. ``step`` holds its 0-based
        index.
    EndMismatch
        If the last table is not the expected end. ``diff`` holds
        ``expected - actual``.
    """
    start, end, floor = decomposition.start, decomposition.expected_end, decomposition.floor
    if compute_margins(start) != compute_margins(end):
        raise MarginMismatch("start and expected end have different margins")
    current = start.with_floor(floor)
    dims = current.dims
    ever_negative = set(current.negative_cells().tolist())
    min_cell = current.min_cell
    max_simultaneous = len(ever_negative)
    for index, step in enumerate(decomposition.steps):
        try:
            current = apply_move(current, step, floor)
        except FloorViolation as err:
            raise FloorViolation(f"step {index} ({step}): {err}", step=index) from err
        negative = current.negative_cells()
        ever_negative.update(negative.tolist())
        max_simultaneous = max(max_simultaneous, len(negative))
        min_cell = min(min_cell, current.min_cell)
        logger.debug("step %d %s: min cell %d", index, step, current.min_cell)
    if current != end:
        diff = end.cells - current.cells
        raise EndMismatch(
            f"replay ends {int(np.abs(diff).sum())} units away from the expected table",
            diff=diff,
        )
    negative_cells = sorted(
        tuple(int(v) + 1 for v in np.unravel_index(flat, dims))  # type: ignore
        for flat in ever_negative
    )
    return ReplayReport(
        success=True,
        floor=floor,
        steps=len(decomposition.steps),
        min_cell=min_cell,
        negative_cells=negative_cells,
        n_negative_cells=len(negative_cells),
        max_simultaneous_negative=max_simultaneous,
        final=current.to_json(),
    )


# fmt: off
#: The two indispensable 3×4×6 moves, split into positive and negative
#: parts. Each block is one ``i``; rows are ``j`` and columns are ``k``.
INDISPENSABLE_PARTS: Dict[str, Tuple[List[List[List[int]]], List[List[List[int]]]]] = {
    "b1": (
        [
            [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 1]],
            [[0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 0, 1]],
            [[0, 0, 0, 1, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 2], [1, 0, 0, 0, 1, 0]],
        ],
        [
            [[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 1], [1, 0, 0, 0, 0, 0]],
            [[0, 0, 0, 1, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 1, 0]],
            [[1, 0, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 0, 2]],
        ],
    ),
    "b2": (
        [
            [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]],
            [[0, 0, 0, 0, 0, 1], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 1], [1, 0, 0, 0, 1, 0]],
            [[0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 0, 2]],
        ],
        [
            [[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0], [1, 0, 0, 0, 0, 0]],
            [[1, 0, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 2]],
            [[0, 0, 0, 0, 0, 1], [0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1], [0, 0, 0, 1, 1, 0]],
        ],
    ),
}

#: Steps from the positive to the negative part, as (sign, i, i2, j, j2, k, k2)
INDISPENSABLE_STEPS: Dict[str, List[Tuple[int, int, int, int, int, int, int]]] = {
    "b1": [
        (-1, 2, 3, 3, 4, 5, 6),
        (-1, 1, 3, 3, 4, 1, 6),
        (+1, 2, 3, 2, 3, 3, 5),
        (-1, 2, 3, 1, 3, 1, 4),
        (-1, 1, 2, 2, 3, 2, 3),
        (-1, 1, 2, 1, 3, 1, 2),
    ],
    "b2": [
        (+1, 2, 3, 2, 4, 5, 6),
        (+1, 2, 3, 3, 4, 4, 6),
        (+1, 2, 3, 1, 2, 2, 6),
        (-1, 1, 2, 3, 4, 1, 4),
        (-1, 1, 2, 1, 3, 1, 3),
        (+1, 1, 2, 1, 2, 2, 3),
    ],
}
# fmt: on


def indispensable_decompositions(floor: int = 1) -> Dict[str, Decomposition]:
    """Get the basic-move paths joining the two parts of each 3×4×6 indispensable move.

    Parameters
    ----------
    floor :
        The floor to attach to the decompositions. Both paths need one cell
        at ``-1`` at some point, so they only replay with a floor of one or
        more.

    Returns
    -------
    :
        A dictionary from ``"b1"`` and ``"b2"`` to their decompositions.
    """
    rv = {}
    for name, (plus, minus) in INDISPENSABLE_PARTS.items():
        steps = [
            SignedMove(BasicMove(i, i2, j, j2, k, k2), sign)
            for sign, i, i2, j, j2, k, k2 in INDISPENSABLE_STEPS[name]
        ]
        rv[name] = Decomposition(
            Table3D.from_array(plus), steps, Table3D.from_array(minus), floor=floor
        )
    return rv


def indispensable_move(name: str) -> GeneralMove:
    """Get an indispensable 3×4×6 move (``"b1"`` or ``"b2"``) as a general move."""
    plus, minus = INDISPENSABLE_PARTS[name]
    return GeneralMove.between(Table3D.from_array(plus), Table3D.from_array(minus))
