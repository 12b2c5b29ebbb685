# -*- coding: utf-8 -*-

"""Connectivity of fibers under a set of moves.

Two members of a fiber are adjacent when they differ by a move. Edges are
found by adding every move to every member at once and looking the results up
in the fiber's hash index; a union-find structure collects the components, so
no edge list has to be kept unless one is asked for explicitly.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from .enumeration import Fiber, FiberTooLarge, enumerate_fiber
from .unionfind import UnionFind
from ..constants import get_streaming_threshold
from ..moves import MoveSet, enumerate_basic_moves
from ..table import Dims, MarginSet, Table3D, check_dims, check_floor, compute_margins

__all__ = [
    "FiberGraph",
    "ConnectivityReport",
    "iter_edges",
    "connected_components",
    "build_fiber_graph",
    "verify_relaxed_connectivity",
    "all_ones_connected",
]

logger = logging.getLogger(__name__)


def iter_edges(fiber: Fiber, moves: MoveSet, progress: bool = False):
    """Iterate over the edges of a fiber graph, one move at a time.

    Each edge ``{u, v}`` is yielded once, as ``(u, v, move_index)`` arrays with
    ``tables[v] = tables[u] + moves[move_index]``.

    Parameters
    ----------
    fiber :
        The fiber.
    moves :
        The moves, with the fiber's dimensions.
    progress :
        Show a progress bar over the moves.

    Yields
    ------
    :
        For every move, the source positions, target positions and the move's
        index.
    """
    if moves.dims != fiber.dims:
        raise ValueError(f"moves have dims {moves.dims}, fiber has {fiber.dims}")
    tables = fiber.tables
    index = fiber.index
    dense = moves.dense()
    for move_index in tqdm(range(len(moves)), desc="Moves", unit="move", disable=not progress):
        candidates = tables + dense[move_index]
        sources = np.flatnonzero((candidates >= -fiber.floor).all(axis=1))
        if not len(sources):
            continue
        us, vs = [], []
        for u, row in zip(sources.tolist(), candidates[sources].tolist()):
            v = index.get(tuple(row))
            if v is not None:
                us.append(u)
                vs.append(v)
        yield np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), move_index


def connected_components(fiber: Fiber, moves: MoveSet, progress: bool = False) -> List[List[int]]:
    """Get the connected components of a fiber under a set of moves.

    Parameters
    ----------
    fiber :
        The fiber.
    moves :
        The moves; each is applied with both signs.
    progress :
        Show a progress bar over the moves.

    Returns
    -------
    :
        Lists of member positions, largest component first and by smallest
        member on ties.
    """
    uf = UnionFind(len(fiber))
    for us, vs, _ in iter_edges(fiber, moves, progress=progress):
        for u, v in zip(us.tolist(), vs.tolist()):
            uf.union(u, v)
    groups = uf.groups()
    logger.info(f"fiber of {len(fiber)} tables has {len(groups)} components under {len(moves)} moves")
    return groups


class FiberGraph:
    """A fiber together with its materialized edges."""

    def __init__(self, fiber: Fiber, moves: MoveSet, edges: np.ndarray):
        self.fiber = fiber
        self.moves = moves
        #: Rows of ``(u, v, move index, sign)`` with ``v = u + sign * move``
        self.edges = edges

    def __len__(self) -> int:
        return self.edges.shape[0]

    def adjacency(self) -> Dict[int, List[Tuple[int, int, int]]]:
        """Get, for every member, its ``(neighbour, move index, sign)`` triples."""
        rv: Dict[int, List[Tuple[int, int, int]]] = defaultdict(list)
        for u, v, move_index, sign in self.edges.tolist():
            rv[u].append((v, move_index, sign))
            rv[v].append((u, move_index, -sign))
        return dict(rv)

    def degree(self) -> np.ndarray:
        """Get the number of neighbours of every member."""
        return np.bincount(self.edges[:, :2].ravel(), minlength=len(self.fiber))

    def components(self) -> List[List[int]]:
        uf = UnionFind(len(self.fiber))
        for u, v in self.edges[:, :2].tolist():
            uf.union(u, v)
        return uf.groups()


def build_fiber_graph(
    fiber: Fiber,
    moves: MoveSet,
    threshold: Optional[int] = None,
) -> FiberGraph:
    """Materialize the edges of a fiber graph.

    Parameters
    ----------
    fiber :
        The fiber.
    moves :
        The moves.
    threshold :
        The largest fiber to build a graph for. Defaults to the
        ``FIBERSAMPLER_STREAMING_THRESHOLD`` setting. Bigger fibers should go
        through :func:`connected_components`, which never stores edges.

    Returns
    -------
    :
        The graph.

    Raises
    ------
    FiberTooLarge
        If the fiber has more members than ``threshold``.
    """
    if threshold is None:
        threshold = get_streaming_threshold()
    if len(fiber) > threshold:
        raise FiberTooLarge(
            f"refusing to materialize edges for {len(fiber)} tables (threshold {threshold})",
            cap=threshold,
            partial_count=len(fiber),
        )
    parts = [
        np.column_stack([us, vs, np.full_like(us, move_index), np.ones_like(us)])
        for us, vs, move_index in iter_edges(fiber, moves)
        if len(us)
    ]
    edges = np.concatenate(parts) if parts else np.zeros((0, 4), dtype=np.int64)
    return FiberGraph(fiber, moves, edges)


class ConnectivityReport(BaseModel):
    """Whether the non-negative tables of a fiber are joined through the relaxed fiber."""

    floor: int
    max_negative: Optional[int] = None
    #: Number of tables with no negative cell
    fiber_size: int
    relaxed_fiber_size: int
    #: Number of components of the whole relaxed fiber
    components: int
    #: Number of components that hold a non-negative table
    nonneg_components: int
    nonneg_connected: bool
    #: Two non-negative tables in different components, if any
    witness: Optional[Tuple[Dict[str, List[int]], Dict[str, List[int]]]] = None


def verify_relaxed_connectivity(
    margins: MarginSet,
    moves: Optional[MoveSet] = None,
    t: int = 1,
    cap: Optional[int] = None,
    max_negative: Optional[int] = None,
    progress: bool = False,
) -> ConnectivityReport:
    """Check if the non-negative tables with some margins are connected at depth ``t``.

    Parameters
    ----------
    margins :
        The margins of the fiber.
    moves :
        The moves. Defaults to all basic moves.
    t :
        The relaxation depth; intermediate tables may hold cells down to ``-t``.
    cap :
        The enumeration cap.
    max_negative :
        Only walk through tables with at most this many negative cells.
    progress :
        Show progress bars.

    Returns
    -------
    :
        The connectivity report.
    """
    t = check_floor(t)
    if moves is None:
        moves = enumerate_basic_moves(margins.dims)
    fiber = enumerate_fiber(margins, floor=t, cap=cap, max_negative=max_negative, progress=progress)
    groups = connected_components(fiber, moves, progress=progress)
    component_of = np.empty(len(fiber), dtype=np.int64)
    for label, group in enumerate(groups):
        component_of[group] = label

    nonneg = fiber.nonnegative_indices()
    labels = component_of[nonneg]
    distinct = np.unique(labels)
    witness = None
    if len(distinct) > 1:
        first = int(nonneg[0])
        other = int(nonneg[np.flatnonzero(labels != labels[0])[0]])
        witness = (fiber[first].to_json(), fiber[other].to_json())
        logger.warning(f"non-negative tables split over {len(distinct)} components at floor {t}")
    return ConnectivityReport(
        floor=t,
        max_negative=max_negative,
        fiber_size=len(nonneg),
        relaxed_fiber_size=len(fiber),
        components=len(groups),
        nonneg_components=len(distinct),
        nonneg_connected=len(distinct) <= 1,
        witness=witness,
    )


def all_ones_connected(
    dims: Dims,
    moves: Optional[MoveSet] = None,
    cap: Optional[int] = None,
) -> bool:
    """Check if the moves connect the fiber of the all-ones table at floor zero."""
    dims = check_dims(dims)
    if moves is None:
        moves = enumerate_basic_moves(dims)
    fiber = enumerate_fiber(compute_margins(Table3D.ones(dims)), floor=0, cap=cap)
    return len(connected_components(fiber, moves)) == 1
