# -*- coding: utf-8 -*-

"""Brute-force fibers for small tables: enumeration, connectivity and exact tests."""

from .enumeration import Fiber, FiberTooLarge, InfeasibleMargins, enumerate_fiber
from .exact import ExactDistribution, exact_conditional_distribution
from .graph import (
    ConnectivityReport,
    FiberGraph,
    all_ones_connected,
    build_fiber_graph,
    connected_components,
    verify_relaxed_connectivity,
)
from .unionfind import UnionFind

__all__ = [
    "Fiber",
    "FiberTooLarge",
    "InfeasibleMargins",
    "enumerate_fiber",
    "ExactDistribution",
    "exact_conditional_distribution",
    "ConnectivityReport",
    "FiberGraph",
    "all_ones_connected",
    "build_fiber_graph",
    "connected_components",
    "verify_relaxed_connectivity",
    "UnionFind",
]
