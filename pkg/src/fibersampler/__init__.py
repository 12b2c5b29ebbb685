# -*- coding: utf-8 -*-

"""Exact conditional tests for three-way tables under no-three-way interaction.

The fiber of a table is the set of tables sharing its three two-way margins.
This package samples fibers with basic moves while letting cells drop to
``-t``, fits the model by iterative proportional fitting and, for small
tables, enumerates fibers to check connectivity and compute exact p-values.
"""

import logging

from .model import FittedTable, build_design_matrix, goodness_of_fit, ipfp_fit
from .moves import BasicMove, SignedMove, enumerate_basic_moves, replay_decomposition
from .sampler import ChainConfig, ChainResult, run_chain, run_chains
from .table import MarginSet, Table3D, apply_move, chi_square, compute_margins

__all__ = [
    "Table3D",
    "MarginSet",
    "compute_margins",
    "apply_move",
    "chi_square",
    "BasicMove",
    "SignedMove",
    "enumerate_basic_moves",
    "replay_decomposition",
    "FittedTable",
    "build_design_matrix",
    "ipfp_fit",
    "goodness_of_fit",
    "ChainConfig",
    "ChainResult",
    "run_chain",
    "run_chains",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
