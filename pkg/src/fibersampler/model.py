# -*- coding: utf-8 -*-

"""The no-three-way-interaction model: design matrix, IPFP fit and χ² reference."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.special import gammaincc

from .constants import IPFP_MAX_ITER, IPFP_TOL
from .table import Dims, NegativeCount, Table3D, check_dims, chi_square
from .util import NumericalError

__all__ = [
    "DesignMatrix",
    "FittedTable",
    "FitReport",
    "build_design_matrix",
    "ipfp_fit",
    "degrees_of_freedom",
    "chi_square_survival",
    "goodness_of_fit",
    "NoConvergence",
]

logger = logging.getLogger(__name__)


class NoConvergence(NumericalError):
    """Raised when IPFP still misses a margin after its iteration budget."""

    def __init__(self, message: str, max_iter: int, discrepancy: float):
        super().__init__(message)
        self.max_iter = max_iter
        self.discrepancy = discrepancy


class DesignMatrix:
    """The 0/1 matrix ``A`` mapping a flat table to its flat margins.

    Rows come in three blocks, jk then ik then ij, each in row-major order of
    its two indices. Columns follow the flat cell order of :class:`Table3D`.
    """

    def __init__(self, dims: Dims, matrix: np.ndarray):
        self.dims = dims
        self.matrix = matrix
        I, J, K = dims  # noqa:E741
        self.blocks: Dict[str, slice] = {
            "jk": slice(0, J * K),
            "ik": slice(J * K, J * K + I * K),
            "ij": slice(J * K + I * K, J * K + I * K + I * J),
        }

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape  # type: ignore

    def block(self, name: str) -> np.ndarray:
        """Get the rows of one margin block (``"jk"``, ``"ik"`` or ``"ij"``)."""
        return self.matrix[self.blocks[name]]

    def __matmul__(self, other):
        return self.matrix @ other


def build_design_matrix(dims: Dims) -> DesignMatrix:
    """Build the design matrix of the no-three-way-interaction model.

    Parameters
    ----------
    dims :
        The sizes ``(I, J, K)``.

    Returns
    -------
    :
        A ``(JK + IK + IJ) × IJK`` 0/1 matrix with exactly one 1 per column in
        each block.
    """
    dims = check_dims(dims)
    I, J, K = dims  # noqa:E741
    cols = np.arange(I * J * K)
    i, j, k = np.unravel_index(cols, dims)
    matrix = np.zeros((J * K + I * K + I * J, I * J * K), dtype=np.int64)
    matrix[j * K + k, cols] = 1
    matrix[J * K + i * K + k, cols] = 1
    matrix[J * K + I * K + i * J + j, cols] = 1
    return DesignMatrix(dims, matrix)


class FittedTable:
    """Maximum likelihood cell means under the no-three-way-interaction model."""

    def __init__(
        self,
        dims: Dims,
        cells: np.ndarray,
        iterations: int = 0,
        max_discrepancy: float = 0.0,
    ):
        self.dims = check_dims(dims)
        arr = np.array(cells, dtype=float).ravel()
        arr.flags.writeable = False
        self.cells = arr
        self.iterations = iterations
        self.max_discrepancy = max_discrepancy

    def to_array(self) -> np.ndarray:
        """Get the means as an ``(I, J, K)`` array."""
        return self.cells.reshape(self.dims)

    def to_frame(self, labels: Optional[Sequence[Sequence[str]]] = None) -> pd.DataFrame:
        """Get the means in long format.

        Parameters
        ----------
        labels :
            Optional category labels per axis. Without them, the ``i``, ``j``
            and ``k`` columns hold 1-based indices.

        Returns
        -------
        :
            A dataframe with columns ``i``, ``j``, ``k`` and ``fitted``.
        """
        i, j, k = np.unravel_index(np.arange(self.cells.shape[0]), self.dims)
        columns = [i + 1, j + 1, k + 1]
        if labels is not None:
            columns = [np.asarray(axis_labels)[idx - 1] for axis_labels, idx in zip(labels, columns)]
        return pd.DataFrame(
            {"i": columns[0], "j": columns[1], "k": columns[2], "fitted": self.cells}
        )


def _margin_discrepancy(m: np.ndarray, jk: np.ndarray, ik: np.ndarray, ij: np.ndarray) -> float:
    return max(
        float(np.abs(m.sum(axis=0) - jk).max()),
        float(np.abs(m.sum(axis=1) - ik).max()),
        float(np.abs(m.sum(axis=2) - ij).max()),
    )


def _scale(current: np.ndarray, target: np.ndarray) -> np.ndarray:
    return np.divide(target, current, out=np.zeros_like(current), where=current > 0)


def ipfp_fit(
    observed: Table3D,
    tol: float = IPFP_TOL,
    max_iter: int = IPFP_MAX_ITER,
) -> FittedTable:
    """Fit the no-three-way-interaction model by iterative proportional fitting.

    The working table starts at all ones, with every cell that lies on a line
    whose observed margin is zero set to zero. Each cycle rescales it to match
    the jk, the ik and then the ij margins of the observed table. Since only
    the margins are used, tables in the same fiber get identical fits.

    Parameters
    ----------
    observed :
        A non-negative table.
    tol :
        Stop once no margin entry is off by ``tol`` or more.
    max_iter :
        The maximum number of full cycles.

    Returns
    -------
    :
        The fitted means.

    Raises
    ------
    NegativeCount
        If the observed table has a negative cell.
    NoConvergence
        If the margins are still off after ``max_iter`` cycles.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if not observed.is_nonnegative():
        raise NegativeCount("IPFP needs a non-negative table")
    arr = observed.to_array().astype(float)
    jk, ik, ij = arr.sum(axis=0), arr.sum(axis=1), arr.sum(axis=2)

    m = np.ones(observed.dims)
    m[(jk[None, :, :] == 0) | (ik[:, None, :] == 0) | (ij[:, :, None] == 0)] = 0.0

    discrepancy = _margin_discrepancy(m, jk, ik, ij)
    for iteration in range(1, max_iter + 1):
        m *= _scale(m.sum(axis=0), jk)[None, :, :]
        m *= _scale(m.sum(axis=1), ik)[:, None, :]
        m *= _scale(m.sum(axis=2), ij)[:, :, None]
        discrepancy = _margin_discrepancy(m, jk, ik, ij)
        if discrepancy < tol:
            logger.info(
                f"IPFP converged after {iteration} cycles (max discrepancy {discrepancy:.2e})"
            )
            return FittedTable(observed.dims, m, iterations=iteration, max_discrepancy=discrepancy)
    raise NoConvergence(
        f"IPFP did not converge in {max_iter} cycles (max discrepancy {discrepancy:.3e})",
        max_iter=max_iter,
        discrepancy=discrepancy,
    )


def degrees_of_freedom(dims: Dims) -> int:
    """Get the residual degrees of freedom ``(I - 1)(J - 1)(K - 1)``."""
    I, J, K = check_dims(dims)  # noqa:E741
    return (I - 1) * (J - 1) * (K - 1)


def chi_square_survival(x: float, df: int) -> float:
    """Get ``P(X > x)`` for a χ² variable with ``df`` degrees of freedom.

    This is the regularized upper incomplete gamma function
    ``Q(df / 2, x / 2)``.
    """
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if df < 1:
        raise ValueError(f"degrees of freedom must be at least 1, got {df}")
    if x == 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


class FitReport(BaseModel):
    """The asymptotic goodness-of-fit summary of a table."""

    dims: Tuple[int, int, int]
    total: int
    chi_square: float
    df: int
    #: None when the model has no degrees of freedom
    p_value_asymptotic: Optional[float]
    ipfp_iterations: int
    fitted: List[float]


def goodness_of_fit(
    observed: Table3D,
    tol: float = IPFP_TOL,
    max_iter: int = IPFP_MAX_ITER,
) -> FitReport:
    """Fit the model and compare the χ² statistic to its asymptotic law."""
    fitted = ipfp_fit(observed, tol=tol, max_iter=max_iter)
    stat = chi_square(observed, fitted)
    df = degrees_of_freedom(observed.dims)
    return FitReport(
        dims=observed.dims,
        total=observed.total,
        chi_square=stat,
        df=df,
        p_value_asymptotic=chi_square_survival(stat, df) if df else None,
        ipfp_iterations=fitted.iterations,
        fitted=fitted.cells.tolist(),
    )
