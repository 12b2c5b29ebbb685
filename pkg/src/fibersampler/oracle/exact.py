"""The exact conditional distribution of χ² over an enumerated fiber."""

import logging
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import gammaln, logsumexp

from .enumeration import Fiber
from ..constants import TIE_RTOL, ZERO_FITTED_THRESHOLD
from ..model import FittedTable, ipfp_fit
from ..table import Table3D, chi_square
from ..util import InputError

__all__ = [
    "ExactDistribution",
    "exact_conditional_distribution",
]

logger = logging.getLogger(__name__)


class ExactDistribution:
    """The law of χ² under the multivariate hypergeometric distribution on a fiber."""

    def __init__(
        self,
        chi_squares: np.ndarray,
        probabilities: np.ndarray,
        observed_chi_sq: float,
        fitted: FittedTable,
    ):
        self.chi_squares = chi_squares
        self.probabilities = probabilities
        self.observed_chi_sq = observed_chi_sq
        self.fitted = fitted

    @property
    def p_value(self) -> float:
        """The exact probability of a χ² at least as large as the observed one."""
        threshold = self.observed_chi_sq - TIE_RTOL * max(1.0, self.observed_chi_sq)
        return min(1.0, float(self.probabilities[self.chi_squares >= threshold].sum()))

    def support(self) -> pd.DataFrame:
        """Get the distinct χ² values with their total probability, in increasing order."""
        scale = max(1.0, float(np.abs(self.chi_squares).max()))
        keys = np.round(self.chi_squares / (TIE_RTOL * scale)).astype(np.int64)
        frame = pd.DataFrame(
            {"key": keys, "chi_square": self.chi_squares, "probability": self.probabilities}
        )
        return (
            frame.groupby("key", sort=True)
            .agg(chi_square=("chi_square", "min"), probability=("probability", "sum"))
            .reset_index(drop=True)
        )


def exact_conditional_distribution(
    fiber: Fiber,
    observed: Optional[Table3D] = None,
) -> ExactDistribution:
    """Compute the exact conditional law of χ² given the margins.

    Every table ``u`` of the fiber has probability proportional to
    ``prod(1 / u_ijk!)``.

    Parameters
    ----------
    fiber :
        A fiber enumerated at floor zero.
    observed :
        The observed table. Defaults to the first member of the fiber.

    Returns
    -------
    :
        The χ² value and probability of every member, with the exact p-value
        of the observed table.

    Raises
    ------
    ValueError
        If the fiber was enumerated with a positive floor.
    InputError
        If the observed table is not in the fiber.
    """
    if fiber.floor != 0:
        raise ValueError(f"the exact distribution needs a floor-0 fiber, got floor {fiber.floor}")
    if observed is None:
        observed = fiber[0]
    elif observed not in fiber:
        raise InputError("observed table is not a member of the fiber")

    fitted = ipfp_fit(observed)
    mu = fitted.cells
    live = mu >= ZERO_FITTED_THRESHOLD
    tables = fiber.tables.astype(float)
    chi_squares = (((tables[:, live] - mu[live]) ** 2) / mu[live]).sum(axis=1)

    log_weights = -gammaln(tables + 1.0).sum(axis=1)
    probabilities = np.exp(log_weights - logsumexp(log_weights))

    rv = ExactDistribution(chi_squares, probabilities, chi_square(observed, fitted), fitted)
    logger.info(f"exact p-value over {len(fiber)} tables: {rv.p_value:.6g}")
    return rv
