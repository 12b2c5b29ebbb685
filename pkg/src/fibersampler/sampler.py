# -*- coding: utf-8 -*-

"""Metropolis-Hastings over the relaxed fiber with basic moves.

The chain lives on tables with the observed margins whose cells are all at
least ``-t``. A state ``u`` has weight::

    w(u) = rho ** neg(u) * prod_{u_ijk >= 0} 1 / u_ijk!

where ``neg(u)`` is the number of negative cells. Restricted to non-negative
tables this is the multivariate hypergeometric law of the fiber, so χ² is
only recorded at non-negative states.
"""

import logging
import math
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from numpy.random import PCG64, Generator, SeedSequence
from pydantic import BaseModel, conint, confloat, validator
from scipy.special import gammaln
from scipy.stats import chi2
from statsmodels.stats.proportion import proportion_confint
from tqdm import tqdm

from .constants import DEFAULT_FLOOR, DEFAULT_NEG_PENALTY, RNG_BLOCK_SIZE, TIE_RTOL, ZERO_FITTED_THRESHOLD
from .model import degrees_of_freedom, ipfp_fit
from .moves import enumerate_basic_moves
from .table import MarginSet, NegativeCount, Table3D, chi_square, compute_margins
from .util import InputError, NumericalError

__all__ = [
    "ChainConfig",
    "ChainResult",
    "PooledResult",
    "run_chain",
    "run_chains",
    "parse_burn_in",
    "estimate_histogram",
    "write_histogram",
    "NoSamplesRecorded",
    "EmptyResult",
]

logger = logging.getLogger(__name__)


class NoSamplesRecorded(NumericalError):
    """Raised when a chain never visits a non-negative state on a recording tick."""


class EmptyResult(NumericalError):
    """Raised when a histogram is requested for a result without samples."""


class ChainConfig(BaseModel):
    """Settings of one Markov chain."""

    #: Number of recording ticks after burn-in
    n_samples: conint(ge=1)  # type: ignore
    #: Raw steps discarded before the first recording tick
    burn_in: conint(ge=0) = 0  # type: ignore
    #: Raw steps between recording ticks
    thin: conint(ge=1) = 1  # type: ignore
    #: Relaxation depth ``t``
    floor: conint(ge=0) = DEFAULT_FLOOR  # type: ignore
    #: Weight multiplier ``rho`` per negative cell
    neg_penalty: confloat(gt=0.0, le=1.0) = DEFAULT_NEG_PENALTY  # type: ignore
    seed: conint(ge=0, lt=2**64) = 0  # type: ignore
    #: Relaxation depth during burn-in, at most ``floor``
    burn_in_floor: Optional[conint(ge=0)] = None  # type: ignore
    #: Reject proposals with more negative cells than this
    max_negative: Optional[conint(ge=0)] = None  # type: ignore
    #: Count how often each table is recorded
    track_states: bool = False
    #: Check margins and floor after every step
    check_invariants: bool = False

    class Config:
        allow_mutation = False

    @validator("burn_in_floor", always=True)
    def _check_burn_in_floor(cls, value, values):  # noqa:N805
        floor = values.get("floor")
        if value is None:
            return floor
        if floor is not None and value > floor:
            raise ValueError(f"burn_in_floor ({value}) can not exceed floor ({floor})")
        return value

    @property
    def n_steps(self) -> int:
        """The total number of raw steps."""
        return self.burn_in + self.n_samples * self.thin


class ChainResult(BaseModel):
    """The χ² samples and diagnostics of one chain."""

    chi_sq_samples: List[float]
    observed_chi_sq: float
    df: int
    #: Fraction of recorded samples with χ² at least the observed one
    p_value_estimate: float
    #: ``(k + 1) / (n + 1)``, never zero
    p_value_corrected: float
    #: Clopper-Pearson 95% interval on the plain estimate
    p_value_interval: Tuple[float, float]
    acceptance_rate: float
    #: Fraction of post-burn-in steps spent at a table with a negative cell
    negative_state_fraction: float
    #: Recording ticks that fell on a table with a negative cell
    wasted_ticks: int
    n_requested: int
    n_recorded: int
    burn_in: int
    floor: int
    seed: int
    state_counts: Optional[Dict[Tuple[int, ...], int]] = None

    def to_json_dict(self) -> Dict:
        """Get the result as a JSON-ready dictionary, without the state counts."""
        return self.dict(exclude={"state_counts"})


class PooledResult(BaseModel):
    """Several independent chains and their pooled estimates."""

    chains: List[ChainResult]
    observed_chi_sq: float
    df: int
    #: Mean of the per-chain plain estimates
    p_value_estimate: float
    #: Mean of the per-chain corrected estimates
    p_value_corrected: float
    chi_sq_samples: List[float]

    def to_json_dict(self) -> Dict:
        """Get the result as a JSON-ready dictionary, without the state counts."""
        return self.dict(exclude={"chains": {"__all__": {"state_counts"}}})


def _count_exceeding(samples: np.ndarray, observed: float) -> int:
    threshold = observed - TIE_RTOL * max(1.0, observed)
    return int((samples >= threshold).sum())


def _log_weight_table(limit: int, floor: int, neg_penalty: float) -> List[float]:
    """Get ``log w`` of a single cell for values ``-floor .. limit``, offset by ``floor``."""
    values = np.arange(-floor, limit + 1, dtype=float)
    rv = np.where(values >= 0, -gammaln(np.maximum(values, 0.0) + 1.0), math.log(neg_penalty))
    return rv.tolist()


def run_chain(
    observed: Table3D,
    config: ChainConfig,
    progress: bool = False,
) -> ChainResult:
    """Run one Metropolis-Hastings chain started at the observed table.

    Parameters
    ----------
    observed :
        A non-negative table with at least two categories on every axis.
    config :
        The chain settings.
    progress :
        Show a progress bar over the raw steps.

    Returns
    -------
    :
        The recorded χ² values, the Monte Carlo p-value and diagnostics.

    Raises
    ------
    NegativeCount
        If the observed table has a negative cell.
    DimensionTooSmall
        If an axis has fewer than two categories.
    NoSamplesRecorded
        If no recording tick landed on a non-negative table.
    """
    return _run_chain(observed, config, SeedSequence(config.seed), progress=progress)


def _run_chain(  # noqa:C901
    observed: Table3D,
    config: ChainConfig,
    seed_sequence: SeedSequence,
    progress: bool = False,
) -> ChainResult:
    if not observed.is_nonnegative():
        raise NegativeCount("the chain must start at a non-negative table")
    moves = enumerate_basic_moves(observed.dims)
    fitted = ipfp_fit(observed)
    observed_chi_sq = chi_square(observed, fitted)
    df = degrees_of_freedom(observed.dims)

    floor, burn_in_floor = config.floor, config.burn_in_floor
    max_negative = config.max_negative
    n_moves = len(moves)
    plus, minus = moves.plus.tolist(), moves.minus.tolist()

    mu = fitted.cells.tolist()
    live = [m >= ZERO_FITTED_THRESHOLD for m in mu]

    def contribution(cell: int, value: int) -> float:
        if not live[cell]:
            return 0.0
        return (value - mu[cell]) ** 2 / mu[cell]

    state = observed.cells.tolist()
    # a relaxed cell never exceeds its line sum plus t per other cell on the line
    limit = observed.total + floor * max(observed.dims) + 1
    log_w = _log_weight_table(limit, floor, config.neg_penalty)
    stat = observed_chi_sq
    n_negative = 0
    margins = compute_margins(observed) if config.check_invariants else None

    rng = Generator(PCG64(seed_sequence))
    samples: List[float] = []
    state_counts: Counter = Counter()
    accepted = 0
    negative_steps = 0
    wasted_ticks = 0

    n_steps = config.n_steps
    burn_in, thin = config.burn_in, config.thin
    done = 0
    with tqdm(total=n_steps, desc="Sampling", unit="step", unit_scale=True, disable=not progress) as bar:
        while done < n_steps:
            block = min(RNG_BLOCK_SIZE, n_steps - done)
            move_draws = rng.integers(0, n_moves, size=block).tolist()
            sign_draws = rng.integers(0, 2, size=block).tolist()
            uniforms = rng.random(size=block).tolist()
            for m, s, u in zip(move_draws, sign_draws, uniforms):
                done += 1
                t = burn_in_floor if done <= burn_in else floor
                up, down = (plus[m], minus[m]) if s else (minus[m], plus[m])

                proposal_ok = all(state[c] - 1 >= -t for c in down)
                if proposal_ok:
                    delta_negative = sum(state[c] == 0 for c in down) - sum(state[c] == -1 for c in up)
                    if max_negative is not None and n_negative + delta_negative > max_negative:
                        proposal_ok = False
                if proposal_ok:
                    log_ratio = 0.0
                    for c in up:
                        log_ratio += log_w[state[c] + 1 + floor] - log_w[state[c] + floor]
                    for c in down:
                        log_ratio += log_w[state[c] - 1 + floor] - log_w[state[c] + floor]
                    if log_ratio >= 0.0 or u < math.exp(log_ratio):
                        accepted += 1
                        for c in up:
                            stat += contribution(c, state[c] + 1) - contribution(c, state[c])
                            state[c] += 1
                        for c in down:
                            stat += contribution(c, state[c] - 1) - contribution(c, state[c])
                            state[c] -= 1
                        n_negative += delta_negative

                if margins is not None:
                    _check_state(observed, state, margins, t, done)

                if done <= burn_in:
                    continue
                if n_negative:
                    negative_steps += 1
                if (done - burn_in) % thin:
                    continue
                if n_negative:
                    wasted_ticks += 1
                    continue
                samples.append(stat)
                if config.track_states:
                    state_counts[tuple(state)] += 1
            # resync against accumulated rounding
            stat = sum(contribution(c, v) for c, v in enumerate(state))
            bar.update(block)

    n_recorded = len(samples)
    if not n_recorded:
        raise NoSamplesRecorded(
            f"none of {config.n_samples} recording ticks hit a non-negative table"
        )
    k = _count_exceeding(np.array(samples), observed_chi_sq)
    low, high = proportion_confint(k, n_recorded, alpha=0.05, method="beta")
    post_burn_in = n_steps - burn_in
    result = ChainResult(
        chi_sq_samples=samples,
        observed_chi_sq=observed_chi_sq,
        df=df,
        p_value_estimate=k / n_recorded,
        p_value_corrected=(k + 1) / (n_recorded + 1),
        p_value_interval=(float(low), float(high)),
        acceptance_rate=accepted / n_steps,
        negative_state_fraction=negative_steps / post_burn_in,
        wasted_ticks=wasted_ticks,
        n_requested=config.n_samples,
        n_recorded=n_recorded,
        burn_in=burn_in,
        floor=floor,
        seed=config.seed,
        state_counts=dict(state_counts) if config.track_states else None,
    )
    logger.info(
        f"chain finished: {n_recorded}/{config.n_samples} samples, "
        f"acceptance {result.acceptance_rate:.3f}, p ≈ {result.p_value_estimate:.4g}"
    )
    return result


def _check_state(observed: Table3D, state: List[int], margins: MarginSet, floor: int, step: int) -> None:
    if min(state) < -floor:
        raise AssertionError(f"cell {min(state)} below -{floor} at step {step}")
    if compute_margins(Table3D(observed.dims, state, floor=floor)) != margins:
        raise AssertionError(f"margins drifted at step {step}")


def _run_chain_with_seed(observed: Table3D, config: ChainConfig, seed_sequence: SeedSequence) -> ChainResult:
    return _run_chain(observed, config, seed_sequence)


def run_chains(
    observed: Table3D,
    config: ChainConfig,
    n_chains: int = 1,
    workers: int = 1,
) -> PooledResult:
    """Run independent chains and pool their estimates.

    Chain ``c`` draws from ``SeedSequence(config.seed).spawn(n_chains)[c]``, so
    the pooled result only depends on the seed and the number of chains. A
    single chain draws from ``SeedSequence(config.seed)`` itself and matches
    :func:`run_chain` with the same settings.

    Parameters
    ----------
    observed :
        The observed table.
    config :
        Settings shared by every chain.
    n_chains :
        The number of chains.
    workers :
        Run the chains in this many processes.

    Returns
    -------
    :
        The chains, the mean of their p-value estimates and all samples.
    """
    if n_chains < 1:
        raise InputError(f"need at least one chain, got {n_chains}")
    root = SeedSequence(config.seed)
    children = [root] if n_chains == 1 else root.spawn(n_chains)
    if workers > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chains = list(
                executor.map(_run_chain_with_seed, [observed] * n_chains, [config] * n_chains, children)
            )
    else:
        chains = [_run_chain(observed, config, child) for child in children]
    for index, chain in enumerate(chains):
        logger.info(f"chain {index}: p ≈ {chain.p_value_estimate:.4g} from {chain.n_recorded} samples")
    return PooledResult(
        chains=chains,
        observed_chi_sq=chains[0].observed_chi_sq,
        df=chains[0].df,
        p_value_estimate=float(np.mean([c.p_value_estimate for c in chains])),
        p_value_corrected=float(np.mean([c.p_value_corrected for c in chains])),
        chi_sq_samples=[x for c in chains for x in c.chi_sq_samples],
    )


BURN_IN_PERCENT = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*%\s*$")


def parse_burn_in(value: Union[str, int], n_samples: int, thin: int = 1) -> int:
    """Turn a burn-in setting into a number of raw steps.

    Parameters
    ----------
    value :
        Either an absolute number of raw steps (``62500``) or a percentage of
        the post-burn-in run length ``n_samples * thin`` (``"25%"``).
    n_samples :
        The number of recording ticks.
    thin :
        The raw steps per recording tick.

    Returns
    -------
    :
        The number of raw burn-in steps.

    Raises
    ------
    InputError
        If the value can not be parsed or is negative.
    """
    if isinstance(value, int):
        steps = value
    else:
        match = BURN_IN_PERCENT.match(value)
        if match:
            steps = int(round(float(match.group(1)) / 100.0 * n_samples * thin))
        else:
            try:
                steps = int(value.strip())
            except ValueError:
                raise InputError(f"can not parse burn-in {value!r}") from None
    if steps < 0:
        raise InputError(f"burn-in must be non-negative, got {steps}")
    return steps


def estimate_histogram(
    result: Union[ChainResult, PooledResult],
    bins: int = 50,
    df: Optional[int] = None,
) -> pd.DataFrame:
    """Bin the χ² samples and pair each bin with the asymptotic density.

    Parameters
    ----------
    result :
        A chain or pooled result.
    bins :
        The number of equal-width bins over ``[0, max]``.
    df :
        The degrees of freedom of the χ² reference. Defaults to the result's.

    Returns
    -------
    :
        A dataframe with ``bin_left``, ``bin_right``, ``count``, ``density``
        (the empirical density) and ``asymptotic_density`` (the χ² density at
        the bin midpoint).

    Raises
    ------
    EmptyResult
        If the result has no samples.
    """
    if bins < 1:
        raise InputError(f"need at least one bin, got {bins}")
    samples = np.asarray(result.chi_sq_samples, dtype=float)
    if not samples.size:
        raise EmptyResult("no χ² samples to bin")
    df = result.df if df is None else df
    top = float(samples.max())
    edges = np.linspace(0.0, top if top > 0 else 1.0, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    widths = np.diff(edges)
    midpoints = (edges[:-1] + edges[1:]) / 2.0
    return pd.DataFrame(
        {
            "bin_left": edges[:-1],
            "bin_right": edges[1:],
            "count": counts,
            "density": counts / (samples.size * widths),
            "asymptotic_density": chi2.pdf(midpoints, df),
        }
    )


def write_histogram(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """Write a histogram frame to CSV."""
    frame.to_csv(path, index=False)
    logger.info(f"wrote histogram with {len(frame)} bins to {path}")
