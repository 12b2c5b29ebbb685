# -*- coding: utf-8 -*-

"""Command line interface for fibersampler.

Every command prints a JSON report to stdout. Status messages go to stderr.
Exit codes: 0 on success, 1 when a decomposition fails to replay, 2 on bad
input, 3 on a numerical failure and 4 when a fiber is too large.
"""

import logging
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd
from more_click import verbose_option
from numpy.random import PCG64, Generator, SeedSequence
from pydantic import ValidationError
from tqdm import tqdm

from .datasets import Dataset, load_dataset
from .model import FittedTable, goodness_of_fit
from .moves import (
    enumerate_basic_moves,
    indispensable_decompositions,
    load_decomposition,
    replay_decomposition,
)
from .oracle import FiberTooLarge, enumerate_fiber, verify_relaxed_connectivity
from .readers import load_table
from .sampler import ChainConfig, estimate_histogram, parse_burn_in, run_chains, write_histogram
from .table import Table3D, check_dims, compute_margins
from .util import CapExceeded, InputError, NumericalError, ReplayError, dump_json

__all__ = [
    "main",
    "cmd_test",
    "cmd_conjecture_probe",
]

logger = logging.getLogger(__name__)

EXIT_REPLAY_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CAP = 4


def _handle_errors(f):
    """Map the package's error categories to exit codes."""

    @wraps(f)
    def _wrapped(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return f(*args, **kwargs)
        except (InputError, ValidationError) as err:
            click.secho(f"Input error: {err}", fg="red", err=True)
            ctx.exit(EXIT_INPUT)
        except NumericalError as err:
            click.secho(f"Numerical error: {err}", fg="red", err=True)
            ctx.exit(EXIT_NUMERICAL)
        except CapExceeded as err:
            click.secho(f"Cap exceeded: {err}", fg="red", err=True)
            ctx.exit(EXIT_CAP)

    return _wrapped


def _echo_json(obj: Any) -> None:
    click.echo(dump_json(obj))


def load_source(source: str) -> Dataset:
    """Load a table from a file path or a bundled dataset name."""
    if Path(source).is_file():
        return load_table(source)
    return load_dataset(source)


def _chain_options(f):
    options = [
        click.option("--n", "n_samples", type=int, default=10_000, show_default=True, help="Recording ticks"),
        click.option(
            "--burnin",
            default="0",
            show_default=True,
            help="Raw burn-in steps, or a percentage of n * thin such as 25%",
        ),
        click.option("--burnin-floor", type=int, help="Relaxation depth during burn-in [default: --floor]"),
        click.option("--thin", type=int, default=1, show_default=True),
        click.option("--floor", type=int, default=1, show_default=True, help="Cells may drop to -floor"),
        click.option("--rho", type=float, default=0.1, show_default=True, help="Penalty per negative cell"),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--chains", type=int, default=1, show_default=True),
        click.option("--workers", type=int, default=1, show_default=True),
        click.option("--max-negative", type=int, help="Reject states with more negative cells"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _build_config(
    n_samples: int,
    burnin: str,
    burnin_floor: Optional[int],
    thin: int,
    floor: int,
    rho: float,
    seed: int,
    max_negative: Optional[int],
) -> ChainConfig:
    return ChainConfig(
        n_samples=n_samples,
        burn_in=parse_burn_in(burnin, n_samples, thin),
        thin=thin,
        floor=floor,
        neg_penalty=rho,
        seed=seed,
        burn_in_floor=burnin_floor,
        max_negative=max_negative,
    )


@click.group()
def main():
    """Exact conditional tests of no-three-way interaction with relaxed fibers."""


@main.command()
@click.argument("source")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write fitted means to this CSV")
@verbose_option
@_handle_errors
def fit(source: str, out: Optional[Path]):
    """Fit the model and report the asymptotic χ² test."""
    dataset = load_source(source)
    report = goodness_of_fit(dataset.table)
    if out is not None:
        fitted = FittedTable(dataset.table.dims, np.array(report.fitted))
        frame = fitted.to_frame(dataset.labels)
        frame.columns = [*dataset.axes, "fitted"]
        frame.to_csv(out, index=False)
        click.secho(f"Wrote fitted means to {out}", fg="green", err=True)
    _echo_json({"dataset": dataset.name, **report.dict()})


@main.command()
@click.argument("source")
@_chain_options
@click.option("--hist-bins", type=int, default=50, show_default=True)
@click.option("--hist-out", type=click.Path(dir_okay=False, path_type=Path), help="Write a χ² histogram CSV")
@verbose_option
@_handle_errors
def sample(
    source: str,
    n_samples: int,
    burnin: str,
    burnin_floor: Optional[int],
    thin: int,
    floor: int,
    rho: float,
    seed: int,
    chains: int,
    workers: int,
    max_negative: Optional[int],
    hist_bins: int,
    hist_out: Optional[Path],
):
    """Run Markov chains over the relaxed fiber of a table."""
    dataset = load_source(source)
    config = _build_config(n_samples, burnin, burnin_floor, thin, floor, rho, seed, max_negative)
    click.secho(f"Sampling {dataset.name} with {chains} chain(s)", fg="green", err=True)
    result = run_chains(dataset.table, config, n_chains=chains, workers=workers)
    if hist_out is not None:
        write_histogram(estimate_histogram(result, bins=hist_bins), hist_out)
        click.secho(f"Wrote histogram to {hist_out}", fg="green", err=True)
    _echo_json({"dataset": dataset.name, "config": config.dict(), **result.to_json_dict()})


def cmd_test(
    dataset: Dataset,
    config: ChainConfig,
    n_chains: int = 1,
    workers: int = 1,
    alpha: float = 0.05,
) -> Dict[str, Any]:
    """Run the asymptotic and the Markov chain test of a table.

    The null hypothesis is rejected when the corrected Monte Carlo p-value is
    below ``alpha``.
    """
    if not 0 < alpha < 1:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    fit_report = goodness_of_fit(dataset.table)
    pooled = run_chains(dataset.table, config, n_chains=n_chains, workers=workers)
    return {
        "dataset": dataset.name,
        "dims": list(dataset.table.dims),
        "total": dataset.table.total,
        "chi_square": fit_report.chi_square,
        "df": fit_report.df,
        "p_value_asymptotic": fit_report.p_value_asymptotic,
        "p_value_mcmc": pooled.p_value_estimate,
        "p_value_mcmc_corrected": pooled.p_value_corrected,
        "alpha": alpha,
        "reject": pooled.p_value_corrected < alpha,
        "config": config.dict(),
        "diagnostics": [
            {
                "seed_index": index,
                "acceptance_rate": chain.acceptance_rate,
                "negative_state_fraction": chain.negative_state_fraction,
                "wasted_ticks": chain.wasted_ticks,
                "n_requested": chain.n_requested,
                "n_recorded": chain.n_recorded,
                "p_value_estimate": chain.p_value_estimate,
                "p_value_interval": list(chain.p_value_interval),
            }
            for index, chain in enumerate(pooled.chains)
        ],
    }


@main.command()
@click.argument("source")
@_chain_options
@click.option("--alpha", type=float, default=0.05, show_default=True)
@verbose_option
@_handle_errors
def test(
    source: str,
    n_samples: int,
    burnin: str,
    burnin_floor: Optional[int],
    thin: int,
    floor: int,
    rho: float,
    seed: int,
    chains: int,
    workers: int,
    max_negative: Optional[int],
    alpha: float,
):
    """Test no-three-way interaction with the asymptotic and the exact conditional test."""
    dataset = load_source(source)
    config = _build_config(n_samples, burnin, burnin_floor, thin, floor, rho, seed, max_negative)
    _echo_json(cmd_test(dataset, config, n_chains=chains, workers=workers, alpha=alpha))


@main.command(name="enumerate")
@click.argument("source")
@click.option("--floor", type=int, default=0, show_default=True)
@click.option("--cap", type=int, help="Give up past this many tables [default: FIBERSAMPLER_CAP]")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--max-negative", type=int)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write the tables to this CSV")
@verbose_option
@_handle_errors
def enumerate_command(
    source: str,
    floor: int,
    cap: Optional[int],
    workers: int,
    max_negative: Optional[int],
    out: Optional[Path],
):
    """Enumerate the fiber of a small table."""
    dataset = load_source(source)
    fiber = enumerate_fiber(
        compute_margins(dataset.table),
        floor=floor,
        cap=cap,
        workers=workers,
        max_negative=max_negative,
        progress=True,
    )
    if out is not None:
        columns = [f"c{i + 1}_{j + 1}_{k + 1}" for i, j, k in np.ndindex(*fiber.dims)]
        pd.DataFrame(fiber.tables, columns=columns).to_csv(out, index=False)
        click.secho(f"Wrote {len(fiber)} tables to {out}", fg="green", err=True)
    _echo_json(
        {
            "dataset": dataset.name,
            "dims": list(fiber.dims),
            "floor": floor,
            "max_negative": max_negative,
            "size": len(fiber),
            "nonnegative": int(fiber.nonnegative_mask().sum()),
        }
    )


@main.command()
@click.argument("source")
@click.option("--floor", type=int, default=1, show_default=True)
@click.option("--cap", type=int)
@click.option("--max-negative", type=int)
@verbose_option
@_handle_errors
def connectivity(source: str, floor: int, cap: Optional[int], max_negative: Optional[int]):
    """Check if basic moves connect the non-negative tables of a fiber at some floor."""
    dataset = load_source(source)
    report = verify_relaxed_connectivity(
        compute_margins(dataset.table),
        t=floor,
        cap=cap,
        max_negative=max_negative,
        progress=True,
    )
    _echo_json({"dataset": dataset.name, **report.dict()})


@main.command(name="verify-decomposition")
@click.argument("path", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--builtin", type=click.Choice(["b1", "b2"]), help="Replay a bundled 3×4×6 decomposition")
@click.option("--floor", type=int, help="Override the decomposition's floor")
@verbose_option
@_handle_errors
def verify_decomposition(path: Optional[Path], builtin: Optional[str], floor: Optional[int]):
    """Replay a path of basic moves with a floor on the cells."""
    if (path is None) == (builtin is None):
        raise InputError("give either a decomposition file or --builtin")
    decomposition = load_decomposition(path) if path is not None else indispensable_decompositions()[builtin]
    if floor is not None:
        decomposition = decomposition.with_floor(floor)
    try:
        report = replay_decomposition(decomposition)
    except ReplayError as err:
        click.secho(f"Replay failed: {err}", fg="red", err=True)
        _echo_json(
            {
                "success": False,
                "floor": decomposition.floor,
                "error": str(err),
                "step": getattr(err, "step", None),
            }
        )
        click.get_current_context().exit(EXIT_REPLAY_FAILED)
    _echo_json(report.dict())


@main.command()
@click.argument("i", type=int)
@click.argument("j", type=int)
@click.argument("k", type=int)
@click.option("--dense", is_flag=True, help="Include the dense expansion of every move")
@verbose_option
@_handle_errors
def moves(i: int, j: int, k: int, dense: bool):
    """List the basic moves of an I × J × K table."""
    move_set = enumerate_basic_moves((i, j, k))
    report: Dict[str, Any] = {
        "dims": [i, j, k],
        "count": len(move_set),
        "moves": [str(move) for move in move_set],
    }
    if dense:
        report["dense"] = [move.to_dense(move_set.dims).tolist() for move in move_set]
    _echo_json(report)


def cmd_conjecture_probe(
    dims: Sequence[int],
    trials: int,
    seed: int = 0,
    max_cell: int = 2,
    cap: Optional[int] = None,
    extra: Sequence[Table3D] = (),
    progress: bool = False,
) -> Dict[str, Any]:
    """Look for fibers whose non-negative tables basic moves can not join at floor one.

    Parameters
    ----------
    dims :
        The table dimensions.
    trials :
        The number of random tables, each with cells drawn uniformly from
        ``0 .. max_cell``.
    seed :
        Seed of the table generator.
    max_cell :
        The largest random cell value.
    cap :
        The enumeration cap per fiber. Trials past it are skipped.
    extra :
        Further tables to check besides the random ones.
    progress :
        Show a progress bar over the trials.

    Returns
    -------
    :
        Counts of connected and skipped trials and every counterexample with
        its margins and witness pair.
    """
    dims = check_dims(dims, minimum=2)
    if trials < 0 or max_cell < 0:
        raise InputError("trials and max_cell must be non-negative")
    rng = Generator(PCG64(SeedSequence(seed)))
    tables: List[Tuple[str, Table3D]] = [
        (f"random-{n}", Table3D(dims, rng.integers(0, max_cell + 1, size=int(np.prod(dims)))))
        for n in range(trials)
    ]
    for n, table in enumerate(extra):
        if table.dims != dims:
            raise InputError(f"extra table {n} has dims {table.dims}, expected {dims}")
        tables.append((f"extra-{n}", table))

    move_set = enumerate_basic_moves(dims)
    connected, skipped, counterexamples = 0, [], []
    for name, table in tqdm(tables, desc="Probing", unit="trial", disable=not progress):
        margins = compute_margins(table)
        try:
            report = verify_relaxed_connectivity(margins, move_set, t=1, cap=cap)
        except FiberTooLarge as err:
            skipped.append({"trial": name, "note": str(err)})
            continue
        if report.nonneg_connected:
            connected += 1
        else:
            counterexamples.append(
                {"trial": name, "margins": margins.to_json(), "witness": report.witness}
            )
    logger.info(f"{connected} connected, {len(counterexamples)} counterexamples, {len(skipped)} skipped")
    return {
        "dims": list(dims),
        "trials": len(tables),
        "seed": seed,
        "max_cell": max_cell,
        "connected": connected,
        "skipped": skipped,
        "counterexamples": counterexamples,
        "all_connected": not counterexamples,
    }


@main.command(name="conjecture-probe")
@click.argument("i", type=int)
@click.argument("j", type=int)
@click.argument("k", type=int)
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-cell", type=int, default=2, show_default=True)
@click.option("--cap", type=int)
@click.option("--include", "sources", multiple=True, help="Also check this table file or dataset")
@verbose_option
@_handle_errors
def conjecture_probe(
    i: int,
    j: int,
    k: int,
    trials: int,
    seed: int,
    max_cell: int,
    cap: Optional[int],
    sources: Sequence[str],
):
    """Probe whether basic moves connect random fibers when cells may drop to -1."""
    extra = [load_source(source).table for source in sources]
    report = cmd_conjecture_probe(
        (i, j, k), trials, seed=seed, max_cell=max_cell, cap=cap, extra=extra, progress=True
    )
    _echo_json(report)


if __name__ == "__main__":
    main()
