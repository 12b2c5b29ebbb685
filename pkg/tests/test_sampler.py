"""Tests for the relaxed Metropolis-Hastings chain."""

import unittest
from collections import Counter

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError
from scipy.stats import chi2

from fibersampler.datasets import load_dataset
from fibersampler.moves import DimensionTooSmall
from fibersampler.oracle import enumerate_fiber, exact_conditional_distribution
from fibersampler.sampler import (
    ChainConfig,
    EmptyResult,
    estimate_histogram,
    parse_burn_in,
    run_chain,
    run_chains,
    write_histogram,
)
from fibersampler.table import NegativeCount, Table3D, compute_margins
from fibersampler.util import InputError

CHECKER = Table3D((2, 2, 2), [3, 1, 1, 3, 1, 3, 3, 1])
#: The only table with its margins; the second layer is all structural zeros
LONELY = Table3D.from_array([[[1, 2], [3, 4]], [[0, 0], [0, 0]]])


def _exact_law(table: Table3D):
    fiber = enumerate_fiber(compute_margins(table))
    exact = exact_conditional_distribution(fiber, table)
    return fiber, exact


class TestConfig(unittest.TestCase):
    """Test validating chain settings."""

    def test_defaults(self):
        config = ChainConfig(n_samples=10)
        self.assertEqual(1, config.floor)
        self.assertEqual(1, config.burn_in_floor)
        self.assertEqual(0.1, config.neg_penalty)
        self.assertEqual(10, config.n_steps)
        self.assertEqual(0, ChainConfig(n_samples=10, floor=0).burn_in_floor)
        self.assertEqual(2 + 10 * 3, ChainConfig(n_samples=10, burn_in=2, thin=3).n_steps)

    def test_invalid(self):
        for kwargs in [
            dict(n_samples=0),
            dict(n_samples=1, thin=0),
            dict(n_samples=1, burn_in=-1),
            dict(n_samples=1, floor=-1),
            dict(n_samples=1, neg_penalty=0.0),
            dict(n_samples=1, neg_penalty=1.5),
            dict(n_samples=1, seed=-1),
            dict(n_samples=1, seed=2**64),
            dict(n_samples=1, floor=1, burn_in_floor=2),
        ]:
            with self.subTest(**kwargs):
                with self.assertRaises(ValidationError):
                    ChainConfig(**kwargs)
        self.assertEqual(2**64 - 1, ChainConfig(n_samples=1, seed=2**64 - 1).seed)

    def test_frozen(self):
        config = ChainConfig(n_samples=10)
        with self.assertRaises(TypeError):
            config.floor = 2


class TestChain(unittest.TestCase):
    """Test single chains."""

    def test_single_table(self):
        result = run_chain(LONELY, ChainConfig(n_samples=500, seed=3))
        self.assertEqual(0.0, result.observed_chi_sq)
        self.assertEqual(1.0, result.p_value_estimate)
        self.assertEqual(1.0, result.p_value_corrected)
        np.testing.assert_allclose(np.zeros(result.n_recorded), result.chi_sq_samples, atol=1e-9)
        self.assertEqual(result.n_requested, result.n_recorded + result.wasted_ticks)

    def test_deterministic(self):
        config = ChainConfig(n_samples=300, burn_in=50, thin=2, seed=42)
        a = run_chain(CHECKER, config)
        b = run_chain(CHECKER, config)
        self.assertEqual(a.chi_sq_samples, b.chi_sq_samples)
        self.assertEqual(a.acceptance_rate, b.acceptance_rate)
        c = run_chain(CHECKER, config.copy(update={"seed": 43}))
        self.assertNotEqual(a.chi_sq_samples, c.chi_sq_samples)

    def test_exact_p_value(self):
        """The chain's estimate agrees with the exact conditional p-value."""
        _, exact = _exact_law(CHECKER)
        result = run_chain(CHECKER, ChainConfig(n_samples=40_000, burn_in=1_000, thin=5, seed=1))
        self.assertAlmostEqual(exact.p_value, result.p_value_estimate, delta=0.02)
        low, high = result.p_value_interval
        self.assertLessEqual(low, result.p_value_estimate)
        self.assertLessEqual(result.p_value_estimate, high)
        self.assertLessEqual(0.0, result.negative_state_fraction)

    def test_visits_negative_states(self):
        """Overlapping moves from the all-ones table reach cells at -1."""
        config = ChainConfig(n_samples=50_000, neg_penalty=1.0, seed=4)
        result = run_chain(Table3D.ones((2, 2, 3)), config)
        self.assertGreater(result.negative_state_fraction, 0.0)
        self.assertLess(result.negative_state_fraction, 1.0)
        self.assertEqual(result.n_requested, result.n_recorded + result.wasted_ticks)

    def test_stationary_law(self):
        """Recorded states follow the hypergeometric law whatever the penalty."""
        fiber, exact = _exact_law(CHECKER)
        for neg_penalty in (0.1, 1.0):
            with self.subTest(neg_penalty=neg_penalty):
                config = ChainConfig(
                    n_samples=40_000, burn_in=1_000, thin=5, seed=7, neg_penalty=neg_penalty, track_states=True
                )
                result = run_chain(CHECKER, config)
                counts = Counter(result.state_counts)
                observed = np.array([counts[tuple(row)] for row in fiber.tables.tolist()]) / result.n_recorded
                self.assertEqual(result.n_recorded, sum(counts.values()))
                self.assertLess(0.5 * np.abs(observed - exact.probabilities).sum(), 0.05)

    def test_coverage_floor_zero(self):
        table = Table3D.ones((2, 2, 2))
        fiber = enumerate_fiber(compute_margins(table))
        result = run_chain(table, ChainConfig(n_samples=5_000, floor=0, seed=11, track_states=True))
        self.assertEqual({tuple(row) for row in fiber.tables.tolist()}, set(result.state_counts))
        self.assertEqual(0, result.wasted_ticks)
        self.assertEqual(0.0, result.negative_state_fraction)

    def test_max_negative(self):
        config = ChainConfig(n_samples=2_000, max_negative=0, seed=5)
        result = run_chain(CHECKER, config)
        self.assertEqual(0, result.wasted_ticks)
        self.assertEqual(0.0, result.negative_state_fraction)

    def test_check_invariants(self):
        rng = np.random.default_rng(9)
        table = Table3D.from_array(rng.integers(0, 4, size=(3, 3, 2)))
        config = ChainConfig(n_samples=500, burn_in=100, floor=2, burn_in_floor=1, check_invariants=True)
        result = run_chain(table, config)
        self.assertEqual(100, result.burn_in)
        self.assertEqual(2, result.floor)

    def test_bad_tables(self):
        with self.assertRaises(NegativeCount):
            run_chain(Table3D((2, 2, 2), [-1, 1, 1, 1, 1, 1, 1, 1], floor=1), ChainConfig(n_samples=1))
        with self.assertRaises(DimensionTooSmall):
            run_chain(Table3D.ones((1, 2, 2)), ChainConfig(n_samples=1))

    def test_json(self):
        result = run_chain(CHECKER, ChainConfig(n_samples=50, track_states=True))
        self.assertIsNotNone(result.state_counts)
        self.assertNotIn("state_counts", result.to_json_dict())


class TestChains(unittest.TestCase):
    """Test pooling several chains."""

    def test_pooled(self):
        config = ChainConfig(n_samples=200, seed=123)
        pooled = run_chains(CHECKER, config, n_chains=3)
        self.assertEqual(3, len(pooled.chains))
        self.assertEqual(sum(c.n_recorded for c in pooled.chains), len(pooled.chi_sq_samples))
        self.assertAlmostEqual(np.mean([c.p_value_estimate for c in pooled.chains]), pooled.p_value_estimate)
        self.assertNotEqual(pooled.chains[0].chi_sq_samples, pooled.chains[1].chi_sq_samples)
        self.assertNotIn("state_counts", pooled.to_json_dict()["chains"][0])

    def test_workers(self):
        config = ChainConfig(n_samples=200, seed=123)
        serial = run_chains(CHECKER, config, n_chains=2)
        parallel = run_chains(CHECKER, config, n_chains=2, workers=2)
        self.assertEqual(serial.chi_sq_samples, parallel.chi_sq_samples)

    def test_single_chain_matches_run_chain(self):
        config = ChainConfig(n_samples=300, seed=17)
        pooled = run_chains(CHECKER, config, n_chains=1)
        self.assertEqual(run_chain(CHECKER, config).chi_sq_samples, pooled.chi_sq_samples)

    def test_no_chains(self):
        with self.assertRaises(InputError):
            run_chains(CHECKER, ChainConfig(n_samples=1), n_chains=0)


class TestHistogram(unittest.TestCase):
    """Test binning samples."""

    def test_columns(self):
        result = run_chain(CHECKER, ChainConfig(n_samples=1_000, seed=2))
        frame = estimate_histogram(result, bins=8)
        self.assertEqual(
            ["bin_left", "bin_right", "count", "density", "asymptotic_density"], list(frame.columns)
        )
        self.assertEqual(8, len(frame))
        self.assertEqual(result.n_recorded, frame["count"].sum())
        self.assertEqual(0.0, frame["bin_left"].iloc[0])
        self.assertAlmostEqual(max(result.chi_sq_samples), frame["bin_right"].iloc[-1])
        widths = frame["bin_right"] - frame["bin_left"]
        self.assertAlmostEqual(1.0, float((frame["density"] * widths).sum()))

    def test_all_zero(self):
        result = run_chain(LONELY, ChainConfig(n_samples=20))
        frame = estimate_histogram(result.copy(update={"chi_sq_samples": [0.0] * 20}), bins=4)
        self.assertEqual(1.0, frame["bin_right"].iloc[-1])
        self.assertEqual(20, frame["count"].iloc[0])

    def test_empty(self):
        result = run_chain(CHECKER, ChainConfig(n_samples=5))
        with self.assertRaises(EmptyResult):
            estimate_histogram(result.copy(update={"chi_sq_samples": []}))
        with self.assertRaises(InputError):
            estimate_histogram(result, bins=0)


def test_parse_burn_in():
    """Test reading burn-in as a percentage or a step count."""
    assert parse_burn_in("25%", n_samples=10_000, thin=25) == 62_500
    assert parse_burn_in("62500", n_samples=10_000, thin=25) == 62_500
    assert parse_burn_in(100, n_samples=10) == 100
    assert parse_burn_in("0%", n_samples=10) == 0
    for bad in ("abc", "-5", "%"):
        with pytest.raises(InputError):
            parse_burn_in(bad, n_samples=10)


def test_write_histogram(tmp_path):
    """Test the histogram CSV keeps every column."""
    frame = estimate_histogram(run_chain(CHECKER, ChainConfig(n_samples=100)), bins=5)
    path = tmp_path.joinpath("hist.csv")
    write_histogram(frame, path)
    again = pd.read_csv(path)
    assert list(again.columns) == list(frame.columns)
    assert again["count"].tolist() == frame["count"].tolist()


@pytest.mark.slow
def test_navy_officer():
    """The officer table is far from the no-three-way-interaction model."""
    table = load_dataset("navy_officer_10x6x2").table
    n_samples, thin = 10_000, 25
    config = ChainConfig(
        n_samples=n_samples,
        thin=thin,
        burn_in=parse_burn_in("25%", n_samples, thin),
        floor=1,
        seed=0,
    )
    result = run_chain(table, config)
    assert result.df == 45
    assert result.observed_chi_sq == pytest.approx(90.23, abs=0.01)
    assert result.p_value_estimate <= 0.01
    assert np.mean(result.chi_sq_samples) == pytest.approx(45, abs=3)
    quantiles = np.quantile(result.chi_sq_samples, [0.05, 0.95])
    np.testing.assert_allclose(quantiles, chi2.ppf([0.05, 0.95], 45), rtol=0.15)


@pytest.mark.slow
@pytest.mark.parametrize(
    "table",
    [
        CHECKER,
        Table3D.from_array([[[2, 0, 1], [0, 2, 1]], [[1, 2, 0], [1, 0, 2]]]),
        Table3D.from_array([[[2, 0, 1], [0, 1, 1], [1, 1, 0]], [[0, 1, 0], [1, 0, 1], [0, 1, 1]]]),
    ],
    ids=["2x2x2", "2x2x3", "2x3x3"],
)
def test_matches_exact_distribution(table):
    """Over a million raw steps, recorded states follow the exact conditional law."""
    fiber, exact = _exact_law(table)
    config = ChainConfig(n_samples=200_000, thin=5, burn_in=10_000, seed=21, track_states=True)
    assert config.n_steps >= 1_000_000
    result = run_chain(table, config)
    counts = Counter(result.state_counts)
    assert set(counts) <= {tuple(row) for row in fiber.tables.tolist()}
    observed = np.array([counts[tuple(row)] for row in fiber.tables.tolist()]) / result.n_recorded
    assert 0.5 * np.abs(observed - exact.probabilities).sum() < 0.05
    assert result.p_value_estimate == pytest.approx(exact.p_value, abs=0.02)
