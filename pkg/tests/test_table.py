"""Tests for tables, margins, moves on tables and χ²."""

import unittest

import numpy as np
import pytest

from fibersampler.datasets import load_dataset
from fibersampler.model import FittedTable
from fibersampler.moves import BasicMove, SignedMove
from fibersampler.table import (
    DimensionMismatch,
    FloorViolation,
    MarginSet,
    NegativeCount,
    Table3D,
    ZeroFittedCell,
    apply_move,
    check_floor,
    chi_square,
    compute_margins,
    flat_index,
    relabel,
)
from fibersampler.util import InputError

MOVE = SignedMove(BasicMove(1, 2, 1, 2, 1, 2))


class TestTable(unittest.TestCase):
    """Test the table type."""

    def test_flat_layout(self):
        table = Table3D.from_array(np.arange(24).reshape(2, 3, 4))
        self.assertEqual((2, 3, 4), table.dims)
        self.assertEqual(24, table.size)
        self.assertEqual(1 * 12 + 2 * 4 + 3, flat_index(table.dims, 1, 2, 3))
        self.assertEqual(23, table.cells[flat_index(table.dims, 1, 2, 3)])

    def test_immutable(self):
        table = Table3D.ones((2, 2, 2))
        with self.assertRaises(ValueError):
            table.cells[0] = 5

    def test_wrong_cell_count(self):
        with self.assertRaises(DimensionMismatch):
            Table3D((2, 2, 2), [1, 2, 3])

    def test_negative(self):
        with self.assertRaises(NegativeCount):
            Table3D((1, 1, 2), [0, -1])
        table = Table3D((1, 1, 2), [0, -1], floor=1)
        self.assertFalse(table.is_nonnegative())
        self.assertEqual([1], table.negative_cells().tolist())
        self.assertEqual(-1, table.min_cell)

    def test_equality_ignores_floor(self):
        self.assertEqual(Table3D.ones((2, 2, 2)), Table3D.ones((2, 2, 2), floor=3))
        self.assertNotEqual(Table3D.ones((2, 2, 2)), Table3D.zeros((2, 2, 2)))
        self.assertEqual(1, len({Table3D.ones((2, 2, 2)), Table3D.ones((2, 2, 2), floor=1)}))

    def test_json(self):
        table = Table3D.from_array(np.arange(12).reshape(2, 2, 3))
        self.assertEqual({"dims": [2, 2, 3], "counts": list(range(12))}, table.to_json())
        self.assertEqual(table, Table3D.from_json(table.to_json()))
        with self.assertRaises(DimensionMismatch):
            Table3D.from_json({"counts": [1]})


class TestMargins(unittest.TestCase):
    """Test computing margins."""

    def test_all_ones(self):
        margins = compute_margins(Table3D.ones((2, 2, 2)))
        b = margins.flatten()
        self.assertEqual(12, len(b))
        self.assertTrue((b == 2).all())
        self.assertEqual((2, 2, 2), margins.dims)
        self.assertTrue(margins.is_consistent())

    def test_all_zeros(self):
        margins = compute_margins(Table3D.zeros((3, 4, 2)))
        self.assertEqual(4 * 2 + 3 * 2 + 3 * 4, len(margins.flatten()))
        self.assertFalse(margins.flatten().any())

    def test_block_order(self):
        table = Table3D.from_array(np.arange(8).reshape(2, 2, 2))
        margins = compute_margins(table)
        arr = table.to_array()
        np.testing.assert_array_equal(arr.sum(axis=0), margins.jk)
        np.testing.assert_array_equal(arr.sum(axis=1), margins.ik)
        np.testing.assert_array_equal(arr.sum(axis=2), margins.ij)
        np.testing.assert_array_equal(
            np.concatenate([margins.jk.ravel(), margins.ik.ravel(), margins.ij.ravel()]),
            margins.flatten(),
        )

    def test_navy_officer(self):
        """Admirals who are White sum over both genders, 192 + 13."""
        dataset = load_dataset("navy_officer_10x6x2")
        margins = compute_margins(dataset.table)
        i = dataset.labels[0].index("Adm")
        j = dataset.labels[1].index("White")
        self.assertEqual(205, margins.ij[i, j])

    def test_inconsistent(self):
        margins = MarginSet([[1, 0]], [[1, 0]], [[2]])
        self.assertFalse(margins.is_consistent())
        with self.assertRaises(DimensionMismatch):
            MarginSet([[1, 0]], [[1, 0, 0]], [[1]])

    def test_same_totals_different_marginals(self):
        """Equal grand totals do not make margins consistent."""
        margins = MarginSet([[1, 0]], [[0, 1]], [[1]])
        self.assertEqual((1, 1, 1), margins.totals)
        self.assertFalse(margins.is_consistent())

    def test_shifted(self):
        table = Table3D.from_array(np.arange(12).reshape(2, 3, 2))
        shifted = compute_margins(Table3D(table.dims, table.cells + 1))
        self.assertEqual(shifted, compute_margins(table).shifted(1))


class TestApplyMove(unittest.TestCase):
    """Test adding moves to tables."""

    def test_all_ones(self):
        table = Table3D.ones((2, 2, 2))
        moved = apply_move(table, MOVE)
        self.assertEqual([2, 0, 0, 2, 0, 2, 2, 0], moved.cells.tolist())
        self.assertEqual(compute_margins(table), compute_margins(moved))

    def test_inverse(self):
        table = Table3D.from_array(np.arange(1, 28).reshape(3, 3, 3))
        move = SignedMove(BasicMove(1, 3, 2, 3, 1, 2), -1)
        self.assertEqual(table, apply_move(apply_move(table, move), move.negated()))

    def test_floor(self):
        table = Table3D.zeros((2, 2, 2))
        with self.assertRaises(FloorViolation):
            apply_move(table, MOVE, floor=0)
        moved = apply_move(table, MOVE, floor=1)
        self.assertEqual([1, -1, -1, 1, -1, 1, 1, -1], moved.cells.tolist())
        self.assertEqual(1, moved.floor)

    def test_margins_preserved_everywhere(self):
        rng = np.random.default_rng(3)
        table = Table3D.from_array(rng.integers(2, 6, size=(3, 4, 3)))
        margins = compute_margins(table)
        for i in (1, 2):
            for j in (1, 3):
                move = SignedMove(BasicMove(i, 3, j, 4, 1, 3))
                self.assertEqual(margins, compute_margins(apply_move(table, move)))

    def test_move_outside(self):
        with self.assertRaises(DimensionMismatch):
            apply_move(Table3D.ones((2, 2, 2)), SignedMove(BasicMove(1, 3, 1, 2, 1, 2)))


class TestChiSquare(unittest.TestCase):
    """Test the χ² statistic."""

    def test_identity(self):
        table = Table3D.from_array(np.arange(1, 13).reshape(2, 3, 2))
        fitted = FittedTable(table.dims, table.cells.astype(float))
        self.assertEqual(0.0, chi_square(table, fitted))

    def test_value(self):
        table = Table3D((1, 1, 2), [3, 1])
        fitted = FittedTable((1, 1, 2), [2.0, 2.0])
        self.assertAlmostEqual(1.0, chi_square(table, fitted))

    def test_zero_fitted(self):
        fitted = FittedTable((1, 1, 2), [0.0, 2.0])
        self.assertAlmostEqual(0.0, chi_square(Table3D((1, 1, 2), [0, 2]), fitted))
        with self.assertRaises(ZeroFittedCell):
            chi_square(Table3D((1, 1, 2), [1, 1]), fitted)

    def test_dims(self):
        with self.assertRaises(DimensionMismatch):
            chi_square(Table3D.ones((2, 2, 2)), FittedTable((2, 2, 1), np.ones(4)))


def test_relabel():
    """Test permuting categories moves cells but keeps the total."""
    table = Table3D.from_array(np.arange(12).reshape(3, 2, 2))
    moved = relabel(table, [[2, 0, 1], [1, 0], [0, 1]])
    assert moved.to_array()[0, 0, 0] == table.to_array()[2, 1, 0]
    assert moved.total == table.total
    with pytest.raises(DimensionMismatch):
        relabel(table, [[0, 0, 1], [0, 1], [0, 1]])


def test_check_floor():
    """Relaxation depths are non-negative integers."""
    assert check_floor(2) == 2
    assert check_floor(0) == 0
    with pytest.raises(InputError):
        check_floor(-1)
    with pytest.raises(InputError):
        Table3D.ones((2, 2, 2), floor=-1)
