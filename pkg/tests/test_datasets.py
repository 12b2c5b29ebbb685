"""Tests for bundled datasets and table readers."""

import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest

from fibersampler.datasets import NAVY_GENDERS, NAVY_RACES, Dataset, UnknownDataset, list_datasets, load_dataset
from fibersampler.readers import CsvTableReader, JsonTableReader, get_reader, load_table
from fibersampler.table import DimensionMismatch, NegativeCount, Table3D, compute_margins
from fibersampler.util import InputError, ParseError

HERE = Path(__file__).parent.resolve()
RESOURCES = HERE.joinpath("resources")


class TestDatasets(unittest.TestCase):
    """Test the bundled tables."""

    def test_names(self):
        self.assertEqual(
            ["latin_3x3x3", "navy_enlisted_9x6x2", "navy_full_19x6x2", "navy_officer_10x6x2"],
            list_datasets(),
        )
        with self.assertRaises(UnknownDataset):
            load_dataset("navy")

    def test_navy(self):
        for name, dims, total in [
            ("navy_officer_10x6x2", (10, 6, 2), 54_993),
            ("navy_enlisted_9x6x2", (9, 6, 2), 284_712),
            ("navy_full_19x6x2", (19, 6, 2), 339_705),
        ]:
            with self.subTest(name=name):
                dataset = load_dataset(name)
                self.assertEqual(dims, dataset.table.dims)
                self.assertEqual(total, dataset.table.total)
                self.assertEqual(NAVY_RACES, dataset.labels[1])
                self.assertEqual(NAVY_GENDERS, dataset.labels[2])
                self.assertEqual(["rank", "race", "gender"], dataset.axes)

    def test_navy_ranks(self):
        dataset = load_dataset("navy_full_19x6x2")
        ranks = dataset.labels[0]
        self.assertEqual("Adm", ranks[0])
        self.assertEqual("W-2", ranks[9])
        self.assertEqual("E-9", ranks[10])
        self.assertEqual("E-1", ranks[-1])
        officer = load_dataset("navy_officer_10x6x2").table.to_array()
        np.testing.assert_array_equal(officer, dataset.table.to_array()[:10])

    def test_frame(self):
        frame = load_dataset("navy_officer_10x6x2").to_frame()
        self.assertEqual(["rank", "race", "gender", "count"], list(frame.columns))
        self.assertEqual(120, len(frame))
        self.assertEqual(54_993, frame["count"].sum())
        self.assertEqual(("Adm", "NatAm", "male"), tuple(frame.iloc[0][["rank", "race", "gender"]]))

    def test_latin(self):
        dataset = load_dataset("latin_3x3x3")
        self.assertEqual(["1", "2", "3"], dataset.labels[0])
        self.assertTrue((compute_margins(dataset.table).flatten() == 3).all())

    def test_labels(self):
        with self.assertRaises(DimensionMismatch):
            Dataset("bad", Table3D.ones((2, 2, 2)), labels=[["a"], ["b", "c"], ["d", "e"]])
        with self.assertRaises(DimensionMismatch):
            Dataset("bad", Table3D.ones((2, 2, 2)), axes=["a", "b"])


class TestJsonReader(unittest.TestCase):
    """Test reading JSON tables."""

    def test_read(self):
        dataset = load_table(RESOURCES.joinpath("table_2x2x2.json"))
        self.assertEqual("toy", dataset.name)
        self.assertEqual(list(range(1, 9)), dataset.table.cells.tolist())
        self.assertEqual(["a", "b", "c"], dataset.axes)
        self.assertEqual(["c1", "c2"], dataset.labels[2])

    def test_dims(self):
        with self.assertRaises(DimensionMismatch):
            load_table(RESOURCES.joinpath("table_2x2x2.json"), dims=(2, 2, 3))

    def test_broken(self):
        with self.assertRaises(ParseError):
            load_table(RESOURCES.joinpath("broken.json"))

    def test_missing_keys(self):
        path = RESOURCES.joinpath("decomposition_one_step.json")
        with self.assertRaises(ParseError):
            JsonTableReader().read(path)


class TestCsvReader(unittest.TestCase):
    """Test reading CSV and TSV tables."""

    def test_long(self):
        dataset = load_table(RESOURCES.joinpath("table_long.csv"))
        self.assertEqual((2, 2, 2), dataset.table.dims)
        self.assertEqual(32, dataset.table.total)
        self.assertEqual(["rank", "race", "gender"], dataset.axes)
        self.assertEqual([["O-1", "O-2"], ["White", "AfAm"], ["male", "female"]], dataset.labels)
        self.assertEqual([10, 4, 3, 2, 7, 1, 5, 0], dataset.table.cells.tolist())

    def test_flat(self):
        dataset = load_table(RESOURCES.joinpath("counts_flat.csv"), dims=(2, 2, 2))
        self.assertEqual(list(range(1, 9)), dataset.table.cells.tolist())
        with self.assertRaises(ParseError):
            load_table(RESOURCES.joinpath("counts_flat.csv"))
        with self.assertRaises(DimensionMismatch):
            load_table(RESOURCES.joinpath("counts_short.csv"), dims=(2, 2, 2))

    def test_long_dims(self):
        with self.assertRaises(DimensionMismatch):
            load_table(RESOURCES.joinpath("table_long.csv"), dims=(2, 2, 3))

    def test_tsv(self):
        path = self._write("i\tj\tk\tcount\n1\t1\t1\t2\n2\t1\t1\t3\n1\t2\t2\t4\n", ".tsv")
        dataset = load_table(path)
        self.assertEqual((2, 2, 2), dataset.table.dims)
        self.assertEqual([2, 0, 0, 4, 3, 0, 0, 0], dataset.table.cells.tolist())

    def test_integer_categories_sorted(self):
        path = self._write("i,j,k,count\n2,1,1,3\n1,2,2,4\n1,1,1,2\n", ".csv")
        self.assertEqual(["1", "2"], load_table(path).labels[0])

    def test_bad_files(self):
        for text, error in [
            ("i,j,k,count\n1,1,1,2\n1,1,1,3\n", ParseError),
            ("i,j,k,count\n1,1,1,2.5\n", ParseError),
            ("i,j,k,count\n1,1,1,\n", ParseError),
            ("i,j,count\n1,1,2\n", ParseError),
            ("i,j,k,count\n1,1,1,-2\n", NegativeCount),
        ]:
            with self.subTest(text=text):
                with self.assertRaises(error):
                    load_table(self._write(text, ".csv"))

    def _write(self, text: str, suffix: str) -> Path:
        directory = Path(tempfile.mkdtemp())
        path = directory.joinpath(f"table{suffix}")
        path.write_text(text)
        return path


def test_get_reader():
    """Test looking up readers by name and by suffix."""
    assert isinstance(get_reader(Path("x.json")), JsonTableReader)
    assert isinstance(get_reader(Path("x.TSV")), CsvTableReader)
    assert isinstance(get_reader(Path("x.txt"), format="csv"), CsvTableReader)
    with pytest.raises(InputError):
        get_reader(Path("x.txt"))
    with pytest.raises(InputError):
        get_reader(Path("x.json"), format="xml")


def test_missing_file():
    """Test loading a file that does not exist."""
    with pytest.raises(InputError, match="no such file"):
        load_table(RESOURCES.joinpath("nope.json"))
