"""
Unit tests for file operations (utils/file_operations.py)

Covers input loading with syntax-error reporting, byte-stable artifact
writing and the sweep exporter.
"""

import hashlib
import math
import shutil
import tempfile
import unittest
import os
import sys

import pandas as pd

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.code_models import CodeIndexVector, WeightAssignment
from utils.exceptions import DomainError, InputFormatError, WeightError
from utils.file_operations import DataExporter, FileManager, GridSpec, InputLoader, csv_text

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


class TestFileManager(unittest.TestCase):
    """Test artifact writing"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.file_manager = FileManager(self.temp_dir)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_save_text_returns_digest(self):
        """Test the digest is the sha256 of the UTF-8 text"""
        digest = self.file_manager.save_text('rate,member\n0.1,1\n', 'out/table.csv')

        self.assertEqual(digest, hashlib.sha256(b'rate,member\n0.1,1\n').hexdigest())
        self.assertEqual(self.file_manager.file_digest('out/table.csv'), digest)

    def test_json_is_canonical(self):
        """Test equal data gives byte-identical files"""
        first = self.file_manager.save_json({'b': 1, 'a': [0.5, 2]}, 'first.json')
        second = self.file_manager.save_json({'a': [0.5, 2], 'b': 1}, 'second.json')
        self.assertEqual(first, second)

    def test_save_dispatches_on_suffix(self):
        """Test YAML and CSV artifacts by extension"""
        self.file_manager.save({'total': 0.25}, 'report.yaml')
        self.file_manager.save([{'N': 10, 'bound': 0.5}], 'sweep.csv')

        loader = InputLoader(self.temp_dir)
        self.assertEqual(loader.load_document('report.yaml'), {'total': 0.25})
        with open(os.path.join(self.temp_dir, 'sweep.csv'), encoding='utf-8') as f:
            self.assertEqual(f.read(), 'N,bound\n10,0.5\n')


class TestCsvText(unittest.TestCase):
    """Test CSV number formatting"""

    def test_twelve_significant_digits(self):
        """Test floats are written with 12 significant digits"""
        text = csv_text(pd.DataFrame([{'value': 1.0 / 3.0, 'n': 4}]))
        self.assertEqual(text, 'value,n\n0.333333333333,4\n')


class TestInputLoader(unittest.TestCase):
    """Test reading input documents"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.loader = InputLoader()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def test_load_channel_fixture(self):
        """Test a fixture channel loads"""
        channel = self.loader.load_channel(os.path.join(FIXTURES, 'bsc_0_1.json'))
        self.assertEqual(channel.num_users, 1)

    def test_malformed_json_reports_position(self):
        """Test a missing comma is reported with its line"""
        with self.assertRaises(InputFormatError) as context:
            self.loader.load_channel(os.path.join(FIXTURES, 'malformed.json'))

        self.assertEqual(context.exception.line, 4)
        self.assertIsNotNone(context.exception.column)
        self.assertIn('line 4', str(context.exception))

    def test_malformed_yaml_reports_position(self):
        """Test YAML syntax errors carry a position"""
        path = self.write('channel.yaml', 'K: 1\ntransition: [[0.9, 0.1]\n')
        with self.assertRaises(InputFormatError) as context:
            self.loader.load_document(path)
        self.assertIsNotNone(context.exception.line)

    def test_missing_file(self):
        """Test unreadable files are input format errors"""
        with self.assertRaises(InputFormatError):
            self.loader.load_document(os.path.join(self.temp_dir, 'absent.json'))

    def test_top_level_must_be_object(self):
        """Test channel documents must be objects"""
        path = self.write('channel.json', '[1, 2, 3]')
        with self.assertRaises(InputFormatError):
            self.loader.load_channel(path)

    def test_documents_are_cached(self):
        """Test an unchanged file is parsed once"""
        path = self.write('region.json', '[[0, 1]]')
        first = self.loader.load_document(path)

        self.assertIs(self.loader.load_document(path), first)
        self.assertIsNot(self.loader.reload(path), first)

    def test_document_cache_is_bounded(self):
        """Test the least recently used document is evicted"""
        loader = InputLoader(cache_size=1)
        first_path = self.write('first.json', '[[0, 1]]')
        second_path = self.write('second.json', '[[1, 0]]')
        first = loader.load_document(first_path)
        loader.load_document(second_path)

        self.assertEqual(len(loader._document_cache), 1)
        self.assertIsNot(loader.load_document(first_path), first)

    def test_load_vectors(self):
        """Test bare lists and wrapped lists of vectors"""
        bare = self.write('bare.json', '[[0, 1], {"options": [1, 0], "interferer": 1}]')
        wrapped = self.write('wrapped.yaml', 'vectors:\n  - [0, 1]\n')

        self.assertEqual(self.loader.load_vectors(bare),
                         [CodeIndexVector((0, 1)), CodeIndexVector((1, 0), 1)])
        self.assertEqual(self.loader.load_vectors(wrapped), [CodeIndexVector((0, 1))])

        invalid = self.write('invalid.json', '[[0, -1]]')
        with self.assertRaises(DomainError):
            self.loader.load_vectors(invalid)

    def test_load_weights(self):
        """Test weight files and their blocklength check"""
        g, h = CodeIndexVector((0,)), CodeIndexVector((1,))
        weights = WeightAssignment({g: math.log(2) / 2, h: math.log(2) / 2}, 2)
        path = os.path.join(self.temp_dir, 'weights.json')
        FileManager().save_json(weights.to_dict(), path)

        self.assertAlmostEqual(self.loader.load_weights(path, 2).alpha(h), math.log(2) / 2)
        with self.assertRaises(WeightError):
            self.loader.load_weights(path, 3)

        broken = self.write('broken.json', '{"weights": []}')
        with self.assertRaises(WeightError):
            self.loader.load_weights(broken)

    def test_parse_text_format(self):
        """Test unknown formats are refused"""
        self.assertEqual(InputLoader.parse_text('a: 1', 'yaml'), {'a': 1})
        with self.assertRaises(InputFormatError):
            InputLoader.parse_text('a = 1', 'toml')


class TestGridSpec(unittest.TestCase):
    """Test sweep grids"""

    def test_points(self):
        """Test evenly spaced points including both ends"""
        self.assertEqual(GridSpec('r', 0.0, 1.0, 5).points(), [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(GridSpec('r', 0.3, 0.9, 1).points(), [0.3])

    def test_integer_points_are_deduplicated(self):
        """Test integer grids round and drop repeats"""
        self.assertEqual(GridSpec('N', 1, 3, 5, integer=True).points(), [1, 2, 3])

    def test_parse(self):
        """Test the START:STOP:STEPS form"""
        grid = GridSpec.parse('N', '10:40:4', integer=True)

        self.assertEqual(grid.points(), [10, 20, 30, 40])
        with self.assertRaises(DomainError):
            GridSpec.parse('N', '10:40')
        with self.assertRaises(DomainError):
            GridSpec.parse('N', 'a:b:c')

    def test_invalid_grids(self):
        """Test zero steps and infinite bounds"""
        with self.assertRaises(DomainError):
            GridSpec('r', 0.0, 1.0, 0)
        with self.assertRaises(DomainError):
            GridSpec('r', 0.0, float('inf'), 3)


class TestDataExporter(unittest.TestCase):
    """Test sweep and report export"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.exporter = DataExporter(FileManager(self.temp_dir))

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_single_point_sweep(self):
        """Test a one-point grid emits a header and one row"""
        text = self.exporter.sweep_emit(GridSpec('rate_1', 0.2, 0.2, 1), lambda r: {'member': int(r < 0.5)})
        self.assertEqual(text.splitlines(), ['rate_1,member', '0.2,1'])

    def test_sweep_column_order(self):
        """Test the axis comes first and the file matches the returned text"""
        grid = GridSpec('rate_1', 0.0, 1.0, 3)
        text = self.exporter.sweep_emit(grid, lambda r: {'rate_nats': r, 'member': int(r < 0.6)}, 'sweep.csv')

        self.assertTrue(text.startswith('rate_1,rate_nats,member\n'))
        with open(os.path.join(self.temp_dir, 'sweep.csv'), encoding='utf-8') as f:
            self.assertEqual(f.read(), text)

    def test_export_report(self):
        """Test JSON and YAML reports and unknown formats"""
        json_digest = self.exporter.export_report({'total': 0.5}, 'report.json')
        yaml_digest = self.exporter.export_report({'total': 0.5}, 'report.yaml', 'yaml')

        self.assertEqual(len(json_digest), 64)
        self.assertNotEqual(json_digest, yaml_digest)
        with self.assertRaises(DomainError):
            self.exporter.export_report({}, 'report.xml', 'xml')

    def test_export_table(self):
        """Test rows are written as CSV"""
        digest = self.exporter.export_table([{'g': '0,0/0', 'error_rate': 0.125}], 'table.csv')
        self.assertEqual(digest, hashlib.sha256(b'g,error_rate\n"0,0/0",0.125\n').hexdigest())


if __name__ == '__main__':
    unittest.main()
