"""
Unit tests for code-space helpers (utils/code_space.py, utils/helpers.py)
"""

import math
import unittest
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.code_models import CodeEnsembleVector, CodeIndexVector, CodeOption
from utils.code_space import enumerate_vectors, subsets_containing, uniform_weights
from utils.exceptions import CapExceededError, DomainError, IndexRangeError
from utils.helpers import (
    canonical_json, format_subset, mask_to_subset, proper_subsets_of, subset_to_mask, subsets_of,
)


def ensemble_with(option_counts, interferer_options=('none',)):
    option = CodeOption(0.1, (0.5, 0.5))
    return CodeEnsembleVector(
        per_user_options=tuple((option,) * count for count in option_counts),
        interferer_options=interferer_options,
    )


class TestUniformWeights(unittest.TestCase):
    """Test the uniform weight assignment"""

    def test_single_vector_has_zero_weight(self):
        """Test one vector at any N gets alpha = 0"""
        g = CodeIndexVector((0,))
        self.assertEqual(uniform_weights([g], 17).alpha(g), 0.0)

    def test_four_vectors(self):
        """Test 4 vectors at N=2 get ln(4)/2 each"""
        vectors = enumerate_vectors(ensemble_with([2, 2]))
        weights = uniform_weights(vectors, 2)

        for g in vectors:
            self.assertAlmostEqual(weights.alpha(g), math.log(4) / 2)
        self.assertAlmostEqual(weights.alpha(vectors[0]), 0.6931, places=4)

    def test_eight_vectors(self):
        """Test 8 vectors at N=100"""
        vectors = enumerate_vectors(ensemble_with([2, 2], ('a', 'b')))
        self.assertAlmostEqual(uniform_weights(vectors, 100).alpha(vectors[0]), 0.02079, places=5)

    def test_empty_set_rejected(self):
        """Test uniform weights need at least one vector"""
        with self.assertRaises(DomainError):
            uniform_weights([], 4)


class TestEnumerateVectors(unittest.TestCase):
    """Test code vector enumeration"""

    def test_counts(self):
        """Test the product of option counts"""
        self.assertEqual(len(enumerate_vectors(ensemble_with([2, 2]))), 4)
        self.assertEqual(len(enumerate_vectors(ensemble_with([2, 2], ('a', 'b')))), 8)

    def test_lexicographic_order(self):
        """Test user 1 varies slowest and the interferer fastest"""
        self.assertEqual(
            [str(g) for g in enumerate_vectors(ensemble_with([3]))],
            ['0/0', '1/0', '2/0'],
        )
        vectors = enumerate_vectors(ensemble_with([2, 1], ('a', 'b')))
        self.assertEqual([str(g) for g in vectors], ['0,0/0', '0,0/1', '1,0/0', '1,0/1'])
        self.assertEqual(vectors, sorted(vectors))

    def test_cap(self):
        """Test enumeration stops at the cap"""
        with self.assertRaises(CapExceededError) as context:
            enumerate_vectors(ensemble_with([4, 4, 4]), cap=20)
        self.assertEqual(context.exception.cap, 20)


class TestSubsets(unittest.TestCase):
    """Test subset enumeration and bitmasks"""

    def test_subsets_containing(self):
        """Test quantifier enumeration around an anchor"""
        self.assertEqual(subsets_containing(2, {1}), [frozenset({1}), frozenset({1, 2})])
        self.assertEqual(len(subsets_containing(3, {1})), 4)
        self.assertEqual(len(subsets_containing(3, set())), 8)

    def test_subsets_containing_rejects_bad_input(self):
        """Test the user count and anchor are checked"""
        with self.assertRaises(DomainError):
            subsets_containing(0, set())
        with self.assertRaises(IndexRangeError):
            subsets_containing(2, {3})

    def test_bitmasks(self):
        """Test bit k-1 stands for user k"""
        self.assertEqual(subset_to_mask({1, 3}), 0b101)
        self.assertEqual(mask_to_subset(0b110), frozenset({2, 3}))

    def test_subsets_of(self):
        """Test all and proper subsets, empty set first"""
        users = {1, 2}
        self.assertEqual(subsets_of(users), [frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})])
        self.assertEqual(proper_subsets_of(users), [frozenset(), frozenset({1}), frozenset({2})])

    def test_format_subset(self):
        """Test the printed form of user sets"""
        self.assertEqual(format_subset({2, 1}), '{1,2}')
        self.assertEqual(format_subset(set()), '{}')

    def test_canonical_json_is_stable(self):
        """Test key order does not change the emitted text"""
        self.assertEqual(canonical_json({'b': 1, 'a': [1, 2]}), canonical_json({'a': [1, 2], 'b': 1}))
        self.assertTrue(canonical_json({}).endswith('\n'))


if __name__ == '__main__':
    unittest.main()
