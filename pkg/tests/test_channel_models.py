"""
Unit tests for channel and code models (models/channel_models.py, models/code_models.py)
"""

import math
import unittest
import os
import sys

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.channel_models import ChannelModel, binary_symmetric_family
from models.code_models import (
    CodeEnsembleVector, CodeIndexVector, CodeOption, OperationConfig, RateUnit,
    WeightAssignment, Zone, vectors_from_list,
)
from utils.exceptions import DomainError, IndexRangeError, WeightError

ADDER = {
    'K': 2,
    'input_alphabets': [2, 2],
    'output_alphabet': 3,
    'transition': [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ],
}


class TestChannelModel(unittest.TestCase):
    """Test the dense channel tensor"""

    def setUp(self):
        self.adder = ChannelModel.from_dict(ADDER)

    def test_shape_and_defaults(self):
        """Test dimensions and the default interferer label"""
        self.assertEqual(self.adder.num_users, 2)
        self.assertEqual(self.adder.transition.shape, (1, 2, 2, 3))
        self.assertEqual(self.adder.interferer_options, ('none',))
        self.assertEqual(self.adder.num_rows, 4)

    def test_row_major_order(self):
        """Test rows are read with x_K varying fastest"""
        np.testing.assert_allclose(self.adder.row(0, (0, 1)), [0.0, 1.0, 0.0])
        np.testing.assert_allclose(self.adder.row(0, (1, 1)), [0.0, 0.0, 1.0])
        self.assertEqual(self.adder.emission_prob(0, (1, 0), 1), 1.0)

    def test_index_errors(self):
        """Test out-of-range g0, x and y"""
        with self.assertRaises(IndexRangeError):
            self.adder.row(1, (0, 0))
        with self.assertRaises(IndexRangeError):
            self.adder.row(0, (2, 0))
        with self.assertRaises(IndexRangeError):
            self.adder.emission_prob(0, (0, 0), 3)
        with self.assertRaises(IndexRangeError):
            self.adder.interferer_index('jammed')

    def test_invalid_description_raises(self):
        """Test non-stochastic rows are rejected at construction"""
        bad = dict(ADDER, transition=[[0.5, 0.6, 0.0]] + ADDER['transition'][1:])
        with self.assertRaises(DomainError):
            ChannelModel.from_dict(bad)

    def test_round_trip(self):
        """Test the JSON description survives a round trip"""
        again = ChannelModel.from_dict(self.adder.to_dict())

        np.testing.assert_array_equal(again.transition, self.adder.transition)
        self.assertEqual(again.digest(), self.adder.digest())

    def test_transition_is_read_only(self):
        """Test the tensor cannot be modified in place"""
        with self.assertRaises(ValueError):
            self.adder.transition[0, 0, 0, 0] = 0.5

    def test_sample_output_is_deterministic(self):
        """Test a noiseless channel always emits the sum"""
        rng = np.random.default_rng(7)
        self.assertEqual(self.adder.sample_output(0, (1, 1), rng), 2)
        self.assertEqual(self.adder.sample_output(0, (0, 1), rng), 1)

    def test_block_sampling_matches_symbol_sampling(self):
        """Test sample_outputs equals successive sample_output calls"""
        bsc = binary_symmetric_family([0.3])
        x_block = np.array([[0, 1, 1, 0, 1, 0, 0, 1]])

        block = bsc.sample_outputs(0, x_block, np.random.default_rng(11))
        rng = np.random.default_rng(11)
        single = [bsc.sample_output(0, (int(x),), rng) for x in x_block[0]]

        self.assertEqual(list(block), single)

    def test_sampled_frequencies_converge(self):
        """Test empirical output frequencies approach the transition row"""
        noisy = ChannelModel.from_dict(dict(ADDER, transition=[
            [0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9],
        ]))
        rng = np.random.default_rng(5)
        errors = []
        for n in (500, 40000):
            y = noisy.sample_outputs(0, np.array([[0] * n, [1] * n]), rng)
            frequencies = np.bincount(y, minlength=3) / n
            errors.append(float(np.abs(frequencies - noisy.row(0, (0, 1))).max()))

        self.assertLess(errors[0], 0.1)
        self.assertLess(errors[1], 0.01)

    def test_marginalize(self):
        """Test averaging user 2 out of the adder under a uniform input"""
        induced = self.adder.marginalize(0, [1], {1: np.array([0.5, 0.5]), 2: np.array([0.5, 0.5])})

        self.assertEqual(induced.shape, (2, 3))
        np.testing.assert_allclose(induced[0], [0.5, 0.5, 0.0])
        np.testing.assert_allclose(induced[1], [0.0, 0.5, 0.5])

    def test_binary_symmetric_family(self):
        """Test one BSC per interferer option"""
        family = binary_symmetric_family([0.1, 0.2])

        self.assertEqual(family.interferer_options, ('p=0.1', 'p=0.2'))
        np.testing.assert_allclose(family.row(1, (0,)), [0.8, 0.2])
        self.assertEqual(family.interferer_index('p=0.2'), 1)


class TestCodeModels(unittest.TestCase):
    """Test code options, vectors, ensembles and weights"""

    def setUp(self):
        uniform = (0.5, 0.5)
        self.ensemble = CodeEnsembleVector(
            per_user_options=(
                (CodeOption(0.1, uniform), CodeOption(0.4, uniform)),
                (CodeOption(0.2, uniform),),
            ),
        )

    def test_code_option_validation(self):
        """Test rates and distributions are checked"""
        with self.assertRaises(DomainError):
            CodeOption(-0.1, (0.5, 0.5))
        with self.assertRaises(DomainError):
            CodeOption(0.1, (0.5, 0.6))
        with self.assertRaises(DomainError):
            CodeOption(float('nan'), (1.0,))

    def test_rates_in_bits(self):
        """Test one bit converts to ln 2 nats"""
        option = CodeOption.from_dict({'rate': 1.0, 'input_dist': [0.5, 0.5]}, RateUnit.BITS)
        self.assertAlmostEqual(option.rate, math.log(2.0))

        explicit = CodeOption.from_dict({'rate_nats': 0.25, 'input_dist': [1.0]}, RateUnit.BITS)
        self.assertEqual(explicit.rate, 0.25)

    def test_vector_text_form(self):
        """Test parsing and printing of code vectors"""
        g = CodeIndexVector.parse('1,0/2')

        self.assertEqual(g.option_indices, (1, 0))
        self.assertEqual(g.interferer_index, 2)
        self.assertEqual(str(g), '1,0/2')
        self.assertEqual(CodeIndexVector.parse('3'), CodeIndexVector((3,), 0))
        with self.assertRaises(DomainError):
            CodeIndexVector.parse('a,b')
        with self.assertRaises(IndexRangeError):
            CodeIndexVector((0, -1))

    def test_vector_agreement_and_order(self):
        """Test restriction, agreement and lexicographic order"""
        g = CodeIndexVector((1, 0))
        h = CodeIndexVector((1, 1))

        self.assertTrue(g.agrees_on(h, {1}))
        self.assertFalse(g.agrees_on(h, {1, 2}))
        self.assertEqual(h.restricted({2}), (1,))
        self.assertLess(g, h)
        self.assertEqual(vectors_from_list([[1, 0], {'options': [1, 1], 'interferer': 0}]), [g, h])

    def test_ensemble_lookup(self):
        """Test per-user rates and the rate sum"""
        g = CodeIndexVector((1, 0))

        self.assertEqual(self.ensemble.option_counts, (2, 1))
        self.assertEqual(self.ensemble.rate(g, 1), 0.4)
        self.assertAlmostEqual(self.ensemble.rate_sum(g, {1, 2}), 0.6)
        with self.assertRaises(IndexRangeError):
            self.ensemble.check_vector(CodeIndexVector((0, 1)))
        with self.assertRaises(IndexRangeError):
            self.ensemble.check_vector(CodeIndexVector((0, 0), 1))

    def test_with_rate_returns_copy(self):
        """Test replacing one rate leaves the original untouched"""
        swept = self.ensemble.with_rate(1, 0, 0.9)
        g = CodeIndexVector((0, 0))

        self.assertEqual(swept.rate(g, 1), 0.9)
        self.assertEqual(self.ensemble.rate(g, 1), 0.1)

    def test_ensemble_round_trip_against_channel(self):
        """Test ensembles built from descriptions pick up the channel's labels"""
        family = binary_symmetric_family([0.1, 0.2])
        ensemble = CodeEnsembleVector.from_dict(
            {'users': [[{'rate_nats': 0.05, 'input_dist': [0.5, 0.5]}]]}, family)

        self.assertEqual(ensemble.interferer_options, ('p=0.1', 'p=0.2'))
        self.assertEqual(ensemble.channel_g0(family, CodeIndexVector((0,), 1)), 1)
        self.assertEqual(CodeEnsembleVector.from_dict(ensemble.to_dict(), family).digest(), ensemble.digest())

    def test_operation_config(self):
        """Test zones and the disjointness of region and margin"""
        g, h, k = CodeIndexVector((0, 0)), CodeIndexVector((1, 0)), CodeIndexVector((0, 1))
        config = OperationConfig(region={g}, margin={h}, decode_set={1, 2})

        self.assertEqual(config.zone(g), Zone.REGION)
        self.assertEqual(config.zone(h), Zone.MARGIN)
        self.assertEqual(config.zone(k), Zone.OUTSIDE)
        self.assertEqual(config.decode_users, (1, 2))
        with self.assertRaises(DomainError):
            OperationConfig(region={g}, margin={g})
        with self.assertRaises(IndexRangeError):
            config.check_users(1)

    def test_weight_constraint(self):
        """Test sum exp(-N alpha) = 1 is enforced"""
        g, h = CodeIndexVector((0, 0)), CodeIndexVector((1, 0))
        weights = WeightAssignment({g: math.log(2) / 4, h: math.log(2) / 4}, 4)

        self.assertAlmostEqual(weights.factor(g), 0.5)
        with self.assertRaises(WeightError):
            WeightAssignment({g: 0.1, h: 0.1}, 4)
        with self.assertRaises(WeightError):
            weights.alpha(CodeIndexVector((0, 1)))
        with self.assertRaises(WeightError):
            WeightAssignment({g: -1.0}, 4)

    def test_weight_round_trip(self):
        """Test explicit weights are re-verified when loaded"""
        g, h = CodeIndexVector((0, 0)), CodeIndexVector((1, 0))
        weights = WeightAssignment({g: math.log(2) / 3, h: math.log(2) / 3}, 3)
        again = WeightAssignment.from_dict(weights.to_dict())

        self.assertEqual(again.blocklength, 3)
        self.assertAlmostEqual(again.alpha(h), math.log(2) / 3)


if __name__ == '__main__':
    unittest.main()
