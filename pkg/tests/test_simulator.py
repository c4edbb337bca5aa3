"""
Unit tests for Monte Carlo, the exact oracle and calibration (utils/simulator.py)
"""

import json
import math
import unittest
import os
import sys

import pytest

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector, CodeOption, OperationConfig, vectors_from_list
from models.simulation_models import CodebookSet, ErrorMode, ThresholdPolicy
from utils.code_space import enumerate_vectors, uniform_weights
from utils.exceptions import CapExceededError, DomainError, WeightError
from utils.exponents import ExponentCache, ExponentOptimizer
from utils.gep_bounds import GepBoundEvaluator, gep_bound_single_user
from utils.info_theory import in_cd_all, shannon_polymatroid_check
from utils.simulator import (
    calibrate_policy, codebook_averaged_oracle, estimate_event_rates, event_decomposition,
    exact_oracle, run_monte_carlo, wilson_interval,
)

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')
N = 2
QUICK = ExponentOptimizer(grid_points=33, refine_rounds=1)


def load_fixture(name):
    with open(os.path.join(FIXTURES, name), encoding='utf-8') as f:
        return json.load(f)


class TinyInstance:
    """Two users, noisy OR, two options each, user 1 decoded"""

    def __init__(self, blocklength=N):
        self.channel = ChannelModel.from_dict(load_fixture('tiny_channel.json'))
        self.ensemble = CodeEnsembleVector.from_dict(load_fixture('tiny_ensemble.json'), self.channel)
        self.region = vectors_from_list(load_fixture('tiny_region.json'))
        self.config = OperationConfig(region=self.region, decode_set={1})
        self.weights = uniform_weights(enumerate_vectors(self.ensemble), blocklength)
        self.blocklength = blocklength

    def oracle(self, mode=ErrorMode.EQ10, policy=None, **kwargs):
        return exact_oracle(self.channel, self.ensemble, self.config, policy or ThresholdPolicy(),
                            self.weights, self.blocklength, seed=0, mode=mode, **kwargs)

    def monte_carlo(self, trials, seed=0, mode=ErrorMode.EQ10, policy=None, **kwargs):
        return run_monte_carlo(self.channel, self.ensemble, self.config, policy or ThresholdPolicy(),
                               self.weights, self.blocklength, trials, seed, mode=mode, **kwargs)


class TestWilsonInterval(unittest.TestCase):
    """Test binomial confidence intervals"""

    def test_zero_errors(self):
        """Test the interval starts at zero when nothing failed"""
        low, high = wilson_interval(0, 10)

        self.assertAlmostEqual(low, 0.0, places=12)
        self.assertAlmostEqual(high, 0.2775, places=3)

    def test_symmetric_at_half(self):
        """Test the interval is symmetric around 1/2"""
        low, high = wilson_interval(50, 100)
        self.assertAlmostEqual(low + high, 1.0, places=10)
        self.assertLess(low, 0.5)


class TestMonteCarlo(unittest.TestCase):
    """Test Monte Carlo estimation"""

    def setUp(self):
        self.tiny = TinyInstance()

    def test_same_seed_same_result(self):
        """Test a run is a pure function of its seed"""
        first = self.tiny.monte_carlo(50, seed=5)
        second = self.tiny.monte_carlo(50, seed=5)

        self.assertEqual([s.errors for s in first.statistics], [s.errors for s in second.statistics])
        self.assertEqual(first.gep, second.gep)
        self.assertEqual(first.message_handling, 'average-message')

    def test_noiseless_channel_never_errs(self):
        """Test distinct codeword sums over a noiseless adder"""
        channel = ChannelModel.from_dict(load_fixture('adder_mac.json'))
        option = CodeOption(math.log(2) / 2, (0.5, 0.5))
        ensemble = CodeEnsembleVector(((option,), (option,)))
        g = CodeIndexVector((0, 0))
        codebooks = CodebookSet(blocklength=2, books={(1, 0): [[0, 0], [1, 1]], (2, 0): [[0, 0], [0, 1]]})

        report = run_monte_carlo(channel, ensemble, OperationConfig(region={g}, decode_set={1, 2}),
                                 ThresholdPolicy(), uniform_weights([g], 2), 2, trials=40, seed=1,
                                 codebooks=codebooks)
        statistics = report.statistics_for(g)

        self.assertEqual(statistics.errors, 0.0)
        self.assertEqual(statistics.collisions, 0.0)
        self.assertAlmostEqual(statistics.ci_low, 0.0, places=12)
        self.assertEqual(report.gep, 0.0)

    def test_huge_threshold_collides_in_region(self):
        """Test a very negative offset makes every region trial a collision"""
        report = self.tiny.monte_carlo(30, policy=ThresholdPolicy(default_offset=-50.0), vectors=self.tiny.region)
        statistics = report.statistics[0]

        self.assertEqual(statistics.error_rate, 1.0)
        self.assertEqual(statistics.collisions, 30.0)

    def test_event_rates_from_records(self):
        """Test P_m, P_t and P_i are frequencies in [0, 1]"""
        report = self.tiny.monte_carlo(40, record_events=True, keep_records=True)
        g = self.tiny.region[0]
        rates = estimate_event_rates(report.records, g, CodeIndexVector((0, 0)), frozenset())

        self.assertEqual(set(rates), {'P_m', 'P_t', 'P_i'})
        for value in rates.values():
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0)
        self.assertEqual(len(report.records), 40 * 4)

    def test_argument_checks(self):
        """Test trial counts and weight blocklengths are checked"""
        with self.assertRaises(DomainError):
            self.tiny.monte_carlo(0)
        with self.assertRaises(WeightError):
            run_monte_carlo(self.tiny.channel, self.tiny.ensemble, self.tiny.config, ThresholdPolicy(),
                            self.tiny.weights, 3, 10, 0)


class TestExactOracle(unittest.TestCase):
    """Test the exact enumeration oracle"""

    def setUp(self):
        self.tiny = TinyInstance()

    def test_rates_are_probabilities(self):
        """Test average and worst-message rates"""
        report = self.tiny.oracle()

        self.assertTrue(report.exact)
        self.assertEqual(len(report.statistics), 4)
        for statistics in report.statistics:
            self.assertGreaterEqual(statistics.error_rate, 0.0)
            self.assertLessEqual(statistics.error_rate, 1.0 + 1e-12)
            self.assertGreaterEqual(statistics.worst_message_rate, statistics.error_rate - 1e-12)
        self.assertIsNotNone(report.worst_case_gep)

    def test_two_zone_modes_are_ordered(self):
        """Test eq1 never counts more errors than eq6"""
        eq1 = self.tiny.oracle(mode=ErrorMode.EQ1)
        eq6 = self.tiny.oracle(mode=ErrorMode.EQ6)

        for a, b in zip(eq1.statistics, eq6.statistics):
            self.assertLessEqual(a.error_rate, b.error_rate + 1e-12)
        self.assertLessEqual(eq1.gep, eq6.gep + 1e-12)

    def test_event_decomposition_holds(self):
        """Test each error rate is covered by its event probabilities"""
        decomposition = event_decomposition(self.tiny.oracle(mode=ErrorMode.EQ10))

        self.assertTrue(all(entry['holds'] for entry in decomposition['per_g'].values()))
        self.assertLessEqual(decomposition['weighted_error'], decomposition['weighted_events'] + 1e-12)

    def test_event_decomposition_needs_three_zones(self):
        """Test the decomposition is refused for two-zone modes"""
        with self.assertRaises(DomainError):
            event_decomposition(self.tiny.oracle(mode=ErrorMode.EQ1))

    def test_cap(self):
        """Test the enumeration cap"""
        with self.assertRaises(CapExceededError):
            self.tiny.oracle(cap=3)

    def test_codebook_average(self):
        """Test averaging the oracle over codebook seeds"""
        average = codebook_averaged_oracle([0, 1, 2], self.tiny.channel, self.tiny.ensemble, self.tiny.config,
                                           ThresholdPolicy(), self.tiny.weights, N)

        self.assertEqual(len(average.reports), 3)
        self.assertGreaterEqual(average.gep_mean, 0.0)
        self.assertGreaterEqual(average.gep_std, 0.0)
        with self.assertRaises(DomainError):
            codebook_averaged_oracle([], self.tiny.channel, self.tiny.ensemble, self.tiny.config,
                                     ThresholdPolicy(), self.tiny.weights, N)

    @pytest.mark.slow
    def test_monte_carlo_agrees_with_oracle(self):
        """Test Monte Carlo estimates fall within four standard errors of the exact rates"""
        trials = 400
        exact = self.tiny.oracle()
        estimate = self.tiny.monte_carlo(trials)

        for truth, sampled in zip(exact.statistics, estimate.statistics):
            self.assertEqual(truth.vector, sampled.vector)
            p = min(max(truth.error_rate, 0.0), 1.0)
            tolerance = 4 * math.sqrt(p * (1 - p) / trials) + 0.01
            self.assertLessEqual(abs(sampled.error_rate - p), tolerance)


class TestCalibration(unittest.TestCase):
    """Test threshold offset calibration"""

    def test_calibrated_policy_covers_constraints(self):
        """Test one finite offset per (g, g~, S) triple of the region"""
        tiny = TinyInstance(blocklength=4)
        policy = calibrate_policy(tiny.channel, tiny.ensemble, tiny.config, tiny.weights, 4,
                                  trials=30, seed=0, offsets=(-0.5, 0.0, 0.5))
        g = tiny.region[0]

        self.assertTrue(policy.offsets)
        self.assertTrue(all(key.startswith(f"{g}|") for key in policy.offsets))
        self.assertTrue(all(math.isfinite(value) for value in policy.offsets.values()))
        self.assertIn('calibrated', policy.description)

    def test_calibration_is_deterministic(self):
        """Test the same seed gives the same offsets"""
        tiny = TinyInstance(blocklength=4)
        first = calibrate_policy(tiny.channel, tiny.ensemble, tiny.config, tiny.weights, 4, trials=10, seed=2)
        second = calibrate_policy(tiny.channel, tiny.ensemble, tiny.config, tiny.weights, 4, trials=10, seed=2)
        self.assertEqual(first.offsets, second.offsets)

    def test_trials_checked(self):
        """Test calibration needs at least one trial"""
        tiny = TinyInstance()
        with self.assertRaises(DomainError):
            calibrate_policy(tiny.channel, tiny.ensemble, tiny.config, tiny.weights, N, trials=0, seed=0)


class TestBoundConsistency(unittest.TestCase):
    """Test the exact oracle never exceeds the analytic bound of the same decoder"""

    def setUp(self):
        self.tiny = TinyInstance()
        self.cache = ExponentCache()
        self.policy = calibrate_policy(self.tiny.channel, self.tiny.ensemble, self.tiny.config,
                                       self.tiny.weights, N, trials=50, seed=0)
        evaluator = GepBoundEvaluator(self.tiny.channel, self.tiny.ensemble, self.tiny.weights, N,
                                      optimizer=QUICK, cache=self.cache)
        self.bound = evaluator.bound_d({1}, self.tiny.region)

    def test_gep_is_below_bound(self):
        """Test average and worst-message GEP of the calibrated decoder"""
        report = self.tiny.oracle(policy=self.policy)

        self.assertLessEqual(report.gep, self.bound.total)
        self.assertLessEqual(report.worst_case_gep, self.bound.total)

    def test_outside_vectors_are_covered_by_their_terms(self):
        """Test each weighted outside error rate is below the terms naming that vector"""
        report = self.tiny.oracle(policy=self.policy)
        region = set(self.tiny.region)

        for statistics in report.statistics:
            if statistics.vector in region:
                continue
            weighted = statistics.worst_message_rate * math.exp(-N * report.weights[statistics.vector])
            covering = math.fsum(
                term.contribution(N)
                for breakdown in self.bound.breakdown
                for term in breakdown.interference_terms + breakdown.misdetection_terms
                if term.other == statistics.vector
            )
            self.assertLessEqual(weighted, covering)

    def test_partition_bound_is_no_looser(self):
        """Test the single-user partition bound never exceeds the fixed D = {1} bound"""
        partition = gep_bound_single_user(self.tiny.channel, self.tiny.ensemble, self.tiny.region, (),
                                          self.tiny.weights, N, strategy='exhaustive',
                                          optimizer=QUICK, cache=self.cache)
        self.assertLessEqual(partition.total, self.bound.total * (1 + 1e-12))


class TestNoisyAdderJammer(unittest.TestCase):
    """Test a clean noisy adder against a jammed, input-independent state"""

    def setUp(self):
        self.channel = ChannelModel.from_dict(load_fixture('noisy_adder_jammer.json'))
        self.ensemble = CodeEnsembleVector.from_dict(load_fixture('noisy_adder_ensemble.json'), self.channel)
        self.region = vectors_from_list(load_fixture('noisy_adder_region.json'))
        self.clean = self.region[0]
        self.jammed = CodeIndexVector((0, 0), 1)
        self.config = OperationConfig(region=self.region, decode_set={1, 2})

    def test_region_membership(self):
        """Test the clean state supports the rates and the jammed state does not"""
        rates = [0.02, 0.02]
        dists = [[0.5, 0.5], [0.5, 0.5]]

        self.assertTrue(in_cd_all(self.channel, self.ensemble, self.clean).member)
        self.assertTrue(shannon_polymatroid_check(self.channel, dists, rates, g0=0).member)
        self.assertFalse(shannon_polymatroid_check(self.channel, dists, rates, g0=1).member)

    @pytest.mark.slow
    def test_errors_fall_and_jammed_blocks_collide(self):
        """Test in-region errors stay small while jammed blocks are declared collisions"""
        trials = 60
        vectors = [self.clean, self.jammed]
        inside = []
        for blocklength in (50, 100, 200):
            weights = uniform_weights(vectors, blocklength)
            eq6 = run_monte_carlo(self.channel, self.ensemble, self.config, ThresholdPolicy(), weights,
                                  blocklength, trials, seed=3, mode=ErrorMode.EQ6, vectors=vectors)
            eq1 = run_monte_carlo(self.channel, self.ensemble, self.config, ThresholdPolicy(), weights,
                                  blocklength, trials, seed=3, mode=ErrorMode.EQ1, vectors=vectors)

            jammed = eq6.statistics_for(self.jammed)
            self.assertGreater(jammed.collisions / trials, 0.9)
            for a, b in zip(eq1.statistics, eq6.statistics):
                self.assertLessEqual(a.errors, b.errors)
            inside.append(eq6.statistics_for(self.clean).error_rate)

        self.assertLessEqual(inside[-1], 0.05)
        self.assertLessEqual(inside[-1], inside[0] + 0.02)


if __name__ == '__main__':
    unittest.main()
