"""
Unit tests for error exponents and their optimizer (utils/exponents.py)
"""

import math
import shutil
import tempfile
import unittest
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.channel_models import binary_symmetric_family
from models.code_models import CodeEnsembleVector, CodeIndexVector, CodeOption
from utils.exceptions import DomainError
from utils.exponents import (
    ExponentCache, ExponentKind, ExponentOptimizer, ExponentQuery, gallager_e0,
    golden_section_max, maximize, objective_id_d, objective_id_s, objective_md,
)

UNIFORM = (0.5, 0.5)
G = CodeIndexVector((0,))
QUICK = ExponentOptimizer(grid_points=11, refine_rounds=1)


def bsc_query(rate, kind=ExponentKind.MD, subset=(), alphas=(0.0, 0.0), g_tilde=G):
    channel = binary_symmetric_family([0.1])
    ensemble = CodeEnsembleVector(((CodeOption(rate, UNIFORM),),))
    return ExponentQuery(channel, ensemble, {1}, subset, G, g_tilde, alphas[0], alphas[1], kind)


def family_query(s_alphas=(0.0, 0.0)):
    """iD_D query between the two members of a BSC family"""
    family = binary_symmetric_family([0.1, 0.2])
    ensemble = CodeEnsembleVector(((CodeOption(0.05, UNIFORM),),), interferer_options=('p=0.1', 'p=0.2'))
    return ExponentQuery(family, ensemble, {1}, {1}, CodeIndexVector((0,), 0),
                         CodeIndexVector((0,), 1), s_alphas[0], s_alphas[1], ExponentKind.ID_D)


class TestObjectives(unittest.TestCase):
    """Test the exponent objectives at fixed parameters"""

    def test_md_reduces_to_gallager(self):
        """Test one user, S empty and g~ = g give -rho r + E0(rho)"""
        query = bsc_query(0.1)
        transition = query.channel.transition[0]

        for rho in (0.25, 0.4, 1.0):
            s = rho / (1.0 + rho)
            expected = -rho * 0.1 + gallager_e0(transition, UNIFORM, rho)
            self.assertAlmostEqual(objective_md(query, rho, s), expected, places=10)

    def test_gallager_e0_at_one(self):
        """Test E0(1) on BSC(0.1) equals ln 1.25"""
        transition = binary_symmetric_family([0.1]).transition[0]
        self.assertAlmostEqual(gallager_e0(transition, UNIFORM, 1.0), math.log(1.25), places=12)
        self.assertAlmostEqual(objective_md(bsc_query(0.0), 1.0, 0.5), math.log(1.25), places=10)

    def test_id_s_without_exponent_on_g(self):
        """Test s = 0 leaves alpha~ minus the free rate"""
        query = bsc_query(0.2, kind=ExponentKind.ID_S, alphas=(0.0, 0.7))
        self.assertAlmostEqual(objective_id_s(query, 1.0, 0.0), 0.7 - 0.2, places=10)

    def test_id_d_identical_channels(self):
        """Test identical channels reduce iD_D to s alpha + (1 - s) alpha~"""
        query = bsc_query(0.1, kind=ExponentKind.ID_D, subset={1}, alphas=(0.1, 0.3))

        self.assertAlmostEqual(objective_id_d(query, 0.0), 0.3, places=12)
        self.assertAlmostEqual(objective_id_d(query, 1.0), 0.1, places=12)
        self.assertAlmostEqual(objective_id_d(query, 0.5), 0.2, places=12)

    def test_id_d_bhattacharyya(self):
        """Test s = 1/2 between BSC(0.1) and BSC(0.2)"""
        expected = -math.log(math.sqrt(0.9 * 0.8) + math.sqrt(0.1 * 0.2))
        self.assertAlmostEqual(objective_id_d(family_query(), 0.5), expected, places=10)

    def test_kind_mismatch(self):
        """Test each objective only accepts its own kind"""
        with self.assertRaises(DomainError):
            objective_id_s(bsc_query(0.1), 0.5, 0.2)
        with self.assertRaises(DomainError):
            objective_md(family_query(), 0.5, 0.2)

    def test_parameter_domains(self):
        """Test rho in (0, 1] and the s range of each kind"""
        with self.assertRaises(DomainError):
            objective_md(bsc_query(0.1), 0.0, 0.5)
        with self.assertRaises(DomainError):
            objective_md(bsc_query(0.1), 1.5, 0.5)
        with self.assertRaises(DomainError):
            objective_md(bsc_query(0.1), 0.5, 1.2)
        with self.assertRaises(DomainError):
            objective_id_s(bsc_query(0.1, kind=ExponentKind.ID_S), 0.6, 0.5)


class TestExponentQuery(unittest.TestCase):
    """Test query validation"""

    def test_id_d_requires_full_subset(self):
        """Test iD_D needs S = D"""
        with self.assertRaises(DomainError):
            bsc_query(0.1, kind=ExponentKind.ID_D, subset=())

    def test_md_requires_proper_subset(self):
        """Test mD and iD_S need S strictly inside D"""
        with self.assertRaises(DomainError):
            bsc_query(0.1, kind=ExponentKind.MD, subset={1})

    def test_vectors_must_agree_on_subset(self):
        """Test g and g~ must share their options on S"""
        family = binary_symmetric_family([0.1])
        ensemble = CodeEnsembleVector(((CodeOption(0.1, UNIFORM), CodeOption(0.3, UNIFORM)),))
        with self.assertRaises(DomainError):
            ExponentQuery(family, ensemble, {1}, {1}, CodeIndexVector((0,)), CodeIndexVector((1,)),
                          0.0, 0.0, ExponentKind.ID_D)

    def test_negative_weights_rejected(self):
        """Test alphas must be nonnegative"""
        with self.assertRaises(DomainError):
            bsc_query(0.1, alphas=(-0.1, 0.0))


class TestOptimizer(unittest.TestCase):
    """Test maximization over (rho, s)"""

    def test_md_reaches_gallager_value(self):
        """Test the grid contains rho = 1, s = 1/2"""
        report = maximize(bsc_query(0.0))

        self.assertEqual(report.kind, 'mD')
        self.assertGreaterEqual(report.value, math.log(1.25) - 1e-9)

    def test_maximizer_reproduces_value(self):
        """Test the objective at the reported maximizer equals the reported value"""
        query = bsc_query(0.1)
        report = maximize(query)
        self.assertAlmostEqual(objective_md(query, report.arg_rho, report.arg_s), report.value, places=9)

    def test_id_d_has_no_rho(self):
        """Test iD_D maximizes over s only"""
        report = maximize(bsc_query(0.1, kind=ExponentKind.ID_D, subset={1}, alphas=(0.1, 0.3)))

        self.assertIsNone(report.arg_rho)
        self.assertAlmostEqual(report.value, 0.3, places=6)

    def test_rate_above_capacity_pushes_rho_down(self):
        """Test a rate far above capacity keeps rho within one grid step of its floor"""
        report = maximize(bsc_query(5.0))

        self.assertLess(report.value, 0.0)
        self.assertLessEqual(report.arg_rho, 0.011)

    def test_exponents_do_not_grow_with_rate(self):
        """Test mD and iD_S maxima are non-increasing in the rate on a fixed grid"""
        optimizer = ExponentOptimizer(grid_points=21, refine_rounds=0)
        for kind, alphas in ((ExponentKind.MD, (0.0, 0.0)), (ExponentKind.ID_S, (0.0, 0.4))):
            values = [maximize(bsc_query(rate, kind=kind, alphas=alphas), optimizer).value
                      for rate in (0.0, 0.05, 0.1, 0.2, 0.4)]
            for higher, lower in zip(values, values[1:]):
                self.assertLessEqual(lower, higher + 1e-12)

    def test_grid_refinement_never_lowers_maximum(self):
        """Test finer grids reach at least the maximum of coarser ones"""
        query = family_query((0.1, 0.3))
        refined = [maximize(query, ExponentOptimizer(grid_points=n)).value for n in (65, 101, 201)]
        for coarse, fine in zip(refined, refined[1:]):
            self.assertGreaterEqual(fine, coarse - 1e-9)

        # nested grids without refinement
        query = bsc_query(0.1)
        nested = [maximize(query, ExponentOptimizer(grid_points=n, refine_rounds=0)).value for n in (51, 101, 201)]
        for coarse, fine in zip(nested, nested[1:]):
            self.assertGreaterEqual(fine, coarse - 1e-12)

    def test_grid_needs_two_points(self):
        """Test the optimizer rejects degenerate grids"""
        with self.assertRaises(DomainError):
            ExponentOptimizer(grid_points=1)


class TestGoldenSection(unittest.TestCase):
    """Test the one-dimensional refinement"""

    def test_quadratic_maximum(self):
        """Test the maximum of -(x - 0.3)^2 on [0, 1]"""
        x, fx, evaluations = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, tol=1e-8)

        self.assertAlmostEqual(x, 0.3, places=6)
        self.assertAlmostEqual(fx, 0.0, places=10)
        self.assertGreater(evaluations, 2)

    def test_degenerate_interval(self):
        """Test an interval narrower than the tolerance is evaluated once"""
        x, fx, evaluations = golden_section_max(lambda t: t, 0.5, 0.5)
        self.assertEqual((x, fx, evaluations), (0.5, 0.5, 1))


class TestExponentCache(unittest.TestCase):
    """Test memoization and persistence of exponent reports"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.query = bsc_query(0.1)
        self.context = ExponentCache.context_key(self.query.channel, self.query.ensemble, QUICK)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_hits_and_misses(self):
        """Test the second lookup is served from memory"""
        cache = ExponentCache()
        first = cache.get_or_compute(self.context, self.query, QUICK)
        second = cache.get_or_compute(self.context, self.query, QUICK)

        self.assertIs(first, second)
        self.assertEqual((cache.hits, cache.misses), (1, 1))
        self.assertEqual(len(cache), 1)

    def test_context_separates_optimizers(self):
        """Test different optimizer settings give different contexts"""
        other = ExponentCache.context_key(self.query.channel, self.query.ensemble, ExponentOptimizer())
        self.assertNotEqual(self.context, other)

    def test_persistence(self):
        """Test a saved cache is reloaded from its directory"""
        cache = ExponentCache(directory=self.temp_dir)
        report = cache.get_or_compute(self.context, self.query, QUICK)
        path = cache.save()

        self.assertTrue(os.path.exists(path))
        self.assertEqual(os.path.basename(path), 'exponents.json')

        reloaded = ExponentCache(directory=self.temp_dir)
        self.assertEqual(len(reloaded), 1)
        again = reloaded.get_or_compute(self.context, self.query, QUICK)
        self.assertEqual(reloaded.hits, 1)
        self.assertAlmostEqual(again.value, report.value, places=12)

    def test_memory_only_cache_does_not_save(self):
        """Test save is a no-op without a directory"""
        self.assertIsNone(ExponentCache().save())


if __name__ == '__main__':
    unittest.main()
