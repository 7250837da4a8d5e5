import sys, os
import functools
import math
import unittest

import numpy as np
import scipy.stats

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
from tokenmark.core import *
from tokenmark.embed import SyntheticModel
from tokenmark.channel import ChannelSpec, UNIFORM_FLIP
from tokenmark.detect import z_statistic, tpr_at_fpr
from tokenmark.stats import *

SLOW = os.environ.get("TOKENMARK_SLOW_TESTS") == "1"

def rar_setup(delta=2.0, seed=0, channel=None):
    cb = Codebook(4096)
    return TrialSetup(SyntheticModel(cb), make_rar_schedule(680), cb, WatermarkParams(delta=delta), seed,
                      channel=channel)

class TestTokenmarkSummary(unittest.TestCase):
    def testMoments(self):
        s = summarize([3.0, 1.0, 2.0, 4.0])
        self.assertEqual(s.n, 4)
        self.assertEqual(s.mean, 2.5)
        self.assertEqual(s.variance, 1.25)
        self.assertEqual((s.min, s.max), (1.0, 4.0))
        self.assertEqual(s.p50, 2.5)
        self.assertEqual(s.fraction_above(2.0), 0.5)
        self.assertEqual(s.fraction_above(4.0), 0.0)
        self.assertEqual(list(s.to_dict()), list(SUMMARY_COLUMNS))

    def testMerge(self):
        a, b = [0.5, -1.0, 2.0], [3.0, 0.0]
        m = summarize(a).merge(summarize(b))
        self.assertEqual(m.to_row(), summarize(a + b).to_row())

    def testEmpty(self):
        with self.assertRaises(InvalidArgument):
            summarize([])

class TestTokenmarkBinomial(unittest.TestCase):
    def testExactTail(self):
        self.assertAlmostEqual(binomial_tail_exact(5, 10, 0.5), 0.623046875, delta=1e-12)
        self.assertEqual(binomial_tail_exact(0, 680, 0.25), 1.0)
        self.assertAlmostEqual(binomial_log_tail_exact(680, 680, 0.25), 680 * math.log(0.25), delta=1e-6)
        self.assertEqual(binomial_tail_exact(680, 680, 0.25), 0.0)

    def testExactAndNormalDecisionsAgreeAwayFromTheBoundary(self):
        tau = 4.0
        alpha = scipy.stats.norm.sf(tau)
        boundary = min(g for g in range(681) if z_statistic(g, 680, 0.25) > tau)
        disagreements = [g for g in range(681)
                         if (z_statistic(g, 680, 0.25) > tau) != (binomial_log_tail_exact(g, 680, 0.25) <= math.log(alpha))]
        self.assertTrue(all(abs(g - boundary) <= 2 for g in disagreements), disagreements)

    def testTolerance(self):
        self.assertAlmostEqual(binomial_tolerance(0.25, 10000), 3 * math.sqrt(0.25 * 0.75 / 10000))

class TestTokenmarkRoc(unittest.TestCase):
    def testSeparated(self):
        points = roc([5.0, 6.0, 7.0], [0.0, 1.0, 2.0])
        self.assertEqual(points[0], (0.0, 0.0))
        self.assertEqual(points[-1], (1.0, 1.0))
        self.assertAlmostEqual(auc(points), 1.0)

    def testIndistinguishable(self):
        z = np.linspace(-2.0, 2.0, 101)
        self.assertAlmostEqual(auc(roc(z, z)), 0.5)

class TestTokenmarkTrials(unittest.TestCase):
    def testRunTrialsKeepsOrder(self):
        f = functools.partial(pow, 2)
        self.assertEqual(run_trials(f, 10), [2 ** k for k in range(10)])
        self.assertEqual(run_trials(f, 10, threads=2), [2 ** k for k in range(10)])

    def testIndependentOfThreads(self):
        setup = rar_setup()
        a = clean_z_values(setup, 12)
        b = clean_z_values(setup, 12, threads=3)
        self.assertEqual(a.tolist(), b.tolist())

    def testAddingTrialsKeepsEarlierOnes(self):
        setup = rar_setup()
        self.assertEqual(watermarked_z_values(setup, 3).tolist(), watermarked_z_values(setup, 5).tolist()[:3])

    def testChannelIsReseededPerTrial(self):
        setup = rar_setup(channel=ChannelSpec(UNIFORM_FLIP, flip_prob=0.5))
        a, b = watermarked_sequences(setup, 2)
        clean = setup.replaced(channel=None)
        flipsA = a.ids != clean.watermarked_sequence(0).ids
        flipsB = b.ids != clean.watermarked_sequence(1).ids
        self.assertNotEqual(np.flatnonzero(flipsA).tolist()[:20], np.flatnonzero(flipsB).tolist()[:20])

class TestTokenmarkCalibration(unittest.TestCase):
    def testCleanZIsStandardNormal(self):
        n = 1000
        z = clean_z_values(rar_setup(), n)
        self.assertAlmostEqual(float(z.mean()), 0.0, delta=3.0 / math.sqrt(n))
        self.assertTrue(0.85 <= float(z.var()) <= 1.15)

    def testCalibrateFpr(self):
        setup = rar_setup()
        summary, fpr = calibrate_fpr(1000, setup.params, setup.schedule, setup.codebook, setup.source, seed=4)
        self.assertEqual(summary.n, 1000)
        self.assertLessEqual(fpr, 0.005)
        with self.assertRaises(InvalidArgument):
            calibrate_fpr(999, setup.params, setup.schedule, setup.codebook)

    def testWatermarkStrength(self):
        setup = rar_setup(delta=2.0)
        z = watermarked_z_values(setup, 30)
        # green rate about 0.711 -> z about 27.7
        self.assertTrue(24.0 < float(z.mean()) < 31.0, z.mean())
        clean = clean_z_values(setup, 1000)
        self.assertGreaterEqual(tpr_at_fpr(z, clean, 0.01), 0.9)

    def testDeltaSweepIsMonotone(self):
        rows, clean = delta_sweep(rar_setup(), [0.0, 1.0, 2.0], n_watermarked=40, n_clean=1000)
        self.assertEqual([r[0] for r in rows], [0.0, 1.0, 2.0])
        self.assertEqual(clean.shape, (1000,))
        tprs = [r[1] for r in rows]
        means = [r[2] for r in rows]
        self.assertTrue(all(a <= b for a, b in zip(tprs, tprs[1:])), tprs)
        self.assertTrue(all(a < b for a, b in zip(means, means[1:])), means)
        self.assertLess(tprs[0], 0.2)

    def testDeltaSweepReusesCleanSample(self):
        setup = rar_setup()
        rows, clean = delta_sweep(setup, [2.0], n_watermarked=5, n_clean=1000, clean=np.full(100, 1e9))
        self.assertEqual(rows[0][1], 0.0)
        self.assertEqual(clean.shape, (100,))

    def testFlipsDegradeDetection(self):
        setup = rar_setup(delta=2.0)
        means = []
        for p in (0.0, 0.3, 0.6, 0.9):
            s = setup.replaced(channel=ChannelSpec(UNIFORM_FLIP, flip_prob=p))
            means.append(float(watermarked_z_values(s, 20).mean()))
        self.assertTrue(all(a > b for a, b in zip(means, means[1:])), means)

    def testSixtyFivePercentOverlapStillDetects(self):
        setup = rar_setup(delta=2.0)
        clean = clean_z_values(setup, 1000)
        s = setup.replaced(channel=ChannelSpec(UNIFORM_FLIP, flip_prob=0.35))
        z = watermarked_z_values(s, 50)
        self.assertGreaterEqual(tpr_at_fpr(z, clean, 0.01), 0.3)

@unittest.skipUnless(SLOW, "set TOKENMARK_SLOW_TESTS=1 for acceptance-scale runs")
class TestTokenmarkAcceptanceScale(unittest.TestCase):
    def setUp(self):
        self.threads = int(os.environ.get("TOKENMARK_THREADS", "4"))

    def testFprAtTau(self):
        setup = rar_setup()
        summary, fpr = calibrate_fpr(100000, setup.params, setup.schedule, setup.codebook, setup.source,
                                     seed=1, threads=self.threads)
        self.assertLessEqual(fpr, 1e-4)
        self.assertAlmostEqual(summary.mean, 0.0, delta=0.02)
        self.assertTrue(0.95 <= summary.variance <= 1.05)

    def testTprAtOnePercent(self):
        for delta, minimum in ((2.0, 0.90), (6.0, 0.98)):
            setup = rar_setup(delta=delta, seed=2)
            clean = clean_z_values(setup, 10000, threads=self.threads)
            z = watermarked_z_values(setup, 1000, threads=self.threads)
            self.assertGreaterEqual(tpr_at_fpr(z, clean, 0.01), minimum)

    def testTprNonIncreasingInFlips(self):
        setup = rar_setup(delta=2.0, seed=3)
        clean = clean_z_values(setup, 10000, threads=self.threads)
        tprs = []
        for p in np.arange(10) / 10.0:
            s = setup.replaced(channel=ChannelSpec(UNIFORM_FLIP, flip_prob=float(p)))
            tprs.append(tpr_at_fpr(watermarked_z_values(s, 1000, threads=self.threads), clean, 0.01))
        self.assertTrue(all(a >= b for a, b in zip(tprs, tprs[1:])), tprs)

if __name__ == '__main__':
    unittest.main()
