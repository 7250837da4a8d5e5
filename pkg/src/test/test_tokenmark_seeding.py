import sys, os
import unittest

import numpy as np
import scipy.stats

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
from tokenmark.core import *
from tokenmark.seeding import *

SLOW = os.environ.get("TOKENMARK_SLOW_TESTS") == "1"

class TestTokenmarkHashAndPrg(unittest.TestCase):
    def testFnv1a64(self):
        self.assertEqual(fnv1a64(b""), 0xcbf29ce484222325)
        self.assertEqual(fnv1a64(b"a"), 0xaf63dc4c8601ec8c)

    def testSplitMix64(self):
        g = SplitMix64(0)
        self.assertEqual(g.next(), 0xe220a8397b1dcdaf)
        a = SplitMix64(12345)
        b = SplitMix64(12345)
        self.assertEqual(a.next_array(5).tolist(), [b.next() for _ in range(5)])
        self.assertEqual(a.state, b.state)

    def testUniforms(self):
        u = SplitMix64(7).uniforms(10000)
        self.assertTrue(np.all(u >= 0.0))
        self.assertTrue(np.all(u < 1.0))
        self.assertAlmostEqual(float(u.mean()), 0.5, delta=0.02)
        g = SplitMix64(7)
        self.assertEqual(g.uniform(), u[0])

    def testDeriveSeed(self):
        self.assertEqual(derive_seed(0, "clean", 3), derive_seed(0, "clean", 3))
        seeds = set([derive_seed(0, "clean", k) for k in range(100)])
        self.assertEqual(len(seeds), 100)
        self.assertNotEqual(derive_seed(0, "clean", 0), derive_seed(0, "watermarked", 0))
        self.assertNotEqual(derive_seed(0, "clean"), derive_seed(1, "clean"))

    def testHashUnit(self):
        self.assertEqual(hash_unit([97]), fnv1a64(b"a\x00\x00\x00"))
        self.assertEqual(hash_unit(None, 42), fnv1a64((42).to_bytes(8, "little")))
        with self.assertRaises(InvalidArgument):
            hash_unit(None)
        with self.assertRaises(InvalidArgument):
            hash_unit([])

    def testHashUnitsMatchesHashUnit(self):
        rows = np.array([[0, 1, 2], [4095, 7, 7], [3, 3, 3]])
        self.assertEqual(hash_units(rows).tolist(), [hash_unit(r) for r in rows])

class TestTokenmarkPartition(unittest.TestCase):
    def testGreenSize(self):
        cb = Codebook(4096)
        m = partition(cb, 123, 0.25)
        self.assertEqual(m.size, 4096)
        self.assertEqual(m.green_count, 1024)
        self.assertEqual(len(m.red_ids()), 3072)

    def testDeterministic(self):
        cb = Codebook(4096)
        self.assertEqual(partition(cb, 99, 0.25), partition(cb, 99, 0.25))
        self.assertNotEqual(partition(cb, 99, 0.25), partition(cb, 100, 0.25))

    def testInvalidGamma(self):
        cb = Codebook(8)
        for gamma in (0.0, 1.0, 0.01, 0.99):
            with self.assertRaises(InvalidArgument):
                partition(cb, 1, gamma)

    def testUniformMembership(self):
        cb = Codebook(64)
        counts = np.zeros(64)
        n = 2000
        for k in range(n):
            counts += partition(cb, derive_seed(5, "uniformity", k), 0.25).membership
        self.assertEqual(counts.sum(), n * 16)
        _, p = scipy.stats.chisquare(counts)
        self.assertGreater(p, 0.01)

    @unittest.skipUnless(SLOW, "set TOKENMARK_SLOW_TESTS=1 for acceptance-scale runs")
    def testUniformMembershipFullCodebook(self):
        cb = Codebook(4096)
        counts = np.zeros(4096)
        n = 10000
        for k in range(n):
            counts += partition(cb, derive_seed(6, "uniformity", k), 0.25).membership
        rate = counts / n
        self.assertLessEqual(float(np.abs(rate - 0.25).max()), 0.02)
        _, p = scipy.stats.chisquare(counts)
        self.assertGreater(p, 0.01)

class TestTokenmarkSeedChain(unittest.TestCase):
    def setUp(self):
        self.cb = Codebook(256)
        self.params = WatermarkParams(initial_seed=42)
        self.chain = SeedChain()
        s = make_var_schedule([1, 2, 3])
        self.seq = TokenSequence(s, np.arange(14) * 17 % 256)

    def testUnknownAlgorithms(self):
        with self.assertRaises(InvalidArgument):
            SeedChain(hash_algorithm="md5")
        with self.assertRaises(InvalidArgument):
            SeedChain(prg_algorithm="mt19937")

    def testFirstUnitUsesInitialSeed(self):
        seeds = self.chain.unit_seeds(self.seq, self.params)
        self.assertEqual(len(seeds), 3)
        self.assertEqual(seeds[0], hash_unit(None, 42))
        self.assertEqual(seeds[1], hash_unit(self.seq.unit(0)))
        self.assertEqual(seeds[2], hash_unit(self.seq.unit(1)))
        other = self.chain.unit_seeds(self.seq, self.params.replaced(initial_seed=43))
        self.assertNotEqual(seeds[0], other[0])
        self.assertEqual(seeds[1:], other[1:])

    def testColorsAgreeWithMasks(self):
        masks = self.chain.masks(self.seq, self.cb, self.params)
        colors = self.chain.colors(self.seq, self.cb, self.params)
        expected = []
        for m, u in zip(masks, self.seq.units):
            expected.extend(bool(m.membership[t]) for t in u)
        self.assertEqual(colors.tolist(), expected)

    def testChangeOnlyMovesNextUnit(self):
        ids = self.seq.ids.copy()
        ids[2] = (ids[2] + 1) % 256  # a token of unit 1
        changed = self.seq.replaced(ids)
        a = self.chain.masks(self.seq, self.cb, self.params)
        b = self.chain.masks(changed, self.cb, self.params)
        self.assertEqual(a[0], b[0])
        self.assertEqual(a[1], b[1])
        self.assertNotEqual(a[2], b[2])

    def testPerTokenSeedsAreVectorised(self):
        s = make_rar_schedule(20)
        seq = TokenSequence(s, np.arange(20) * 31 % 256)
        seeds = self.chain.unit_seeds(seq, self.params)
        self.assertEqual(seeds[0], hash_unit(None, 42))
        self.assertEqual(seeds[1:], [hash_unit([t]) for t in seq.ids[:-1]])

if __name__ == '__main__':
    unittest.main()
