import sys, os
import tempfile
import unittest

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
from tokenmark.core import *

class TestTokenmarkCoreTypes(unittest.TestCase):
    def testVarSchedule(self):
        s = make_var_schedule()
        self.assertEqual(s.kind, MULTI_SCALE)
        self.assertEqual(s.unit_sizes, (1, 4, 9, 16, 25, 36, 64, 100, 169, 256))
        self.assertEqual(s.n_units, 10)
        self.assertEqual(s.total_tokens, 680)
        self.assertEqual(s.unit_slice(2), slice(5, 14))
        self.assertEqual(s.offsets.tolist()[-1], 680)

    def testRarSchedule(self):
        s = make_rar_schedule(680)
        self.assertEqual(s.kind, PER_TOKEN)
        self.assertEqual(s.n_units, 680)
        self.assertEqual(s.total_tokens, 680)
        for bad in (0, -3, 2.5, True):
            with self.assertRaises(InvalidArgument):
                make_rar_schedule(bad)

    def testCustomSchedule(self):
        s = make_custom_schedule([3, 2])
        self.assertEqual(s.unit_index_of_tokens().tolist(), [0, 0, 0, 1, 1])
        with self.assertRaises(InvalidArgument):
            make_custom_schedule([1, 2], PER_TOKEN)
        with self.assertRaises(InvalidArgument):
            make_custom_schedule([])
        with self.assertRaises(InvalidArgument):
            make_custom_schedule([2, 0])
        self.assertEqual(make_custom_schedule([1, 4]), make_var_schedule([1, 2]))

    def testCodebook(self):
        cb = Codebook(4096)
        self.assertEqual(cb.size, 4096)
        self.assertTrue(cb.contains([0, 4095]))
        self.assertFalse(cb.contains([4096]))
        self.assertFalse(cb.contains([-1]))
        with self.assertRaises(InvalidArgument):
            Codebook(1)

    def testWatermarkParams(self):
        p = WatermarkParams()
        self.assertEqual((p.gamma, p.delta, p.tau, p.initial_seed), (0.25, 2.0, 4.0, 42))
        self.assertEqual(p.green_size(Codebook(4096)), 1024)
        self.assertEqual(p.replaced(delta=6.0).delta, 6.0)
        for kw in (dict(gamma=0.0), dict(gamma=1.0), dict(delta=-1.0), dict(delta=float("inf")), dict(initial_seed=-1)):
            with self.assertRaises(InvalidArgument):
                WatermarkParams(**kw)

    def testGreenSizeRoundsHalfToEven(self):
        # 0.25 * 10 = 2.5 rounds to 2
        self.assertEqual(WatermarkParams(gamma=0.25).green_size(Codebook(10)), 2)
        with self.assertRaises(InvalidArgument):
            WatermarkParams(gamma=0.1).green_size(Codebook(4))

    def testGreenMask(self):
        m = GreenMask([True, False, True, False])
        self.assertEqual(m.green_count, 2)
        self.assertEqual(m.green_ids().tolist(), [0, 2])
        self.assertEqual(m.red_ids().tolist(), [1, 3])
        self.assertTrue(2 in m)
        self.assertFalse(1 in m)
        self.assertEqual(m.count([0, 0, 1, 2]), 3)
        with self.assertRaises(ValueError):
            m.membership[0] = False

    def testTokenSequence(self):
        s = make_var_schedule([1, 2])
        seq = TokenSequence.from_units(s, [[7], [1, 2, 3, 4]])
        self.assertEqual(len(seq), 5)
        self.assertEqual(seq.unit(1).tolist(), [1, 2, 3, 4])
        self.assertEqual([u.tolist() for u in seq.units], [[7], [1, 2, 3, 4]])
        with self.assertRaises(ScheduleMismatch):
            TokenSequence.from_units(s, [[7], [1, 2, 3]])
        with self.assertRaises(ScheduleMismatch):
            TokenSequence(s, [1, 2, 3])
        with self.assertRaises(InvalidArgument):
            seq.replaced([0, 0, 0, 0, 9]).check_codebook(Codebook(8))

    def testGenerationColorsAreNotPartOfIdentity(self):
        s = make_rar_schedule(3)
        a = TokenSequence(s, [1, 2, 3], generation_colors=[True, False, True])
        b = TokenSequence(s, [1, 2, 3])
        self.assertEqual(a, b)
        self.assertEqual(a.generation_colors.tolist(), [True, False, True])
        self.assertIsNone(a.replaced([1, 2, 4]).generation_colors)
        with self.assertRaises(InvalidArgument):
            TokenSequence(s, [1, 2, 3], generation_colors=[True])

class TestTokenmarkCoreIO(unittest.TestCase):
    def setUp(self):
        self.seq = TokenSequence.from_units(make_var_schedule([1, 2]), [[7], [1, 2, 3, 4095]])

    def testTextForm(self):
        text = format_text(self.seq)
        self.assertEqual(text, "tokenmark-v1 MultiScale 2 1,4\n7\n1 2 3 4095\n")
        self.assertEqual(parse_text(text), self.seq)

    def testBinaryForm(self):
        data = format_binary(self.seq)
        self.assertEqual(data[:4], b"TMK1")
        self.assertEqual(len(data), 4 + 4 * (2 + 2) + 4 * 5)
        self.assertEqual(parse_binary(data), self.seq)

    def testMalformedHeader(self):
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v0 MultiScale 2 1,4\n7\n1 2 3 4\n", "a.txt")
        self.assertEqual(cm.exception.lineNumber, 1)
        self.assertTrue(str(cm.exception).startswith("a.txt:1:"))
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 Diagonal 2 1,4\n7\n1 2 3 4\n")
        self.assertEqual(cm.exception.lineNumber, 1)
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 MultiScale 3 1,4\n7\n1 2 3 4\n")
        self.assertEqual(cm.exception.lineNumber, 1)

    def testMalformedUnitLines(self):
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 MultiScale 2 1,4\n7\n1 2 3\n")
        self.assertEqual(cm.exception.lineNumber, 3)
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 MultiScale 2 1,4\n7 x\n1 2 3 4\n")
        self.assertEqual(cm.exception.lineNumber, 2)
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 MultiScale 2 1,4\n7\n")
        self.assertEqual(cm.exception.lineNumber, 3)
        with self.assertRaises(FormatError) as cm:
            parse_text("tokenmark-v1 MultiScale 2 1,4\n7\n1 2 3 4\n5\n")
        self.assertEqual(cm.exception.lineNumber, 4)

    def testTruncatedBinary(self):
        data = format_binary(self.seq)
        with self.assertRaises(FormatError):
            parse_binary(data[:-1])
        with self.assertRaises(FormatError) as cm:
            parse_binary(b"TMK0" + data[4:])
        self.assertEqual(cm.exception.offset, 0)

    def testReadWriteChoosesFormat(self):
        d = tempfile.mkdtemp()
        binPath = os.path.join(d, "s.tmk")
        textPath = os.path.join(d, "s.txt")
        write_sequence(binPath, self.seq)
        write_sequence(textPath, self.seq)
        with open(binPath, "rb") as f:
            self.assertEqual(f.read(4), b"TMK1")
        with open(textPath) as f:
            self.assertTrue(f.readline().startswith("tokenmark-v1 "))
        self.assertEqual(read_sequence(binPath), self.seq)
        self.assertEqual(read_sequence(textPath), self.seq)

    def testReadRejectsUnknownFiles(self):
        d = tempfile.mkdtemp()
        path = os.path.join(d, "junk.bin")
        with open(path, "wb") as f:
            f.write(b"\xff\xfe\x00junk")
        with self.assertRaises(FormatError):
            read_sequence(path)

if __name__ == '__main__':
    unittest.main()
