#coding: utf-8

import bisect
import logging
import struct

import numpy as np

from tokenmark.core.base_types import UnitSchedule, TokenSequence, Codebook, InvalidArgument, \
    ScheduleMismatch, MULTI_SCALE, SCHEDULE_KINDS
from tokenmark.core.tokenseq_io import FormatError
from tokenmark.seeding.seed_chain import SplitMix64, derive_seed

logger = logging.getLogger(__name__)

POSITION_MODES = ("position", "unit", "none")
START = -1
MAX_ORDER = 3
STUDENT_MAGIC = b"TMS1"


def _position_classes(schedule, mode):
    T = schedule.total_tokens
    if mode == "position":
        return np.arange(T, dtype=np.int64)
    if mode == "unit" and schedule.kind == MULTI_SCALE:
        return schedule.unit_index_of_tokens().astype(np.int64)
    return np.zeros(T, dtype=np.int64)


def _context_rows(ids, classes, order):
    ''' One row per token: (position class, x_{t-order}, ..., x_{t-1}), START before the first token. '''
    T = ids.shape[0]
    padded = np.concatenate((np.full(order, START, dtype=np.int64), ids))
    cols = [classes]
    for d in range(order, 0, -1):
        cols.append(padded[order - d:order - d + T])
    return np.stack(cols, axis=1)


class StudentModel(object):
    ''' Additively smoothed n-gram over token ids. Every context is prefixed by a position class:
        the absolute token index ("position"), the unit index for multi-scale schedules ("unit";
        a single class for per-token schedules) or nothing ("none").
        Contexts cross unit boundaries in generation order.
    '''

    def __init__(self, order, smoothing, schedule, codebook, position_mode, rows, counts):
        self.order = order
        self.smoothing = smoothing
        self.schedule = schedule
        self.codebook = codebook
        self.position_mode = position_mode
        # rows: unique (context..., token) records in lexicographic order, counts aligned
        self.rows = rows
        self.counts = counts
        self.__table = None

    @property
    def n_records(self): return int(self.rows.shape[0])

    def __build_table(self):
        table = {}
        rows, counts = self.rows, self.counts
        if rows.shape[0]:
            ctx = rows[:, :-1]
            change = np.flatnonzero(np.any(ctx[1:] != ctx[:-1], axis=1)) + 1
            starts = np.concatenate(([0], change)).tolist()
            ends = starts[1:] + [rows.shape[0]]
            tokens = rows[:, -1].tolist()
            cum = np.cumsum(counts).tolist()
            for b, e in zip(starts, ends):
                base = cum[b - 1] if b else 0
                table[tuple(ctx[b].tolist())] = (tokens[b:e], [c - base for c in cum[b:e]])
        self.__table = table
        return table

    def table(self):
        ''' context tuple -> (token ids, cumulative counts) '''
        return self.__table if self.__table is not None else self.__build_table()

    def distribution(self, context):
        ''' The smoothed next-token distribution of a context, as a dense vector. '''
        V = self.codebook.size
        p = np.full(V, self.smoothing, dtype=np.float64)
        entry = self.table().get(tuple(context))
        if entry is not None:
            tokens, cum = entry
            p[tokens] += np.diff(np.concatenate(([0], cum)))
        return p / p.sum()

    def __getstate__(self):
        d = self.__dict__.copy()
        d["_StudentModel__table"] = None
        return d

    def __eq__(self, right):
        return right.__class__ is StudentModel and \
            (self.order, self.smoothing, self.schedule, self.codebook, self.position_mode) == \
            (right.order, right.smoothing, right.schedule, right.codebook, right.position_mode) and \
            np.array_equal(self.rows, right.rows) and np.array_equal(self.counts, right.counts)
    def __ne__(self, right): return not self.__eq__(right)

    def __repr__(self):
        return "StudentModel(order=%d,smoothing=%r,position_mode=%s,records=%d)" % \
            (self.order, self.smoothing, self.position_mode, self.n_records)


def _merge_records(rows, counts):
    if not rows:
        return np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64)
    allRows = np.concatenate(rows)
    allCounts = np.concatenate(counts)
    uniq, inverse = np.unique(allRows, axis=0, return_inverse=True)
    merged = np.bincount(inverse.ravel(), weights=allCounts, minlength=uniq.shape[0]).astype(np.int64)
    return uniq, merged


def merge_students(a, b):
    ''' Count merging; associative and commutative. '''
    if (a.order, a.smoothing, a.schedule, a.codebook, a.position_mode) != \
            (b.order, b.smoothing, b.schedule, b.codebook, b.position_mode):
        raise InvalidArgument("students with different settings cannot be merged")
    rows, counts = _merge_records([a.rows, b.rows], [a.counts, b.counts])
    return StudentModel(a.order, a.smoothing, a.schedule, a.codebook, a.position_mode, rows, counts)


def train_student(corpus, order, smoothing, codebook, position_mode="unit", chunk_size=256):
    ''' Accumulates context/token counts over every sequence of the corpus. '''
    corpus = list(corpus)
    if not corpus:
        raise InvalidArgument("cannot train on an empty corpus")
    if not (0 <= int(order) <= MAX_ORDER):
        raise InvalidArgument("order must be in 0..%d, got %r" % (MAX_ORDER, order))
    smoothing = float(smoothing)
    if not (np.isfinite(smoothing) and smoothing > 0.0):
        raise InvalidArgument("smoothing must be positive, got %r" % smoothing)
    if position_mode not in POSITION_MODES:
        raise InvalidArgument("unknown position mode %r (known: %s)" % (position_mode, ", ".join(POSITION_MODES)))
    order = int(order)
    schedule = corpus[0].schedule
    for seq in corpus:
        if seq.schedule != schedule:
            raise ScheduleMismatch("the corpus mixes %r and %r" % (schedule, seq.schedule))
        seq.check_codebook(codebook)
    classes = _position_classes(schedule, position_mode)
    partRows, partCounts = [], []
    for b in range(0, len(corpus), chunk_size):
        records = np.concatenate([
            np.concatenate((_context_rows(seq.ids, classes, order), seq.ids[:, None]), axis=1)
            for seq in corpus[b:b + chunk_size]])
        uniq, counts = np.unique(records, axis=0, return_counts=True)
        partRows.append(uniq)
        partCounts.append(counts.astype(np.int64))
    rows, counts = _merge_records(partRows, partCounts)
    logger.debug("trained student on %d sequences: %d records", len(corpus), rows.shape[0])
    return StudentModel(order, smoothing, schedule, codebook, position_mode, rows, counts)


def _generate_one(model, table, classes, rng):
    T = model.schedule.total_tokens
    order = model.order
    alpha = model.smoothing
    V = model.codebook.size
    smoothMass = alpha * V
    u = rng.uniforms(T).tolist()
    history = [START] * order
    ids = []; ids_append = ids.append
    for t in range(T):
        ctx = (classes[t],) + tuple(history[len(history) - order:]) if order else (classes[t],)
        entry = table.get(ctx)
        N = entry[1][-1] if entry is not None else 0
        x = u[t] * (N + smoothMass)
        if x < N:
            tokens, cum = entry
            tok = tokens[bisect.bisect_right(cum, x)]
        else:
            tok = min(int((x - N) / alpha), V - 1)
        ids_append(tok)
        if order:
            history.append(tok)
    return TokenSequence(model.schedule, ids)


def student_sequence(model, seed, k):
    ''' The k-th sequence sampled from the student under seed. '''
    classes = _position_classes(model.schedule, model.position_mode).tolist()
    return _generate_one(model, model.table(), classes, SplitMix64(derive_seed(seed, "student", k)))


def generate_student(model, n, seed):
    ''' n sequences sampled autoregressively from the smoothed counts, one draw per token.
        Sequence k depends only on (model, seed, k).
    '''
    table = model.table()
    classes = _position_classes(model.schedule, model.position_mode).tolist()
    return [_generate_one(model, table, classes, SplitMix64(derive_seed(seed, "student", k))) for k in range(int(n))]


def save_student(path, model):
    s = model.schedule
    r = [struct.pack("<4sIdII", STUDENT_MAGIC, model.order, model.smoothing,
                     POSITION_MODES.index(model.position_mode), model.codebook.size)]
    r.append(np.array([SCHEDULE_KINDS.index(s.kind), s.n_units] + list(s.unit_sizes), dtype="<u4").tobytes())
    table = model.table()
    r.append(struct.pack("<I", len(table)))
    for ctx in sorted(table):
        tokens, cum = table[ctx]
        r.append(np.array(ctx, dtype="<i8").tobytes())
        r.append(struct.pack("<I", len(tokens)))
        r.append(np.array(tokens, dtype="<u4").tobytes())
        r.append(np.diff(np.concatenate(([0], cum))).astype("<u8").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(r))


class _Reader(object):
    def __init__(self, data, path):
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError("truncated student file", self.path, offset=self.pos)
        v = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return v

    def array(self, dtype, count):
        size = np.dtype(dtype).itemsize * count
        if self.pos + size > len(self.data):
            raise FormatError("truncated student file", self.path, offset=self.pos)
        a = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.pos)
        self.pos += size
        return a


def load_student(path):
    with open(path, "rb") as f:
        data = f.read()
    path = str(path)
    rd = _Reader(data, path)
    magic, order, smoothing, modeCode, V = rd.take("<4sIdII")
    if magic != STUDENT_MAGIC:
        raise FormatError("bad magic, expected %r" % STUDENT_MAGIC, path, offset=0)
    if order > MAX_ORDER or modeCode >= len(POSITION_MODES) or not smoothing > 0.0:
        raise FormatError("invalid student header", path, offset=4)
    kindCode, K = rd.take("<II")
    if kindCode >= len(SCHEDULE_KINDS):
        raise FormatError("unknown schedule kind code %d" % kindCode, path, offset=rd.pos - 8)
    sizes = rd.array("<u4", K).tolist()
    try:
        schedule = UnitSchedule(SCHEDULE_KINDS[kindCode], sizes)
        codebook = Codebook(V)
    except InvalidArgument as e:
        raise FormatError(str(e), path, offset=rd.pos)
    nContexts, = rd.take("<I")
    rows, counts = [], []
    for _ in range(nContexts):
        ctx = rd.array("<i8", 1 + order).astype(np.int64)
        n, = rd.take("<I")
        tokens = rd.array("<u4", n).astype(np.int64)
        c = rd.array("<u8", n).astype(np.int64)
        rows.append(np.concatenate((np.repeat(ctx[None, :], n, axis=0), tokens[:, None]), axis=1))
        counts.append(c)
    if rd.pos != len(data):
        raise FormatError("trailing bytes after the last context", path, offset=rd.pos)
    if rows:
        allRows, allCounts = np.concatenate(rows), np.concatenate(counts)
    else:
        allRows, allCounts = np.zeros((0, order + 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    return StudentModel(order, smoothing, schedule, codebook, POSITION_MODES[modeCode], allRows, allCounts)
