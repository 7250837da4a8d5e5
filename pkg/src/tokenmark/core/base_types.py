#coding: utf-8

import numpy as np


class InvalidArgument(ValueError): pass


class ScheduleMismatch(InvalidArgument): pass


MULTI_SCALE = "MultiScale"
PER_TOKEN = "PerToken"
SCHEDULE_KINDS = (MULTI_SCALE, PER_TOKEN)

VAR_SIDE_LENGTHS = (1, 2, 3, 4, 5, 6, 8, 10, 13, 16)

UINT64_LIMIT = 1 << 64


def _frozen(a):
    a.setflags(write=False)
    return a


class Codebook(object):
    ''' The token vocabulary V. Token ids are the dense integers 0..size-1;
        no embedding vectors are stored.
    '''

    __slots__ = ['__size']

    def __init__(self, size):
        if isinstance(size, bool) or int(size) != size:
            raise InvalidArgument("codebook size must be an integer: %r" % (size,))
        size = int(size)
        if size < 2:
            raise InvalidArgument("codebook size must be >= 2, got %d" % size)
        self.__size = size

    def getsize(self): return self.__size
    size = property(getsize)

    def __len__(self): return self.__size

    def contains(self, ids):
        ids = np.asarray(ids)
        return ids.size == 0 or (int(ids.min()) >= 0 and int(ids.max()) < self.__size)

    def __eq__(self, right): return right.__class__ is Codebook and self.__size == right.__size
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash("Codebook") + self.__size
    def __repr__(self): return "Codebook(%d)" % self.__size


class UnitSchedule(object):
    ''' The autoregressive unit structure: unit i holds unit_sizes[i] tokens.
        MultiScale units are whole resolutions (t_i = h_i * w_i), PerToken units are single tokens.
    '''

    __slots__ = ['__kind', '__unit_sizes', '__offsets']

    def __init__(self, kind, unit_sizes):
        if kind not in SCHEDULE_KINDS:
            raise InvalidArgument("unknown schedule kind: %r" % (kind,))
        sizes = tuple(int(t) for t in unit_sizes)
        if not sizes:
            raise InvalidArgument("a schedule needs at least one unit")
        if any(t < 1 for t in sizes):
            raise InvalidArgument("unit sizes must be positive: %r" % (sizes,))
        if kind == PER_TOKEN and any(t != 1 for t in sizes):
            raise InvalidArgument("PerToken schedules have units of size 1")
        self.__kind = kind
        self.__unit_sizes = sizes
        self.__offsets = _frozen(np.concatenate(([0], np.cumsum(sizes))).astype(np.int64))

    def getkind(self): return self.__kind
    def getunit_sizes(self): return self.__unit_sizes
    kind = property(getkind)
    unit_sizes = property(getunit_sizes)

    @property
    def n_units(self): return len(self.__unit_sizes)

    @property
    def total_tokens(self): return int(self.__offsets[-1])

    @property
    def offsets(self):
        ''' Start offset of each unit in generation order, followed by total_tokens. '''
        return self.__offsets

    def unit_slice(self, i):
        return slice(int(self.__offsets[i]), int(self.__offsets[i + 1]))

    def unit_index_of_tokens(self):
        return np.repeat(np.arange(len(self.__unit_sizes)), self.__unit_sizes)

    def __eq__(self, right):
        return right.__class__ is UnitSchedule and self.__kind == right.__kind and \
            self.__unit_sizes == right.__unit_sizes
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash("UnitSchedule") + hash(self.__kind) + hash(self.__unit_sizes)

    def __repr__(self):
        if self.__kind == PER_TOKEN:
            return "UnitSchedule(PerToken, n=%d)" % len(self.__unit_sizes)
        return "UnitSchedule(%s, %r)" % (self.__kind, list(self.__unit_sizes))


def make_var_schedule(side_lengths=None):
    sides = VAR_SIDE_LENGTHS if side_lengths is None else tuple(side_lengths)
    if any(int(s) < 1 for s in sides):
        raise InvalidArgument("side lengths must be positive: %r" % (sides,))
    return UnitSchedule(MULTI_SCALE, [int(s) * int(s) for s in sides])


def make_rar_schedule(n_tokens):
    if isinstance(n_tokens, bool) or int(n_tokens) != n_tokens or n_tokens < 1:
        raise InvalidArgument("n_tokens must be a positive integer, got %r" % (n_tokens,))
    return UnitSchedule(PER_TOKEN, [1] * int(n_tokens))


def make_custom_schedule(unit_sizes, kind=MULTI_SCALE):
    return UnitSchedule(kind, unit_sizes)


class WatermarkParams(object):
    ''' gamma: green-list fraction, delta: logit bias added to green tokens,
        tau: detection threshold on z, initial_seed: the value standing for u_0.
    '''

    __slots__ = ['__gamma', '__delta', '__tau', '__initial_seed']

    def __init__(self, gamma=0.25, delta=2.0, tau=4.0, initial_seed=42):
        gamma, delta, tau = float(gamma), float(delta), float(tau)
        if not (0.0 < gamma < 1.0):
            raise InvalidArgument("gamma must be in (0,1), got %r" % gamma)
        if not (np.isfinite(delta) and delta >= 0.0):
            raise InvalidArgument("delta must be finite and >= 0, got %r" % delta)
        if np.isnan(tau):
            raise InvalidArgument("tau must be a number")
        if isinstance(initial_seed, bool) or int(initial_seed) != initial_seed or \
                not (0 <= initial_seed < UINT64_LIMIT):
            raise InvalidArgument("initial_seed must be a 64-bit unsigned integer, got %r" % (initial_seed,))
        self.__gamma = gamma
        self.__delta = delta
        self.__tau = tau
        self.__initial_seed = int(initial_seed)

    gamma = property(lambda self: self.__gamma)
    delta = property(lambda self: self.__delta)
    tau = property(lambda self: self.__tau)
    initial_seed = property(lambda self: self.__initial_seed)

    def green_size(self, codebook):
        ''' round-half-to-even of gamma * |V|; both lists must stay non-empty. '''
        g = int(round(self.__gamma * codebook.size))
        if not (1 <= g <= codebook.size - 1):
            raise InvalidArgument("gamma=%r leaves an empty list for |V|=%d" % (self.__gamma, codebook.size))
        return g

    def replaced(self, **kw):
        d = dict(gamma=self.__gamma, delta=self.__delta, tau=self.__tau, initial_seed=self.__initial_seed)
        d.update(kw)
        return WatermarkParams(**d)

    def __eq__(self, right):
        return right.__class__ is WatermarkParams and \
            (self.__gamma, self.__delta, self.__tau, self.__initial_seed) == \
            (right.__gamma, right.__delta, right.__tau, right.__initial_seed)
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash((self.__gamma, self.__delta, self.__tau, self.__initial_seed))

    def __repr__(self):
        return "WatermarkParams(gamma=%r,delta=%r,tau=%r,initial_seed=%r)" % \
            (self.__gamma, self.__delta, self.__tau, self.__initial_seed)


class GreenMask(object):
    ''' Membership bit-set over token ids; red is the complement. '''

    __slots__ = ['__membership']

    def __init__(self, membership):
        m = np.asarray(membership, dtype=bool)
        if m.ndim != 1:
            raise InvalidArgument("a green mask is one-dimensional")
        if m.flags.writeable:
            m = _frozen(m.copy())
        self.__membership = m

    def getmembership(self): return self.__membership
    membership = property(getmembership)

    @property
    def size(self): return self.__membership.shape[0]

    @property
    def green_count(self): return int(self.__membership.sum())

    def green_ids(self): return np.flatnonzero(self.__membership)
    def red_ids(self): return np.flatnonzero(~self.__membership)

    def __contains__(self, token): return bool(self.__membership[token])

    def count(self, ids):
        return int(self.__membership[np.asarray(ids, dtype=np.int64)].sum())

    def __eq__(self, right):
        return right.__class__ is GreenMask and np.array_equal(self.__membership, right.__membership)
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash(self.__membership.tobytes())
    def __repr__(self): return "GreenMask(%d/%d)" % (self.green_count, self.size)


class TokenSequence(object):
    ''' Generated or encoded tokens, stored flat in generation order and viewed per unit.
        generation_colors, when present, records per token whether it was green
        at generation time.
    '''

    __slots__ = ['__schedule', '__ids', '__generation_colors']

    def __init__(self, schedule, ids, generation_colors=None):
        assert isinstance(schedule, UnitSchedule)
        a = np.array(ids, dtype=np.int64).ravel()
        if a.shape[0] != schedule.total_tokens:
            raise ScheduleMismatch("%d tokens given for a schedule of %d" % (a.shape[0], schedule.total_tokens))
        if a.size and int(a.min()) < 0:
            raise InvalidArgument("token ids must be non-negative")
        self.__schedule = schedule
        self.__ids = _frozen(a)
        if generation_colors is not None:
            c = np.array(generation_colors, dtype=bool).ravel()
            if c.shape[0] != a.shape[0]:
                raise InvalidArgument("one generation color per token is required")
            generation_colors = _frozen(c)
        self.__generation_colors = generation_colors

    @staticmethod
    def from_units(schedule, units, generation_colors=None):
        units = [np.asarray(u, dtype=np.int64).ravel() for u in units]
        if len(units) != schedule.n_units or \
                any(u.shape[0] != t for u, t in zip(units, schedule.unit_sizes)):
            raise ScheduleMismatch("unit lengths %r do not match the schedule" % ([len(u) for u in units],))
        ids = np.concatenate(units) if units else np.zeros(0, dtype=np.int64)
        return TokenSequence(schedule, ids, generation_colors)

    schedule = property(lambda self: self.__schedule)
    ids = property(lambda self: self.__ids)
    generation_colors = property(lambda self: self.__generation_colors)

    @property
    def units(self):
        s = self.__schedule
        return [self.__ids[s.unit_slice(i)] for i in range(s.n_units)]

    def unit(self, i): return self.__ids[self.__schedule.unit_slice(i)]

    def __len__(self): return self.__ids.shape[0]

    def replaced(self, ids):
        return TokenSequence(self.__schedule, ids)

    def check_codebook(self, codebook):
        if not codebook.contains(self.__ids):
            raise InvalidArgument("token id out of range for %r" % (codebook,))

    def __eq__(self, right):
        return right.__class__ is TokenSequence and self.__schedule == right.__schedule and \
            np.array_equal(self.__ids, right.__ids)
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash(self.__schedule) + hash(self.__ids.tobytes())

    def __repr__(self): return "TokenSequence(%r, T=%d)" % (self.__schedule, len(self))
