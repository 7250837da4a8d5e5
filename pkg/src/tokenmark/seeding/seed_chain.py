#coding: utf-8

import functools
import logging

import numpy as np

from tokenmark.core.base_types import GreenMask, InvalidArgument, PER_TOKEN

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3
GOLDEN_GAMMA = 0x9e3779b97f4a7c15
_MIX1 = 0xbf58476d1ce4e5b9
_MIX2 = 0x94d049bb133111eb

HASH_ALGORITHMS = ("fnv1a64",)
PRG_ALGORITHMS = ("splitmix64",)


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def mix64(z):
    ''' The SplitMix64 output function. '''
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z):
    # uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64(object):
    ''' SplitMix64 stream. next_array(n) yields exactly the values of n successive next() calls. '''

    __slots__ = ['__state']

    def __init__(self, seed):
        self.__state = int(seed) & MASK64

    state = property(lambda self: self.__state)

    def next(self):
        self.__state = (self.__state + GOLDEN_GAMMA) & MASK64
        return mix64(self.__state)

    def next_array(self, n):
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.__state) + steps * np.uint64(GOLDEN_GAMMA)
        self.__state = (self.__state + n * GOLDEN_GAMMA) & MASK64
        return _mix64_array(z)

    def uniform(self):
        return (self.next() >> 11) * (1.0 / (1 << 53))

    def uniforms(self, n):
        ''' n doubles in [0,1), 53 bits each. '''
        return (self.next_array(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(master, *path):
    ''' Fans a master seed out to a sub-seed named by path (strings and integers).
        A sub-seed depends only on (master, path), so adding trials never moves earlier ones.
    '''
    h = mix64((int(master) + GOLDEN_GAMMA) & MASK64)
    for p in path:
        v = fnv1a64(p.encode("utf-8")) if isinstance(p, str) else (int(p) & MASK64)
        h = mix64(((h ^ v) + GOLDEN_GAMMA) & MASK64)
    return h


def hash_unit(unit, initial_seed=None):
    ''' seed = hash(u_{i-1}): FNV-1a over the little-endian u32 encoding of the ids, in order.
        unit=None stands for the sentinel u_0, hashed as the 8-byte little-endian initial_seed.
    '''
    if unit is None:
        if initial_seed is None:
            raise InvalidArgument("the sentinel unit needs an initial seed")
        return fnv1a64((int(initial_seed) & MASK64).to_bytes(8, "little"))
    a = np.asarray(unit)
    if a.size == 0:
        raise InvalidArgument("cannot hash an empty unit")
    return fnv1a64(a.astype("<u4").tobytes())


def hash_units(units):
    ''' Vectorised hash_unit over the rows of a 2-d array of equal-length units. '''
    a = np.ascontiguousarray(np.asarray(units).astype("<u4"))
    if a.ndim != 2 or a.shape[1] == 0:
        raise InvalidArgument("hash_units takes a non-empty 2-d array")
    octets = a.view(np.uint8).reshape(a.shape[0], -1).astype(np.uint64)
    h = np.full(a.shape[0], FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    for col in range(octets.shape[1]):
        h = (h ^ octets[:, col]) * prime
    return h


@functools.lru_cache(maxsize=8192)
def _green_membership(seed, greenSize, size):
    draws = SplitMix64(seed).next_array(greenSize).tolist()
    perm = list(range(size))
    # forward Fisher-Yates, stopped once the green prefix is fixed
    for i, r in enumerate(draws):
        j = i + r % (size - i)
        perm[i], perm[j] = perm[j], perm[i]
    membership = np.zeros(size, dtype=bool)
    membership[perm[:greenSize]] = True
    membership.setflags(write=False)
    return membership


def partition(codebook, seed, gamma):
    ''' Green, Red = Partition(V, PRG(seed), gamma). Exactly round(gamma*|V|) ids are green. '''
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidArgument("gamma must be in (0,1), got %r" % gamma)
    g = int(round(gamma * codebook.size))
    if not (1 <= g <= codebook.size - 1):
        raise InvalidArgument("gamma=%r leaves an empty list for |V|=%d" % (gamma, codebook.size))
    return GreenMask(_green_membership(int(seed) & MASK64, g, codebook.size))


class SeedChain(object):
    ''' hash-of-previous-unit -> PRG seed -> partition, shared by embedder and detector. '''

    __slots__ = ['__hash_algorithm', '__prg_algorithm']

    def __init__(self, hash_algorithm="fnv1a64", prg_algorithm="splitmix64"):
        if hash_algorithm not in HASH_ALGORITHMS:
            raise InvalidArgument("unsupported hash %r (known: %s)" % (hash_algorithm, ", ".join(HASH_ALGORITHMS)))
        if prg_algorithm not in PRG_ALGORITHMS:
            raise InvalidArgument("unsupported prg %r (known: %s)" % (prg_algorithm, ", ".join(PRG_ALGORITHMS)))
        self.__hash_algorithm = hash_algorithm
        self.__prg_algorithm = prg_algorithm

    hash_algorithm = property(lambda self: self.__hash_algorithm)
    prg_algorithm = property(lambda self: self.__prg_algorithm)

    def seed_after(self, previous_unit, params):
        ''' Seed of the unit following previous_unit (None for the first unit). '''
        return hash_unit(previous_unit, params.initial_seed)

    def mask_after(self, previous_unit, codebook, params):
        return partition(codebook, self.seed_after(previous_unit, params), params.gamma)

    def unit_seeds(self, tokens, params):
        s = tokens.schedule
        seeds = [hash_unit(None, params.initial_seed)]
        if s.n_units == 1:
            return seeds
        if s.kind == PER_TOKEN:
            seeds.extend(hash_units(tokens.ids[:-1].reshape(-1, 1)).tolist())
        else:
            seeds.extend(hash_unit(u) for u in tokens.units[:-1])
        return seeds

    def masks(self, tokens, codebook, params):
        return [partition(codebook, seed, params.gamma) for seed in self.unit_seeds(tokens, params)]

    def colors(self, tokens, codebook, params):
        ''' Per token, whether it is green under the partition of its own unit. '''
        g = params.green_size(codebook)
        size = codebook.size
        ids = tokens.ids
        r = np.empty(ids.shape[0], dtype=bool)
        s = tokens.schedule
        for i, seed in enumerate(self.unit_seeds(tokens, params)):
            sl = s.unit_slice(i)
            r[sl] = _green_membership(seed, g, size)[ids[sl]]
        return r

    def __eq__(self, right):
        return right.__class__ is SeedChain and self.__hash_algorithm == right.__hash_algorithm and \
            self.__prg_algorithm == right.__prg_algorithm
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash((self.__hash_algorithm, self.__prg_algorithm))
    def __repr__(self): return "SeedChain(hash=%s,prg=%s)" % (self.__hash_algorithm, self.__prg_algorithm)
