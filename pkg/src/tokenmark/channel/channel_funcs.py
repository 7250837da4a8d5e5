#coding: utf-8

import logging

import numpy as np

from tokenmark.core.base_types import InvalidArgument, ScheduleMismatch
from tokenmark.seeding.seed_chain import SplitMix64, MASK64

logger = logging.getLogger(__name__)

LOSSLESS = "lossless"
UNIFORM_FLIP = "uniform_flip"
PER_UNIT_FLIP = "per_unit_flip"
BURST_FLIP = "burst_flip"
CHANNEL_KINDS = (LOSSLESS, UNIFORM_FLIP, PER_UNIT_FLIP, BURST_FLIP)

UNIFORM_RANDOM = "uniform_random"
NEARBY_ID = "nearby_id"
REPLACEMENTS = (UNIFORM_RANDOM, NEARBY_ID)

ATTACK_NAMES = ("none", "noise", "kernel", "color", "grey", "jpeg", "sdvae", "ctrlregen")

# Token-level surrogates of image attacks. Flip probabilities put TPR@FPR=1% for the
# PerToken schedule (T=680, gamma=0.25, delta=2) in the order the image attacks produce;
# rerun calibrate-attacks to refit them for other settings.
ATTACK_FLIP_PROBS = {
    "none": 0.0,
    "sdvae": 0.63,
    "jpeg": 0.64,
    "grey": 0.75,
    "noise": 0.785,
    "kernel": 0.79,
    "color": 0.80,
    "ctrlregen": 0.85,
}

# TPR@FPR=1% of the image attacks on the largest one-token-per-step model.
ATTACK_TARGET_TPRS = {
    "none": 0.938,
    "noise": 0.1444,
    "kernel": 0.1286,
    "color": 0.1152,
    "grey": 0.256,
    "jpeg": 0.7805,
    "sdvae": 0.7981,
    "ctrlregen": 0.044,
}


def _probability(v, name):
    v = float(v)
    if not (0.0 <= v <= 1.0):
        raise InvalidArgument("%s must be in [0,1], got %r" % (name, v))
    return v


class ChannelSpec(object):
    ''' A parametric token channel between generated and detector-visible tokens. '''

    __slots__ = ['kind', 'flip_prob', 'per_unit_probs', 'replacement', 'channel_seed', 'nearby_radius', 'burst_length']

    def __init__(self, kind=LOSSLESS, flip_prob=0.0, per_unit_probs=None, replacement=UNIFORM_RANDOM,
                 channel_seed=0, nearby_radius=8, burst_length=8):
        if kind not in CHANNEL_KINDS:
            raise InvalidArgument("unknown channel kind %r (known: %s)" % (kind, ", ".join(CHANNEL_KINDS)))
        if replacement not in REPLACEMENTS:
            raise InvalidArgument("unknown replacement %r (known: %s)" % (replacement, ", ".join(REPLACEMENTS)))
        self.kind = kind
        self.flip_prob = _probability(flip_prob, "flip_prob")
        if per_unit_probs is not None:
            per_unit_probs = tuple(_probability(p, "per_unit_probs entry") for p in per_unit_probs)
        elif kind == PER_UNIT_FLIP:
            raise InvalidArgument("a per_unit_flip channel needs per_unit_probs")
        self.per_unit_probs = per_unit_probs
        self.replacement = replacement
        self.channel_seed = int(channel_seed) & MASK64
        if int(nearby_radius) < 1:
            raise InvalidArgument("nearby_radius must be >= 1")
        if int(burst_length) < 1:
            raise InvalidArgument("burst_length must be >= 1")
        self.nearby_radius = int(nearby_radius)
        self.burst_length = int(burst_length)

    def reseeded(self, channel_seed):
        return ChannelSpec(self.kind, self.flip_prob, self.per_unit_probs, self.replacement,
                           channel_seed, self.nearby_radius, self.burst_length)

    def with_flip_prob(self, flip_prob):
        return ChannelSpec(self.kind, flip_prob, self.per_unit_probs, self.replacement,
                           self.channel_seed, self.nearby_radius, self.burst_length)

    def to_dict(self):
        return {
            "kind": self.kind,
            "flip_prob": self.flip_prob,
            "per_unit_probs": None if self.per_unit_probs is None else list(self.per_unit_probs),
            "replacement": self.replacement,
            "channel_seed": self.channel_seed,
            "nearby_radius": self.nearby_radius,
            "burst_length": self.burst_length,
        }

    def __eq__(self, right): return right.__class__ is ChannelSpec and self.to_dict() == right.to_dict()
    def __ne__(self, right): return not self.__eq__(right)
    def __hash__(self): return hash((self.kind, self.flip_prob, self.per_unit_probs, self.channel_seed))

    def __repr__(self):
        return "ChannelSpec(%s,p=%r,replacement=%s,seed=%d)" % (self.kind, self.flip_prob, self.replacement, self.channel_seed)


def _flip_positions(channel, schedule, rng):
    T = schedule.total_tokens
    u = rng.uniforms(T)
    if channel.kind == UNIFORM_FLIP:
        return u < channel.flip_prob
    if channel.kind == PER_UNIT_FLIP:
        if len(channel.per_unit_probs) != schedule.n_units:
            raise ScheduleMismatch("per_unit_probs has %d entries for %d units" % (len(channel.per_unit_probs), schedule.n_units))
        return u < np.repeat(np.asarray(channel.per_unit_probs), schedule.unit_sizes)
    assert channel.kind == BURST_FLIP
    L = channel.burst_length
    starts = (u < channel.flip_prob / L).astype(np.int64)
    return np.convolve(starts, np.ones(L, dtype=np.int64))[:T] > 0


def apply(channel, tokens, codebook):
    ''' Passes tokens through the channel. Each token is replaced independently (or in bursts)
        with the channel's probability; the schedule never changes and replacements stay in V.
    '''
    if channel.kind == LOSSLESS:
        return tokens.replaced(tokens.ids)
    tokens.check_codebook(codebook)
    rng = SplitMix64(channel.channel_seed)
    flips = _flip_positions(channel, tokens.schedule, rng)
    where = np.flatnonzero(flips)
    ids = tokens.ids.copy()
    V = codebook.size
    if where.size:
        if channel.replacement == UNIFORM_RANDOM:
            ids[where] = np.minimum((rng.uniforms(where.size) * V).astype(np.int64), V - 1)
        else:
            radius = min(channel.nearby_radius, V - 1)
            k = 1 + np.minimum((rng.uniforms(where.size) * radius).astype(np.int64), radius - 1)
            sign = np.where(rng.uniforms(where.size) < 0.5, -1, 1)
            ids[where] = (ids[where] + sign * k) % V
    return tokens.replaced(ids)


def measure_overlap(a, b):
    ''' Fraction of positions holding equal ids, overall and per unit. '''
    if a.schedule != b.schedule:
        raise ScheduleMismatch("cannot compare %r with %r" % (a.schedule, b.schedule))
    s = a.schedule
    same = (a.ids == b.ids).astype(np.int64)
    perUnit = np.add.reduceat(same, s.offsets[:-1]) / np.asarray(s.unit_sizes, dtype=np.float64)
    return float(same.mean()), perUnit.tolist()


def attack_preset(name, flip_probs=None):
    ''' Token-level surrogate of a named image attack. '''
    table = ATTACK_FLIP_PROBS if flip_probs is None else flip_probs
    if name not in ATTACK_NAMES or name not in table:
        raise InvalidArgument("unknown attack preset %r (known: %s)" % (name, ", ".join(ATTACK_NAMES)))
    p = float(table[name])
    if name == "none" or p == 0.0:
        return ChannelSpec(LOSSLESS)
    return ChannelSpec(UNIFORM_FLIP, flip_prob=p)


def var_valley_profile(schedule, edge_overlap=0.9, middle_overlap=0.5):
    ''' Per-unit flip probabilities whose overlap is highest at the first and last units
        and lowest in the middle (a parabola over the unit index).
    '''
    e = _probability(edge_overlap, "edge_overlap")
    m = _probability(middle_overlap, "middle_overlap")
    K = schedule.n_units
    if K == 1:
        return [1.0 - e]
    x = np.arange(K) / float(K - 1)
    overlap = m + (e - m) * (2.0 * x - 1.0) ** 2
    return (1.0 - overlap).tolist()


def calibrate_flip_prob(tpr_of, target_tpr, lo=0.0, hi=1.0, iterations=14):
    ''' Bisection for the flip probability whose TPR meets target_tpr, assuming tpr_of is
        non-increasing in the flip probability. Returns (flip_prob, tpr).
    '''
    target_tpr = _probability(target_tpr, "target_tpr")
    best = (lo, tpr_of(lo))
    if best[1] <= target_tpr:
        return best
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        t = tpr_of(mid)
        logger.debug("calibration: flip_prob=%.6f tpr=%.4f target=%.4f", mid, t, target_tpr)
        if t >= target_tpr:
            lo, best = mid, (mid, t)
        else:
            hi = mid
    return best
