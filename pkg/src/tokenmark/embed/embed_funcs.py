#coding: utf-8

import logging

import numpy as np
import scipy.special

from tokenmark.core.base_types import GreenMask, TokenSequence, InvalidArgument
from tokenmark.seeding.seed_chain import SeedChain, SplitMix64

logger = logging.getLogger(__name__)


def bias_logits(logits, mask, delta):
    ''' l_j = Bias(Green, l_j, delta): green logits get +delta, red ones are untouched.
        logits may be one vector or a (positions, |V|) matrix sharing the mask.
    '''
    logits = np.asarray(logits, dtype=np.float64)
    membership = mask.membership if isinstance(mask, GreenMask) else np.asarray(mask, dtype=bool)
    if logits.shape[-1] != membership.shape[0]:
        raise InvalidArgument("logits have %d entries, the codebook has %d" % (logits.shape[-1], membership.shape[0]))
    delta = float(delta)
    if not delta >= 0.0:
        raise InvalidArgument("delta must be >= 0, got %r" % delta)
    if delta == 0.0:
        return logits.copy()
    return np.where(membership, logits + delta, logits)


def softmax(logits):
    ''' Row-wise softmax with max subtraction. '''
    return scipy.special.softmax(np.asarray(logits, dtype=np.float64), axis=-1)


def _draw_from_cdf(cdf, u):
    # inverse CDF: index of the first cumulative value exceeding u * total
    target = u * cdf[:, -1]
    idx = np.fromiter((np.searchsorted(row, x, side="right") for row, x in zip(cdf, target)),
                      dtype=np.int64, count=cdf.shape[0])
    return np.minimum(idx, cdf.shape[1] - 1)


def sample(probs, rng):
    ''' x_j = Sample(p_j) with one draw of rng. '''
    cdf = np.cumsum(np.asarray(probs, dtype=np.float64))[None, :]
    return int(_draw_from_cdf(cdf, rng.uniforms(1))[0])


def sample_rows(probs, rng):
    ''' Samples every row of a probability matrix, one draw per row in row order. '''
    probs = np.asarray(probs, dtype=np.float64)
    return _draw_from_cdf(np.cumsum(probs, axis=1), rng.uniforms(probs.shape[0]))


def _truncated(logits, top_k):
    if top_k is None or top_k >= logits.shape[-1]:
        return logits
    if top_k < 1:
        raise InvalidArgument("top_k must be >= 1, got %r" % (top_k,))
    kth = np.partition(logits, -top_k, axis=-1)[..., -top_k][..., None]
    return np.where(logits >= kth, logits, -np.inf)


def _unit_logits(source, codebook, i, size, context):
    logits = source.logits(i, size, context)
    if logits.shape != (size, codebook.size):
        raise InvalidArgument("logit source returned shape %r for unit %d, expected %r" % (logits.shape, i, (size, codebook.size)))
    if not np.all(np.isfinite(logits)):
        raise InvalidArgument("logit source returned non-finite logits for unit %d" % i)
    return logits


def generate_watermarked(source, schedule, codebook, params, gen_seed, chain=None, top_k=None):
    ''' Watermarked generation: for every unit i, partition from hash(u_{i-1}) (u_0 is the
        sentinel), bias green logits by delta, softmax and sample each position. Every unit,
        the first included, is biased. The result records per token whether it was green.
    '''
    chain = chain or SeedChain()
    params.green_size(codebook)
    rng = SplitMix64(gen_seed)
    units = []; units_append = units.append
    colors = []; colors_append = colors.append
    previous = None
    for i, size in enumerate(schedule.unit_sizes):
        mask = chain.mask_after(previous, codebook, params)
        logits = _unit_logits(source, codebook, i, size, units)
        probs = softmax(_truncated(bias_logits(logits, mask, params.delta), top_k))
        ids = sample_rows(probs, rng)
        units_append(ids)
        colors_append(mask.membership[ids])
        previous = ids
    return TokenSequence.from_units(schedule, units, np.concatenate(colors))


def _clean_cdf_table(source, codebook, schedule, top_k):
    def build():
        rows = [np.cumsum(softmax(_truncated(_unit_logits(source, codebook, i, size, None), top_k)), axis=1)
                for i, size in enumerate(schedule.unit_sizes)]
        table = np.concatenate(rows)
        table.setflags(write=False)
        logger.debug("built clean sampling table %r for %r", table.shape, schedule)
        return table
    return source.cached(("clean-cdf", schedule, top_k), build)


def generate_clean(source, schedule, codebook, gen_seed, top_k=None):
    ''' Sampling with no knowledge of any partition (the H_0 sampler). Consumes the same
        draws as generate_watermarked and yields its tokens when delta is 0.
    '''
    rng = SplitMix64(gen_seed)
    if source.context_free:
        table = _clean_cdf_table(source, codebook, schedule, top_k)
        return TokenSequence(schedule, _draw_from_cdf(table, rng.uniforms(schedule.total_tokens)))
    units = []; units_append = units.append
    for i, size in enumerate(schedule.unit_sizes):
        logits = _unit_logits(source, codebook, i, size, units)
        units_append(sample_rows(softmax(_truncated(logits, top_k)), rng))
    return TokenSequence.from_units(schedule, units)
