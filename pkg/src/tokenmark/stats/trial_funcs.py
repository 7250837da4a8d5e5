#coding: utf-8

from concurrent.futures import ProcessPoolExecutor
import functools
import logging

import numpy as np

from tokenmark.channel.channel_funcs import apply as apply_channel
from tokenmark.detect.detect_funcs import detect
from tokenmark.embed.embed_funcs import generate_clean, generate_watermarked
from tokenmark.seeding.seed_chain import SeedChain, derive_seed

logger = logging.getLogger(__name__)


def run_trials(func, n, threads=1, progress=None):
    ''' [func(0), ..., func(n-1)], in trial order whatever the number of worker processes.
        func must be picklable when threads > 1.
    '''
    threads = max(1, int(threads or 1))
    wrap = progress or (lambda it, total: it)
    if threads == 1 or n < 2:
        return list(wrap(map(func, range(n)), total=n))
    chunk = max(1, n // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(wrap(executor.map(func, range(n), chunksize=chunk), total=n))


class TrialSetup(object):
    ''' Everything a Monte-Carlo trial needs, bundled so it pickles into worker processes. '''

    def __init__(self, source, schedule, codebook, params, seed, chain=None, channel=None, units=None, top_k=None):
        self.source = source
        self.schedule = schedule
        self.codebook = codebook
        self.params = params
        self.seed = seed
        self.chain = chain or SeedChain()
        self.channel = channel
        self.units = units
        self.top_k = top_k

    def replaced(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return TrialSetup(**d)

    def through_channel(self, tokens, purpose, k):
        if self.channel is None:
            return tokens
        spec = self.channel.reseeded(derive_seed(self.seed, purpose + "/channel", k))
        return apply_channel(spec, tokens, self.codebook)

    def clean_sequence(self, k, purpose="clean"):
        t = generate_clean(self.source, self.schedule, self.codebook, derive_seed(self.seed, purpose, k), self.top_k)
        return self.through_channel(t, purpose, k)

    def watermarked_sequence(self, k, purpose="watermarked"):
        t = generate_watermarked(self.source, self.schedule, self.codebook, self.params,
                                 derive_seed(self.seed, purpose, k), self.chain, self.top_k)
        return self.through_channel(t, purpose, k)

    def z_of(self, tokens):
        return detect(tokens, self.codebook, self.params, self.chain, units=self.units).z_value


def _clean_z_trial(setup, purpose, k):
    return setup.z_of(setup.clean_sequence(k, purpose))


def _watermarked_z_trial(setup, purpose, k):
    return setup.z_of(setup.watermarked_sequence(k, purpose))


def _watermarked_sequence_trial(setup, purpose, k):
    return setup.watermarked_sequence(k, purpose)


def _clean_sequence_trial(setup, purpose, k):
    return setup.clean_sequence(k, purpose)


def clean_z_values(setup, n, purpose="clean", threads=1, progress=None):
    return np.array(run_trials(functools.partial(_clean_z_trial, setup, purpose), n, threads, progress))


def watermarked_z_values(setup, n, purpose="watermarked", threads=1, progress=None):
    return np.array(run_trials(functools.partial(_watermarked_z_trial, setup, purpose), n, threads, progress))


def watermarked_sequences(setup, n, purpose="watermarked", threads=1, progress=None):
    return run_trials(functools.partial(_watermarked_sequence_trial, setup, purpose), n, threads, progress)


def clean_sequences(setup, n, purpose="clean", threads=1, progress=None):
    return run_trials(functools.partial(_clean_sequence_trial, setup, purpose), n, threads, progress)
