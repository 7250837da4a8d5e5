#coding: utf-8

import numpy as np

from tokenmark.core.base_types import Codebook, InvalidArgument
from tokenmark.seeding.seed_chain import hash_unit, MASK64


class LogitSource(object):
    ''' Abstract provider of next-unit logits, standing in for the autoregressive image network.
        logits(unit_index, unit_size, context) returns a (unit_size, |V|) array of finite
        logits for every position of unit unit_index, given the previously generated units.
        A context_free source ignores context, which lets clean sampling precompute its tables.
        Implementations must be safe to share between concurrently generated sequences.
    '''

    context_free = False

    def __init__(self, codebook):
        assert isinstance(codebook, Codebook)
        self.codebook = codebook
        self._cache = {}

    def logits(self, unit_index, unit_size, context):
        raise NotImplementedError

    def cached(self, key, factory):
        r = self._cache.get(key)
        if r is None:
            r = self._cache[key] = factory()
        return r

    def __getstate__(self):
        d = self.__dict__.copy()
        d["_cache"] = {}
        return d


class SyntheticModel(LogitSource):
    ''' Reproducible synthetic logits: independent standard-normal values scaled by 1/temperature,
        keyed by (model_seed, unit index, position, context hash). With context_sensitivity the
        context hash is the hash of the previous unit (Markov-style); otherwise it is fixed.
    '''

    def __init__(self, codebook, model_seed=1, temperature=1.0, context_sensitivity=False):
        LogitSource.__init__(self, codebook)
        temperature = float(temperature)
        if not (np.isfinite(temperature) and temperature > 0.0):
            raise InvalidArgument("temperature must be positive, got %r" % temperature)
        self.model_seed = int(model_seed) & MASK64
        self.temperature = temperature
        self.context_sensitivity = bool(context_sensitivity)
        self.context_free = not self.context_sensitivity

    def __raw_logits(self, unit_index, unit_size, contextHash):
        rng = np.random.default_rng([self.model_seed, int(unit_index), contextHash])
        return rng.standard_normal((unit_size, self.codebook.size)) / self.temperature

    def logits(self, unit_index, unit_size, context):
        if self.context_free:
            r = self.cached(("logits", unit_index, unit_size),
                            lambda: self.__frozen(self.__raw_logits(unit_index, unit_size, 0)))
            return r
        contextHash = hash_unit(context[-1]) if context else 0
        return self.__raw_logits(unit_index, unit_size, contextHash)

    @staticmethod
    def __frozen(a):
        a.setflags(write=False)
        return a

    def __repr__(self):
        return "SyntheticModel(|V|=%d,model_seed=%d,temperature=%r,context_sensitivity=%r)" % \
            (self.codebook.size, self.model_seed, self.temperature, self.context_sensitivity)
