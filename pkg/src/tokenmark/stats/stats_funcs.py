#coding: utf-8

import logging
import math

import numpy as np
import scipy.special
import scipy.stats
from sklearn.metrics import roc_curve, auc as _sk_auc

from tokenmark.core.base_types import InvalidArgument
from tokenmark.detect.detect_funcs import z_statistic, tpr_at_fpr
from tokenmark.embed.logit_source import SyntheticModel
from .trial_funcs import TrialSetup, clean_z_values, watermarked_z_values

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("n", "mean", "variance", "p50", "p90", "p99", "p999", "min", "max")


class Summary(object):
    ''' Summary of a z-value sample. Summaries merge exactly (the sorted sample is kept). '''

    __slots__ = ['__sample']

    def __init__(self, sample):
        a = np.sort(np.asarray(sample, dtype=np.float64).ravel())
        if a.size == 0:
            raise InvalidArgument("cannot summarize an empty sample")
        a.setflags(write=False)
        self.__sample = a

    sample = property(lambda self: self.__sample)
    n = property(lambda self: int(self.__sample.size))
    mean = property(lambda self: float(self.__sample.mean()))
    variance = property(lambda self: float(self.__sample.var()))
    min = property(lambda self: float(self.__sample[0]))
    max = property(lambda self: float(self.__sample[-1]))
    p50 = property(lambda self: self.quantile(0.5))
    p90 = property(lambda self: self.quantile(0.9))
    p99 = property(lambda self: self.quantile(0.99))
    p999 = property(lambda self: self.quantile(0.999))

    def quantile(self, q): return float(np.quantile(self.__sample, q))

    def fraction_above(self, threshold):
        return float(self.__sample.size - np.searchsorted(self.__sample, threshold, side="right")) / self.__sample.size

    def merge(self, right): return Summary(np.concatenate((self.__sample, right.__sample)))

    def to_row(self): return [getattr(self, c) for c in SUMMARY_COLUMNS]

    def to_dict(self): return dict(zip(SUMMARY_COLUMNS, self.to_row()))

    def __repr__(self): return "Summary(n=%d,mean=%.4f,variance=%.4f)" % (self.n, self.mean, self.variance)


def summarize(z_values): return Summary(z_values)


def binomial_tolerance(p, n, sigmas=3.0):
    ''' sigmas standard errors of an empirical rate with true value p over n trials. '''
    return sigmas * math.sqrt(p * (1.0 - p) / n)


def binomial_log_tail_exact(green_count, total, gamma):
    ''' ln P(Y >= green_count) for Y ~ Binomial(total, gamma), summed in log space. '''
    z_statistic(green_count, total, gamma)  # domain checks
    if green_count == 0:
        return 0.0
    ks = np.arange(green_count, total + 1)
    return min(0.0, float(scipy.special.logsumexp(scipy.stats.binom.logpmf(ks, total, gamma))))


def binomial_tail_exact(green_count, total, gamma):
    ''' Exact one-sided p-value P(Y >= green_count); underflows to 0.0 below ~1e-308,
        where binomial_log_tail_exact still holds the value.
    '''
    return math.exp(binomial_log_tail_exact(green_count, total, gamma))


def roc(watermarked_z, clean_z):
    ''' Empirical ROC [(fpr, tpr), ...] sweeping every threshold of the pooled sample. '''
    w = np.asarray(watermarked_z, dtype=np.float64).ravel()
    c = np.asarray(clean_z, dtype=np.float64).ravel()
    if w.size == 0 or c.size == 0:
        raise InvalidArgument("roc needs non-empty samples")
    labels = np.concatenate((np.ones(w.size, dtype=int), np.zeros(c.size, dtype=int)))
    fpr, tpr, _ = roc_curve(labels, np.concatenate((w, c)), drop_intermediate=False)
    return list(zip(fpr.tolist(), tpr.tolist()))


def auc(points):
    fpr, tpr = zip(*points)
    return float(_sk_auc(fpr, tpr))


def calibrate_fpr(n_trials, params, schedule, codebook, source=None, seed=0, chain=None, threads=1, progress=None):
    ''' Detects n_trials clean sequences; returns (Summary of z, fraction with z > tau). '''
    if n_trials < 1000:
        raise InvalidArgument("calibration needs at least 1000 trials, got %d" % n_trials)
    if source is None:
        source = SyntheticModel(codebook)
    setup = TrialSetup(source, schedule, codebook, params, seed, chain)
    z = clean_z_values(setup, n_trials, threads=threads, progress=progress)
    summary = Summary(z)
    fpr = summary.fraction_above(params.tau)
    logger.debug("calibrated %d clean trials: %r, fpr at tau=%r is %r", n_trials, summary, params.tau, fpr)
    return summary, fpr


def delta_sweep(setup, deltas, n_watermarked, n_clean, fpr=0.01, threads=1, progress=None, clean=None):
    ''' TPR@fpr and mean z for every delta, against one shared clean sample (drawn unless
        clean is given). Returns (rows [(delta, tpr, mean_z)], clean z values).
    '''
    if clean is None:
        clean = clean_z_values(setup, n_clean, threads=threads, progress=progress)
    clean = np.asarray(clean, dtype=np.float64)
    rows = []
    for delta in deltas:
        s = setup.replaced(params=setup.params.replaced(delta=delta))
        w = watermarked_z_values(s, n_watermarked, purpose="watermarked", threads=threads, progress=progress)
        rows.append((float(delta), tpr_at_fpr(w, clean, fpr), float(w.mean())))
        logger.debug("delta=%r tpr=%r mean z=%r", delta, rows[-1][1], rows[-1][2])
    return rows, clean
