#coding: utf-8

import math
import numbers

import numpy as np
import scipy.stats

from tokenmark.core.base_types import InvalidArgument, ScheduleMismatch
from tokenmark.seeding.seed_chain import SeedChain


class DetectionReport(object):
    ''' Outcome of one detection: green count |s|_G over total_tokens, z per the green-excess
        z-statistic, decision = z > tau, and the green count of every unit.
    '''

    __slots__ = ['green_count', 'total_tokens', 'gamma', 'z_value', 'p_value', 'decision', 'tau', 'per_unit_green']

    def __init__(self, green_count, total_tokens, gamma, tau, per_unit_green):
        self.green_count = int(green_count)
        self.total_tokens = int(total_tokens)
        self.gamma = float(gamma)
        self.tau = float(tau)
        self.z_value = z_statistic(self.green_count, self.total_tokens, self.gamma)
        self.p_value = float(scipy.stats.norm.sf(self.z_value))
        self.decision = self.z_value > self.tau
        self.per_unit_green = [int(c) for c in per_unit_green]

    def to_json_dict(self):
        return {
            "green_count": self.green_count,
            "total": self.total_tokens,
            "gamma": self.gamma,
            "z": self.z_value,
            "p_value": self.p_value,
            "decision": self.decision,
            "per_unit_green": list(self.per_unit_green),
        }

    @staticmethod
    def from_json_dict(d, tau=4.0):
        return DetectionReport(d["green_count"], d["total"], d["gamma"], tau, d["per_unit_green"])

    def __repr__(self):
        return "DetectionReport(green=%d/%d,z=%.4f,decision=%r)" % \
            (self.green_count, self.total_tokens, self.z_value, self.decision)


def _is_int(v):
    return isinstance(v, numbers.Integral) and not isinstance(v, bool)


def z_statistic(green_count, total, gamma):
    ''' z = (|s|_G - gamma*T) / sqrt(T*gamma*(1-gamma)) '''
    if not (_is_int(green_count) and _is_int(total)):
        raise InvalidArgument("green_count and total must be integers")
    if total < 1:
        raise InvalidArgument("total must be >= 1, got %d" % total)
    if not (0 <= green_count <= total):
        raise InvalidArgument("green_count must be in [0, %d], got %d" % (total, green_count))
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidArgument("gamma must be in (0,1), got %r" % gamma)
    return (green_count - gamma * total) / math.sqrt(total * gamma * (1.0 - gamma))


def detect(tokens, codebook, params, chain=None, schedule=None, units=None):
    ''' Recomputes every unit's partition from the (possibly corrupted) tokens, with u_0 the
        sentinel, and counts green tokens over all units, or over the unit indices in units
        while the seeds still chain through every unit. No logit source is involved.
    '''
    if schedule is not None and schedule != tokens.schedule:
        raise ScheduleMismatch("tokens follow %r, detection expects %r" % (tokens.schedule, schedule))
    tokens.check_codebook(codebook)
    chain = chain or SeedChain()
    colors = chain.colors(tokens, codebook, params)
    s = tokens.schedule
    perUnit = np.add.reduceat(colors.astype(np.int64), s.offsets[:-1])
    if units is None:
        green, total = int(perUnit.sum()), s.total_tokens
    else:
        selected = sorted(set(int(i) for i in units))
        if not selected or selected[0] < 0 or selected[-1] >= s.n_units:
            raise InvalidArgument("selected units %r are outside 0..%d" % (list(units), s.n_units - 1))
        green = int(perUnit[selected].sum())
        total = int(sum(s.unit_sizes[i] for i in selected))
    return DetectionReport(green, total, params.gamma, params.tau, perUnit.tolist())


def detect_many(sequences, codebook, params, chain=None, units=None):
    return np.array([detect(t, codebook, params, chain, units=units).z_value for t in sequences], dtype=np.float64)


def _check_sample(values, name):
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise InvalidArgument("%s must not be empty" % name)
    return a


def threshold_at_fpr(clean_z, fpr):
    ''' The (1 - fpr) quantile of the clean z sample. '''
    fpr = float(fpr)
    if not (0.0 < fpr < 1.0):
        raise InvalidArgument("fpr must be in (0,1), got %r" % fpr)
    return float(np.quantile(_check_sample(clean_z, "clean_z"), 1.0 - fpr))


def tpr_at_fpr(watermarked_z, clean_z, fpr=0.01):
    ''' Fraction of watermarked z above the threshold that flags fpr of the clean z. '''
    w = _check_sample(watermarked_z, "watermarked_z")
    threshold = threshold_at_fpr(clean_z, fpr)
    return float(np.mean(w > threshold))
