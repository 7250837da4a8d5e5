#coding: utf-8

import functools
import logging

import numpy as np

from tokenmark.detect.detect_funcs import tpr_at_fpr
from tokenmark.seeding.seed_chain import derive_seed
from tokenmark.stats.trial_funcs import run_trials, clean_z_values, watermarked_z_values, \
    watermarked_sequences, clean_sequences
from .student_model import train_student, student_sequence

logger = logging.getLogger(__name__)


class RadioactivityResult(object):
    ''' TPR@fpr of the generator (M1) outputs and of the student (M2) outputs, both thresholded
        against the same clean reference sample.
    '''

    def __init__(self, m1_tpr, m2_tpr, m1_mean_z, m2_mean_z, n_train, n_eval, fpr, clean_m2_tpr=None, student=None):
        self.m1_tpr = float(m1_tpr)
        self.m2_tpr = float(m2_tpr)
        self.m1_mean_z = float(m1_mean_z)
        self.m2_mean_z = float(m2_mean_z)
        self.n_train = int(n_train)
        self.n_eval = int(n_eval)
        self.fpr = float(fpr)
        self.clean_m2_tpr = None if clean_m2_tpr is None else float(clean_m2_tpr)
        self.student = student

    def to_json_dict(self):
        d = {
            "m1_tpr": self.m1_tpr,
            "m2_tpr": self.m2_tpr,
            "m1_mean_z": self.m1_mean_z,
            "m2_mean_z": self.m2_mean_z,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "fpr": self.fpr,
        }
        if self.clean_m2_tpr is not None:
            d["clean_m2_tpr"] = self.clean_m2_tpr
        return d

    def __repr__(self):
        return "RadioactivityResult(m1_tpr=%.4f,m2_tpr=%.4f,m2_mean_z=%.4f)" % (self.m1_tpr, self.m2_tpr, self.m2_mean_z)


def _student_z_trial(model, setup, seed, k):
    return setup.z_of(student_sequence(model, seed, k))


def student_z_values(model, setup, n, seed, threads=1, progress=None):
    ''' Generates n sequences from the student and detects each with the setup's key. '''
    return np.array(run_trials(functools.partial(_student_z_trial, model, setup, seed), n, threads, progress))


def run_radioactivity(setup, n_train, n_eval, n_clean=1000, order=1, smoothing=0.1, position_mode="unit",
                      fpr=0.01, clean_control=False, threads=1, progress=None):
    ''' M1 -> X1 -> M2 -> X2 at token level.
        setup describes M1 (source, schedule, key, generation seed) and the channel X1 passes through
        before training. The held-out M1 sample goes through the same channel.
    '''
    lossless = setup.replaced(channel=None)
    clean = clean_z_values(lossless, n_clean, purpose="reference", threads=threads, progress=progress)

    corpus = watermarked_sequences(setup, n_train, purpose="train", threads=threads, progress=progress)
    student = train_student(corpus, order, smoothing, setup.codebook, position_mode)
    del corpus
    logger.info("trained %r on %d watermarked sequences", student, n_train)

    m1 = watermarked_z_values(setup, n_eval, purpose="heldout", threads=threads, progress=progress)
    m2 = student_z_values(student, setup, n_eval, derive_seed(setup.seed, "student"), threads, progress)

    cleanM2 = None
    if clean_control:
        cleanCorpus = clean_sequences(setup, n_train, purpose="train_clean", threads=threads, progress=progress)
        control = train_student(cleanCorpus, order, smoothing, setup.codebook, position_mode)
        del cleanCorpus
        z = student_z_values(control, setup, n_eval, derive_seed(setup.seed, "student_clean"), threads, progress)
        cleanM2 = tpr_at_fpr(z, clean, fpr)

    result = RadioactivityResult(tpr_at_fpr(m1, clean, fpr), tpr_at_fpr(m2, clean, fpr),
                                 m1.mean(), m2.mean(), n_train, n_eval, fpr, cleanM2, student)
    logger.info("%r", result)
    return result
