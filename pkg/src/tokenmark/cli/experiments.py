#coding: utf-8

import functools
import glob
import logging
import os

import numpy as np

from tokenmark.core.base_types import InvalidArgument
from tokenmark.core.tokenseq_io import read_sequence, write_sequence
from tokenmark.detect.detect_funcs import detect, tpr_at_fpr, threshold_at_fpr
from tokenmark.channel.channel_funcs import ChannelSpec, LOSSLESS, UNIFORM_FLIP, attack_preset, \
    measure_overlap, calibrate_flip_prob
from tokenmark.seeding.seed_chain import derive_seed
from tokenmark.stats.trial_funcs import TrialSetup, run_trials, clean_z_values, watermarked_z_values, \
    watermarked_sequences, clean_sequences
from tokenmark.stats.stats_funcs import SUMMARY_COLUMNS, calibrate_fpr, roc, auc, delta_sweep
from tokenmark.radioactivity.student_model import save_student
from tokenmark.radioactivity.radioactivity_funcs import run_radioactivity
from tokenmark.utility.report_io import write_csv, write_json, write_yaml, read_json, flatten

logger = logging.getLogger(__name__)

DETECT_COLUMNS = ["file", "green_count", "total", "z", "p_value", "decision"]
SWEEP_COLUMNS = ["attack", "flip_prob", "overlap", "tpr", "mean_z"]


def make_setup(config, purpose, with_channel=True):
    ''' The trial setup of one command; its seed is the master seed fanned out by purpose. '''
    schedule = config.build_schedule()
    channel = config.build_channel(schedule) if with_channel else None
    if channel is not None and channel.kind == LOSSLESS:
        channel = None
    return TrialSetup(config.build_source(), schedule, config.build_codebook(), config.build_params(),
                      derive_seed(config.master_seed, purpose), config.build_chain(), channel,
                      config.detect.units, config.model.top_k)


def echo_config(config, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_yaml(os.path.join(out_dir, "config.yaml"), config.to_dict())


def cmd_generate(config, n, watermark, out_dir, binary=True, threads=1, progress=None):
    setup = make_setup(config, "generate")
    if watermark:
        seqs = watermarked_sequences(setup, n, threads=threads, progress=progress)
    else:
        seqs = clean_sequences(setup, n, threads=threads, progress=progress)
    suffix = ".tmk" if binary else ".txt"
    files = []
    for i, seq in enumerate(seqs):
        name = "seq_%d%s" % (i, suffix)
        write_sequence(os.path.join(out_dir, name), seq)
        files.append(name)
    write_json(os.path.join(out_dir, "manifest.json"), {
        "n": n,
        "watermarked": bool(watermark),
        "master_seed": config.master_seed,
        "schedule": {"kind": setup.schedule.kind, "unit_sizes": list(setup.schedule.unit_sizes)},
        "codebook_size": config.codebook_size,
        "channel": None if setup.channel is None else setup.channel.to_dict(),
        "files": files,
    })
    logger.info("wrote %d %s sequences to %s", n, "watermarked" if watermark else "clean", out_dir)
    return files


def _report_names(paths):
    ''' Report file stems for the inputs: the bare stem while stems are unique, else the
        file name with its suffix, else the file name prefixed by the input index.
    '''
    bases = [os.path.basename(p) for p in paths]
    stems = [os.path.splitext(b)[0] for b in bases]
    if len(set(stems)) == len(stems):
        return stems
    if len(set(bases)) == len(bases):
        return bases
    return ["%d_%s" % (i, b) for i, b in enumerate(bases)]


def cmd_detect(config, paths, out_dir):
    ''' One JSON report per input plus detect_summary.csv. Returns the reports in input order. '''
    codebook = config.build_codebook()
    params = config.build_params()
    chain = config.build_chain()
    schedule = config.build_schedule()
    reports = []
    rows = []
    for path, name in zip(paths, _report_names(paths)):
        seq = read_sequence(path)
        report = detect(seq, codebook, params, chain, schedule, config.detect.units)
        write_json(os.path.join(out_dir, name + ".json"), report.to_json_dict())
        rows.append([os.path.basename(path), report.green_count, report.total_tokens, report.z_value,
                     report.p_value, report.decision])
        reports.append(report)
        logger.debug("%s: %r", path, report)
    write_csv(os.path.join(out_dir, "detect_summary.csv"), DETECT_COLUMNS, rows)
    return reports


def cmd_calibrate(config, out_dir, threads=1, progress=None):
    t = config.trials
    setup = make_setup(config, "calibrate", with_channel=False)
    summary, fpr = calibrate_fpr(t.n_clean, setup.params, setup.schedule, setup.codebook, setup.source,
                                 setup.seed, setup.chain, threads, progress)
    write_csv(os.path.join(out_dir, "z_summary.csv"), SUMMARY_COLUMNS, [summary.to_row()])

    clean = summary.sample
    marked = watermarked_z_values(setup, t.n_watermarked, threads=threads, progress=progress)
    points = roc(marked, clean)
    write_csv(os.path.join(out_dir, "roc.csv"), ["fpr", "tpr"], points)

    rows, _ = delta_sweep(setup, config.sweeps.deltas, t.n_watermarked, t.n_clean, t.fpr, threads, progress,
                          clean=clean)
    write_csv(os.path.join(out_dir, "delta_sweep.csv"), ["delta", "tpr", "mean_z"], rows)

    result = {
        "n_clean": t.n_clean,
        "n_watermarked": t.n_watermarked,
        "tau": setup.params.tau,
        "fpr_at_tau": fpr,
        "z_summary": summary.to_dict(),
        "target_fpr": t.fpr,
        "threshold_at_target_fpr": threshold_at_fpr(clean, t.fpr),
        "tpr_at_target_fpr": tpr_at_fpr(marked, clean, t.fpr),
        "auc": auc(points),
    }
    write_json(os.path.join(out_dir, "calibration.json"), result)
    logger.info("calibration: fpr at tau=%r is %r over %d clean trials", setup.params.tau, fpr, t.n_clean)
    return result


def _attack_trial(setup, purpose, k):
    original = setup.replaced(channel=None).watermarked_sequence(k, purpose)
    received = setup.through_channel(original, purpose, k)
    return setup.z_of(received), measure_overlap(original, received)[0]


def _sweep_row(setup, name, channel, clean, n, fpr, threads, progress):
    s = setup.replaced(channel=None if channel.kind == LOSSLESS else channel)
    results = run_trials(functools.partial(_attack_trial, s, "attack"), n, threads, progress)
    z = np.array([r[0] for r in results])
    overlap = float(np.mean([r[1] for r in results]))
    return [name, channel.flip_prob, overlap, tpr_at_fpr(z, clean, fpr), float(z.mean())]


def cmd_attack_sweep(config, out_dir, threads=1, progress=None):
    ''' TPR@fpr per attack preset (attack_sweep.csv) and per uniform flip probability (flip_sweep.csv). '''
    t = config.trials
    setup = make_setup(config, "attack-sweep", with_channel=False)
    clean = clean_z_values(setup, t.n_clean, threads=threads, progress=progress)
    rows = []
    for name in config.sweeps.attacks:
        channel = attack_preset(name, config.attacks)
        rows.append(_sweep_row(setup, name, channel, clean, t.n_watermarked, t.fpr, threads, progress))
        logger.info("attack %s: flip_prob=%r overlap=%.4f tpr=%.4f", name, rows[-1][1], rows[-1][2], rows[-1][3])
    write_csv(os.path.join(out_dir, "attack_sweep.csv"), SWEEP_COLUMNS, rows)
    flipRows = []
    for p in config.sweeps.flip_probs:
        channel = ChannelSpec(UNIFORM_FLIP, flip_prob=p)
        flipRows.append(_sweep_row(setup, "uniform", channel, clean, t.n_watermarked, t.fpr, threads, progress))
    write_csv(os.path.join(out_dir, "flip_sweep.csv"), SWEEP_COLUMNS, flipRows)
    return rows, flipRows


def cmd_calibrate_attacks(config, out_dir, threads=1, progress=None):
    ''' Fits every preset's flip probability to its target TPR by bisection. '''
    t = config.trials
    setup = make_setup(config, "calibrate-attacks", with_channel=False)
    clean = clean_z_values(setup, t.n_clean, threads=threads, progress=progress)

    def tpr_of(p):
        s = setup.replaced(channel=ChannelSpec(UNIFORM_FLIP, flip_prob=p))
        z = watermarked_z_values(s, t.n_watermarked, purpose="attack", threads=threads, progress=progress)
        return tpr_at_fpr(z, clean, t.fpr)

    fitted = {}
    rows = []
    for name in config.sweeps.attacks:
        if name not in config.attack_targets:
            continue
        target = config.attack_targets[name]
        if name == "none":
            p, tpr = 0.0, tpr_of(0.0)
        else:
            p, tpr = calibrate_flip_prob(tpr_of, target)
        fitted[name] = p
        rows.append([name, target, p, tpr])
        logger.info("attack %s: target tpr=%r fitted flip_prob=%r (tpr %r)", name, target, p, tpr)
    write_yaml(os.path.join(out_dir, "calibrated_attacks.yaml"), {"attacks": fitted})
    write_csv(os.path.join(out_dir, "calibrated_attacks.csv"), ["attack", "target_tpr", "flip_prob", "tpr"], rows)
    return fitted


# memorisation of a single training sequence: per-position unigram with vanishing smoothing
SINGLE_SEQUENCE_STUDENT = {"n_train": 1, "n_eval": 200, "order": 0, "smoothing": 1e-9, "position_mode": "position"}


def cmd_radioactivity(config, out_dir, single=False, clean_control=False, threads=1, progress=None):
    t = config.trials
    st = config.student
    kw = {"n_train": t.n_train, "n_eval": t.n_eval, "order": st.order, "smoothing": st.smoothing,
          "position_mode": st.position_mode}
    if single:
        kw.update(SINGLE_SEQUENCE_STUDENT)
    setup = make_setup(config, "radioactivity")
    result = run_radioactivity(setup, n_clean=t.n_clean, fpr=t.fpr, clean_control=clean_control,
                               threads=threads, progress=progress, **kw)
    d = result.to_json_dict()
    d["student"] = {"order": kw["order"], "smoothing": kw["smoothing"], "position_mode": kw["position_mode"]}
    write_json(os.path.join(out_dir, "radioactivity.json"), d)
    save_student(os.path.join(out_dir, "student.tms"), result.student)
    return result


def cmd_report(in_dir, out_dir):
    ''' Flattens every JSON report of in_dir into report.csv rows (file, key, value). '''
    paths = sorted(glob.glob(os.path.join(in_dir, "*.json")))
    if not paths:
        raise InvalidArgument("no JSON reports in %s" % in_dir)
    rows = []
    for path in paths:
        name = os.path.basename(path)
        for key, value in flatten(read_json(path)):
            rows.append([name, key, value])
    write_csv(os.path.join(out_dir, "report.csv"), ["file", "key", "value"], rows)
    return rows
