#coding: utf-8

import argparse
import functools
import logging
import os
import sys

from tqdm import tqdm

from tokenmark.core.base_types import InvalidArgument
from tokenmark.core.tokenseq_io import FormatError
from .config import ConfigError, OutputConfig, load_config
from . import experiments

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_IO = 3

THREADS_ENV = "TOKENMARK_THREADS"

USAGE_EPILOG = '''exit codes: 0 ok, 1 detection negative (detect with a single input),
2 usage, parse or config error, 3 I/O error.
%s is the fallback of --threads.''' % THREADS_ENV


def _add_common(p):
    p.add_argument("--config", "-c", metavar="FILE", help="YAML experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. watermark.delta=6 (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    p.add_argument("--threads", "-j", type=int, help="worker processes for Monte-Carlo trials")
    p.add_argument("--out", "-o", metavar="DIR", help="output directory (overrides output.dir)")
    p.add_argument("--progress", action="store_true", help="progress bars on stderr")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--verbose", "-v", action="store_true")
    g.add_argument("--quiet", "-q", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="tokenmark",
        description="Green/red-list watermarking testbed for autoregressive image token streams.",
        epilog=USAGE_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", help="generate token sequence files")
    _add_common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--watermark", dest="watermark", action="store_true", default=True)
    g.add_argument("--clean", dest="watermark", action="store_false")
    p.add_argument("-n", type=int, default=1, help="number of sequences")
    p.add_argument("--text", action="store_true", help="write the text form instead of binary")

    p = sub.add_parser("detect", help="detect the watermark in token files")
    _add_common(p)
    p.add_argument("inputs", nargs="+", metavar="FILE")

    for name, text in [("calibrate", "FPR calibration, ROC and delta sweep"),
                       ("attack-sweep", "TPR per attack preset and per flip probability"),
                       ("calibrate-attacks", "fit attack flip probabilities to target TPRs")]:
        _add_common(sub.add_parser(name, help=text))

    p = sub.add_parser("radioactivity", help="watermark transfer through a student model")
    _add_common(p)
    p.add_argument("--single", action="store_true", help="single-sequence memorisation setting")
    p.add_argument("--clean-control", action="store_true", help="also train a student on clean sequences")

    p = sub.add_parser("report", help="collect the JSON reports of a directory into report.csv")
    _add_common(p)
    p.add_argument("input_dir", metavar="DIR")

    return parser


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        v = os.environ.get(THREADS_ENV)
        try:
            n = int(v) if v else 1
        except ValueError:
            raise ConfigError("%s must be an integer, got %r" % (THREADS_ENV, v))
    if n < 1:
        raise ConfigError("the number of threads must be positive, got %d" % n)
    return n


def _configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def run(args):
    ''' Executes a parsed command line; returns the exit code. '''
    config = load_config(args.config, args.overrides)
    if args.seed is not None:
        config = config.replaced(master_seed=args.seed)
    if args.out is not None:
        config = config.replaced(output=OutputConfig(args.out))
    threads = _threads(args)
    progress = functools.partial(tqdm, file=sys.stderr, leave=False) if args.progress else None
    out = config.output.dir
    experiments.echo_config(config, out)

    c = args.command
    if c == "generate":
        experiments.cmd_generate(config, args.n, args.watermark, out, not args.text, threads, progress)
    elif c == "detect":
        reports = experiments.cmd_detect(config, args.inputs, out)
        if len(reports) == 1:
            r = reports[0]
            sys.stdout.write("z=%.4f p=%.3g decision=%s\n" % (r.z_value, r.p_value, "watermarked" if r.decision else "clean"))
            return EXIT_OK if r.decision else EXIT_NEGATIVE
    elif c == "calibrate":
        experiments.cmd_calibrate(config, out, threads, progress)
    elif c == "attack-sweep":
        experiments.cmd_attack_sweep(config, out, threads, progress)
    elif c == "calibrate-attacks":
        experiments.cmd_calibrate_attacks(config, out, threads, progress)
    elif c == "radioactivity":
        experiments.cmd_radioactivity(config, out, args.single, args.clean_control, threads, progress)
    elif c == "report":
        experiments.cmd_report(args.input_dir, out)
    else:
        assert False, "unknown command %r" % c
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return run(args)
    except (ConfigError, FormatError, InvalidArgument) as e:
        sys.stderr.write("tokenmark: error: %s\n" % e)
        return EXIT_USAGE
    except OSError as e:
        sys.stderr.write("tokenmark: I/O error: %s\n" % e)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
