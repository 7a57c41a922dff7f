"""Command-line front-end: one subcommand per experiment, data on stdout (or --out), status on stderr."""
import argparse
import logging
import sys
from pathlib import Path

from .lab import FIELDS, FORMATS, LabConfig, coerce
from .run import run
from .utils import METHODS, DomainError, PrecisionError, frame_to_csv, frame_to_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_PRECISION = 4

COMMAND_HELP = {
    'c0': 'cotangent sums c0(r/b) over a residue window',
    'g': 'stratified samples of g',
    'cf': 'continued fraction expansion with c(alpha, r)',
    'moments': 'H_k and absolute moment estimates',
    'radius': 'radius-of-convergence diagnostics',
    'tail': 'tail measures of |g|',
    'equidist': 'equidistribution of c0(r/b)/b against the law of g',
    'decompose': 'sampled bounds of the g1/g2/g3 decomposition',
    'emeasure': 'Monte Carlo measures of the exceptional sets E(z, r)',
}
NEEDS_B = ('c0', 'equidist')
NEEDS_X = ('cf',)

# flag, field, extra argparse options
FLAGS = [
    (('--seed',), 'seed', {}),
    (('--samples',), 'samples', {}),
    (('--N', '--n-terms'), 'n_terms', {}),
    (('--M', '--m-terms'), 'm_terms', {}),
    (('--b',), 'b', {}),
    (('--k',), 'k', {}),
    (('--L',), 'L', {}),
    (('--a0',), 'a0', {}),
    (('--a1',), 'a1', {}),
    (('--delta',), 'delta', {}),
    (('--normalization',), 'normalization', {'choices': ('two-pi', 'pi')}),
    (('--method',), 'method', {'choices': METHODS}),
    (('--tolerance',), 'tolerance', {}),
    (('--strata',), 'strata', {}),
    (('--r-max',), 'r_max', {}),
    (('--z',), 'z', {}),
    (('--cf-depth',), 'cf_depth', {}),
    (('--x',), 'x', {}),
    (('--precision',), 'precision', {}),
    (('--cells',), 'cells', {}),
    (('--thresholds',), 'thresholds', {}),
    (('--input',), 'input', {}),
    (('--cache-dir',), 'cache_dir', {}),
    (('--workers',), 'workers', {}),
    (('--format',), 'format', {'choices': FORMATS}),
    (('--out',), 'out', {}),
]


def _typed(name):
    def convert(raw):
        try:
            return coerce(name, raw)
        except DomainError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    convert.__name__ = FIELDS[name][0]
    return convert


def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    for flags, name, extra in FLAGS:
        common.add_argument(*flags, dest=name, type=_typed(name), **extra)
    common.add_argument('--fejer', dest='fejer', action='store_true', help='Fejer damping of the Fourier series')
    common.add_argument('--config', dest='config', help='key=value recipe file')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', dest='verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', dest='quiet', action='store_true')

    parser = argparse.ArgumentParser(prog='cotlab', description='Numerical laboratory for cotangent sums, the '
                                                                'function g and the moments of their limiting law.')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    for name, text in COMMAND_HELP.items():
        sub.add_parser(name, parents=[common], help=text, argument_default=argparse.SUPPRESS)
    return parser


def configure_logging(verbose=False, quiet=False):
    """One stderr handler on the package logger; repeated calls replace it."""
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    package_logger = logging.getLogger('cotlab')
    for handler in list(package_logger.handlers):
        if getattr(handler, 'cotlab_cli', False):
            package_logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    handler.cotlab_cli = True
    package_logger.addHandler(handler)
    package_logger.setLevel(level)


def emit(df, fmt, out=None):
    text = frame_to_csv(df) if fmt == 'csv' else frame_to_json(df)
    if out:
        Path(out).write_text(text)
        logger.info(f'wrote {len(df)} rows to {out}')
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv=None):
    """
    Entry point of the cotlab command.

    Returns:
        exit code: 0 ok, 3 domain error, 4 precision error (usage errors exit with 2 from argparse)
    """
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop('command')
    config_file = args.pop('config', None)
    configure_logging(args.pop('verbose', False), args.pop('quiet', False))
    try:
        cfg = LabConfig.from_sources(args, config_file=config_file)
        if command in NEEDS_B and cfg.b is None:
            parser.error(f'{command}: the following arguments are required: --b')
        if command in NEEDS_X and cfg.x is None:
            parser.error(f'{command}: the following arguments are required: --x')
        df = run(command, cfg)
        emit(df, cfg.format, cfg.out)
    except DomainError as exc:
        sys.stderr.write(f'cotlab: error: {exc}\n')
        return EXIT_DOMAIN
    except PrecisionError as exc:
        sys.stderr.write(f'cotlab: error: {exc}\n')
        return EXIT_PRECISION
    return EXIT_OK
