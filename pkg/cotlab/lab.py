import logging
import os
from pathlib import Path

from .utils import (DomainError, GEvaluator, METHODS, STRATA, Window, WorkerPool, WSequence, cached_divisor_table,
                    normalization_divisor, require_int, require_real)
from .utils.constants import SPREAD_TOLERANCE

logger = logging.getLogger(__name__)

CACHE_ENV = 'COTLAB_CACHE'
FORMATS = ('csv', 'json')
SEED_LIMIT = 2 ** 63 - 1

# name: (kind, default)
FIELDS = {
    'seed': ('int', 42),
    'samples': ('int', 10 ** 5),
    'n_terms': ('int', 10 ** 6),
    'm_terms': ('int', 10 ** 6),
    'b': ('int', None),
    'k': ('int', 1),
    'L': ('int', 0),
    'a0': ('float', 0.5),
    'a1': ('float', 1.0),
    'delta': ('float', 0.05),
    'normalization': ('str', 'two-pi'),
    'method': ('str', 'cross-checked'),
    'tolerance': ('float', SPREAD_TOLERANCE),
    'fejer': ('bool', False),
    'strata': ('int', STRATA),
    'r_max': ('int', 6),
    'z': ('float', 20.0),
    'cf_depth': ('int', 64),
    'x': ('str', None),
    'precision': ('int', 256),
    'cells': ('int', 8),
    'thresholds': ('str', None),
    'input': ('str', None),
    'cache_dir': ('str', None),
    'workers': ('int', 1),
    'format': ('str', 'csv'),
    'out': ('str', None),
}
ALIASES = {'N': 'n_terms', 'M': 'm_terms', 'cachedir': 'cache_dir'}


def canonical_key(key):
    """Map a flag or config-file key (dashes or underscores) onto its field name."""
    key = key.strip().lstrip('-')
    if key in ALIASES:
        return ALIASES[key]
    key = key.replace('-', '_')
    if key in FIELDS:
        return key
    raise DomainError(f"unknown configuration key: {key}")


def coerce(name, raw):
    """Convert a textual value for field `name` into its Python type."""
    kind, _ = FIELDS[name]
    if raw is None or not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if kind == 'int':
        try:
            return int(raw)
        except ValueError:
            pass
        try:
            value = float(raw)
        except ValueError:
            raise DomainError(f"{name} must be an integer, got {raw!r}") from None
        if not value.is_integer():
            raise DomainError(f"{name} must be an integer, got {raw!r}")
        return int(value)
    if kind == 'float':
        try:
            return float(raw)
        except ValueError:
            raise DomainError(f"{name} must be a real number, got {raw!r}") from None
    if kind == 'bool':
        lowered = raw.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise DomainError(f"{name} must be a boolean, got {raw!r}")
    return raw


def read_config_file(path):
    """
    Parse a plain-text key=value recipe.
    Args:
        path: file with one key=value per line; '#' starts a comment, blank lines are skipped

    Returns:
        dict of field name to typed value
    """
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from exc
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise DomainError(f"{path}:{number}: expected key=value, got {line!r}")
        key, raw = line.split('=', 1)
        name = canonical_key(key)
        values[name] = coerce(name, raw)
    return values


class LabConfig:
    def __init__(self,
                 seed: int = 42,
                 samples: int = 10 ** 5,
                 n_terms: int = 10 ** 6,
                 m_terms: int = 10 ** 6,
                 b: int = None,
                 k: int = 1,
                 L: int = 0,
                 a0: float = 0.5,
                 a1: float = 1.0,
                 delta: float = 0.05,
                 normalization: str = 'two-pi',
                 method: str = 'cross-checked',
                 tolerance: float = SPREAD_TOLERANCE,
                 fejer: bool = False,
                 strata: int = STRATA,
                 r_max: int = 6,
                 z: float = 20.0,
                 cf_depth: int = 64,
                 x: str = None,
                 precision: int = 256,
                 cells: int = 8,
                 thresholds: str = None,
                 input: str = None,
                 cache_dir: str = None,
                 workers: int = 1,
                 format: str = 'csv',
                 out: str = None
                 ) -> None:

        # initialize sampling
        self._initialize_sampling(seed, samples, strata)
        # initialize g evaluation
        self._initialize_series(method, n_terms, m_terms, tolerance, fejer)
        # initialize window
        self._initialize_window(b, a0, a1)
        # initialize experiment parameters
        self._initialize_experiment(k, L, delta, normalization, r_max, z, cf_depth, x, precision, cells,
                                    thresholds, input)
        # initialize output and resources
        self._initialize_output(cache_dir, workers, format, out)

    def _initialize_sampling(self, seed: int, samples: int, strata: int) -> None:
        """
        :param seed: Master seed, 0 <= seed < 2^63.
        :param samples: Number of g samples per experiment.
        :param strata: Number of equal-width strata for quadrature.
        """
        self.seed = require_int('seed', seed, minimum=0, maximum=SEED_LIMIT)
        self.samples = require_int('samples', samples, minimum=1)
        self.strata = require_int('strata', strata, minimum=1)

    def _initialize_series(self, method: str, n_terms: int, m_terms: int, tolerance: float, fejer: bool) -> None:
        """
        :param method: 'direct', 'fourier' or 'cross-checked'.
        :param n_terms: Direct-series cap N.
        :param m_terms: Fourier cap M.
        :param tolerance: Largest accepted spread of a g evaluation.
        :param fejer: Fejer damping of the Fourier series.
        """
        if method not in METHODS:
            raise DomainError(f"Unknown g method: {method}")
        self.method = method
        self.n_terms = require_int('N', n_terms, minimum=2)
        self.m_terms = require_int('M', m_terms, minimum=2)
        self.tolerance = require_real('tolerance', tolerance, lo=0.0, allow_inf=True)
        self.fejer = bool(fejer)

    def _initialize_window(self, b: int, a0: float, a1: float) -> None:
        """
        :param b: Denominator of the cotangent sums; optional until a window is needed.
        :param a0: Left end of the residue window, as a fraction of b.
        :param a1: Right end of the residue window, as a fraction of b.
        """
        self.b = None if b is None else require_int('b', b, minimum=1)
        self.a0 = require_real('a0', a0, lo=0.0, hi=1.0)
        self.a1 = require_real('a1', a1, lo=0.0, hi=1.0)
        if not self.a0 < self.a1:
            raise DomainError(f"window needs a0 < a1, got a0={self.a0}, a1={self.a1}")

    def _initialize_experiment(self, k, L, delta, normalization, r_max, z, cf_depth, x, precision, cells,
                               thresholds, input):
        """
        :param k: Moment index (largest k for moment tables, decomposition level for decompose).
        :param L: Largest absolute-moment order, 0 for none.
        :param delta: Width parameter of the g1/g2/g3 split.
        :param normalization: 'two-pi' or 'pi'.
        :param r_max: Largest r of the exceptional sets E(z, r).
        :param z: Threshold of the exceptional sets.
        :param cf_depth: Continued fraction depth.
        :param x: Real to expand ('p/q', a decimal, or 'golden').
        :param precision: Working precision in bits for decimal x.
        :param cells: Number of equidistribution cells.
        :param thresholds: Comma-separated tail thresholds.
        :param input: Moments CSV read by the radius command.
        """
        self.k = require_int('k', k, minimum=0)
        self.L = require_int('L', L, minimum=0)
        self.delta = require_real('delta', delta, lo=0.0, hi=0.125, lo_open=True, hi_open=True)
        normalization_divisor(normalization)
        self.normalization = normalization
        self.r_max = require_int('r_max', r_max, minimum=0)
        self.z = require_real('z', z, lo=0.0, lo_open=True)
        self.cf_depth = require_int('cf_depth', cf_depth, minimum=1)
        self.x = x
        self.precision = require_int('precision', precision, minimum=53)
        self.cells = require_int('cells', cells, minimum=1)
        self.thresholds = thresholds
        self.input = input

    def _initialize_output(self, cache_dir, workers, format, out):
        """
        :param cache_dir: Directory of divisor-table and g-sample caches, None to disable caching.
        :param workers: Worker processes.
        :param format: 'csv' or 'json'.
        :param out: Output path, None for stdout.
        """
        self.cache_dir = cache_dir
        self.workers = require_int('workers', workers, minimum=1)
        if format not in FORMATS:
            raise DomainError(f"Unknown output format: {format}")
        self.format = format
        self.out = out

    @classmethod
    def from_sources(cls, flags=None, config_file=None, environ=None):
        """
        Merge defaults, environment, config file and flags, later sources overriding earlier ones.

        Args:
            flags: dict of explicitly given command-line values
            config_file: optional key=value recipe
            environ: mapping consulted for COTLAB_CACHE (os.environ by default)

        Returns:
            LabConfig
        """
        environ = os.environ if environ is None else environ
        values = {name: default for name, (_, default) in FIELDS.items()}
        if environ.get(CACHE_ENV):
            values['cache_dir'] = environ[CACHE_ENV]
        if config_file is not None:
            values.update(read_config_file(config_file))
        for key, value in (flags or {}).items():
            name = canonical_key(key)
            values[name] = coerce(name, value)
        return cls(**values)

    def to_dict(self):
        return {name: getattr(self, name) for name in FIELDS}

    @property
    def normalization_divisor(self):
        return normalization_divisor(self.normalization)

    @property
    def threshold_grid(self):
        """Tail thresholds, 0, 0.5, ..., 8 unless given."""
        if not self.thresholds:
            return [0.5 * i for i in range(17)]
        try:
            return [float(t) for t in self.thresholds.split(',') if t.strip()]
        except ValueError:
            raise DomainError(f"thresholds must be comma-separated reals, got {self.thresholds!r}") from None

    def window(self):
        if self.b is None:
            raise DomainError("this experiment needs b")
        return Window(self.b, self.a0, self.a1)

    def evaluator(self):
        """GEvaluator for these settings; the divisor table goes through the cache."""
        table = None
        if self.method in ('fourier', 'cross-checked'):
            table = cached_divisor_table(2 * self.m_terms, self.cache_dir)
        return GEvaluator(method=self.method, n_terms=self.n_terms, m_terms=self.m_terms, table=table,
                          tolerance=self.tolerance, fejer=self.fejer)

    def w_sequence(self):
        return WSequence()

    def pool(self):
        return WorkerPool(self.workers)
