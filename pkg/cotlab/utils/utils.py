import json
import logging
import math
import concurrent.futures as cf

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# width of the blocks handed to the compensated accumulator
BLOCK = 4096


class CotLabError(Exception):
    """Base class of every error raised by cotlab."""


class DomainError(CotLabError, ValueError):
    """A precondition of an operation is violated."""


class PrecisionError(CotLabError, ArithmeticError):
    """Working precision ran out before a stopping rule was reached."""


class CacheError(CotLabError, OSError):
    """A cache file could not be read back."""


def normalization_divisor(normalization):
    """
    This function takes a preselected name of moment normalization and converts it to the divisor D
    used in (g/D)^(2k).
    Args:
        normalization: 'two-pi' or 'pi'.

    Returns:
        divisor
    """
    valid = ['two-pi', 'pi']
    if normalization not in valid:
        raise DomainError(f"Unknown normalization: {normalization}")
    return {'two-pi': 2 * math.pi, 'pi': math.pi}[normalization]


def require_int(name, value, minimum=None, maximum=None):
    """Check that value is an integer within [minimum, maximum] and return it as int."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise DomainError(f"{name} must be <= {maximum}, got {value}")
    return value


def require_real(name, value, lo=None, hi=None, lo_open=False, hi_open=False, allow_inf=False):
    """Check that value is a real within the given (optionally open) bounds; finite unless allow_inf."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a real number, got {value!r}") from None
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if lo is not None and (x < lo or (lo_open and x == lo)):
        raise DomainError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {x}")
    if hi is not None and (x > hi or (hi_open and x == hi)):
        raise DomainError(f"{name} must be {'<' if hi_open else '<='} {hi}, got {x}")
    return x


class Accumulator:
    """Elementwise Neumaier (improved Kahan) accumulator."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape, dtype=np.float64)
        self.comp = np.zeros(shape, dtype=np.float64)

    def add(self, x):
        x = np.asarray(x, dtype=np.float64)
        t = self.total + x
        self.comp += np.where(np.abs(self.total) >= np.abs(x), (self.total - t) + x, (x - t) + self.total)
        self.total = t

    @property
    def value(self):
        return self.total + self.comp


def compensated_sum(blocks, shape=()):
    """
    Neumaier accumulation of an iterable of block partial sums.

    Args:
        blocks: iterable of arrays (or scalars) of a common shape, each the pairwise sum of one block of terms.
        shape: shape of the accumulator.

    Returns:
        total: compensated total with the given shape.
    """
    acc = Accumulator(shape)
    for x in blocks:
        acc.add(x)
    return acc.value


def spawn_seeds(seed, n):
    """Derive n independent child seed sequences from one integer seed."""
    return np.random.SeedSequence(int(seed)).spawn(int(n))


def chunked(items, size):
    """Split a sequence into consecutive chunks of a fixed size (the last one may be shorter)."""
    return [items[i:i + size] for i in range(0, len(items), size)]


class WorkerPool:
    """
    Order-preserving parallel map. With workers <= 1 everything runs in process.

    Usage: with WorkerPool(4) as pool: results = pool(func, items)
    """

    def __init__(self, workers=1):
        self.workers = require_int('workers', workers, minimum=1)
        self._executor = None

    def __enter__(self):
        if self.workers > 1:
            self._executor = cf.ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None
        return False

    def __call__(self, func, items):
        if self._executor is None:
            return list(map(func, items))
        return list(self._executor.map(func, items))


def format_value(value):
    """Render one output field: floats with 17 significant digits, everything else as text."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
        return '%.17g' % value
    if value is None:
        return ''
    return str(value)


def create_df(records, columns):
    """
    To create a df and validate data
    Args:
        records: list of dicts (or tuples in column order)
        columns: column names in output order

    Returns:
        df: pandas dataframe with exactly these columns
    """
    if records and not isinstance(records[0], dict):
        if any(len(rec) != len(columns) for rec in records):
            raise DomainError("Provided records and column names do not match.")
        records = [dict(zip(columns, rec)) for rec in records]
    df = pd.DataFrame.from_records(records, columns=columns)
    return df


def frame_to_csv(df):
    """CSV text of a frame with %.17g floats; byte-stable for equal frames."""
    out = df.copy()
    for column in out.columns:
        # bools and mixed object columns go through format_value; float columns keep pandas formatting
        if out[column].dtype == bool or out[column].dtype == object:
            out[column] = out[column].map(format_value)
    return out.to_csv(index=False, float_format='%.17g', na_rep='nan', lineterminator='\n')


def frame_to_json(df):
    """JSON list of objects mirroring frame_to_csv field for field."""

    def token(value):
        if isinstance(value, (float, np.floating)):
            return format_value(value) if math.isfinite(value) else 'null'
        if isinstance(value, (bool, np.bool_, int, np.integer)):
            return format_value(value)
        if value is None:
            return 'null'
        return json.dumps(str(value))

    rows = []
    for row in df.itertuples(index=False):
        fields = ', '.join(f'{json.dumps(c)}: {token(v)}' for c, v in zip(df.columns, row))
        rows.append('  {' + fields + '}')
    return '[\n' + ',\n'.join(rows) + '\n]\n'
