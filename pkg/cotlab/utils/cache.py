"""
On-disk caches: divisor tables keyed by their limit and g-sample sets keyed by a digest of everything that
determines them. Unreadable or inconsistent files are rebuilt with a warning.
"""
import hashlib
import json
import logging
import os
import zipfile
from pathlib import Path

import numpy as np

from .gseries import DivisorTable, divisor_sieve
from .moments import STRATA, GSamples, sample_g
from .utils import CacheError, DomainError

logger = logging.getLogger(__name__)

# prefix of the table re-sieved to validate a loaded file
CHECK_PREFIX = 1000


def _write_atomic(path, data):
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as fh:
        fh.write(data)
    os.replace(tmp, path)


def divisor_table_path(cache_dir, M):
    return Path(cache_dir) / f'tau_{int(M)}.bin'


def read_divisor_table(path, M):
    """Read a table file and check it against its name and a freshly sieved prefix."""
    try:
        table = DivisorTable.from_bytes(Path(path).read_bytes())
    except (OSError, DomainError) as exc:
        raise CacheError(f"cannot read divisor table {path}: {exc}") from exc
    if table.limit != M:
        raise CacheError(f"divisor table {path} holds {table.limit} entries, expected {M}")
    head = min(M, CHECK_PREFIX)
    if not np.array_equal(table.tau[:head + 1], divisor_sieve(head).tau):
        raise CacheError(f"divisor table {path} disagrees with the sieve")
    return table


def cached_divisor_table(M, cache_dir=None):
    """
    Divisor table up to M, loaded from cache_dir/tau_<M>.bin when present and sound, sieved (and saved) otherwise.
    """
    if cache_dir is None:
        return divisor_sieve(M)
    path = divisor_table_path(cache_dir, M)
    if path.exists():
        try:
            table = read_divisor_table(path, M)
            logger.info(f'cache hit: {path}')
            return table
        except CacheError as exc:
            logger.warning(f'{exc}; rebuilding')
    else:
        logger.info(f'cache miss: {path}')
    table = divisor_sieve(M)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(path, table.to_bytes())
    return table


def g_samples_key(n_samples, seed, cfg, strata=STRATA, interval=(0.0, 1.0)):
    """sha256 over every input that determines a g-sample set."""
    payload = dict(samples=int(n_samples), seed=int(seed), strata=int(strata),
                   interval=[float(interval[0]), float(interval[1])], **cfg.key())
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def g_samples_path(cache_dir, digest):
    return Path(cache_dir) / f'gsamples_{digest}.npz'


def read_g_samples(path, digest):
    try:
        with np.load(path, allow_pickle=False) as data:
            if str(data['digest']) != digest:
                raise CacheError(f"g-sample cache {path} was written for another configuration")
            return GSamples(alpha=data['alpha'], value=data['value'], spread=data['spread'],
                            stratum=data['stratum'], strata=int(data['strata']), seed=int(data['seed']),
                            n_rejected=int(data['n_rejected']))
    except CacheError:
        raise
    except (OSError, EOFError, KeyError, ValueError, zipfile.BadZipFile) as exc:
        raise CacheError(f"cannot read g-sample cache {path}: {exc}") from exc


def write_g_samples(path, digest, gs):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as fh:
        np.savez(fh, alpha=gs.alpha, value=gs.value, spread=gs.spread, stratum=gs.stratum,
                 strata=gs.strata, seed=gs.seed, n_rejected=gs.n_rejected, digest=digest)
    os.replace(tmp, path)


def cached_g_samples(n_samples, seed, cfg, strata=STRATA, cache_dir=None, pmap=map):
    """sample_g over [0, 1] through the g-sample cache."""
    if cache_dir is None:
        return sample_g(n_samples, seed, cfg, strata=strata, pmap=pmap)
    digest = g_samples_key(n_samples, seed, cfg, strata=strata)
    path = g_samples_path(cache_dir, digest)
    if path.exists():
        try:
            gs = read_g_samples(path, digest)
            logger.info(f'cache hit: {path}')
            return gs
        except CacheError as exc:
            logger.warning(f'{exc}; rebuilding')
    else:
        logger.info(f'cache miss: {path}')
    gs = sample_g(n_samples, seed, cfg, strata=strata, pmap=pmap)
    write_g_samples(path, digest, gs)
    return gs
