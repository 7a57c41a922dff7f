"""
Moments of the limiting law: H_k by stratified quadrature over g and by cotangent-sum window averages, absolute
moments of g, and radius-of-convergence diagnostics for sum_k H_k x^k / (2k)!.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from scipy.special import gammaln

from .cotangent import cotangent_power_moment
from .gseries import g_eval
from .utils import DomainError, chunked, normalization_divisor, require_int, spawn_seeds

logger = logging.getLogger(__name__)

STRATA = 1024
# strata handled per task
STRATA_CHUNK = 64
MAX_RESAMPLE_ROUNDS = 20
K_MAX = 12
L_MAX = 24


@dataclass(frozen=True)
class MomentEstimate:
    k: int
    value: float
    stderr: float
    method: str
    normalization: str
    n: int
    seed: object = None
    n_rejected: int = 0


@dataclass(frozen=True)
class GSamples:
    """Stratified g samples: alpha, g value, spread and stratum index per sample."""
    alpha: np.ndarray
    value: np.ndarray
    spread: np.ndarray
    stratum: np.ndarray
    strata: int
    seed: int
    n_rejected: int

    @property
    def n(self):
        return self.value.size

    def stratified_mean(self, f):
        """
        Stratified mean of f over the samples.

        Returns:
            estimate, stderr (from per-stratum variances)
        """
        counts = np.bincount(self.stratum, minlength=self.strata)
        if np.any(counts < 2):
            raise DomainError("every stratum needs at least two samples for a variance estimate")
        sums = np.bincount(self.stratum, weights=f, minlength=self.strata)
        means = sums / counts
        dev = f - means[self.stratum]
        var = np.bincount(self.stratum, weights=dev * dev, minlength=self.strata) / (counts - 1)
        estimate = float(np.mean(means))
        stderr = float(math.sqrt(np.sum(var / counts)) / self.strata)
        return estimate, stderr


def _draw(rng, s, count, strata, lo, hi):
    return lo + (hi - lo) * (s + rng.random(count)) / strata


def _strata_chunk(cfg, strata, n_per, lo, hi, args):
    indices, seed_seqs = args
    rngs = [np.random.default_rng(ss) for ss in seed_seqs]
    alpha = np.concatenate([_draw(rng, s, n_per, strata, lo, hi) for s, rng in zip(indices, rngs)])
    owner = np.repeat(np.arange(len(indices)), n_per)
    value, spread = g_eval(alpha, cfg)
    rejected = 0
    for _ in range(MAX_RESAMPLE_ROUNDS):
        bad = np.nonzero(spread > cfg.tolerance)[0]
        if bad.size == 0:
            break
        rejected += bad.size
        for j in range(len(indices)):
            rows = bad[owner[bad] == j]
            if rows.size:
                alpha[rows] = _draw(rngs[j], indices[j], rows.size, strata, lo, hi)
        value[bad], spread[bad] = g_eval(alpha[bad], cfg)
    stratum = np.repeat(np.asarray(indices, dtype=np.int64), n_per)
    return alpha, value, spread, stratum, rejected


def sample_g(n_samples, seed, cfg, strata=STRATA, interval=(0.0, 1.0), pmap=map):
    """
    Stratified uniform samples of g over an interval.

    The interval is cut into `strata` equal strata with n_samples // strata draws each; every stratum owns a seed
    spawned from `seed`, and samples whose spread exceeds cfg.tolerance are redrawn in their stratum (at most
    MAX_RESAMPLE_ROUNDS times; the count is reported).

    Returns:
        GSamples
    """
    n_samples = require_int('n_samples', n_samples, minimum=1)
    strata = require_int('strata', strata, minimum=1)
    n_per = n_samples // strata
    if n_per < 2:
        raise DomainError(f"n_samples={n_samples} gives fewer than 2 samples in each of {strata} strata")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise DomainError(f"sampling interval needs lo < hi, got {interval}")
    seeds = spawn_seeds(seed, strata)
    jobs = list(zip(chunked(list(range(strata)), STRATA_CHUNK), chunked(seeds, STRATA_CHUNK)))
    parts = list(pmap(partial(_strata_chunk, cfg, strata, n_per, lo, hi), jobs))
    rejected = sum(p[4] for p in parts)
    total = n_per * strata
    if rejected > 0.01 * total:
        logger.warning(f'{rejected} of {total} g evaluations exceeded spread tolerance {cfg.tolerance} '
                       f'and were redrawn')
    elif rejected:
        logger.info(f'{rejected} g evaluations redrawn for spread > {cfg.tolerance}')
    return GSamples(alpha=np.concatenate([p[0] for p in parts]),
                    value=np.concatenate([p[1] for p in parts]),
                    spread=np.concatenate([p[2] for p in parts]),
                    stratum=np.concatenate([p[3] for p in parts]),
                    strata=strata, seed=seed, n_rejected=rejected)


def hk_from_samples(samples, k, normalization='two-pi'):
    """H_k = int (g/D)^(2k) from existing samples; D = 2 pi or pi."""
    k = require_int('k', k, minimum=0, maximum=K_MAX)
    divisor = normalization_divisor(normalization)
    if k == 0:
        return MomentEstimate(k=0, value=1.0, stderr=0.0, method='quadrature', normalization=normalization,
                              n=samples.n, seed=samples.seed, n_rejected=samples.n_rejected)
    value, stderr = samples.stratified_mean((samples.value / divisor) ** (2 * k))
    return MomentEstimate(k=k, value=value, stderr=stderr, method='quadrature', normalization=normalization,
                          n=samples.n, seed=samples.seed, n_rejected=samples.n_rejected)


def hk_quadrature(k, n_samples, seed, cfg, normalization='two-pi', strata=STRATA, pmap=map):
    """
    Stratified Monte Carlo estimate of H_k = int_0^1 (g(x)/D)^(2k) dx.

    Args:
        k: 0 <= k <= 12
        n_samples: at least 10^4
        seed: integer seed
        cfg: GEvaluator
        normalization: 'two-pi' (D = 2 pi) or 'pi' (D = pi)

    Returns:
        MomentEstimate
    """
    k = require_int('k', k, minimum=0, maximum=K_MAX)
    n_samples = require_int('n_samples', n_samples, minimum=10 ** 4)
    normalization_divisor(normalization)
    if k == 0:
        return MomentEstimate(k=0, value=1.0, stderr=0.0, method='quadrature', normalization=normalization,
                              n=n_samples, seed=seed)
    samples = sample_g(n_samples, seed, cfg, strata=strata, pmap=pmap)
    return hk_from_samples(samples, k, normalization)


def hk_from_cotangent(b, k, w, pmap=map):
    """
    phi(b)^-1 b^-2k (A1 - A0)^-1 sum over the window of c0(r/b)^2k, an exact finite average.

    c0(r/b)/b follows the law of g/pi, so the estimate is labelled with the 'pi' normalization.
    """
    b = require_int('b', b, minimum=2)
    k = require_int('k', k, minimum=0, maximum=K_MAX)
    if b < 100:
        logger.warning(f'b={b} is below 100; the finite-b bias dominates the comparison')
    value = cotangent_power_moment(b, 2 * k, w, pmap=pmap)
    return MomentEstimate(k=k, value=value, stderr=0.0, method='cotangent', normalization='pi', n=b)


def abs_moment_from_samples(samples, L):
    L = require_int('L', L, minimum=1, maximum=L_MAX)
    value, stderr = samples.stratified_mean(np.abs(samples.value) ** L)
    return MomentEstimate(k=L, value=value, stderr=stderr, method='absolute', normalization='raw',
                          n=samples.n, seed=samples.seed, n_rejected=samples.n_rejected)


def abs_moment(L, n_samples, seed, cfg, strata=STRATA, pmap=map):
    """Stratified Monte Carlo estimate of int_0^1 |g(x)|^L dx, 1 <= L <= 24."""
    L = require_int('L', L, minimum=1, maximum=L_MAX)
    n_samples = require_int('n_samples', n_samples, minimum=10 ** 4)
    samples = sample_g(n_samples, seed, cfg, strata=strata, pmap=pmap)
    return abs_moment_from_samples(samples, L)


def convert_normalization(estimate, target):
    """Rescale an H_k estimate between the two normalizations by the exact factor 4^(+-k)."""
    if estimate.normalization == target:
        return estimate
    if estimate.method == 'absolute':
        raise DomainError("absolute moments carry no normalization")
    normalization_divisor(target)
    factor = 4.0 ** estimate.k if target == 'pi' else 4.0 ** -estimate.k
    return replace(estimate, value=estimate.value * factor, stderr=estimate.stderr * factor,
                   normalization=target)


def envelope_constant(abs_moments):
    """C = max_L (int |g|^L)^(1/L) / L, the fitted constant of int |g|^L <= C^L L^L."""
    if not abs_moments:
        raise DomainError("envelope_constant needs at least one absolute moment")
    return max(m.value ** (1.0 / m.k) / m.k for m in abs_moments if m.value > 0)


def stirling_guard(k):
    """
    Returns:
        lower_ok: (2k)! >= exp(2k log 2k - 2k)
        threefold_ok: (2k)^(2k) <= (2k)! 3^(2k)
    """
    k = require_int('k', k, minimum=1)
    n = 2 * k
    fact = math.factorial(n)
    lower_ok = math.log(fact) >= n * math.log(n) - n
    threefold_ok = n ** n <= fact * 3 ** n
    return lower_ok, threefold_ok


def dyadic_shell_bound(L, values):
    """
    Upper bound for int |g|^L built from measures of dyadic shells:
    L^L meas{|g| < L} + sum_j (2^(j+1) L)^L meas{2^j L <= |g| < 2^(j+1) L}.
    """
    L = require_int('L', L, minimum=1, maximum=L_MAX)
    x = np.abs(np.asarray(values, dtype=np.float64))
    n = x.size
    if n == 0:
        raise DomainError("dyadic_shell_bound needs samples")
    bound = float(L) ** L * np.count_nonzero(x < L) / n
    j = 0
    while True:
        lo, hi = 2.0 ** j * L, 2.0 ** (j + 1) * L
        if lo > x.max():
            break
        bound += hi ** L * np.count_nonzero((x >= lo) & (x < hi)) / n
        j += 1
    return float(bound)


@dataclass(frozen=True)
class RadiusDiagnostics:
    rows: tuple
    normalization: str
    max_rho: float
    limsup_threshold: float
    limsup_consistent: bool
    envelope_c: float
    below_envelope: bool
    radius_lower: float
    radius_upper: float


def log_rho(k, hk):
    """log of (H_k / (2k)!)^(1/k), computed in the log domain."""
    return (math.log(hk) - float(gammaln(2 * k + 1))) / k


def radius_diagnostics(moments, abs_moments=None, tolerance=1e-3):
    """
    rho_k = (H_k / (2k)!)^(1/k) for every k >= 1, with consistency flags.

    Args:
        moments: H_k estimates sharing one normalization
        abs_moments: optional absolute moments for the envelope constant C; without them C comes from the rows
            themselves via int g^(2k) = D^(2k) H_k
        tolerance: slack on the limsup comparison

    Returns:
        RadiusDiagnostics; rows are (k, Hk, rho_k, c_fit)
    """
    moments = [m for m in moments if m.method != 'absolute']
    if not moments:
        raise DomainError("radius_diagnostics needs at least one H_k estimate")
    norms = {m.normalization for m in moments}
    if len(norms) != 1:
        raise DomainError(f"radius_diagnostics needs a single normalization, got {sorted(norms)}")
    normalization = norms.pop()
    divisor = normalization_divisor(normalization)
    rows = []
    for m in sorted(moments, key=lambda e: e.k):
        if m.k < 1 or m.value <= 0:
            continue
        rho = math.exp(log_rho(m.k, m.value))
        c_fit = divisor * m.value ** (1.0 / (2 * m.k)) / (2 * m.k)
        rows.append((m.k, m.value, rho, c_fit))
    if not rows:
        raise DomainError("no H_k rows with k >= 1 and positive value")
    if abs_moments:
        c_env = envelope_constant(abs_moments)
    else:
        c_env = max(r[3] for r in rows)
    max_rho = max(r[2] for r in rows)
    # the limsup bound 1/pi^2 is stated for the pi normalization
    threshold = 1.0 / divisor ** 2
    envelope_rho = (3.0 * c_env / divisor) ** 2
    return RadiusDiagnostics(rows=tuple(rows), normalization=normalization, max_rho=max_rho,
                             limsup_threshold=threshold,
                             limsup_consistent=max_rho >= threshold - tolerance,
                             envelope_c=c_env,
                             below_envelope=all(r[2] <= envelope_rho for r in rows),
                             radius_lower=1.0 / envelope_rho,
                             radius_upper=divisor ** 2)
