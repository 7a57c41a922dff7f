"""
The empirical law of g and the experiments built on it: tail measures, the |g| <= c2 c(alpha, inf) + c3 scatter,
the g1/g2/g3 decomposition bounds on I(k) = [0, e^-2k] and the equidistribution of c0(r/b)/b over windows.
"""
import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.stats import ks_2samp

from .contfrac import MC_CHUNK, SAMPLE_Q_BOUND, best_approx, c_alpha_infinity, cf_expand, random_rationals
from .cotangent import euler_phi, window_values
from .fitting import fit_log_tail, minimal_envelope
from .gseries import decomposition_caps, direct_range, g_eval, z_tau_exact
from .moments import STRATA, sample_g
from .utils import DomainError, PrecisionError, chunked, require_int, require_real, spawn_seeds

logger = logging.getLogger(__name__)

# hits a tail threshold needs before it enters the slope fit
MIN_TAIL_HITS = 50
MIN_EQUIDIST_B = 1000
MIN_CDF_SAMPLES = 10 ** 5
DECOMPOSITION_K = (1, 2, 3)
DECOMPOSITION_DELTA = (0.02, 0.1)


class EmpiricalCDF:
    """F_hat(z) = #{samples <= z} / n over a sorted sample."""

    def __init__(self, samples, n_rejected=0):
        samples = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if samples.size == 0:
            raise DomainError("an empirical CDF needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise DomainError("empirical CDF samples must be finite")
        self.samples = samples
        self.samples.setflags(write=False)
        self.n_rejected = int(n_rejected)

    @classmethod
    def from_samples(cls, gs):
        return cls(gs.value, n_rejected=gs.n_rejected)

    @property
    def n(self):
        return self.samples.size

    def __call__(self, z):
        """Right-continuous F_hat."""
        return np.searchsorted(self.samples, z, side='right') / self.n

    def mid(self, z):
        """Mid-point convention (F_hat(z-) + F_hat(z)) / 2."""
        below = np.searchsorted(self.samples, z, side='left')
        upto = np.searchsorted(self.samples, z, side='right')
        return (below + upto) / (2.0 * self.n)

    def quantile(self, p):
        return np.quantile(self.samples, p)

    def negated(self):
        """The law of -X."""
        return EmpiricalCDF(-self.samples, n_rejected=self.n_rejected)


def sample_F(n_samples, seed, cfg, strata=STRATA, pmap=map):
    """
    Empirical CDF of g over stratified uniform alpha.

    Flagged evaluations are redrawn; more than 1% flagged is logged as a warning by the sampler.
    """
    n_samples = require_int('n_samples', n_samples, minimum=10 ** 4)
    gs = sample_g(n_samples, seed, cfg, strata=strata, pmap=pmap)
    return EmpiricalCDF.from_samples(gs)


def ks_distance(A, B):
    """sup_z |F_A(z) - F_B(z)|, the two-sample Kolmogorov-Smirnov statistic."""
    return float(ks_2samp(A.samples, B.samples).statistic)


def ks_midpoint(data, F):
    """
    sup_z |G(z) - F_mid(z)| with G the empirical CDF of data and F read with the mid-point convention.

    F stands for a continuous law, so ties between data and F samples count half; G is compared on both sides of
    each of its jumps and at every sample of F.
    """
    data = np.sort(np.asarray(data, dtype=np.float64).ravel())
    if data.size == 0:
        raise DomainError("ks_midpoint needs at least one data point")
    z = np.union1d(data, F.samples)
    f = F.mid(z)
    upto = np.searchsorted(data, z, side='right') / data.size
    below = np.searchsorted(data, z, side='left') / data.size
    return float(max(np.max(np.abs(upto - f)), np.max(np.abs(below - f))))


def default_cells(F, n_cells=8, scale=1.0):
    """
    Partition of the real line into n_cells half-open cells (alpha, beta] cut at the F quantiles j / n_cells,
    divided by scale (scale = pi maps the law of g onto the law of c0(r/b)/b).
    """
    n_cells = require_int('n_cells', n_cells, minimum=1)
    scale = require_real('scale', scale, lo=0.0, lo_open=True)
    inner = [float(F.quantile(j / n_cells)) / scale for j in range(1, n_cells)]
    edges = [-math.inf] + sorted(inner) + [math.inf]
    return [(edges[i], edges[i + 1]) for i in range(n_cells)]


@dataclass(frozen=True)
class EquidistReport:
    b: int
    a0: float
    a1: float
    cells: tuple
    counts: tuple
    phi_b: int
    lhs: tuple
    rhs: tuple
    max_abs_err: float
    ks_distance: float
    window_count: int
    law_scale: float

    @property
    def abs_err(self):
        return tuple(abs(l - r) for l, r in zip(self.lhs, self.rhs))

    @property
    def total_lhs(self):
        """count / phi(b), the full-window mass; it tends to a1 - a0."""
        return self.window_count / self.phi_b

    @property
    def lhs_probability(self):
        """lhs renormalized by the window count into a probability per cell."""
        return tuple(c / self.window_count for c in self.counts)


def equidist_experiment(b, w, cells, F, law_scale=math.pi, pmap=map):
    """
    Compare counts of c0(r/b)/b over the window with the empirical law of g.

    Args:
        b: denominator, b >= 1000
        w: Window with denominator b
        cells: list of (alpha, beta) with alpha < beta; a cell holds the r with alpha < c0(r/b)/b <= beta
        F: EmpiricalCDF of g
        law_scale: c0(r/b)/b is compared with g / law_scale; 1 compares with g itself

    Returns:
        EquidistReport with lhs = count / phi(b) and rhs = (a1 - a0)(F(law_scale beta) - F(law_scale alpha)) per cell,
        and the mid-point KS distance between the law of law_scale * c0(r/b)/b over the window and F
    """
    b = require_int('b', b, minimum=MIN_EQUIDIST_B)
    if w.b != b:
        raise DomainError(f"window denominator {w.b} differs from b={b}")
    law_scale = require_real('law_scale', law_scale, lo=0.0, lo_open=True)
    if F.n < MIN_CDF_SAMPLES:
        logger.warning(f'empirical CDF holds {F.n} samples, fewer than {MIN_CDF_SAMPLES}')
    cells = [(float(lo), float(hi)) for lo, hi in cells]
    for lo, hi in cells:
        if not lo < hi:
            raise DomainError(f"cell needs alpha < beta, got ({lo}, {hi})")
    _, x = window_values(w, pmap=pmap)
    if x.size == 0:
        raise DomainError(f"empty window: no r coprime to {b} in [{w.a0}*b, {w.a1}*b]")
    xs = np.sort(x)
    phi = euler_phi(b)
    counts, lhs, rhs = [], [], []
    for lo, hi in cells:
        count = int(np.searchsorted(xs, hi, side='right') - np.searchsorted(xs, lo, side='right'))
        counts.append(count)
        lhs.append(count / phi)
        rhs.append(w.width * float(F(law_scale * hi) - F(law_scale * lo)))
    ks = ks_midpoint(law_scale * xs, F)
    max_abs_err = max(abs(l - r) for l, r in zip(lhs, rhs))
    logger.info(f'equidistribution b={b}: {xs.size} residues, max |lhs - rhs| = {max_abs_err:.3g}, KS = {ks:.3g}')
    return EquidistReport(b=b, a0=w.a0, a1=w.a1, cells=tuple(cells), counts=tuple(counts), phi_b=phi,
                          lhs=tuple(lhs), rhs=tuple(rhs), max_abs_err=max_abs_err, ks_distance=ks,
                          window_count=int(xs.size), law_scale=law_scale)


@dataclass(frozen=True)
class TailFit:
    thresholds: tuple
    measure: tuple
    stderr: tuple
    log_measure: tuple
    hits: tuple
    slope: float
    intercept: float
    slope_stderr: float
    r2: float

    @property
    def fitted(self):
        return math.isfinite(self.slope)


def tail_measure(thresholds, cdf):
    """
    meas{|g| >= t} as sample fractions, with a least-squares slope of the log-measure against t over the
    thresholds with at least MIN_TAIL_HITS hits.

    Fewer than two such thresholds leave the slope as nan; the measures are returned regardless.
    """
    t = np.asarray(thresholds, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("tail_measure needs a nonempty list of thresholds")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise DomainError(f"thresholds must be nonnegative and strictly ascending, got {list(t)}")
    magnitudes = np.sort(np.abs(cdf.samples))
    n = magnitudes.size
    hits = n - np.searchsorted(magnitudes, t, side='left')
    p = hits / n
    stderr = np.sqrt(p * (1 - p) / n)
    with np.errstate(divide='ignore'):
        log_p = np.where(hits > 0, np.log(np.maximum(p, 1e-300)), -np.inf)
    usable = hits >= MIN_TAIL_HITS
    slope = intercept = slope_stderr = r2 = math.nan
    if np.count_nonzero(usable) >= 2:
        slope, intercept, slope_stderr, r2 = fit_log_tail(t[usable], log_p[usable])
    else:
        logger.warning(f'tail fit unavailable: {np.count_nonzero(usable)} thresholds with >= {MIN_TAIL_HITS} hits')
    return TailFit(thresholds=tuple(float(v) for v in t), measure=tuple(float(v) for v in p),
                   stderr=tuple(float(v) for v in stderr), log_measure=tuple(float(v) for v in log_p),
                   hits=tuple(int(v) for v in hits), slope=slope, intercept=intercept,
                   slope_stderr=slope_stderr, r2=r2)


@dataclass(frozen=True)
class ScatterReport:
    c_trunc: np.ndarray
    abs_g: np.ndarray
    c2: float
    c3: float
    dropped: int
    flagged: int


def _scatter_chunk(cfg, cf_depth, eps, args):
    seed_seq, n = args
    rng_seed = int(seed_seq.generate_state(1)[0])
    alphas = random_rationals(n, rng_seed)
    c_vals = []
    for x in alphas:
        cf = cf_expand(x, max_depth=cf_depth, q_bound=SAMPLE_Q_BOUND)
        try:
            value, _ = c_alpha_infinity(cf, eps=eps)
        except PrecisionError:
            value = None
        c_vals.append(value)
    keep = np.array([v is not None for v in c_vals], dtype=bool)
    dropped = int(np.count_nonzero(~keep))
    values, spread = g_eval(np.array([float(x) for x in alphas]), cfg)
    ok = spread <= cfg.tolerance
    flagged = int(np.count_nonzero(keep & ~ok))
    keep &= ok
    c = np.array([v for v, k in zip(c_vals, keep) if k], dtype=np.float64)
    return c, np.abs(values[keep]), dropped, flagged


def g_vs_c_scatter(n_samples, seed, cfg, cf_depth=256, eps=1e-6, pmap=map):
    """
    Pairs (c(alpha, R), |g(alpha)|) over exact uniform samples, with the minimal envelope c2 c + c3 covering them.

    c(alpha, R) is the truncation chosen by c_alpha_infinity; samples whose expansion cannot certify it are dropped,
    samples whose g spread exceeds the tolerance are discarded; both counts are reported.
    """
    n_samples = require_int('n_samples', n_samples, minimum=1)
    cf_depth = require_int('cf_depth', cf_depth, minimum=2)
    sizes = [len(c) for c in chunked(range(n_samples), MC_CHUNK)]
    seeds = spawn_seeds(seed, len(sizes))
    parts = list(pmap(partial(_scatter_chunk, cfg, cf_depth, eps), list(zip(seeds, sizes))))
    c = np.concatenate([p[0] for p in parts])
    g = np.concatenate([p[1] for p in parts])
    dropped = sum(p[2] for p in parts)
    flagged = sum(p[3] for p in parts)
    if dropped or flagged:
        logger.info(f'scatter: {dropped} samples without a certified c(alpha, R), {flagged} with g spread over '
                    f'{cfg.tolerance}')
    if c.size == 0:
        raise PrecisionError("no sample survived the scatter filters")
    c2, c3 = minimal_envelope(c, g)
    return ScatterReport(c_trunc=c, abs_g=g, c2=c2, c3=c3, dropped=dropped, flagged=flagged)


@dataclass(frozen=True)
class DecompositionReport:
    k: int
    delta: float
    lo_cap: int
    hi_cap: int
    n: int
    min_g1: float
    g1_bound: float
    max_abs_g2: float
    g2_bound: float
    harmonic_bound: float
    g3_fraction: float
    g3_reference: float
    max_identity_error: float
    n_rejected: int

    @property
    def g1_ok(self):
        return self.min_g1 >= self.g1_bound

    @property
    def g2_ok(self):
        return self.max_abs_g2 <= self.g2_bound


def _harmonic_slice(lo, hi):
    l = np.arange(lo + 1, hi + 1, dtype=np.float64)
    return float(np.sum(1.0 / l)) if l.size else 0.0


def decomposition_bounds(k, delta, n_samples, seed, cfg, strata=STRATA, pmap=map):
    """
    Sampled bounds for g = g1 + g2 + g3 split at l0^(1-2 delta) and l0^(1+2 delta), l0 = e^(2k).

    Args:
        k: 1, 2 or 3
        delta: in [0.02, 0.1]
        n_samples: samples in I(k) = [0, e^-2k] and, separately, in [0, 1] for the g2 maximum

    Returns:
        DecompositionReport: min g1 over I(k) against (1 - 8 delta) 2k, max |g2| over [0, 1] against 16 delta k and
        the harmonic slice sum_{lo < l <= hi} 1/l, and the fraction of I(k) with |g3| > delta k against
        e^(-2k(1 + delta)) / |I|
    """
    k = require_int('k', k, minimum=DECOMPOSITION_K[0], maximum=DECOMPOSITION_K[-1])
    delta = require_real('delta', delta, lo=DECOMPOSITION_DELTA[0], hi=DECOMPOSITION_DELTA[1])
    lo_cap, hi_cap = decomposition_caps(k, delta)
    width = math.exp(-2 * k)
    in_seed, unit_seed = (int(s.generate_state(1)[0]) for s in spawn_seeds(seed, 2))

    gs = sample_g(n_samples, in_seed, cfg, strata=strata, interval=(0.0, width), pmap=pmap)
    g1 = direct_range(gs.alpha, 1, lo_cap)
    g2_in = direct_range(gs.alpha, lo_cap + 1, hi_cap)
    g3 = gs.value - g1 - g2_in
    identity_error = float(np.max(np.abs(g1 + g2_in + g3 - gs.value)))

    unit = np.random.default_rng(unit_seed).random(gs.n)
    g2 = direct_range(unit, lo_cap + 1, hi_cap)

    report = DecompositionReport(k=k, delta=delta, lo_cap=lo_cap, hi_cap=hi_cap, n=gs.n,
                                 min_g1=float(np.min(g1)), g1_bound=(1 - 8 * delta) * 2 * k,
                                 max_abs_g2=float(max(np.max(np.abs(g2)), np.max(np.abs(g2_in)))),
                                 g2_bound=16 * delta * k, harmonic_bound=_harmonic_slice(lo_cap, hi_cap),
                                 g3_fraction=float(np.mean(np.abs(g3) > delta * k)),
                                 g3_reference=math.exp(-2 * k * (1 + delta)) / width,
                                 max_identity_error=identity_error, n_rejected=gs.n_rejected)
    if not report.g1_ok:
        logger.info(f'k={k}, delta={delta}: min g1 = {report.min_g1:.4g} below (1 - 8 delta) 2k = '
                    f'{report.g1_bound:.4g}')
    return report


def decomposition_k0_scan(delta, n_samples, seed, cfg, k_max=3, strata=STRATA, pmap=map):
    """
    Smallest k <= k_max from which the sampled g1 bound holds for every larger scanned k, with the reports.

    Returns:
        k0 (None when the bound fails at k_max), list of DecompositionReport
    """
    k_max = require_int('k_max', k_max, minimum=DECOMPOSITION_K[0], maximum=DECOMPOSITION_K[-1])
    reports = [decomposition_bounds(k, delta, n_samples, seed, cfg, strata=strata, pmap=pmap)
               for k in range(DECOMPOSITION_K[0], k_max + 1)]
    k0 = None
    for report in reversed(reports):
        if not report.g1_ok:
            break
        k0 = report.k
    return k0, reports


def z_tau_spot_check(x, theta, t, Q=None):
    """
    Z_tau(x, x; theta) against its main term x log x sin^2(pi theta_q x) / (pi q theta_q x), where a/q is the best
    approximation of theta with q <= Q (default floor(sqrt(x))) and theta_q = theta - a/q.

    Returns:
        dict with exact, main, q, theta_q and the normalized gap (exact - main) / (x log x)
    """
    x = require_int('x', x, minimum=2)
    theta = require_real('theta', theta)
    if Q is None:
        Q = max(1, math.isqrt(x))
    q, _ = best_approx(theta, Q)
    a = round(q * theta)
    theta_q = theta - a / q
    scale = x * math.log(x)
    u = math.pi * theta_q * x
    main = 0.0 if u == 0 else scale * math.sin(u) ** 2 / (math.pi * q * theta_q * x)
    exact = z_tau_exact(x, theta, t)
    return dict(x=x, theta=theta, q=q, theta_q=theta_q, exact=exact, main=main, gap=(exact - main) / scale)
