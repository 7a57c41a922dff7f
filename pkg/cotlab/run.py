import logging
import math
from fractions import Fraction

import mpmath
import pandas as pd

from .lab import LabConfig
from .utils import (DomainError, PrecisionError, EmpiricalCDF, MomentEstimate, abs_moment_from_samples,
                    c_alpha_infinity, c_alpha_r, cached_g_samples, cf_expand, convert_normalization, create_df,
                    decomposition_bounds, default_cells, equidist_experiment, growth_fit, hk_from_cotangent,
                    hk_from_samples, measure_E_infinity_mc, measure_E_mc, radius_diagnostics, require_int,
                    tail_measure, window_c0)
from .utils.contfrac import GUARD_BITS
from .utils.moments import K_MAX

logger = logging.getLogger(__name__)

C0_COLUMNS = ['b', 'r', 'c0', 'c0_over_b']
G_COLUMNS = ['alpha', 'value', 'spread', 'method', 'N', 'M', 'seed', 'stratum']
MOMENT_COLUMNS = ['k', 'method', 'normalization', 'value', 'stderr', 'n', 'seed']
RADIUS_COLUMNS = ['k', 'Hk', 'rho_k', 'c_fit', 'normalization', 'method']
EQUIDIST_COLUMNS = ['b', 'a0', 'a1', 'alpha', 'beta', 'count', 'phi_b', 'lhs', 'rhs', 'abs_err', 'max_abs_err',
                    'ks_distance']
TAIL_COLUMNS = ['t', 'measure', 'stderr', 'log_measure']
EMEASURE_COLUMNS = ['z', 'r', 'estimate', 'stderr', 'bound', 'n_samples', 'seed', 'w_r']
MIN_MOMENT_SAMPLES = 10 ** 4


def _samples(cfg, pmap):
    return cached_g_samples(cfg.samples, cfg.seed, cfg.evaluator(), strata=cfg.strata, cache_dir=cfg.cache_dir,
                            pmap=pmap)


def run_c0(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with b, a0, a1

    Returns:
        df: one row per r coprime to b in the window: b, r, c0 and c0/b
    '''
    w = cfg.window()
    rs, values = window_c0(w, pmap=pmap)
    records = [(w.b, int(r), float(v), float(v) / w.b) for r, v in zip(rs, values)]
    return create_df(records, C0_COLUMNS)


def run_g(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with samples, seed and the g settings

    Returns:
        df: stratified g samples: alpha, value, spread, the evaluator settings, seed and stratum
    '''
    gs = _samples(cfg, pmap)
    return pd.DataFrame({'alpha': gs.alpha, 'value': gs.value, 'spread': gs.spread, 'method': cfg.method,
                         'N': cfg.n_terms, 'M': cfg.m_terms, 'seed': cfg.seed, 'stratum': gs.stratum},
                        columns=G_COLUMNS)


def parse_real(text, precision=256):
    """
    Read a real to expand: 'p/q' is exact, 'golden' is (sqrt(5) - 1)/2, anything else is a decimal read as an mpf
    at `precision` bits.
    """
    if text is None:
        raise DomainError("this experiment needs x")
    text = text.strip()
    if '/' in text:
        try:
            num, den = text.split('/', 1)
            return Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"cannot read {text!r} as p/q") from None
    with mpmath.workprec(precision):
        if text == 'golden':
            return (mpmath.sqrt(5) - 1) / 2
        try:
            return mpmath.mpf(text)
        except ValueError:
            raise DomainError(f"cannot read {text!r} as a real number") from None


def run_cf(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with x, precision and cf_depth

    Returns:
        df: r, a_r, p_r, q_r and c(alpha, r) wherever the expansion reaches r + 1
    '''
    x = parse_real(cfg.x, cfg.precision)
    q_bound = None
    if isinstance(x, mpmath.mpf):
        # a decimal stops at the largest q its precision certifies
        bits = (cfg.precision - GUARD_BITS) // 2
        if bits < 1:
            raise PrecisionError(f"{cfg.precision}-bit precision certifies no partial quotient; use at least "
                                 f"{GUARD_BITS + 2} bits")
        q_bound = 2 ** bits
    with mpmath.workprec(cfg.precision):
        cf = cf_expand(x, max_depth=cfg.cf_depth, q_bound=q_bound)
    records = []
    for r in range(cf.depth + 1):
        a_r = 0 if r == 0 else cf.a[r - 1]
        c = c_alpha_r(cf, r) if r + 1 <= cf.depth else math.nan
        records.append((r, a_r, cf.p_at(r), cf.q_at(r), c))
    if cf.depth >= 2:
        logger.info(f'growth base min q_r^(1/r) = {growth_fit(cf):.6g}')
    try:
        value, R = c_alpha_infinity(cf)
        logger.info(f'c(alpha, inf) ~ {value:.12g} (truncated at R={R})')
    except (DomainError, PrecisionError) as exc:
        logger.info(f'c(alpha, inf) not certified: {exc}')
    return create_df(records, ['r', 'a', 'p', 'q', 'c_alpha_r'])


def moments_frame(estimates):
    records = [(m.k, m.method, m.normalization, m.value, m.stderr, m.n, m.seed) for m in estimates]
    return create_df(records, MOMENT_COLUMNS)


def run_moments(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig; k is the largest H_k, L the largest absolute moment (0 for none), b (optional) adds the
            cotangent-window estimates over (a0, a1)

    Returns:
        df: MomentEstimate rows k, method, normalization, value, stderr, n, seed. Every H_k row, quadrature or
            cotangent, is in cfg.normalization; absolute rows are 'raw'. All quadrature rows share one sample
            set, so rows of a fixed seed differ across normalizations by exactly 4^k.
    '''
    require_int('samples', cfg.samples, minimum=MIN_MOMENT_SAMPLES)
    require_int('k', cfg.k, maximum=K_MAX)
    gs = _samples(cfg, pmap)
    if gs.n_rejected:
        logger.info(f'{gs.n_rejected} g evaluations redrawn')
    estimates = [hk_from_samples(gs, k, cfg.normalization) for k in range(cfg.k + 1)]
    estimates += [abs_moment_from_samples(gs, L) for L in range(1, cfg.L + 1)]
    if cfg.b is not None:
        w = cfg.window()
        # cotangent averages come out in the pi normalization; H_k rows of one frame share cfg.normalization
        estimates += [convert_normalization(hk_from_cotangent(cfg.b, k, w, pmap=pmap), cfg.normalization)
                      for k in range(cfg.k + 1)]
    return moments_frame(estimates)


def read_moments(path):
    """MomentEstimate rows back from a moments CSV."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DomainError(f"cannot read moments file {path}: {exc}") from exc
    missing = [c for c in MOMENT_COLUMNS if c not in df.columns]
    if missing:
        raise DomainError(f"moments file {path} lacks columns {missing}")
    out = []
    for row in df.itertuples(index=False):
        seed = None if pd.isna(row.seed) else int(row.seed)
        out.append(MomentEstimate(k=int(row.k), value=float(row.value), stderr=float(row.stderr),
                                  method=str(row.method), normalization=str(row.normalization), n=int(row.n),
                                  seed=seed))
    return out


def _radius_rows(moments, abs_moments):
    diag = radius_diagnostics(moments, abs_moments=abs_moments or None)
    logger.info(f'{diag.normalization}: max rho_k = {diag.max_rho:.6g} (limsup bound {diag.limsup_threshold:.6g}, '
                f'consistent={diag.limsup_consistent}); envelope C = {diag.envelope_c:.6g}, '
                f'below envelope={diag.below_envelope}; radius in [{diag.radius_lower:.6g}, {diag.radius_upper:.6g}]')
    method = moments[0].method
    return [(k, hk, rho, c_fit, diag.normalization, method) for k, hk, rho, c_fit in diag.rows]


def run_radius(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig; with input the estimates of a moments CSV are used, otherwise H_1..H_k are estimated from
            one sample set in both normalizations

    Returns:
        df: k, Hk, rho_k, c_fit, normalization, one row per k >= 1 and normalization
    '''
    if cfg.input:
        estimates = read_moments(cfg.input)
    else:
        require_int('samples', cfg.samples, minimum=MIN_MOMENT_SAMPLES)
        require_int('k', cfg.k, minimum=1, maximum=K_MAX)
        gs = _samples(cfg, pmap)
        estimates = [hk_from_samples(gs, k, norm) for norm in ('two-pi', 'pi') for k in range(1, cfg.k + 1)]
        estimates += [abs_moment_from_samples(gs, L) for L in range(1, cfg.L + 1)]
    abs_moments = [m for m in estimates if m.method == 'absolute']
    records = []
    groups = sorted({(m.method, m.normalization) for m in estimates if m.method != 'absolute'}, reverse=True)
    for method, norm in groups:
        group = [m for m in estimates if m.method == method and m.normalization == norm and m.k >= 1]
        if group:
            records += _radius_rows(group, abs_moments)
    if not records:
        raise DomainError("no H_k estimates with k >= 1 to diagnose")
    return create_df(records, RADIUS_COLUMNS)


def run_tail(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with samples, seed and thresholds

    Returns:
        df: t, measure, stderr, log_measure
    '''
    cdf = EmpiricalCDF.from_samples(_samples(cfg, pmap))
    fit = tail_measure(cfg.threshold_grid, cdf)
    if fit.fitted:
        logger.info(f'log-measure slope {fit.slope:.6g} +- {fit.slope_stderr:.3g} (r2={fit.r2:.4f})')
    records = list(zip(fit.thresholds, fit.measure, fit.stderr, fit.log_measure))
    return create_df(records, TAIL_COLUMNS)


def run_equidist(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with b, a0, a1, cells and the g-sample settings

    Returns:
        df: one row per cell of the quantile partition: b, a0, a1, alpha, beta, count, phi_b, lhs, rhs, abs_err and
            the report-wide max_abs_err and ks_distance
    '''
    w = cfg.window()
    cdf = EmpiricalCDF.from_samples(_samples(cfg, pmap))
    cells = default_cells(cdf, n_cells=cfg.cells, scale=math.pi)
    report = equidist_experiment(cfg.b, w, cells, cdf, law_scale=math.pi, pmap=pmap)
    records = [(report.b, report.a0, report.a1, lo, hi, count, report.phi_b, lhs, rhs, err, report.max_abs_err,
                report.ks_distance)
               for (lo, hi), count, lhs, rhs, err in zip(report.cells, report.counts, report.lhs, report.rhs,
                                                         report.abs_err)]
    return create_df(records, EQUIDIST_COLUMNS)


def run_decompose(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with k, delta, samples and the g settings

    Returns:
        df: a single row with the sampled g1, g2 and g3 statistics and their reference bounds
    '''
    report = decomposition_bounds(cfg.k, cfg.delta, cfg.samples, cfg.seed, cfg.evaluator(), strata=cfg.strata,
                                  pmap=pmap)
    record = dict(k=report.k, delta=report.delta, lo_cap=report.lo_cap, hi_cap=report.hi_cap, n=report.n,
                  min_g1=report.min_g1, g1_bound=report.g1_bound, g1_ok=report.g1_ok,
                  max_abs_g2=report.max_abs_g2, g2_bound=report.g2_bound, harmonic_bound=report.harmonic_bound,
                  g2_ok=report.g2_ok, g3_fraction=report.g3_fraction, g3_reference=report.g3_reference,
                  max_identity_error=report.max_identity_error, n_rejected=report.n_rejected)
    return create_df([record], list(record))


def run_emeasure(cfg, pmap=map):
    '''
    Args:
        cfg: LabConfig with z, r_max, samples and seed

    Returns:
        df: z, r, estimate, stderr, bound, n_samples, seed, w_r for r = 0..r_max, then r = inf for E(z, +inf)
    '''
    ws = cfg.w_sequence()
    records = []
    for r in range(cfg.r_max + 1):
        estimate, stderr = measure_E_mc(cfg.z, r, cfg.samples, cfg.seed, ws, pmap=pmap)
        w_r = 0.5 if r == 0 else ws.w(r)
        records.append((cfg.z, r, estimate, stderr, ws.measure_bound(cfg.z, r), cfg.samples, cfg.seed, w_r))
    estimate, stderr = measure_E_infinity_mc(cfg.z, cfg.samples, cfg.seed, ws, pmap=pmap)
    records.append((cfg.z, 'inf', estimate, stderr, math.nan, cfg.samples, cfg.seed, ws.limit))
    return create_df(records, EMEASURE_COLUMNS)


COMMANDS = {
    'c0': run_c0,
    'g': run_g,
    'cf': run_cf,
    'moments': run_moments,
    'radius': run_radius,
    'tail': run_tail,
    'equidist': run_equidist,
    'decompose': run_decompose,
    'emeasure': run_emeasure,
}


def run(command, cfg=None, **settings):
    '''
    Run one experiment in process.

    Args:
        command: one of COMMANDS
        cfg: LabConfig; built from settings when omitted

    Returns:
        df: the experiment's result frame
    '''
    if command not in COMMANDS:
        raise DomainError(f"Unknown command: {command}")
    cfg = cfg if cfg is not None else LabConfig(**settings)
    with cfg.pool() as pool:
        return COMMANDS[command](cfg, pmap=pool)
