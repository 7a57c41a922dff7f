import logging
import math
import warnings

import numpy as np
from lmfit import Model, Parameters
from scipy.optimize import OptimizeWarning, curve_fit, linprog
from sklearn.metrics import mean_squared_error, r2_score

from .utils import DomainError

logger = logging.getLogger(__name__)

# Straight line in log-measure


def _log_tail(t, intercept, slope):
    '''
    Args:
        t: thresholds
        intercept: log-measure at t = 0
        slope: decay rate of the log-measure, negative for an exponential tail

    Returns:
        log_measure: fitted log-measure

        meas{|g| >= t} <= exp(-c t) reads log meas = intercept + slope * t with slope = -c; the fitted slope is the
        empirical counterpart of the decay constant.
    '''
    return intercept + slope * t


def fit_log_tail(t, log_measure):
    '''
    Fit log meas{|g| >= t} against t.

    Args:
        t: thresholds with finite log-measure
        log_measure: natural log of the measure estimates

    Returns:
        slope, intercept, slope_stderr, r2

        An initial estimate comes from curve_fit in scipy.optimize; an lmfit Model started from it refines the
        parameters and supplies the standard error of the slope (nan when there are no residual degrees of freedom).
        r2 is scored with sklearn against the refined line.
    '''
    t = np.asarray(t, dtype=np.float64)
    log_measure = np.asarray(log_measure, dtype=np.float64)
    keep = np.isfinite(t) & np.isfinite(log_measure)
    t, log_measure = t[keep], log_measure[keep]
    if t.size < 2:
        raise DomainError(f"fit_log_tail needs at least 2 finite entries, got {t.size}")

    with warnings.catch_warnings():
        # two points leave no residual to estimate a covariance from
        warnings.simplefilter('ignore', OptimizeWarning)
        curve_fit_results, _ = curve_fit(f=_log_tail, xdata=t, ydata=log_measure, p0=[0.0, -1.0], maxfev=10000)
    intercept_curve_fit, slope_curve_fit = curve_fit_results

    if t.size == 2:
        # the line through two points is exact
        slope, intercept, slope_stderr = slope_curve_fit, intercept_curve_fit, math.nan
    else:
        lmfit_model = Model(_log_tail)
        lmfit_params = Parameters()
        lmfit_params.add('intercept', value=intercept_curve_fit)
        lmfit_params.add('slope', value=slope_curve_fit)
        lmfit_fitted_model = lmfit_model.fit(data=log_measure, params=lmfit_params, t=t)

        slope = lmfit_fitted_model.params['slope'].value
        intercept = lmfit_fitted_model.params['intercept'].value
        slope_stderr = lmfit_fitted_model.params['slope'].stderr
        if slope_stderr is None:
            slope_stderr = math.nan
    r2, _ = fit_quality(log_measure, _log_tail(t, intercept, slope))
    logger.debug(f'log-tail fit over {t.size} thresholds: slope={slope}, intercept={intercept}')
    return float(slope), float(intercept), float(slope_stderr), r2


def minimal_envelope(x, y):
    """
    Smallest line c2*x + c3 lying on or above every point, c2, c3 >= 0.

    Minimises sum_i (c2 x_i + c3 - y_i) with scipy linprog; c3 is then lifted by any residual violation left by the
    solver, so every point is covered.

    Returns:
        c2, c3
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or x.size != y.size:
        raise DomainError(f"minimal_envelope needs matching nonempty x and y, got {x.size} and {y.size}")
    result = linprog(c=[x.sum(), float(x.size)],
                     A_ub=np.column_stack([-x, -np.ones_like(x)]),
                     b_ub=-y,
                     bounds=[(0, None), (0, None)],
                     method='highs')
    if not result.success:
        raise DomainError(f"minimal_envelope: linear program failed ({result.message})")
    c2, c3 = (float(v) for v in result.x)
    gap = float(np.max(y - (c2 * x + c3)))
    if gap > 0:
        c3 += gap + 4 * np.finfo(np.float64).eps * (1.0 + abs(c3) + float(np.max(np.abs(c2 * x))))
    return c2, c3


def fit_quality(observed, fitted):
    """r2 and root mean squared error of a fit."""
    observed = np.asarray(observed, dtype=np.float64)
    fitted = np.asarray(fitted, dtype=np.float64)
    r2 = r2_score(observed, fitted) if observed.size > 1 else math.nan
    rmse = math.sqrt(mean_squared_error(observed, fitted))
    return float(r2), rmse
