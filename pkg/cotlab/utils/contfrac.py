"""
Continued fractions: expansions and convergents, the Gauss map and its invariant measure, the Brjuno-type sums
c(alpha, r), the exceptional sets E(z, r) and best rational approximations.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import mpmath
import numpy as np

from .utils import DomainError, PrecisionError, require_int, require_real, spawn_seeds, chunked

logger = logging.getLogger(__name__)

# guard bits on top of 2*log2(qBound)
GUARD_BITS = 64
# bits of the exact dyadic rationals drawn as uniform samples
SAMPLE_BITS = 128
# q bound that SAMPLE_BITS supports under the precision rule
SAMPLE_Q_BOUND = 2 ** ((SAMPLE_BITS - GUARD_BITS) // 2)
MC_CHUNK = 4096
# largest Q for which best_approx confirms the convergent by direct search
BRUTE_FORCE_LIMIT = 10 ** 6
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class CFExpansion:
    """
    alpha = [0; a_1, a_2, ...]. p and q are stored from index -1: p[0] = p_{-1} = 1, p[1] = p_0 = 0, and in
    general p_r = p[r + 1]; likewise q.
    """
    alpha: object
    a: tuple
    p: tuple = field(repr=False)
    q: tuple = field(repr=False)
    terminated: bool = False

    @property
    def depth(self):
        return len(self.a)

    def p_at(self, r):
        return self.p[r + 1]

    def q_at(self, r):
        if r > self.depth:
            raise DomainError(f"expansion holds q_0..q_{self.depth}, q_{r} requested")
        return self.q[r + 1]

    def convergent(self, r):
        return Fraction(self.p_at(r), self.q_at(r))


def _convergents(a):
    p = [1, 0]
    q = [0, 1]
    for ai in a:
        p.append(ai * p[-1] + p[-2])
        q.append(ai * q[-1] + q[-2])
    return tuple(p), tuple(q)


def _as_exact(x):
    if isinstance(x, tuple):
        return Fraction(int(x[0]), int(x[1]))
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        # a double is an exact dyadic rational
        return Fraction(float(x))
    return None


def cf_expand(x, max_depth=64, q_bound=None):
    """
    Partial quotients and convergents of x in (0, 1).

    Args:
        x: Fraction, (p, q) pair, int, float (read as its exact dyadic value) or mpmath.mpf
        max_depth: largest number of partial quotients
        q_bound: stop once q_r exceeds this bound

    Returns:
        CFExpansion

    Rationals follow the Euclidean algorithm exactly. An mpf is iterated through the Gauss map at the current
    mpmath precision, which must be at least 2*log2(q_bound) + 64 bits; without a q_bound the expansion stops with
    PrecisionError as soon as q_r outgrows what the precision certifies.
    """
    max_depth = require_int('max_depth', max_depth, minimum=0)
    exact = _as_exact(x)
    if exact is not None:
        if not 0 < exact < 1:
            raise DomainError(f"cf_expand needs x in (0, 1), got {exact}")
        return _expand_exact(exact, max_depth, q_bound)
    if not isinstance(x, mpmath.mpf):
        raise DomainError(f"cf_expand cannot expand {type(x).__name__}")
    if not 0 < x < 1:
        raise DomainError(f"cf_expand needs x in (0, 1), got {x}")
    return _expand_real(x, max_depth, q_bound)


def _expand_exact(x, max_depth, q_bound):
    a = []
    num, den = x.numerator, x.denominator
    q_prev, q = 0, 1
    terminated = False
    while len(a) < max_depth:
        if num == 0:
            terminated = True
            break
        ai, rem = divmod(den, num)
        a.append(ai)
        num, den = rem, num
        q_prev, q = q, ai * q + q_prev
        if q_bound is not None and q > q_bound:
            break
    if num == 0:
        terminated = True
    p, qs = _convergents(a)
    return CFExpansion(alpha=x, a=tuple(a), p=p, q=qs, terminated=terminated)


def _expand_real(x, max_depth, q_bound):
    prec = mpmath.mp.prec
    if q_bound is not None:
        needed = 2 * math.log2(q_bound) + GUARD_BITS
        if prec < needed:
            raise PrecisionError(f"q_bound={q_bound} needs {math.ceil(needed)} bits, working precision is {prec}")
    certified_bits = (prec - GUARD_BITS) // 2
    a = []
    q_prev, q = 0, 1
    y = x
    terminated = False
    while len(a) < max_depth:
        if y == 0:
            terminated = True
            break
        inv = 1 / y
        ai = int(mpmath.floor(inv))
        y = inv - ai
        q_prev, q = q, ai * q + q_prev
        if q_bound is not None and q > q_bound:
            a.append(ai)
            break
        if q_bound is None and q.bit_length() > certified_bits:
            raise PrecisionError(f"q_{len(a) + 1} has {q.bit_length()} bits, {prec}-bit precision certifies "
                                 f"{certified_bits}; raise the precision or set q_bound")
        a.append(ai)
    p, qs = _convergents(a)
    return CFExpansion(alpha=x, a=tuple(a), p=p, q=qs, terminated=terminated)


def gauss_map(x):
    """T(x) = 1/x - floor(1/x); exact for rationals, vectorised for float arrays."""
    if isinstance(x, np.ndarray):
        if np.any(x == 0):
            raise DomainError("gauss_map is undefined at 0")
        inv = 1.0 / x
        return inv - np.floor(inv)
    if x == 0:
        raise DomainError("gauss_map is undefined at 0")
    if isinstance(x, (Fraction, int)):
        inv = 1 / Fraction(x)
        return inv - math.floor(inv)
    if isinstance(x, mpmath.mpf):
        inv = 1 / x
        return inv - mpmath.floor(inv)
    inv = 1.0 / float(x)
    return inv - math.floor(inv)


def gauss_measure(lo, hi):
    """Gauss measure (1/log 2) int_lo^hi dx/(1+x) of an interval in [0, 1]."""
    lo = require_real('lo', lo, lo=0.0, hi=1.0)
    hi = require_real('hi', hi, lo=0.0, hi=1.0)
    if lo > hi:
        raise DomainError(f"gauss_measure needs lo <= hi, got lo={lo}, hi={hi}")
    return (math.log1p(hi) - math.log1p(lo)) / LOG2


def gauss_preimage_mc(t, n_samples, seed):
    """
    Monte Carlo estimate of omega(T^-1 (0, t)): x is drawn from the Gauss measure by inversion (x = 2^u - 1) and
    counted when T(x) < t.

    Returns:
        estimate, stderr
    """
    t = require_real('t', t, lo=0.0, hi=1.0)
    n_samples = require_int('n_samples', n_samples, minimum=1)
    rng = np.random.default_rng(spawn_seeds(seed, 1)[0])
    x = np.exp2(rng.random(n_samples)) - 1.0
    x = x[x > 0]
    hits = np.count_nonzero(gauss_map(x) < t)
    p = hits / x.size
    return p, math.sqrt(max(p * (1 - p), 1.0 / x.size) / x.size)


def shift_check(x, r, depth):
    """True when the first `depth` partial quotients of T^r(x) equal a_{r+1}..a_{r+depth} of x."""
    r = require_int('r', r, minimum=0)
    depth = require_int('depth', depth, minimum=0)
    full = cf_expand(x, max_depth=r + depth)
    y = x
    if isinstance(y, tuple):
        y = Fraction(int(y[0]), int(y[1]))
    elif isinstance(y, (float, np.floating)):
        y = Fraction(float(y))
    for _ in range(r):
        if y == 0:
            return full.depth <= r
        y = gauss_map(y)
    if y == 0:
        return full.depth <= r
    shifted = cf_expand(y, max_depth=depth)
    return tuple(full.a[r:r + depth]) == tuple(shifted.a)


def c_alpha_r(cf, r):
    """c(alpha, r) = sum_{j=0}^{r} log(q_{j+1}) / q_j, natural log."""
    r = require_int('r', r, minimum=0)
    if cf.depth < r + 1:
        raise DomainError(f"c(alpha, {r}) needs depth {r + 1}, expansion has depth {cf.depth}")
    return math.fsum(math.log(cf.q_at(j + 1)) / cf.q_at(j) for j in range(r + 1))


def c_prefix(cf):
    """c(alpha, r) for every r the expansion supports."""
    out = []
    total = []
    for j in range(cf.depth):
        total.append(math.log(cf.q_at(j + 1)) / cf.q_at(j))
        out.append(math.fsum(total))
    return out


def tail_majorant(q_r, growth):
    """
    Heuristic majorant of sum_{j > R} log(q_{j+1}) / q_j given q_R.

    It is a bound only while log q_{j+1} <= 2 log q_j and q_{j+1} >= A q_j for every j > R, with q_R >= e. Neither
    assumption holds for every alpha: one partial quotient a_{j+1} > q_j breaks the first. A tail past R that is
    dominated by such a quotient is underestimated, so c_alpha_infinity is a working truncation rather than a
    certified one.
    """
    A = growth
    return (2.0 / q_r) * (math.log(q_r) / (A - 1.0) + math.log(A) * A / (A - 1.0) ** 2)


def c_alpha_infinity(cf, eps=1e-6, growth=math.sqrt(2.0)):
    """
    c(alpha, +inf) approximated by c(alpha, R) with R the first index whose heuristic tail majorant is <= eps.

    Returns:
        value, R
    """
    prefix = c_prefix(cf)
    for R, value in enumerate(prefix):
        q_r = cf.q_at(R)
        if q_r > 1 and tail_majorant(q_r, growth) <= eps:
            return value, R
    if cf.terminated and prefix:
        return prefix[-1], len(prefix) - 1
    raise PrecisionError(f"expansion of depth {cf.depth} ends before the tail majorant drops below {eps}")


class WSequence:
    """
    Threshold ladder w^(r) = 1/2 + c_0 sum_{j<=r} A^(-j/2) with c_0 sum_{j>=0} A^(-j/2) = 1/4, so w^(r) increases
    to 3/4.
    """

    def __init__(self, growth_base: float = math.sqrt(2.0)) -> None:
        self.growth_base = require_real('growth_base', growth_base, lo=1.0, lo_open=True)
        self.c_small = (1.0 - self.growth_base ** -0.5) / 4.0

    def w(self, r):
        r = require_int('r', r, minimum=0)
        ratio = self.growth_base ** -0.5
        return 0.5 + self.c_small * (1.0 - ratio ** (r + 1)) / (1.0 - ratio)

    @property
    def limit(self):
        return 0.75

    def measure_bound(self, z, r):
        """exp(-(1/2) c_0 A^(r/2) z)."""
        return math.exp(-0.5 * self.c_small * self.growth_base ** (r / 2.0) * z)


def in_E(cf, z, r, ws):
    """Membership of alpha in E(z, r); E(z, 0) uses the threshold z/2."""
    z = require_real('z', z, lo=0.0, lo_open=True)
    r = require_int('r', r, minimum=0)
    if r == 0:
        return c_alpha_r(cf, 1) >= 0.5 * z
    return c_alpha_r(cf, r - 1) < ws.w(r - 1) * z and c_alpha_r(cf, r) >= ws.w(r) * z


def classify_E(cf, z, ws, max_r):
    """Smallest r <= max_r with alpha in E(z, r), or None."""
    max_r = require_int('max_r', max_r, minimum=0)
    need = max(max_r, 1) + 1
    if cf.depth < need:
        raise DomainError(f"classify_E up to r={max_r} needs depth {need}, expansion has depth {cf.depth}")
    for r in range(max_r + 1):
        if in_E(cf, z, r, ws):
            return r
    return None


def random_rationals(n, seed, bits=SAMPLE_BITS):
    """n uniform samples k / 2^bits in (0, 1) as exact Fractions."""
    n = require_int('n', n, minimum=0)
    rng = np.random.default_rng(spawn_seeds(seed, 1)[0])
    words = -(-bits // 63)
    raw = rng.integers(0, 2 ** 63, size=(n, words), dtype=np.int64, endpoint=False)
    out = []
    for row in raw:
        k = 0
        for w in row:
            k = (k << 63) | int(w)
        k >>= max(0, 63 * words - bits)
        out.append(Fraction(max(k, 1), 2 ** bits))
    return out


def _e_chunk(z, r, ws, args):
    seed_seq, n = args
    rng_seed = int(seed_seq.generate_state(1)[0])
    hits = 0
    for x in random_rationals(n, rng_seed):
        cf = cf_expand(x, max_depth=max(r, 1) + 1)
        if cf.depth >= max(r, 1) + 1 and in_E(cf, z, r, ws):
            hits += 1
    return hits


def measure_E_mc(z, r, n_samples, seed, ws, pmap=map):
    """
    Monte Carlo estimate of meas(E(z, r)) over exact 128-bit uniform samples.

    Returns:
        estimate, stderr (binomial, floored at 1/n when no sample hits)
    """
    n_samples = require_int('n_samples', n_samples, minimum=10 ** 3)
    sizes = [len(c) for c in chunked(range(n_samples), MC_CHUNK)]
    seeds = spawn_seeds(seed, len(sizes))
    hits = sum(pmap(partial(_e_chunk, z, r, ws), list(zip(seeds, sizes))))
    p = hits / n_samples
    return p, math.sqrt(max(p * (1 - p), 1.0 / n_samples) / n_samples)


def _e_inf_chunk(z, eps, growth, args):
    seed_seq, n = args
    rng_seed = int(seed_seq.generate_state(1)[0])
    hits = 0
    for x in random_rationals(n, rng_seed):
        cf = cf_expand(x, max_depth=256, q_bound=SAMPLE_Q_BOUND)
        try:
            value, _ = c_alpha_infinity(cf, eps=eps, growth=growth)
        except PrecisionError:
            value = c_prefix(cf)[-1]
        # one-sided: the truncated sum plus the slack decides membership
        if value + eps >= z:
            hits += 1
    return hits


def measure_E_infinity_mc(z, n_samples, seed, ws, eps=1e-6, pmap=map):
    """Monte Carlo estimate of meas(E(z, +inf)) from the truncated c(alpha, R)."""
    n_samples = require_int('n_samples', n_samples, minimum=10 ** 3)
    sizes = [len(c) for c in chunked(range(n_samples), MC_CHUNK)]
    seeds = spawn_seeds(seed, len(sizes))
    hits = sum(pmap(partial(_e_inf_chunk, z, eps, ws.growth_base), list(zip(seeds, sizes))))
    p = hits / n_samples
    return p, math.sqrt(max(p * (1 - p), 1.0 / n_samples) / n_samples)


def union_bound_check(z, r_max, n_samples, seed, ws, pmap=map):
    """
    sum_{r <= r_max} meas E(z, r) against meas E(z, +inf), both estimated on the same samples.

    Returns:
        dict with the per-r estimates, their sum, the E(z, +inf) estimate and whether the sum covers it within
        two standard errors
    """
    estimates = [measure_E_mc(z, r, n_samples, seed, ws, pmap=pmap) for r in range(r_max + 1)]
    total = sum(e for e, _ in estimates)
    total_err = math.sqrt(sum(s * s for _, s in estimates))
    inf_est, inf_err = measure_E_infinity_mc(z, n_samples, seed, ws, pmap=pmap)
    holds = total + 2 * math.hypot(total_err, inf_err) >= inf_est
    return dict(estimates=estimates, total=total, infinity=inf_est, infinity_stderr=inf_err, holds=holds)


def _distance_to_integer(x):
    return abs(x - round(x))


def best_approx(theta, Q):
    """
    mu(theta; Q) = min_{1 <= m <= Q} ||m theta|| and q(theta; Q), its least minimiser.

    The candidate is the largest convergent denominator q_r <= Q (best approximations of the second kind are the
    convergents); for Q up to BRUTE_FORCE_LIMIT it is confirmed against the definition.
    """
    Q = require_int('Q', Q, minimum=1)
    exact = _as_exact(theta)
    if exact is None:
        exact = Fraction(mpmath.mpf(theta).man) * Fraction(2) ** int(mpmath.mpf(theta).exp)
    frac = exact - math.floor(exact)
    best_q = 1
    if frac != 0:
        cf = cf_expand(frac, max_depth=10 ** 6, q_bound=Q)
        for r in range(cf.depth + 1):
            if cf.q_at(r) <= Q:
                best_q = cf.q_at(r)
    best_mu = _distance_to_integer(best_q * exact)
    if Q <= BRUTE_FORCE_LIMIT:
        m = np.arange(1, Q + 1, dtype=np.float64)
        approx = np.abs(m * float(exact) - np.round(m * float(exact)))
        # float screening, then exact comparison of the near-minimal candidates
        floor = approx.min()
        for cand in (np.nonzero(approx <= floor + 1e-9)[0] + 1):
            mu = _distance_to_integer(int(cand) * exact)
            if mu < best_mu or (mu == best_mu and cand < best_q):
                logger.debug(f'convergent candidate {best_q} replaced by {cand} for theta={theta}, Q={Q}')
                best_q, best_mu = int(cand), mu
    return best_q, float(best_mu)


def growth_fit(cf):
    """min_{2 <= r <= R} q_r^(1/r), the empirical exponential growth base of the denominators."""
    if cf.depth < 2:
        raise DomainError(f"growth_fit needs depth >= 2, expansion has depth {cf.depth}")
    return min(math.exp(math.log(cf.q_at(r)) / r) for r in range(2, cf.depth + 1))
