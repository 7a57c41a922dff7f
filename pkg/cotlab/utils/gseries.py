"""
The function g(alpha) = sum_{l>=1} B(l alpha)/l, B(u) = 1 - 2{u}, evaluated two ways: by its defining series and
by the divisor-function Fourier series g(alpha) = sum_m (2 tau(m) / (pi m)) sin(2 pi m alpha).
"""
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from .constants import SPREAD_TOLERANCE
from .utils import BLOCK, Accumulator, DomainError, compensated_sum, require_int, require_real

logger = logging.getLogger(__name__)

# rows per vectorised slab in batch evaluations
A_CHUNK = 256
# largest direct-series cap accepted by g_decompose
DIRECT_FEASIBLE = 10 ** 8
METHODS = ('direct', 'fourier', 'cross-checked')


class DivisorTable:
    """tau[m] for 1 <= m <= limit; tau[0] is unused and kept as 0."""

    def __init__(self, tau):
        tau = np.ascontiguousarray(tau, dtype=np.uint32)
        if tau.ndim != 1 or tau.size < 2 or tau[0] != 0:
            raise DomainError("divisor table must be a 1-d array with tau[0] = 0 and at least one entry")
        self.tau = tau
        self.tau.setflags(write=False)

    @property
    def limit(self):
        return self.tau.size - 1

    def __getitem__(self, m):
        return self.tau[m]

    def to_bytes(self):
        """Little-endian u32 count followed by tau[1..limit] as u32."""
        return struct.pack('<I', self.limit) + self.tau[1:].astype('<u4').tobytes()

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 4:
            raise DomainError("divisor table file is truncated")
        (count,) = struct.unpack('<I', data[:4])
        if len(data) != 4 + 4 * count:
            raise DomainError(f"divisor table header says {count} entries, file holds {(len(data) - 4) // 4}")
        tau = np.zeros(count + 1, dtype=np.uint32)
        tau[1:] = np.frombuffer(data, dtype='<u4', offset=4)
        return cls(tau)


def divisor_sieve(M):
    """
    Number of divisors of every m <= M by marking multiples.
    Args:
        M: table limit, M >= 1

    Returns:
        DivisorTable
    """
    M = require_int('M', M)
    if M < 1:
        raise DomainError(f"divisor_sieve needs M >= 1, got {M}")
    tau = np.zeros(M + 1, dtype=np.uint32)
    for d in range(1, M + 1):
        tau[d::d] += 1
    return DivisorTable(tau)


def sawtooth(u):
    """B(u) = 1 - 2{u}, in (-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    out = 1.0 - 2.0 * (u - np.floor(u))
    return float(out) if out.ndim == 0 else out


def _frac(x):
    return x - np.floor(x)


def _direct_block(alpha, l):
    return ((1.0 - 2.0 * _frac(alpha[:, None] * l[None, :])) / l).sum(axis=1)


def _fourier_block(alpha, m, coeff):
    return (coeff * np.sin(2.0 * np.pi * _frac(alpha[:, None] * m[None, :]))).sum(axis=1)


def _partial_sums(alpha, start, caps, block_fn):
    """
    Compensated partial sums of a series over indices start..cap for every cap.

    Block boundaries depend only on start and the caps, so each row's result is the same however rows are batched.
    """
    acc = Accumulator(alpha.shape)
    out = []
    lo = start
    for cap in caps:
        while lo <= cap:
            hi = min(lo + BLOCK - 1, cap)
            acc.add(block_fn(alpha, np.arange(lo, hi + 1, dtype=np.int64)))
            lo = hi + 1
        out.append(acc.value.copy())
    return out


def _rows(alpha):
    a = np.asarray(alpha, dtype=np.float64)
    return a.ndim == 0, np.atleast_1d(a)


def _by_chunks(alpha, fn):
    # fn maps a 1-d slab to a list of arrays; slabs keep memory bounded
    pieces = [fn(alpha[i:i + A_CHUNK]) for i in range(0, alpha.size, A_CHUNK)]
    if not pieces:
        return []
    return [np.concatenate([p[j] for p in pieces]) for j in range(len(pieces[0]))]


def direct_range(alpha, lo, hi):
    """sum_{lo <= l <= hi} B(l alpha)/l, vectorised over alpha; empty ranges give 0."""
    scalar, a = _rows(alpha)
    lo, hi = int(lo), int(hi)
    if hi < lo:
        out = np.zeros(a.shape)
    else:
        (out,) = _by_chunks(a, lambda s: _partial_sums(s, lo, [hi], _direct_block))
    return float(out[0]) if scalar else out


def g_direct(alpha, N):
    """
    Partial sum of the defining series, sum_{l <= N} B(l alpha)/l, with compensated summation.
    N = 0 gives the empty sum.
    """
    N = require_int('N', N, minimum=0)
    return direct_range(alpha, 1, N)


def fourier_coefficients(M, t):
    """2 tau(m) / (pi m) for m = 1..M."""
    M = require_int('M', M, minimum=1)
    if M > t.limit:
        raise DomainError(f"Fourier cap M={M} exceeds divisor table limit {t.limit}")
    m = np.arange(1, M + 1, dtype=np.float64)
    return 2.0 * t.tau[1:M + 1].astype(np.float64) / (np.pi * m)


def _odd_reduce(a):
    # alpha and 1 - alpha land on the same point in [0, 1/2] with opposite signs; 1 - u is exact for u >= 1/2
    u = _frac(a)
    upper = u > 0.5
    return np.where(upper, 1.0 - u, u), np.where(upper, -1.0, 1.0)


def _fourier_sums(a, caps, t, fejer):
    a, sign = _odd_reduce(a)
    return [sign * part for part in _reduced_fourier_sums(a, caps, t, fejer)]


def _reduced_fourier_sums(a, caps, t, fejer):
    top = max(caps)
    coeff = fourier_coefficients(top, t)
    if not fejer:
        def block_fn(s, m):
            return _fourier_block(s, m, coeff[m - 1])
        return _by_chunks(a, lambda s: _partial_sums(s, 1, caps, block_fn))
    out = []
    for cap in caps:
        # triangular weights depend on the cap, so each cap is its own sum
        weights = coeff[:cap] * (1.0 - np.arange(1, cap + 1) / (cap + 1.0))

        def block_fn(s, m, weights=weights):
            return _fourier_block(s, m, weights[m - 1])
        (part,) = _by_chunks(a, lambda s: _partial_sums(s, 1, [cap], block_fn))
        out.append(part)
    return out


def g_fourier(alpha, M, t, fejer=False):
    """
    Truncated Fourier series sum_{m <= M} (2 tau(m) / (pi m)) sin(2 pi m alpha).

    Args:
        alpha: real or array of reals
        M: cap, M <= t.limit
        t: DivisorTable
        fejer: apply triangular (Fejer) damping 1 - m/(M+1)

    Returns:
        value (float or array)
    """
    M = require_int('M', M, minimum=1)
    if M > t.limit:
        raise DomainError(f"Fourier cap M={M} exceeds divisor table limit {t.limit}")
    scalar, a = _rows(alpha)
    (out,) = _fourier_sums(a, [M], t, fejer)
    return float(out[0]) if scalar else out


def fourier_energy(M, t):
    """
    Returns:
        coefficient_energy: (1/2) sum_{m <= M} (tau(m) / (pi m))^2, tends to 5 pi^2 / 144
        series_energy: truncated integral of g^2, four times the above, tends to 5 pi^2 / 36
    """
    M = require_int('M', M, minimum=1)
    if M > t.limit:
        raise DomainError(f"cap M={M} exceeds divisor table limit {t.limit}")
    m = np.arange(1, M + 1, dtype=np.float64)
    sq = (t.tau[1:M + 1].astype(np.float64) / (np.pi * m)) ** 2
    half = 0.5 * float(compensated_sum(sq[i:i + BLOCK].sum() for i in range(0, M, BLOCK)))
    return half, 4.0 * half


class GEvaluator:
    def __init__(self,
                 method: str = 'cross-checked',
                 n_terms: int = 10 ** 6,
                 m_terms: int = 10 ** 6,
                 table: DivisorTable = None,
                 tolerance: float = SPREAD_TOLERANCE,
                 fejer: bool = False
                 ) -> None:

        # initialize method
        self._initialize_method(method, fejer)
        # initialize truncation caps
        self._initialize_caps(n_terms, m_terms)
        # initialize divisor table
        self._initialize_table(table)
        self.tolerance = require_real('tolerance', tolerance, lo=0.0, allow_inf=True)

    def _initialize_method(self, method: str, fejer: bool) -> None:
        """
        :param method: 'direct', 'fourier' or 'cross-checked'.
        :param fejer: Damp the Fourier series with triangular weights.
        """
        if method not in METHODS:
            raise DomainError(f"Unknown g method: {method}")
        self.method = method
        self.fejer = bool(fejer)

    def _initialize_caps(self, n_terms: int, m_terms: int) -> None:
        """
        :param n_terms: Direct-series cap N; estimates are taken at N and 2N.
        :param m_terms: Fourier cap M; estimates are taken at M and 2M.
        """
        self.n_terms = require_int('N', n_terms, minimum=2)
        self.m_terms = require_int('M', m_terms, minimum=2)

    def _initialize_table(self, table: DivisorTable) -> None:
        """
        Fourier estimates need tau up to 2M; without a table one is sieved on demand.
        """
        if self.uses_fourier:
            if table is None:
                logger.info(f'sieving divisor table up to {2 * self.m_terms}')
                table = divisor_sieve(2 * self.m_terms)
            if 2 * self.m_terms > table.limit:
                raise DomainError(f"Fourier cap 2M={2 * self.m_terms} exceeds divisor table limit {table.limit}")
        self.table = table

    @property
    def uses_direct(self):
        return self.method in ('direct', 'cross-checked')

    @property
    def uses_fourier(self):
        return self.method in ('fourier', 'cross-checked')

    def estimates(self, alpha):
        """All method estimates at (N, 2N) and/or (M, 2M), as a list of arrays over alpha."""
        _, a = _rows(alpha)
        out = []
        if self.uses_direct:
            out += _by_chunks(a, lambda s: _partial_sums(s, 1, [self.n_terms, 2 * self.n_terms], _direct_block))
        if self.uses_fourier:
            out += _fourier_sums(a, [self.m_terms, 2 * self.m_terms], self.table, self.fejer)
        return out

    def evaluate(self, alpha):
        return g_eval(alpha, self)

    def key(self):
        return dict(method=self.method, N=self.n_terms, M=self.m_terms, tolerance=self.tolerance, fejer=self.fejer)


def g_eval(alpha, cfg):
    """
    Estimate g(alpha) by every configured method at two caps.

    Args:
        alpha: real or array of reals
        cfg: GEvaluator

    Returns:
        value: mean of the estimates
        spread: largest pairwise discrepancy between them, the empirical error gauge; values above cfg.tolerance
            are flagged by the callers, never here
    """
    scalar, a = _rows(alpha)
    stack = np.vstack(cfg.estimates(a))
    value = stack.mean(axis=0)
    spread = stack.max(axis=0) - stack.min(axis=0)
    if scalar:
        return float(value[0]), float(spread[0])
    return value, spread


@dataclass(frozen=True)
class GDecomposition:
    k: int
    delta: float
    l0: float
    g1: object
    g2: object
    g3: object
    value: object
    spread: object


def decomposition_caps(k, delta):
    """Integer caps floor(l0^(1-2 delta)) and floor(l0^(1+2 delta)) with l0 = e^(2k)."""
    k = require_int('k', k, minimum=0)
    delta = require_real('delta', delta, lo=0.0, hi=0.125, lo_open=True, hi_open=True)
    lo_cap = math.floor(math.exp(2 * k * (1 - 2 * delta)))
    hi_cap = math.floor(math.exp(2 * k * (1 + 2 * delta)))
    if hi_cap > DIRECT_FEASIBLE:
        raise DomainError(f"k={k}, delta={delta} needs a direct series up to {hi_cap} > {DIRECT_FEASIBLE}")
    return lo_cap, hi_cap


def g_decompose(alpha, k, delta, cfg):
    """
    g = g1 + g2 + g3 split at l0^(1-2 delta) and l0^(1+2 delta), l0 = e^(2k).

    g1 and g2 are exact direct sums over their index ranges; g3 is the remainder against g_eval, so the identity
    g1 + g2 + g3 = g holds by construction.
    """
    lo_cap, hi_cap = decomposition_caps(k, delta)
    g1 = direct_range(alpha, 1, lo_cap)
    g2 = direct_range(alpha, lo_cap + 1, hi_cap)
    value, spread = g_eval(alpha, cfg)
    g3 = value - g1 - g2
    return GDecomposition(k=int(k), delta=float(delta), l0=math.exp(2 * k), g1=g1, g2=g2, g3=g3,
                          value=value, spread=spread)


def z_tau_exact(x, theta, t):
    """Z_tau(x, x; theta) = sum_{n <= x} tau(n) sin(2 pi theta n), compensated."""
    x = require_int('x', x, minimum=1)
    if x > t.limit:
        raise DomainError(f"cap x={x} exceeds divisor table limit {t.limit}")
    theta = require_real('theta', theta)
    n = np.arange(1, x + 1, dtype=np.int64)
    terms = t.tau[1:x + 1].astype(np.float64) * np.sin(2.0 * np.pi * _frac(theta * n))
    return float(compensated_sum(terms[i:i + BLOCK].sum() for i in range(0, x, BLOCK)))
