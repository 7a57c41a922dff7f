"""
Exact cotangent sums c0(r/b) = -sum_{m=1}^{b-1} (m/b) cot(pi m r / b) and the coprime residue windows they are
averaged over.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

import numpy as np

from .utils import BLOCK, DomainError, compensated_sum, require_int, require_real, chunked

logger = logging.getLogger(__name__)

# b < 2**31 keeps m*r < 2**62, so residues are exact in int64
MAX_DENOMINATOR = 2 ** 31
# residues per task in window evaluations
R_CHUNK = 256


@dataclass(frozen=True)
class ReducedFraction:
    r: int
    b: int

    def __post_init__(self):
        b = require_int('b', self.b, minimum=2, maximum=MAX_DENOMINATOR)
        r = require_int('r', self.r, minimum=1, maximum=b - 1)
        if math.gcd(r, b) != 1:
            raise DomainError(f"r/b must be reduced, got gcd({r}, {b}) = {math.gcd(r, b)}")
        object.__setattr__(self, 'r', r)
        object.__setattr__(self, 'b', b)

    def __float__(self):
        return self.r / self.b

    def __str__(self):
        return f'{self.r}/{self.b}'


@dataclass(frozen=True)
class Window:
    b: int
    a0: float
    a1: float

    def __post_init__(self):
        b = require_int('b', self.b, minimum=1, maximum=MAX_DENOMINATOR)
        a0 = require_real('a0', self.a0, lo=0.0, hi=1.0)
        a1 = require_real('a1', self.a1, lo=0.0, hi=1.0)
        if not a0 < a1:
            raise DomainError(f"window needs a0 < a1, got a0={a0}, a1={a1}")
        if not 0.5 < a0 < a1 < 1.0:
            logger.warning(f'window ({a0}, {a1}) lies outside the 1/2 < a0 < a1 < 1 regime')
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'a0', a0)
        object.__setattr__(self, 'a1', a1)

    @property
    def width(self):
        return self.a1 - self.a0


def euler_phi(b):
    """
    Euler's totient by trial factorization.
    Args:
        b: positive integer

    Returns:
        phi(b)
    """
    b = require_int('b', b)
    if b < 1:
        raise DomainError(f"euler_phi needs b >= 1, got {b}")
    result = b
    n = b
    p = 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            result -= result // p
        p += 1 if p == 2 else 2
    if n > 1:
        result -= result // n
    return result


def coprime_window(w):
    """All r with gcd(r, b) = 1 and a0*b <= r <= a1*b, ascending, as ReducedFraction."""
    return [ReducedFraction(int(r), w.b) for r in _window_residues(w)]


def _window_residues(w):
    # closed interval [a0*b, a1*b] with the endpoints read as exact decimals
    lo = max(1, math.ceil(Fraction(repr(w.a0)) * w.b))
    hi = min(w.b - 1, math.floor(Fraction(repr(w.a1)) * w.b))
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    r = np.arange(lo, hi + 1, dtype=np.int64)
    return r[np.gcd(r, w.b) == 1]


def window_reflect(w):
    """The window seen through r -> b - r."""
    return Window(w.b, 1.0 - w.a1, 1.0 - w.a0)


def _cot_blocks(b, rs, order):
    m_all = np.arange(1, b, dtype=np.int64)
    if order == 'descending':
        m_all = m_all[::-1]
    for start in range(0, m_all.size, BLOCK):
        m = m_all[start:start + BLOCK]
        # pi * frac(m r / b) lies in (0, pi) since b does not divide m r
        residues = (rs[:, None] * m[None, :]) % b
        angle = np.pi * residues / b
        terms = (m / b) * (np.cos(angle) / np.sin(angle))
        yield terms.sum(axis=1)


def c0_batch(b, rs, order='ascending'):
    """
    c0(r/b) for a vector of residues coprime to b.

    Args:
        b: denominator, 2 <= b <= 2**31
        rs: residues 1 <= r < b with gcd(r, b) = 1
        order: 'ascending' (natural m order) or 'descending' summation order

    Returns:
        array of c0(r/b)
    """
    b = require_int('b', b, minimum=2, maximum=MAX_DENOMINATOR)
    if order not in ('ascending', 'descending'):
        raise DomainError(f"Unknown summation order: {order}")
    rs = np.atleast_1d(np.asarray(rs, dtype=np.int64))
    if rs.size and (rs.min() < 1 or rs.max() >= b or np.any(np.gcd(rs, b) != 1)):
        raise DomainError(f"residues must be coprime to b={b} and lie in [1, b)")
    return -compensated_sum(_cot_blocks(b, rs, order), shape=rs.shape)


def c0(f, order='ascending'):
    """The cotangent sum c0(r/b) of a ReducedFraction."""
    return float(c0_batch(f.b, [f.r], order=order)[0])


def _c0_chunk(b, rs):
    return c0_batch(b, rs)


def c0_window_scaled(w, pmap=map):
    """
    Pairs (r/b, c0(r/b)/b) over the coprime window, ascending r.

    Args:
        w: Window
        pmap: order-preserving map used to spread residue chunks over workers

    Returns:
        list of (ReducedFraction, float)
    """
    rs, values = window_values(w, pmap=pmap)
    return [(ReducedFraction(int(r), w.b), float(v)) for r, v in zip(rs, values)]


def window_c0(w, pmap=map):
    """Residues and c0(r/b) over the window as two arrays."""
    rs = _window_residues(w)
    if rs.size == 0:
        return rs, np.zeros(0)
    values = np.concatenate(list(pmap(partial(_c0_chunk, w.b), chunked(rs, R_CHUNK))))
    return rs, values


def window_values(w, pmap=map):
    """Residues and c0(r/b)/b over the window."""
    rs, values = window_c0(w, pmap=pmap)
    return rs, values / w.b


def cotangent_power_moment(b, power, w, pmap=map):
    """
    phi(b)^-1 b^-power (a1 - a0)^-1 sum over the window of c0(r/b)^power.
    Odd powers are allowed; they tend to 0 as b grows.
    """
    power = require_int('power', power, minimum=0)
    if w.b != b:
        raise DomainError(f"window denominator {w.b} differs from b={b}")
    _, x = window_values(w, pmap=pmap)
    if x.size == 0:
        raise DomainError(f"empty window: no r coprime to {b} in [{w.a0}*b, {w.a1}*b]")
    blocks = (np.sum(x[i:i + BLOCK] ** power) for i in range(0, x.size, BLOCK))
    total = float(compensated_sum(blocks))
    return total / (euler_phi(b) * w.width)
