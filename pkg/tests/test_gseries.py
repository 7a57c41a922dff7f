import math

import numpy as np
import pytest

from cotlab.utils import (DivisorTable, DomainError, GEvaluator, decomposition_caps, direct_range, divisor_sieve,
                          fourier_coefficients, fourier_energy, g_decompose, g_direct, g_eval, g_fourier, sawtooth,
                          z_tau_exact)
from cotlab.utils.constants import PARSEVAL_ENERGY_FLOOR, PARSEVAL_M

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture(scope='module')
def table():
    return divisor_sieve(2 ** 17)


@pytest.fixture(scope='module')
def big_table():
    return divisor_sieve(PARSEVAL_M)


def dyadic_points(n, seed):
    """n points k / 2^52 in (0, 1); 1 - a is exact for each of them."""
    rng = np.random.default_rng(seed)
    return rng.integers(1, 2 ** 52, size=n) / 2.0 ** 52


class TestDivisorTable:

    def test_small_values(self):
        t = divisor_sieve(12)
        assert t.tau.tolist() == [0, 1, 2, 2, 3, 2, 4, 2, 4, 3, 4, 2, 6]
        assert t.limit == 12

    def test_brute_force(self):
        t = divisor_sieve(10 ** 4)
        for m in range(1, 10 ** 4 + 1):
            assert t[m] == np.count_nonzero(m % np.arange(1, m + 1) == 0)

    def test_read_only(self):
        t = divisor_sieve(10)
        with pytest.raises(ValueError):
            t.tau[1] = 7

    def test_bytes_layout(self):
        t = divisor_sieve(6)
        data = t.to_bytes()
        assert data[:4] == (6).to_bytes(4, 'little')
        assert len(data) == 4 + 4 * 6
        assert np.array_equal(DivisorTable.from_bytes(data).tau, t.tau)

    def test_truncated_bytes(self):
        data = divisor_sieve(6).to_bytes()
        with pytest.raises(DomainError):
            DivisorTable.from_bytes(data[:-2])
        with pytest.raises(DomainError):
            DivisorTable.from_bytes(b'\x01')

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            divisor_sieve(0)


class TestSeries:

    def test_sawtooth(self):
        assert sawtooth(0.0) == 1.0
        assert sawtooth(0.25) == 0.5
        assert sawtooth(1.75) == -0.5
        assert np.allclose(sawtooth(np.array([0.5, 2.0])), [0.0, 1.0])

    def test_g_direct_small_sums(self):
        assert g_direct(0.3, 0) == 0.0
        # B(0.3) + B(0.6)/2 = 0.4 - 0.1
        assert g_direct(0.3, 2) == pytest.approx(0.3, abs=1e-15)

    def test_direct_range_is_additive(self):
        a = np.array([0.1, GOLDEN, 0.77])
        whole = direct_range(a, 1, 5000)
        split = direct_range(a, 1, 1234) + direct_range(a, 1235, 5000)
        assert np.allclose(whole, split, rtol=0, atol=1e-12)
        assert np.array_equal(direct_range(a, 10, 9), np.zeros(3))

    def test_g_is_odd(self):
        a = np.array([0.1234567, 0.3141592, GOLDEN])
        assert np.allclose(g_direct(a, 4096), -g_direct(1.0 - a, 4096), atol=1e-9)

    def test_fourier_is_odd(self, table):
        a = dyadic_points(1000, 3)
        assert np.max(np.abs(g_fourier(a, 2 ** 16, table) + g_fourier(1.0 - a, 2 ** 16, table))) <= 1e-12
        fejer = g_fourier(a, 2 ** 16, table, fejer=True) + g_fourier(1.0 - a, 2 ** 16, table, fejer=True)
        assert np.max(np.abs(fejer)) <= 1e-12

    @pytest.mark.slow
    def test_fourier_is_odd_at_full_cap(self, big_table):
        a = dyadic_points(1000, 4)
        values = g_fourier(a, PARSEVAL_M, big_table)
        assert np.max(np.abs(values + g_fourier(1.0 - a, PARSEVAL_M, big_table))) <= 1e-12

    def test_fourier_coefficients(self):
        t = divisor_sieve(6)
        expected = [2 * tau / (math.pi * m) for m, tau in enumerate([1, 2, 2, 3, 2, 4], start=1)]
        assert np.allclose(fourier_coefficients(6, t), expected, rtol=1e-15)
        with pytest.raises(DomainError):
            fourier_coefficients(7, t)

    def test_fourier_rejects_large_cap(self, table):
        with pytest.raises(DomainError):
            g_fourier(0.3, table.limit + 1, table)

    def test_parseval(self, big_table):
        half, full = fourier_energy(PARSEVAL_M, big_table)
        target = 5 * math.pi ** 2 / 144
        assert PARSEVAL_ENERGY_FLOOR * target <= half <= target
        assert full == pytest.approx(4 * half, rel=1e-15)

    def test_methods_agree_at_golden_ratio(self, table):
        direct = g_direct(GOLDEN, 2 ** 16)
        fourier = g_fourier(GOLDEN, 2 ** 16, table)
        fejer = g_fourier(GOLDEN, 2 ** 16, table, fejer=True)
        assert abs(direct - fourier) < 0.15
        assert abs(direct - fejer) < 0.25


class TestEvaluator:

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            GEvaluator(method='magic')

    def test_table_too_small(self):
        with pytest.raises(DomainError):
            GEvaluator(method='fourier', m_terms=100, table=divisor_sieve(150))

    def test_key(self):
        cfg = GEvaluator(method='direct', n_terms=64, tolerance=math.inf)
        assert cfg.key() == dict(method='direct', N=64, M=10 ** 6, tolerance=math.inf, fejer=False)
        assert cfg.table is None

    def test_scalar_and_batch(self, direct_cfg):
        a = np.linspace(0.01, 0.99, 300)
        values, spreads = g_eval(a, direct_cfg)
        for i in (0, 7, 255, 256, 299):
            value, spread = g_eval(a[i], direct_cfg)
            assert isinstance(value, float)
            assert value == values[i]
            assert spread == spreads[i]

    def test_cross_checked_spread(self, table):
        cfg = GEvaluator(method='cross-checked', n_terms=2 ** 15, m_terms=2 ** 15, table=table)
        value, spread = g_eval(GOLDEN, cfg)
        assert len(cfg.estimates(GOLDEN)) == 4
        assert spread >= 0.0
        assert value == pytest.approx(g_direct(GOLDEN, 2 ** 16), abs=0.1)
        assert cfg.evaluate(GOLDEN) == (value, spread)


class TestDecomposition:

    def test_caps(self):
        assert decomposition_caps(2, 0.05) == (36, 81)

    def test_caps_reject_delta(self):
        with pytest.raises(DomainError):
            decomposition_caps(2, 0.125)
        with pytest.raises(DomainError):
            decomposition_caps(2, 0.0)

    def test_caps_reject_infeasible_range(self):
        with pytest.raises(DomainError):
            decomposition_caps(10, 0.1)

    def test_identity(self, direct_cfg):
        a = np.array([0.001, 0.01, 0.015])
        d = g_decompose(a, 2, 0.05, direct_cfg)
        assert np.allclose(d.g1 + d.g2 + d.g3, d.value, rtol=0, atol=1e-12)
        assert d.l0 == pytest.approx(math.exp(4))
        assert np.allclose(d.g1, direct_range(a, 1, 36))


class TestZTau:

    def test_small_sum(self):
        assert z_tau_exact(3, 0.25, divisor_sieve(3)) == pytest.approx(-1.0, abs=1e-12)

    def test_integer_theta_vanishes(self):
        assert z_tau_exact(100, 2.0, divisor_sieve(100)) == 0.0

    def test_cap(self):
        with pytest.raises(DomainError):
            z_tau_exact(11, 0.1, divisor_sieve(10))
