import math

import numpy as np
import pytest

from cotlab.utils import (DomainError, GEvaluator, MomentEstimate, Window, abs_moment, abs_moment_from_samples,
                          convert_normalization, dyadic_shell_bound, envelope_constant, hk_from_cotangent,
                          hk_from_samples, hk_quadrature, radius_diagnostics, sample_g, stirling_guard)
from cotlab.utils.constants import (COTANGENT_REL_ERR_MAX, ENVELOPE_L_MAX, RHO_MAX, RHO_PEAK_MIN, SPREAD_PASS_FRACTION,
                                    SPREAD_TOLERANCE)
from cotlab.utils.moments import log_rho
from cotlab.utils.utils import WorkerPool

H1_TWO_PI = 5.0 / 144.0


@pytest.fixture(scope='module')
def samples(direct_cfg):
    return sample_g(16384, 11, direct_cfg, strata=1024)


class TestSampling:

    def test_strata_layout(self, samples):
        assert samples.n == 16384
        assert np.array_equal(np.bincount(samples.stratum), np.full(1024, 16))
        lo = samples.stratum / 1024
        assert np.all((samples.alpha >= lo) & (samples.alpha < lo + 1 / 1024))

    def test_deterministic(self, tiny_cfg):
        a = sample_g(2048, 5, tiny_cfg, strata=64)
        b = sample_g(2048, 5, tiny_cfg, strata=64)
        assert np.array_equal(a.alpha, b.alpha)
        assert np.array_equal(a.value, b.value)

    def test_workers_do_not_change_samples(self, tiny_cfg):
        serial = sample_g(8192, 5, tiny_cfg, strata=256)
        with WorkerPool(2) as pool:
            parallel = sample_g(8192, 5, tiny_cfg, strata=256, pmap=pool)
        assert np.array_equal(serial.alpha, parallel.alpha)
        assert np.array_equal(serial.value, parallel.value)

    def test_too_few_per_stratum(self, tiny_cfg):
        with pytest.raises(DomainError):
            sample_g(1000, 5, tiny_cfg, strata=1000)

    def test_interval(self, tiny_cfg):
        gs = sample_g(256, 5, tiny_cfg, strata=16, interval=(0.0, 0.01))
        assert np.all((gs.alpha >= 0.0) & (gs.alpha < 0.01))

    def test_spread_gauge(self):
        cfg = GEvaluator(method='direct', n_terms=4096, tolerance=math.inf)
        gs = sample_g(2048, 13, cfg, strata=64)
        assert np.mean(gs.spread < SPREAD_TOLERANCE) >= SPREAD_PASS_FRACTION

    def test_tight_tolerance_redraws(self, caplog):
        cfg = GEvaluator(method='direct', n_terms=64, tolerance=1e-3)
        gs = sample_g(512, 3, cfg, strata=16)
        assert gs.n_rejected > 0
        assert any('redrawn' in rec.message for rec in caplog.records)


class TestQuadrature:

    def test_h0(self, direct_cfg):
        est = hk_quadrature(0, 10 ** 4, 1, direct_cfg)
        assert est.value == 1.0 and est.stderr == 0.0

    def test_h1_two_pi(self, samples):
        est = hk_from_samples(samples, 1, 'two-pi')
        assert abs(est.value - H1_TWO_PI) <= 4 * est.stderr + 1e-3
        assert est.method == 'quadrature'
        assert est.normalization == 'two-pi'

    def test_second_absolute_moment(self, samples):
        est = abs_moment_from_samples(samples, 2)
        assert est.value == pytest.approx(5 * math.pi ** 2 / 36, abs=4 * est.stderr + 0.05)
        assert est.normalization == 'raw'

    def test_normalizations_differ_by_power_of_four(self, samples):
        for k in range(1, 5):
            two_pi = hk_from_samples(samples, k, 'two-pi')
            pi = hk_from_samples(samples, k, 'pi')
            assert pi.value == pytest.approx(two_pi.value * 4 ** k, rel=1e-12)
            converted = convert_normalization(two_pi, 'pi')
            assert converted.value == pytest.approx(pi.value, rel=1e-12)

    def test_power_means_are_monotone(self, samples):
        means = [abs_moment_from_samples(samples, L).value ** (1 / L) for L in range(1, 9)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(means, means[1:]))

    def test_rejects_large_k(self, samples):
        with pytest.raises(DomainError):
            hk_from_samples(samples, 13)

    def test_needs_samples(self, direct_cfg):
        with pytest.raises(DomainError):
            hk_quadrature(1, 999, 1, direct_cfg)

    def test_abs_moment_matches_samples(self, direct_cfg, samples):
        est = abs_moment(2, 16384, 11, direct_cfg, strata=1024)
        assert est.value == abs_moment_from_samples(samples, 2).value

    def test_absolute_moments_have_no_normalization(self, samples):
        with pytest.raises(DomainError):
            convert_normalization(abs_moment_from_samples(samples, 2), 'pi')


class TestCotangentMoments:

    def test_h0_is_window_mass(self):
        est = hk_from_cotangent(1009, 0, Window(1009, 0.5, 1.0))
        assert est.value == pytest.approx(1.0, abs=2e-3)
        assert est.normalization == 'pi' and est.method == 'cotangent'

    def test_small_b_warns(self, caplog):
        hk_from_cotangent(53, 1, Window(53, 0.5, 1.0))
        assert any('below 100' in rec.message for rec in caplog.records)

    @pytest.mark.slow
    def test_h1_agrees_with_quadrature(self):
        est = hk_from_cotangent(10007, 1, Window(10007, 0.51, 0.99))
        assert est.value == pytest.approx(4 * H1_TWO_PI, rel=COTANGENT_REL_ERR_MAX)

    @pytest.mark.slow
    def test_finite_b_error_shrinks(self, direct_cfg):
        seeds = (1, 2, 3)
        runs = [sample_g(2 ** 17, seed, direct_cfg) for seed in seeds]
        for k in (1, 2):
            quadrature = float(np.median([hk_from_samples(gs, k, 'two-pi').value for gs in runs]))
            errors = []
            for b in (1009, 10007):
                cot = convert_normalization(hk_from_cotangent(b, k, Window(b, 0.51, 0.99)), 'two-pi')
                errors.append(abs(cot.value - quadrature) / quadrature)
            assert errors[1] <= COTANGENT_REL_ERR_MAX
            assert errors[1] < errors[0]


class TestRadius:

    def test_log_rho(self):
        assert math.exp(log_rho(2, 24.0)) == pytest.approx(1.0)

    def test_stirling(self):
        for k in range(1, 13):
            assert stirling_guard(k) == (True, True)

    def test_envelope_constant(self):
        moments = [MomentEstimate(k=L, value=2.0 ** L, stderr=0.0, method='absolute', normalization='raw', n=1)
                   for L in (1, 2, 4)]
        assert envelope_constant(moments) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            envelope_constant([])

    def test_dyadic_shell_bound(self, samples):
        for L in (1, 2, 4):
            exact = float(np.mean(np.abs(samples.value) ** L))
            assert dyadic_shell_bound(L, samples.value) >= exact

    def test_diagnostics_two_pi(self, samples):
        moments = [hk_from_samples(samples, k, 'two-pi') for k in range(0, 5)]
        diag = radius_diagnostics(moments)
        assert [row[0] for row in diag.rows] == [1, 2, 3, 4]
        assert diag.limsup_threshold == pytest.approx(1 / (4 * math.pi ** 2))
        assert diag.radius_upper == pytest.approx(4 * math.pi ** 2)
        assert 0 < diag.radius_lower <= diag.radius_upper
        k, hk, rho, c_fit = diag.rows[0]
        assert rho == pytest.approx(hk / 2)
        assert c_fit == pytest.approx(2 * math.pi * math.sqrt(hk) / 2)

    def test_diagnostics_pi_bounds(self, samples):
        moments = [hk_from_samples(samples, k, 'pi') for k in range(1, 4)]
        diag = radius_diagnostics(moments, abs_moments=[abs_moment_from_samples(samples, L) for L in (1, 2, 3)])
        assert diag.radius_upper == pytest.approx(math.pi ** 2)
        assert diag.limsup_threshold == pytest.approx(1 / math.pi ** 2)
        assert diag.radius_lower == pytest.approx((math.pi / (3 * diag.envelope_c)) ** 2)

    def test_pi_normalized_radius(self, samples):
        abs_moments = [abs_moment_from_samples(samples, L) for L in range(1, ENVELOPE_L_MAX + 1)]
        moments = [hk_from_samples(samples, k, 'pi') for k in range(1, 7)]
        diag = radius_diagnostics(moments, abs_moments=abs_moments)
        rhos = [row[2] for row in diag.rows]
        assert max(rhos) >= RHO_PEAK_MIN
        assert all(rho <= RHO_MAX for rho in rhos)
        assert diag.below_envelope
        assert all(rho <= (3 * diag.envelope_c / math.pi) ** 2 for rho in rhos)
        two_pi = radius_diagnostics([hk_from_samples(samples, k, 'two-pi') for k in range(1, 7)],
                                    abs_moments=abs_moments)
        for a, b in zip(diag.rows, two_pi.rows):
            assert a[2] == pytest.approx(4 * b[2], rel=1e-12)

    def test_envelope_constant_covers_every_moment(self, samples):
        abs_moments = [abs_moment_from_samples(samples, L) for L in range(1, ENVELOPE_L_MAX + 1)]
        C = envelope_constant(abs_moments)
        assert 0 < abs_moments[0].value < math.inf
        for m in abs_moments:
            assert m.value <= (C * m.k) ** m.k * (1 + 1e-12)

    def test_mixed_normalizations(self, samples):
        moments = [hk_from_samples(samples, 1, 'two-pi'), hk_from_samples(samples, 1, 'pi')]
        with pytest.raises(DomainError):
            radius_diagnostics(moments)
