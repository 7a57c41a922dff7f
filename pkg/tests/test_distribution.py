import math

import numpy as np
import pytest

from cotlab.utils import (DomainError, EmpiricalCDF, GEvaluator, Window, abs_moment_from_samples, decomposition_bounds,
                          decomposition_k0_scan, default_cells, divisor_sieve, envelope_constant,
                          equidist_experiment, g_vs_c_scatter, ks_distance, ks_midpoint, sample_F, sample_g,
                          tail_measure, z_tau_spot_check)
from cotlab.utils.constants import (ENVELOPE_L_MAX, EQUIDIST_B, EQUIDIST_CELL_ERR_MAX, EQUIDIST_KS_MAX,
                                    EQUIDIST_WINDOW, TAIL_THRESHOLDS)


@pytest.fixture(scope='module')
def law(direct_cfg):
    return sample_F(16384, 21, direct_cfg, strata=1024)


class TestEmpiricalCDF:

    def test_steps(self):
        F = EmpiricalCDF([3.0, 1.0, 2.0, 2.0])
        assert F(0.5) == 0.0
        assert F(2.0) == 0.75
        assert F.mid(2.0) == 0.5
        assert F(10.0) == 1.0
        assert F.n == 4

    def test_rejects_bad_samples(self):
        with pytest.raises(DomainError):
            EmpiricalCDF([])
        with pytest.raises(DomainError):
            EmpiricalCDF([0.0, np.nan])

    def test_law_of_g_is_symmetric(self, law):
        assert ks_distance(law, law.negated()) < 0.03
        assert abs(law(0.0) - 0.5) < 0.02

    def test_midpoint_ks_on_own_samples(self):
        F = EmpiricalCDF(np.arange(100, dtype=float))
        assert ks_midpoint(F.samples, F) == pytest.approx(0.005)
        assert ks_midpoint(F.samples + 1000.0, F) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            ks_midpoint([], F)

    def test_midpoint_ks_between_samples(self):
        F = EmpiricalCDF([0.0, 1.0, 2.0, 3.0])
        # G jumps to 1 at 1.5, where F sits at 1/2
        assert ks_midpoint([1.5], F) == pytest.approx(0.5)

    def test_ks_distance_of_shift(self):
        F = EmpiricalCDF(np.arange(100, dtype=float))
        G = EmpiricalCDF(np.arange(100, dtype=float) + 10)
        assert ks_distance(F, G) == pytest.approx(0.1)
        assert ks_distance(F, F) == 0.0


class TestCells:

    def test_default_cells(self, law):
        cells = default_cells(law, n_cells=8, scale=math.pi)
        assert len(cells) == 8
        assert cells[0][0] == -math.inf and cells[-1][1] == math.inf
        assert all(lo < hi for lo, hi in cells)
        assert all(a[1] == b[0] for a, b in zip(cells, cells[1:]))


class TestEquidistribution:

    def test_counts_and_mass(self, law):
        w = Window(1009, 0.51, 0.99)
        cells = default_cells(law, n_cells=4, scale=math.pi)
        report = equidist_experiment(1009, w, cells, law)
        assert sum(report.counts) == report.window_count
        assert report.phi_b == 1008
        assert report.total_lhs == pytest.approx(w.width, abs=2e-3)
        assert sum(report.rhs) == pytest.approx(w.width)
        assert report.max_abs_err == max(report.abs_err)
        assert sum(report.lhs_probability) == pytest.approx(1.0)

    def test_requires_large_b(self, law):
        with pytest.raises(DomainError):
            equidist_experiment(999, Window(999, 0.51, 0.99), [(-1.0, 1.0)], law)

    def test_rejects_empty_cell(self, law):
        with pytest.raises(DomainError):
            equidist_experiment(1009, Window(1009, 0.51, 0.99), [(1.0, 1.0)], law)

    def test_small_law_warns(self, law, caplog):
        equidist_experiment(1009, Window(1009, 0.51, 0.99), [(-math.inf, math.inf)], law)
        assert any('fewer than' in rec.message for rec in caplog.records)

    @pytest.mark.slow
    def test_convergence(self):
        cfg = GEvaluator(method='direct', n_terms=4096, tolerance=math.inf)
        F = sample_F(10 ** 5, 7, cfg)
        w = Window(EQUIDIST_B, *EQUIDIST_WINDOW)
        report = equidist_experiment(EQUIDIST_B, w, default_cells(F, scale=math.pi), F)
        assert len(report.cells) == 8
        assert report.max_abs_err <= EQUIDIST_CELL_ERR_MAX
        assert report.ks_distance <= EQUIDIST_KS_MAX


class TestTail:

    def test_exponential_tail(self):
        rng = np.random.default_rng(2)
        x = rng.exponential(size=10 ** 5) * rng.choice([-1.0, 1.0], size=10 ** 5)
        fit = tail_measure([0.5 * i for i in range(12)], EmpiricalCDF(x))
        assert fit.fitted
        assert fit.slope == pytest.approx(-1.0, abs=0.1)
        assert fit.measure[0] == 1.0
        assert all(a >= b for a, b in zip(fit.measure, fit.measure[1:]))

    def test_unfit_tail(self, caplog):
        fit = tail_measure([0.0, 100.0, 200.0], EmpiricalCDF([0.5, -0.25, 1.0]))
        assert not fit.fitted
        assert fit.hits == (3, 0, 0)
        assert fit.log_measure[1] == -math.inf

    def test_thresholds_ascending(self, law):
        with pytest.raises(DomainError):
            tail_measure([1.0, 0.5], law)
        with pytest.raises(DomainError):
            tail_measure([-1.0, 0.5], law)

    @pytest.mark.slow
    def test_tail_and_envelope_at_full_sample(self):
        cfg = GEvaluator(method='direct', n_terms=512, tolerance=math.inf)
        gs = sample_g(10 ** 6, 31, cfg)
        fit = tail_measure(TAIL_THRESHOLDS, EmpiricalCDF.from_samples(gs))
        assert all(a >= b for a, b in zip(fit.measure, fit.measure[1:]))
        assert fit.fitted
        assert fit.slope < 0
        abs_moments = [abs_moment_from_samples(gs, L) for L in range(1, ENVELOPE_L_MAX + 1)]
        C = envelope_constant(abs_moments)
        assert 0 < C < math.inf
        assert all(m.value ** (1 / m.k) / m.k <= C for m in abs_moments)

    def test_law_of_g(self, law):
        fit = tail_measure([0.5 * i for i in range(17)], law)
        assert fit.measure[0] == 1.0
        assert fit.fitted
        assert fit.slope < 0


class TestScatter:

    def test_envelope_covers_samples(self):
        cfg = GEvaluator(method='direct', n_terms=1024, tolerance=math.inf)
        report = g_vs_c_scatter(300, 8, cfg)
        assert report.c_trunc.size + report.dropped + report.flagged == 300
        assert np.all(report.c2 * report.c_trunc + report.c3 >= report.abs_g)
        assert report.c2 >= 0 and report.c3 >= 0


class TestDecomposition:

    def test_bounds_at_k2(self, direct_cfg):
        report = decomposition_bounds(2, 0.05, 2048, 3, direct_cfg, strata=64)
        assert (report.lo_cap, report.hi_cap) == (36, 81)
        assert report.g1_bound == pytest.approx(2.4)
        assert report.g1_ok
        assert report.min_g1 >= 2.4
        assert report.g2_ok
        assert report.max_abs_g2 <= report.harmonic_bound <= report.g2_bound
        assert report.max_identity_error < 1e-12
        assert 0.0 <= report.g3_fraction <= 1.0

    def test_k0_scan(self, direct_cfg):
        k0, reports = decomposition_k0_scan(0.05, 2048, 3, direct_cfg, k_max=3, strata=64)
        assert [r.k for r in reports] == [1, 2, 3]
        assert k0 == 2

    def test_rejects_parameters(self, direct_cfg):
        with pytest.raises(DomainError):
            decomposition_bounds(4, 0.05, 2048, 3, direct_cfg)
        with pytest.raises(DomainError):
            decomposition_bounds(2, 0.01, 2048, 3, direct_cfg)


class TestZTauSpotCheck:

    def test_rational_theta(self):
        t = divisor_sieve(10 ** 4)
        result = z_tau_spot_check(10 ** 4, 0.5, t)
        assert result['q'] == 2
        assert result['theta_q'] == 0.0
        assert result['main'] == 0.0
        assert result['exact'] == pytest.approx(0.0, abs=1e-6)

    def test_report_fields(self):
        t = divisor_sieve(4096)
        result = z_tau_spot_check(4096, 0.3183098861837907, t)
        assert set(result) == {'x', 'theta', 'q', 'theta_q', 'exact', 'main', 'gap'}
        assert 1 <= result['q'] <= 64
        assert math.isfinite(result['gap'])
