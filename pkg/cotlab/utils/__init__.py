from .utils import (CotLabError, DomainError, PrecisionError, CacheError, normalization_divisor, require_int,
                    require_real, compensated_sum, spawn_seeds, WorkerPool, create_df, frame_to_csv, frame_to_json)
from .cotangent import (ReducedFraction, Window, euler_phi, coprime_window, window_reflect, c0, c0_batch,
                        c0_window_scaled, window_c0, window_values, cotangent_power_moment)
from .gseries import (DivisorTable, divisor_sieve, sawtooth, g_direct, direct_range, fourier_coefficients, g_fourier,
                      fourier_energy, GEvaluator, METHODS, g_eval, GDecomposition, g_decompose, decomposition_caps,
                      z_tau_exact)
from .contfrac import (CFExpansion, cf_expand, gauss_map, gauss_measure, gauss_preimage_mc, shift_check, c_alpha_r,
                       c_prefix, c_alpha_infinity, WSequence, in_E, classify_E, random_rationals, measure_E_mc,
                       measure_E_infinity_mc, union_bound_check, best_approx, growth_fit)
from .moments import (STRATA, MomentEstimate, GSamples, sample_g, hk_from_samples, hk_quadrature, hk_from_cotangent,
                      abs_moment, abs_moment_from_samples, convert_normalization, envelope_constant, stirling_guard,
                      dyadic_shell_bound, RadiusDiagnostics, radius_diagnostics)
from .distribution import (EmpiricalCDF, sample_F, ks_distance, ks_midpoint, default_cells, EquidistReport,
                           equidist_experiment, TailFit, tail_measure, ScatterReport, g_vs_c_scatter,
                           DecompositionReport, decomposition_bounds, decomposition_k0_scan, z_tau_spot_check)
from .fitting import fit_log_tail, minimal_envelope, fit_quality
from .cache import cached_divisor_table, cached_g_samples
