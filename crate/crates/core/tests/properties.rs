use std::f64::consts::PI;

use levy_mellin::estimators::{invert_levy_density, linspace, one_sided_alphas, weighted_lambda, weighted_mu, FourierSamples};
use levy_mellin::kernels::{flat_top, weight, WeightKind, WeightSpec};
use levy_mellin::mellin::{empirical_mellin, laplace_estimate};
use levy_mellin::rates::choose_vn_polynomial;
use levy_mellin::sampling::{sample_beta_case, sample_gamma_case, sample_series_cp, SeriesTruncationPolicy};
use levy_mellin::special::{complex_erf, complex_erfc, complex_log_gamma};
use levy_mellin::{Complex64, EstimationConfig, Sample, SubordinatorModel};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

/// Distance of `w` from the lattice `2 pi i Z`.
fn mod_two_pi_i(w: Complex64) -> f64 {
    let k = (w.im / (2.0 * PI)).round();
    c(w.re, w.im - 2.0 * PI * k).norm()
}

fn away_from_poles() -> impl Strategy<Value = Complex64> {
    (-10.0..30.0f64, -30.0..30.0f64)
        .prop_filter("near a pole", |(x, y)| !(y.abs() < 1e-3 && *x <= 0.5 && (x - x.round()).abs() < 1e-3))
        .prop_map(|(x, y)| c(x, y))
}

fn positive_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..50.0f64, 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn erf_is_odd_and_conjugate_symmetric(x in -8.0..8.0f64, y in -30.0..30.0f64) {
        let z = c(x, y);
        let e = complex_erf(z).unwrap();
        // |erf| ~ exp(y^2 - x^2) leaves the double range near the imaginary axis
        prop_assume!(e.re.is_finite() && e.im.is_finite());
        prop_assert!(close(complex_erf(-z).unwrap(), -e, 1e-12));
        prop_assert!(close(complex_erf(z.conj()).unwrap(), e.conj(), 1e-12));
    }

    #[test]
    fn erf_and_erfc_sum_to_one(x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let z = c(x, y);
        let sum = complex_erf(z).unwrap() + complex_erfc(z);
        prop_assert!((sum - 1.0).norm() <= 1e-12 * complex_erf(z).unwrap().norm().max(1.0));
    }

    #[test]
    fn log_gamma_recurrence(z in away_from_poles()) {
        let lhs = complex_log_gamma(z + 1.0).unwrap();
        let rhs = complex_log_gamma(z).unwrap() + z.ln();
        prop_assert!(mod_two_pi_i(lhs - rhs) <= 1e-12 * lhs.norm().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn log_gamma_reflection(x in -4.0..5.0f64, y in 0.05..20.0f64) {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let z = c(x, y);
        let lhs = complex_log_gamma(z).unwrap() + complex_log_gamma(1.0 - z).unwrap();
        let rhs = c(PI, 0.0).ln() - (z * PI).sin().ln();
        prop_assert!(mod_two_pi_i(lhs - rhs) <= 1e-11 * lhs.norm().max(1.0));
    }

    #[test]
    fn log_gamma_conjugate_symmetry(z in away_from_poles()) {
        let a = complex_log_gamma(z.conj()).unwrap();
        let b = complex_log_gamma(z).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn laplace_exponent_conjugate_symmetry(
        mu in 0.0..5.0f64, a in 0.01..5.0f64, b in 0.01..5.0f64,
        lambda in 0.1..5.0f64, q in 0.05..0.95f64, alpha in 0.01..3.0f64,
        x in 0.01..30.0f64, y in -30.0..30.0f64,
    ) {
        let z = c(x, y);
        for m in [SubordinatorModel::cp_exp(mu, a, b).unwrap(), SubordinatorModel::trunc_norm_cp(lambda, q, alpha).unwrap()] {
            let p = m.laplace_exponent(z).unwrap();
            let pc = m.laplace_exponent(z.conj()).unwrap();
            prop_assert!(close(pc, p.conj(), 1e-12), "{:?} at {}", m, z);
        }
    }

    #[test]
    fn levy_density_is_nonnegative_with_correct_support(x in -5.0..20.0f64, alpha in 0.01..3.0f64) {
        let cp = SubordinatorModel::cp_exp(1.8, 0.7, 0.2).unwrap();
        let tn = SubordinatorModel::trunc_norm_cp(1.0, 0.5, alpha).unwrap();
        prop_assert!(cp.levy_density(x) >= 0.0);
        prop_assert!(tn.jump_law_density(x) >= 0.0);
        if x <= 0.0 { prop_assert_eq!(cp.levy_density(x), 0.0); }
        if x <= alpha { prop_assert_eq!(tn.jump_law_density(x), 0.0); }
    }

    #[test]
    fn empirical_mellin_at_one_is_exactly_one(values in positive_values(200)) {
        let s = Sample::new(values, 1.0, 0).unwrap();
        prop_assert!((empirical_mellin(&s, c(1.0, 0.0)).unwrap() - 1.0).norm() <= 1e-14);
    }

    #[test]
    fn empirical_transforms_are_conjugate_symmetric(values in positive_values(100), x in 0.05..30.0f64, y in -30.0..30.0f64) {
        let s = Sample::new(values, 1.0, 0).unwrap();
        let z = c(x, y);
        prop_assert!(close(empirical_mellin(&s, z.conj()).unwrap(), empirical_mellin(&s, z).unwrap().conj(), 1e-13));
        prop_assert!(close(laplace_estimate(&s, z.conj()).unwrap(), laplace_estimate(&s, z).unwrap().conj(), 1e-12));
    }

    #[test]
    fn affine_curves_are_fitted_exactly(
        weights in prop::collection::vec(0.01..10.0f64, 50),
        mu in -5.0..5.0f64, lambda in -5.0..5.0f64, u0 in 0.1..30.0f64, vn in 0.5..50.0f64,
    ) {
        let alphas = one_sided_alphas(0.1, 50);
        let im: Vec<f64> = alphas.iter().map(|a| mu * a * vn).collect();
        let re: Vec<f64> = alphas.iter().map(|_| lambda + mu * u0).collect();
        let mu_hat = weighted_mu(&alphas, &weights, &im, vn).unwrap();
        prop_assert!((mu_hat - mu).abs() <= 1e-12 * mu.abs().max(1.0));
        let lambda_hat = weighted_lambda(&weights, &re, mu_hat, u0).unwrap();
        prop_assert!((lambda_hat - lambda).abs() <= 1e-10 * (mu * u0).abs().max(1.0));
    }

    #[test]
    fn weight_scaling_leaves_estimates_unchanged(
        weights in prop::collection::vec(0.01..10.0f64, 50),
        ys in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 50),
        scale in 1e-3..1e3f64,
    ) {
        let alphas = one_sided_alphas(0.1, 50);
        let re: Vec<f64> = ys.iter().map(|p| p.0).collect();
        let im: Vec<f64> = ys.iter().map(|p| p.1).collect();
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mu = weighted_mu(&alphas, &weights, &im, 7.0).unwrap();
        let mu_s = weighted_mu(&alphas, &scaled, &im, 7.0).unwrap();
        prop_assert!((mu - mu_s).abs() <= 1e-13 * mu.abs().max(1e-3));
        let l = weighted_lambda(&weights, &re, mu, 2.0).unwrap();
        let l_s = weighted_lambda(&scaled, &re, mu, 2.0).unwrap();
        prop_assert!((l - l_s).abs() <= 1e-13 * l.abs().max(1e-3));
    }

    #[test]
    fn inversion_is_linear(
        f in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 41),
        g in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 41),
        s in -3.0..3.0f64,
    ) {
        let config = EstimationConfig { density_grid_m: 40, ..Default::default() };
        let x = linspace(-1.0, 3.0, 21);
        let mk = |p: &[(f64, f64)]| FourierSamples { v: config.symmetric_grid(), values: p.iter().map(|&(a, b)| c(a, b)).collect() };
        let (ff, gg) = (mk(&f), mk(&g));
        let combo = FourierSamples { v: ff.v.clone(), values: ff.values.iter().zip(&gg.values).map(|(a, b)| a + s * b).collect() };
        let ef = invert_levy_density(&ff, &config, &x).unwrap();
        let eg = invert_levy_density(&gg, &config, &x).unwrap();
        let ec = invert_levy_density(&combo, &config, &x).unwrap();
        for k in 0..x.len() {
            prop_assert!((ec.nu_bar_hat[k] - (ef.nu_bar_hat[k] + s * eg.nu_bar_hat[k])).abs() <= 1e-12);
            prop_assert!((ec.imag_residual[k] - (ef.imag_residual[k] + s * eg.imag_residual[k])).abs() <= 1e-12);
        }
    }

    #[test]
    fn flat_top_is_symmetric_and_bounded(x in -2.0..2.0f64) {
        let k = flat_top(x);
        prop_assert_eq!(k.to_bits(), flat_top(-x).to_bits());
        prop_assert!((0.0..=1.0).contains(&k));
    }

    #[test]
    fn weights_are_nonnegative_and_supported(alpha in -1.0..2.0f64, eps in 0.01..0.99f64, epa in any::<bool>()) {
        let kind = if epa { WeightKind::Epanechnikov } else { WeightKind::Flat };
        let w = weight(&WeightSpec::new(kind, eps).unwrap(), alpha);
        prop_assert!((0.0..=1.0).contains(&w));
        if alpha < eps || alpha > 1.0 { prop_assert_eq!(w, 0.0); }
    }

    #[test]
    fn polynomial_bandwidth_is_monotone(n in 2usize..10_000_000, beta in 0.0..3.0f64, s in 0u32..6) {
        let v = choose_vn_polynomial(n, beta, s).unwrap();
        prop_assert!(choose_vn_polynomial(n + n / 2 + 1, beta, s).unwrap() > v);
        prop_assert!(choose_vn_polynomial(n, beta, s + 1).unwrap() < v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn samplers_are_deterministic(seed in any::<u64>()) {
        let model = SubordinatorModel::trunc_norm_cp(1.0, 0.5, 0.1).unwrap();
        let policy = SeriesTruncationPolicy::default();
        prop_assert_eq!(sample_gamma_case(200, 0.7, 0.2, seed).unwrap(), sample_gamma_case(200, 0.7, 0.2, seed).unwrap());
        prop_assert_eq!(sample_beta_case(200, 0.7, 0.2, 1.8, seed).unwrap(), sample_beta_case(200, 0.7, 0.2, 1.8, seed).unwrap());
        prop_assert_eq!(sample_series_cp(50, &model, &policy, seed).unwrap(), sample_series_cp(50, &model, &policy, seed).unwrap());
    }

    #[test]
    fn beta_samples_respect_support(seed in any::<u64>(), mu in 0.1..5.0f64, a in 0.05..5.0f64, b in 0.0..3.0f64) {
        let s = sample_beta_case(500, a, b, mu, seed).unwrap();
        prop_assert!(s.values().iter().all(|&x| x > 0.0 && x <= 1.0 / mu));
    }
}
