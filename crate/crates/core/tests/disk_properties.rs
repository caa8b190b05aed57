use proptest::prelude::*;

use zs_core::bessel::bessel_j;
use zs_core::disk::{
    boundary_residual, expand_function, find_eigenvalues, loglog_fit, BoundaryCoeffMode, DiskModel, RadialProfile,
};
use zs_core::linalg::c;

fn model(d: f64, rho: f64, derived: bool) -> DiskModel {
    let m = DiskModel::unit(d, rho).unwrap();
    if derived { m.with_mode(BoundaryCoeffMode::DerivedFromB) } else { m }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn roots_interlace_with_bessel_zeros(d in 0.0..1.0f64, rho in 0.0..=0.5f64, k in -6i64..=6, derived: bool) {
        let m = model(d, rho, derived);
        let pairs = find_eigenvalues(&m, k, 8).unwrap();
        let p = m.order(k);
        for pair in &pairs {
            prop_assert!(pair.residual.abs() < 1e-11);
        }
        for w in pairs.windows(2) {
            prop_assert!(w[1].mu > w[0].mu);
            // a zero of J_p separates consecutive roots
            let to_t = |mu: f64| mu / (m.vartheta.sqrt() * (m.d + 1.0));
            let (a, b) = (to_t(w[0].mu), to_t(w[1].mu));
            let ja = bessel_j(p, a).unwrap();
            let jb = bessel_j(p, b).unwrap();
            prop_assert!(ja * jb < 0.0, "k = {k}: J_p({a}) = {ja}, J_p({b}) = {jb}");
        }
    }

    #[test]
    fn residual_changes_sign_at_each_root(d in 0.0..0.8f64, rho in 0.0..=0.5f64, k in 0i64..=4) {
        let m = model(d, rho, false);
        for pair in find_eigenvalues(&m, k, 6).unwrap() {
            let h = 1e-7 * pair.mu;
            let lo = boundary_residual(&m, k, pair.mu - h).unwrap();
            let hi = boundary_residual(&m, k, pair.mu + h).unwrap();
            prop_assert!(lo * hi < 0.0);
        }
    }

    #[test]
    fn basis_element_expands_to_itself(d in 0.0..0.6f64, rho in 0.0..=0.5f64, k in -2i64..=2, nu in 1usize..=4) {
        let m = model(d, rho, false);
        let pair = find_eigenvalues(&m, k, nu).unwrap().pop().unwrap();
        let profile = RadialProfile::normalized(&m, &pair);
        let f = |r: f64, phi: f64| c(0.0, k as f64 * phi).exp() * profile.value(r);
        let e = expand_function(&m, f, 2, 5).unwrap();
        prop_assert!(e.remainder < 1e-8);
        for coeff in &e.coefficients {
            let expect = if coeff.k == k && coeff.nu == nu { 1.0 } else { 0.0 };
            prop_assert!((coeff.coefficient - c(expect, 0.0)).norm() < 1e-8, "{coeff:?}");
        }
    }

    #[test]
    fn loglog_slope_ignores_scaling(scale in 1e-3..1e3f64, slope in -3.0..-0.1f64) {
        let values: Vec<f64> = (1..=400).map(|n| 2.0 * (n as f64).powf(slope)).collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let (a, _) = loglog_fit(&values, 100, 400);
        let (b, _) = loglog_fit(&scaled, 100, 400);
        prop_assert!((a - slope).abs() < 1e-10);
        prop_assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn remainder_shrinks_with_more_modes() {
    let m = model(0.0, 0.5, false);
    let f = |r: f64, phi: f64| c(1.0 - r * r + 0.3 * r * phi.sin(), 0.0);
    let small = expand_function(&m, f, 1, 8).unwrap();
    let large = expand_function(&m, f, 2, 16).unwrap();
    assert!(large.remainder <= small.remainder + 1e-14);
    assert!(small.remainder_by_n.windows(2).all(|w| w[1] <= w[0] + 1e-14));
}

#[test]
fn zero_function_has_zero_coefficients() {
    let e = expand_function(&model(0.25, 0.0, false), |_, _| c(0.0, 0.0), 2, 4).unwrap();
    assert!(e.coefficients.iter().all(|x| x.coefficient == c(0.0, 0.0)));
    assert_eq!(e.remainder, 0.0);
}
