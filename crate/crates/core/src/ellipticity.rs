//! Parameter-dependent ellipticity on rays arg λ = φ_Γ: symbol evaluation,
//! sampled audits of |a₀⁽²⁾| ≥ θ₀ and cos(φ₀ + 2φ_Γ) ≥ θ₁, the optimal ray for
//! a given phase oscillation, and the perturbation budgets.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{EllipticCoefficients, PhaseDecomposition};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Default "almost everywhere" threshold: at most this fraction of samples
/// may have a vanishing a₀⁽²⁾.
pub const AE_ZERO_FRACTION: f64 = 0.01;

/// The ray Γ = {arg λ = φ_Γ}, φ_Γ ∈ (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    phi_gamma: f64,
}

impl Ray {
    pub fn new(phi_gamma: f64) -> Self {
        let mut p = phi_gamma.rem_euclid(TAU);
        if p > PI {
            p -= TAU;
        }
        Self { phi_gamma: p }
    }

    pub fn angle(&self) -> f64 {
        self.phi_gamma
    }

    /// The point of modulus `modulus` on the ray.
    pub fn point(&self, modulus: f64) -> C64 {
        C64::from_polar(modulus, self.phi_gamma)
    }
}

/// First-order coefficients a_j⁽¹⁾(x), j = 1..n.
pub type FirstOrderCoefficients = Vec<Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>>;

/// Σ a_{ij}(x)ζ_iζ_j + λ Σ a_j⁽¹⁾(x)ζ_j + λ²a₀⁽²⁾(x).
pub fn symbol_eval(
    coeffs: &EllipticCoefficients,
    first_order: Option<&FirstOrderCoefficients>,
    x: &[f64],
    zeta: &[f64],
    lambda: C64,
) -> Result<C64> {
    let n = coeffs.dim();
    if zeta.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x has {} and zeta {} components in dimension {n}",
            x.len(),
            zeta.len()
        )));
    }
    let a = coeffs.a_at(x);
    let mut principal = C64::default();
    for i in 0..n {
        for j in 0..n {
            principal += a[(i, j)] * (zeta[i] * zeta[j]);
        }
    }
    let mut first = C64::default();
    if let Some(list) = first_order {
        if list.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} first-order coefficients in dimension {n}",
                list.len()
            )));
        }
        for (aj, &zj) in list.iter().zip(zeta) {
            first += aj(x) * zj;
        }
    }
    Ok(principal + lambda * first + lambda * lambda * coeffs.a02_at(x))
}

/// Sampled ellipticity audit on one ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayReport {
    pub phi_gamma: f64,
    pub theta0: f64,
    pub theta0_argmin: usize,
    pub theta1: f64,
    pub theta1_argmin: usize,
    pub eta: f64,
    pub zero_fraction: f64,
    /// |a₀⁽²⁾| ≥ θ₀ > 0 and θ₁ > −1.
    pub ok_strong: bool,
    /// a₀⁽²⁾ ≠ 0 off a negligible fraction of samples.
    pub ok_ae: bool,
}

impl RayReport {
    /// Hypotheses of the invertibility theorem on this ray: ok_ae and θ₁ > −1.
    pub fn elliptic_ae(&self) -> bool {
        self.ok_ae && self.theta1 > -1.0 + 1e-12
    }
}

pub fn check_ray(decomp: &PhaseDecomposition, ray: Ray) -> Result<RayReport> {
    check_ray_with(decomp, ray, AE_ZERO_FRACTION)
}

/// [`check_ray`] with a configurable almost-everywhere threshold.
pub fn check_ray_with(decomp: &PhaseDecomposition, ray: Ray, ae_fraction: f64) -> Result<RayReport> {
    let double = (2.0 * ray.angle()).rem_euclid(TAU);
    let mut theta1 = f64::INFINITY;
    let mut theta1_argmin = 0;
    for (i, p) in decomp.phi0.iter().enumerate() {
        if let Some(phase) = p {
            let v = (phase + double).cos();
            if v < theta1 {
                theta1 = v;
                theta1_argmin = i;
            }
        }
    }
    if !theta1.is_finite() {
        return Err(Error::EmptySamples);
    }
    let eta = (-theta1).clamp(0.0, 1.0);
    let zero_fraction = decomp.zero_fraction();
    Ok(RayReport {
        phi_gamma: ray.angle(),
        theta0: decomp.theta0,
        theta0_argmin: decomp.theta0_argmin,
        theta1,
        theta1_argmin,
        eta,
        zero_fraction,
        ok_strong: decomp.theta0 > 0.0 && theta1 > -1.0 + 1e-12,
        ok_ae: zero_fraction < ae_fraction,
    })
}

/// Γ₀ = {arg λ = −(Φ₂ + Φ₁)/4}; on it θ₁ ≥ cos(Φ/2).
pub fn optimal_ray(decomp: &PhaseDecomposition) -> Result<Ray> {
    if decomp.phi >= TAU {
        return Err(Error::OscillationTooLarge { phi: decomp.phi });
    }
    Ok(Ray::new(-(decomp.phi2 + decomp.phi1) / 4.0))
}

/// Inputs of the invertibility / completeness budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// ‖δ_s L‖; at matrix scale this is the discrete spectral norm.
    pub delta_s_norm: f64,
    pub rho: f64,
    pub n: usize,
    pub phi: f64,
}

impl Budget {
    pub fn new(delta_s_norm: f64, rho: f64, n: usize, phi: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&rho) {
            return Err(Error::RhoOutOfRange { rho });
        }
        if !(phi >= 0.0) || !(delta_s_norm >= 0.0) || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "budget needs phi >= 0, |delta_s| >= 0, n > 0 (got {phi}, {delta_s_norm}, {n})"
            )));
        }
        Ok(Self {
            delta_s_norm,
            rho,
            n,
            phi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetVerdict {
    /// ‖δ_s‖² + max(0, −cos(Φ/2))²
    pub invertibility_lhs: f64,
    /// ‖δ_s‖² + max(0, −cos((π(2ρ+1) − 2nΦ)/4n))²
    pub completeness_lhs: f64,
    /// π(2ρ+1)/(2n)
    pub phase_limit: f64,
    pub ok_inv: bool,
    pub ok_complete: bool,
    pub norm_kind: NormKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Discrete,
}

pub fn invertibility_budget(b: &Budget) -> BudgetVerdict {
    let s2 = b.delta_s_norm * b.delta_s_norm;
    let inv_term = (-(b.phi / 2.0).cos()).max(0.0);
    let invertibility_lhs = s2 + inv_term * inv_term;
    let n = b.n as f64;
    let phase_limit = PI * (2.0 * b.rho + 1.0) / (2.0 * n);
    let compl_term = (-((PI * (2.0 * b.rho + 1.0) - 2.0 * n * b.phi) / (4.0 * n)).cos()).max(0.0);
    let completeness_lhs = s2 + compl_term * compl_term;
    BudgetVerdict {
        invertibility_lhs,
        completeness_lhs,
        phase_limit,
        ok_inv: invertibility_lhs < 1.0,
        ok_complete: b.phi < phase_limit && completeness_lhs < 1.0,
        norm_kind: NormKind::Discrete,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    Lipschitz,
    C2,
}

/// Sobolev exponent s of the embedding H⁺ ⊂ Hˢ. `minus_epsilon` marks
/// s = value − ε for arbitrary ε > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingExponent {
    pub value: f64,
    pub minus_epsilon: bool,
}

pub fn embedding_exponent(rho: f64, boundary: BoundaryClass) -> Result<EmbeddingExponent> {
    if !(0.0..=0.5).contains(&rho) {
        return Err(Error::RhoOutOfRange { rho });
    }
    Ok(if rho > 0.0 {
        EmbeddingExponent {
            value: 0.5 + rho,
            minus_epsilon: false,
        }
    } else {
        EmbeddingExponent {
            value: 0.5,
            minus_epsilon: boundary == BoundaryClass::Lipschitz,
        }
    })
}

/// θ₁ and η for `count` equispaced rays in (−π, π].
pub fn scan_rays(decomp: &PhaseDecomposition, count: usize) -> Result<Vec<RayReport>> {
    (0..count)
        .map(|i| {
            let phi = -PI + TAU * (i as f64 + 1.0) / count as f64;
            check_ray(decomp, Ray::new(phi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::polar_decompose;
    use crate::linalg::{c, disk_samples, CMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_coeffs() -> EllipticCoefficients {
        EllipticCoefficients::constant(CMatrix::identity(2, 2), c(1.0, 0.0), vec![vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn symbol_examples() {
        let k = unit_coeffs();
        let x = [0.0, 0.0];
        assert_eq!(symbol_eval(&k, None, &x, &[1.0, 0.0], c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(symbol_eval(&k, None, &x, &[0.0, 0.0], c(1.0, 0.0)).unwrap(), k.a02_at(&x));
        assert_eq!(symbol_eval(&k, None, &x, &[1.0, 0.0], c(0.0, 1.0)).unwrap(), c(0.0, 0.0));
        let first: FirstOrderCoefficients = vec![Arc::new(|_| c(2.0, 0.0)), Arc::new(|_| c(0.0, 0.0))];
        assert_eq!(symbol_eval(&k, Some(&first), &x, &[1.0, 0.0], c(1.0, 0.0)).unwrap(), c(4.0, 0.0));
    }

    #[test]
    fn ray_examples() {
        let d = polar_decompose(&[c(1.0, 0.0); 3]).unwrap();
        let r = check_ray(&d, Ray::new(0.0)).unwrap();
        assert_eq!(r.theta1, 1.0);
        assert_eq!(r.eta, 0.0);
        assert!(r.ok_strong);

        let d = polar_decompose(&[c(0.0, 1.0); 3]).unwrap();
        let r = check_ray(&d, Ray::new(PI / 4.0)).unwrap();
        assert!((r.theta1 + 1.0).abs() < 1e-15);
        assert!(!r.ok_strong);

        let disk = EllipticCoefficients::monomial(0.5, disk_samples(1000, true)).unwrap();
        let r = check_ray(&disk.phase_decomposition().unwrap(), Ray::new(0.0)).unwrap();
        assert_eq!(r.theta0, 0.0);
        assert!(!r.ok_strong);
        assert!(r.ok_ae);
        assert!(r.elliptic_ae());
    }

    #[test]
    fn ray_normalization() {
        assert!((Ray::new(3.0 * PI / 2.0).angle() + PI / 2.0).abs() < 1e-15);
        assert_eq!(Ray::new(PI).angle(), PI);
        assert_eq!(Ray::new(-PI).angle(), PI);
    }

    #[test]
    fn optimal_ray_examples() {
        let d = polar_decompose(&[C64::from_polar(1.0, 0.7); 4]).unwrap();
        let g = optimal_ray(&d).unwrap();
        assert!((g.angle() + 0.35).abs() < 1e-15);
        assert!((check_ray(&d, g).unwrap().theta1 - 1.0).abs() < 1e-15);

        let samples: Vec<C64> = (0..=10).map(|i| C64::from_polar(1.0, PI / 2.0 * i as f64 / 10.0)).collect();
        let d = polar_decompose(&samples).unwrap();
        let g = optimal_ray(&d).unwrap();
        assert!((g.angle() + PI / 8.0).abs() < 1e-15);
        assert!(check_ray(&d, g).unwrap().theta1 >= (PI / 4.0).cos() - 1e-15);

        let wide: Vec<C64> = (0..=70).map(|i| C64::from_polar(1.0, 0.1 * i as f64)).collect();
        assert!(matches!(optimal_ray(&polar_decompose(&wide).unwrap()), Err(Error::OscillationTooLarge { .. })));
    }

    #[test]
    fn optimal_ray_beats_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let center: f64 = rng.random::<f64>() * 6.0 - 3.0;
            let width: f64 = rng.random::<f64>() * 1.5;
            let samples: Vec<C64> = (0..60)
                .map(|i| C64::from_polar(1.0, center + width * ((i as f64 * 0.37).sin())))
                .collect();
            let d = polar_decompose(&samples).unwrap();
            let best = check_ray(&d, optimal_ray(&d).unwrap()).unwrap().theta1;
            assert!(best >= (d.phi / 2.0).cos() - 1e-12);
            // Φ < π: no ray does better than Γ₀
            for r in scan_rays(&d, 10_000).unwrap() {
                assert!(r.theta1 <= best + 1e-12, "ray {} beats optimum: {} > {best}, phi={}, phi1={}, phi2={}", r.phi_gamma, r.theta1, d.phi, d.phi1, d.phi2);
            }
        }
    }

    #[test]
    fn budget_examples() {
        let v = invertibility_budget(&Budget::new(0.0, 0.3, 2, 0.0).unwrap());
        assert!(v.ok_inv && v.ok_complete);
        let v = invertibility_budget(&Budget::new(0.0, 0.0, 2, PI).unwrap());
        assert!(v.ok_inv);
        assert!(!v.ok_complete);
        // ‖δ_s‖ = 0.9, Φ = 2: cos(1) > 0 so the phase term vanishes.
        let v = invertibility_budget(&Budget::new(0.9, 0.0, 2, 2.0).unwrap());
        let lhs_hi = (0.9f64 * 0.9).next_up();
        assert!(v.invertibility_lhs <= lhs_hi && lhs_hi < 1.0);
        assert!(v.ok_inv);
        assert!(Budget::new(0.0, 0.6, 2, 0.0).is_err());
    }

    #[test]
    fn embedding_table() {
        let e = embedding_exponent(0.0, BoundaryClass::C2).unwrap();
        assert_eq!(e, EmbeddingExponent { value: 0.5, minus_epsilon: false });
        let e = embedding_exponent(0.0, BoundaryClass::Lipschitz).unwrap();
        assert!(e.minus_epsilon);
        assert_eq!(embedding_exponent(0.5, BoundaryClass::Lipschitz).unwrap().value, 1.0);
        assert_eq!(embedding_exponent(0.25, BoundaryClass::Lipschitz).unwrap().value, 0.75);
        assert!(matches!(embedding_exponent(-0.1, BoundaryClass::C2), Err(Error::RhoOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn eta_zero_iff_theta1_nonnegative(phases in proptest::collection::vec(-6.0f64..6.0, 1..30), phi in -4.0f64..4.0) {
            let samples: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
            let d = polar_decompose(&samples).unwrap();
            let r = check_ray(&d, Ray::new(phi)).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.eta));
            prop_assert_eq!(r.eta == 0.0, r.theta1 >= 0.0);
            let shifted = check_ray(&d, Ray::new(phi + PI)).unwrap();
            prop_assert!((shifted.theta1 - r.theta1).abs() < 1e-12);
            prop_assert!((shifted.eta - r.eta).abs() < 1e-12);
        }

        #[test]
        fn zero_zeta_gives_lambda_sq_a02(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let k = EllipticCoefficients::constant(CMatrix::identity(2, 2), c(0.3, -1.2), vec![]).unwrap();
            let lambda = c(re, im);
            let v = symbol_eval(&k, None, &[0.1, 0.2], &[0.0, 0.0], lambda).unwrap();
            prop_assert_eq!(v, lambda * lambda * c(0.3, -1.2));
        }
    }
}
