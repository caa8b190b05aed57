//! Coefficient data of the divergence-form operator: the Hermitian matrix
//! field 𝔄(x), the parameter coefficient a₀⁽²⁾(x), their factorization and
//! phase decomposition, and the complexification of the planar Lamé system.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_deviation, CMatrix, C64};

pub type MatrixField = Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;
pub type RealScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Moduli below this are treated as zeros of a₀⁽²⁾ (phase undefined).
pub const ZERO_MODULUS: f64 = 1e-14;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_CLAMP: f64 = 1e-12;
const PSD_REJECT: f64 = 1e-8;

/// Second-order coefficient field 𝔄(x), parameter coefficient a₀⁽²⁾(x) and the
/// finite sample set on which pointwise conditions are audited.
#[derive(Clone)]
pub struct EllipticCoefficients {
    n: usize,
    a: MatrixField,
    a02: ScalarField,
    samples: Vec<Vec<f64>>,
}

impl std::fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticCoefficients")
            .field("n", &self.n)
            .field("samples", &self.samples.len())
            .finish()
    }
}

impl EllipticCoefficients {
    /// Builds the coefficient set and checks that 𝔄 is Hermitian and
    /// positive semidefinite at every sample.
    pub fn new(n: usize, a: MatrixField, a02: ScalarField, samples: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension n must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|x| x.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "sample of length {} in dimension {n}",
                bad.len()
            )));
        }
        let coeffs = Self { n, a, a02, samples };
        for x in &coeffs.samples {
            let m = (coeffs.a)(x);
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "A(x) is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_hermitian(&m)?;
            let scale = m.norm().max(f64::MIN_POSITIVE);
            let min_ev = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
            if min_ev < -PSD_CLAMP * scale {
                return Err(Error::NotPsd { min_eigenvalue: min_ev });
            }
        }
        Ok(coeffs)
    }

    /// 𝔄 constant, a₀⁽²⁾ constant.
    pub fn constant(a: CMatrix, a02: C64, samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.nrows();
        Self::new(n, Arc::new(move |_| a.clone()), Arc::new(move |_| a02), samples)
    }

    /// The disk model: 𝔄 = I₂, a₀⁽²⁾(z) = |z|^{2d}.
    pub fn monomial(d: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(d >= 0.0) {
            return Err(Error::InvalidParameter(format!("weight exponent d = {d} must be >= 0")));
        }
        Self::new(
            2,
            Arc::new(|_| CMatrix::identity(2, 2)),
            Arc::new(move |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                c(if d == 0.0 { 1.0 } else { r2.powf(d) }, 0.0)
            }),
            samples,
        )
    }

    /// 𝔄 = I₂ and a₀⁽²⁾ = m·exp(iφ(x)) with φ linear in x₁ from `phi_start`
    /// (x₁ = −1) to `phi_end` (x₁ = 1). Samples are sorted by x₁ so the
    /// sample-order unwrapping follows the ramp.
    pub fn phase_ramp(modulus: f64, phi_start: f64, phi_end: f64, mut samples: Vec<Vec<f64>>) -> Result<Self> {
        samples.sort_by(|p, q| p[0].total_cmp(&q[0]));
        Self::new(
            2,
            Arc::new(|_| CMatrix::identity(2, 2)),
            Arc::new(move |x| {
                let phi = phi_start + (phi_end - phi_start) * (x[0] + 1.0) / 2.0;
                C64::from_polar(modulus, phi)
            }),
            samples,
        )
    }

    /// Coefficients given only at tabulated points; evaluators return the
    /// value of the nearest tabulated point.
    pub fn tabulated(table: Vec<TabulatedSample>) -> Result<Self> {
        let first = table
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty coefficient table".into()))?;
        let n = first.x.len();
        let table = Arc::new(table);
        let nearest = {
            let table = Arc::clone(&table);
            move |x: &[f64]| -> usize {
                let mut best = (f64::INFINITY, 0);
                for (i, s) in table.iter().enumerate() {
                    let d2: f64 = s.x.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
                    if d2 < best.0 {
                        best = (d2, i);
                    }
                }
                best.1
            }
        };
        let nearest = Arc::new(nearest);
        let samples = table.iter().map(|s| s.x.clone()).collect();
        let (ta, na) = (Arc::clone(&table), Arc::clone(&nearest));
        let (tb, nb) = (Arc::clone(&table), nearest);
        Self::new(
            n,
            Arc::new(move |x| ta[na(x)].a.clone()),
            Arc::new(move |x| tb[nb(x)].a02),
            samples,
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn a_at(&self, x: &[f64]) -> CMatrix {
        (self.a)(x)
    }

    pub fn a02_at(&self, x: &[f64]) -> C64 {
        (self.a02)(x)
    }

    pub fn a02_samples(&self) -> Vec<C64> {
        self.samples.iter().map(|x| (self.a02)(x)).collect()
    }

    pub fn phase_decomposition(&self) -> Result<PhaseDecomposition> {
        polar_decompose(&self.a02_samples())
    }
}

/// One row of a tabulated coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSample {
    pub x: Vec<f64>,
    pub a: CMatrix,
    pub a02: C64,
}

/// Closed-form coefficient presets accepted in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientPreset {
    Constant {
        #[serde(default = "one")]
        a02_re: f64,
        #[serde(default)]
        a02_im: f64,
    },
    Monomial {
        d: f64,
    },
    PhaseRamp {
        #[serde(default = "one")]
        modulus: f64,
        phi_start: f64,
        phi_end: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl CoefficientPreset {
    pub fn build(&self, samples: Vec<Vec<f64>>) -> Result<EllipticCoefficients> {
        match *self {
            Self::Constant { a02_re, a02_im } => {
                EllipticCoefficients::constant(CMatrix::identity(2, 2), c(a02_re, a02_im), samples)
            }
            Self::Monomial { d } => EllipticCoefficients::monomial(d, samples),
            Self::PhaseRamp {
                modulus,
                phi_start,
                phi_end,
            } => EllipticCoefficients::phase_ramp(modulus, phi_start, phi_end, samples),
        }
    }
}

/// a₀⁽²⁾ = |a₀⁽²⁾|·exp(iφ₀) sampled, with φ₀ on a continuous branch along the
/// sample order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    pub modulus: Vec<f64>,
    /// `None` where |a₀⁽²⁾| < 1e−14.
    pub phi0: Vec<Option<f64>>,
    pub theta0: f64,
    pub theta0_argmin: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub phi: f64,
    pub undefined: Vec<usize>,
}

impl PhaseDecomposition {
    pub fn len(&self) -> usize {
        self.modulus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modulus.is_empty()
    }

    pub fn defined_count(&self) -> usize {
        self.len() - self.undefined.len()
    }

    /// Fraction of samples where a₀⁽²⁾ vanishes numerically.
    pub fn zero_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.undefined.len() as f64 / self.len() as f64
        }
    }

    pub fn recompose(&self, i: usize) -> Option<C64> {
        self.phi0[i].map(|p| C64::from_polar(self.modulus[i], p))
    }
}

/// Wraps an angle difference into (−π, π].
fn wrap_pi(x: f64) -> f64 {
    let mut y = x - TAU * (x / TAU).round();
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Moduli and unwrapped phases of sampled a₀⁽²⁾ values. Samples with modulus
/// below 1e−14 get an undefined phase, are excluded from Φ, and force θ₀ = 0.
pub fn polar_decompose(samples: &[C64]) -> Result<PhaseDecomposition> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let modulus: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
    let mut phi0 = Vec::with_capacity(samples.len());
    let mut undefined = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, z) in samples.iter().enumerate() {
        if modulus[i] < ZERO_MODULUS {
            undefined.push(i);
            phi0.push(None);
            continue;
        }
        let arg = z.arg();
        let phase = match prev {
            None => arg,
            Some(p) => p + wrap_pi(arg - p),
        };
        prev = Some(phase);
        phi0.push(Some(phase));
    }
    let (mut phi1, mut phi2) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in phi0.iter().flatten() {
        phi1 = phi1.min(*p);
        phi2 = phi2.max(*p);
    }
    if !phi1.is_finite() {
        phi1 = 0.0;
        phi2 = 0.0;
    }
    let (mut theta0, mut theta0_argmin) = (f64::INFINITY, 0);
    for (i, &m) in modulus.iter().enumerate() {
        if m < theta0 {
            theta0 = m;
            theta0_argmin = i;
        }
    }
    if !undefined.is_empty() {
        theta0 = 0.0;
        theta0_argmin = undefined[0];
    }
    Ok(PhaseDecomposition {
        modulus,
        phi0,
        theta0,
        theta0_argmin,
        phi1,
        phi2,
        phi: phi2 - phi1,
        undefined,
    })
}

/// As [`polar_decompose`], but any sample with undefined phase is an error.
pub fn polar_decompose_strict(samples: &[C64]) -> Result<PhaseDecomposition> {
    let decomp = polar_decompose(samples)?;
    match decomp.undefined.first() {
        Some(&first) => Err(Error::ZeroPhaseUndefined {
            count: decomp.undefined.len(),
            first,
        }),
        None => Ok(decomp),
    }
}

/// 𝔇 with 𝔇*𝔇 = source.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedMatrix {
    pub d: CMatrix,
    pub source: CMatrix,
}

impl FactorizedMatrix {
    /// ‖𝔇*𝔇 − A‖_F / ‖A‖_F.
    pub fn relative_reconstruction_error(&self) -> f64 {
        let scale = self.source.norm();
        let diff = (self.d.adjoint() * &self.d - &self.source).norm();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOL * a.norm().max(1.0) {
        return Err(Error::NonHermitian { deviation });
    }
    Ok(())
}

fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

/// Principal square root 𝔇 = √A of a Hermitian positive semidefinite matrix,
/// via the eigendecomposition. Eigenvalues above −1e−8‖A‖ are clamped to 0.
pub fn hermitian_sqrt(a: &CMatrix) -> Result<FactorizedMatrix> {
    check_hermitian(a)?;
    let scale = a.norm();
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let min_ev = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_ev < -PSD_REJECT * scale {
        return Err(Error::NotPsd { min_eigenvalue: min_ev });
    }
    let n = a.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let root = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= root;
        }
    }
    let d = scaled * eig.eigenvectors.adjoint();
    // symmetrize away roundoff so D is exactly Hermitian
    let d = (&d + d.adjoint()) * c(0.5, 0.0);
    Ok(FactorizedMatrix { d, source: a.clone() })
}

/// (U₁, U₂) as a function of position.
pub type RotationField = Arc<dyn Fn(&[f64]) -> (f64, f64) + Send + Sync>;

/// Planar Lamé-type coefficients: ϑ, α(x) ≥ 0 and the rotation field
/// U(x) = (U₁, −U₂; U₂, U₁), given through (U₁, U₂).
#[derive(Clone)]
pub struct LameModel {
    pub vartheta: f64,
    pub alpha: RealScalarField,
    pub rotation: RotationField,
}

impl LameModel {
    pub fn new(
        vartheta: f64,
        alpha: RealScalarField,
        rotation: RotationField,
    ) -> Result<Self> {
        if !(vartheta > 0.0) {
            return Err(Error::InvalidParameter(format!("vartheta = {vartheta} must be > 0")));
        }
        Ok(Self {
            vartheta,
            alpha,
            rotation,
        })
    }

    /// U(x) as a row-major 2×2 array.
    pub fn u_matrix(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let (u1, u2) = (self.rotation)(x);
        [[u1, -u2], [u2, u1]]
    }

    /// Checks α ≥ 0 and orthogonality of U at each sample.
    pub fn validate(&self, samples: &[Vec<f64>]) -> Result<()> {
        for x in samples {
            let alpha = (self.alpha)(x);
            if !(alpha >= 0.0) {
                return Err(Error::InvalidParameter(format!("alpha = {alpha} < 0 at {x:?}")));
            }
            let (u1, u2) = (self.rotation)(x);
            let dev = (u1 * u1 + u2 * u2 - 1.0).abs();
            if dev > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "U is not orthogonal at {x:?}: |U1^2 + U2^2 - 1| = {dev:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Scalar form of the complexified Lamé system: 4ϑ ∂̄*∂̄ + λ²a₀⁽²⁾.
#[derive(Clone)]
pub struct ComplexifiedLame {
    pub vartheta: f64,
    pub a02: ScalarField,
}

/// a₀⁽²⁾(x) = α(x)(U₁(x) + iU₂(x)).
pub fn complexify_lame(model: &LameModel) -> ComplexifiedLame {
    let alpha = Arc::clone(&model.alpha);
    let rotation = Arc::clone(&model.rotation);
    ComplexifiedLame {
        vartheta: model.vartheta,
        a02: Arc::new(move |x| {
            let (u1, u2) = rotation(x);
            c(u1, u2) * alpha(x)
        }),
    }
}

/// u = V₁ + iV₂.
pub fn complexify(v: (f64, f64)) -> C64 {
    c(v.0, v.1)
}

pub fn decomplexify(u: C64) -> (f64, f64) {
    (u.re, u.im)
}

pub fn complexify_field(v1: &[f64], v2: &[f64]) -> Result<Vec<C64>> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} components", v1.len(), v2.len())));
    }
    Ok(v1.iter().zip(v2).map(|(&a, &b)| c(a, b)).collect())
}

pub fn decomplexify_field(u: &[C64]) -> (Vec<f64>, Vec<f64>) {
    u.iter().map(|z| (z.re, z.im)).unzip()
}

/// First-order boundary operator 2×2 table: entry `[i][j]` holds the
/// coefficients of (∂₁, ∂₂).
pub type OperatorTable = [[[f64; 2]; 2]; 2];

/// The boundary stress tensor σ and its split σ = ϑ(σ̃ + 2∂_{τ₀}).
#[derive(Debug, Clone, PartialEq)]
pub struct StressCoefficients {
    pub vartheta: f64,
    pub normal: [f64; 2],
    pub sigma: OperatorTable,
    /// ∂_{τ₀} = (ν div)ᵀ − ν div, entries ν_j∂_i − ν_i∂_j.
    pub tau0: OperatorTable,
    pub sigma_tilde: OperatorTable,
}

/// σ_{ij} = ϑ(δ_{ij}∂/∂ν + ν_j∂/∂x_i − ν_i∂/∂x_j).
pub fn boundary_stress_coeffs(nu: [f64; 2], vartheta: f64) -> Result<StressCoefficients> {
    let norm = nu[0].hypot(nu[1]);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitNormal { norm });
    }
    let mut sigma = [[[0.0; 2]; 2]; 2];
    let mut tau0 = [[[0.0; 2]; 2]; 2];
    let mut sigma_tilde = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut t = [0.0; 2];
            t[i] += nu[j];
            t[j] -= nu[i];
            let mut s = t;
            if i == j {
                s[0] += nu[0];
                s[1] += nu[1];
            }
            tau0[i][j] = t;
            sigma[i][j] = [vartheta * s[0], vartheta * s[1]];
            sigma_tilde[i][j] = [s[0] - 2.0 * t[0], s[1] - 2.0 * t[1]];
        }
    }
    Ok(StressCoefficients {
        vartheta,
        normal: nu,
        sigma,
        tau0,
        sigma_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::disk_samples;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let b = CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        b.adjoint() * b
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = CMatrix::identity(2, 2);
        let f = hermitian_sqrt(&id).unwrap();
        assert!((&f.d - &id).norm() < 1e-15);
        let diag = crate::linalg::real_diag(&[4.0, 1.0]);
        let f = hermitian_sqrt(&diag).unwrap();
        assert!((&f.d - crate::linalg::real_diag(&[2.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn sqrt_reconstructs_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_psd(&mut rng, 6);
        let f = hermitian_sqrt(&a).unwrap();
        assert!(f.relative_reconstruction_error() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_sqrt(&non_herm), Err(Error::NonHermitian { .. })));
        let indefinite = crate::linalg::real_diag(&[1.0, -1.0]);
        assert!(matches!(hermitian_sqrt(&indefinite), Err(Error::NotPsd { .. })));
        // roundoff-scale negativity is clamped
        let nearly = crate::linalg::real_diag(&[1.0, -1e-13]);
        assert!(hermitian_sqrt(&nearly).is_ok());
    }

    #[test]
    fn polar_constant_and_two_phases() {
        let d = polar_decompose(&[c(1.0, 0.0); 5]).unwrap();
        assert_eq!(d.phi, 0.0);
        assert_eq!(d.theta0, 1.0);
        assert!(d.phi0.iter().all(|p| *p == Some(0.0)));

        let d = polar_decompose(&[C64::from_polar(1.0, 0.1), C64::from_polar(1.0, 0.3)]).unwrap();
        assert!((d.phi - 0.2).abs() < 1e-15);
        assert!((d.theta0 - 1.0).abs() < 1e-15);
    }

    /// Exhaustive search over 2π-branch choices minimizing the total variation
    /// of the phase sequence; returns the resulting oscillation Φ.
    fn brute_force_branch_phi(samples: &[C64]) -> f64 {
        let args: Vec<f64> = samples.iter().map(|z| z.arg()).collect();
        let n = args.len();
        let shifts = [-2i32, -1, 0, 1, 2];
        let mut best = (f64::INFINITY, 0.0);
        let total = shifts.len().pow(n as u32 - 1);
        for code in 0..total {
            let mut seq = vec![args[0]];
            let mut rem = code;
            for &a in &args[1..] {
                let s = shifts[rem % shifts.len()];
                rem /= shifts.len();
                seq.push(a + TAU * s as f64);
            }
            let tv: f64 = seq.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            if tv < best.0 - 1e-12 {
                let lo = seq.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = seq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                best = (tv, hi - lo);
            }
        }
        best.1
    }

    #[test]
    fn polar_unwraps_across_pi() {
        let samples: Vec<C64> = (0..6).map(|i| C64::from_polar(1.0, 3.0 + 0.1 * i as f64)).collect();
        let d = polar_decompose(&samples).unwrap();
        assert!((d.phi - 0.5).abs() < 1e-12, "phi = {}", d.phi);
        assert!((brute_force_branch_phi(&samples) - d.phi).abs() < 1e-12);
    }

    #[test]
    fn polar_zero_samples() {
        let d = polar_decompose(&[c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(d.theta0, 0.0);
        assert_eq!(d.undefined, vec![0]);
        assert_eq!(d.phi, 0.0);
        assert!(matches!(
            polar_decompose_strict(&[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::ZeroPhaseUndefined { count: 1, first: 1 })
        ));
        assert_eq!(polar_decompose(&[]), Err(Error::EmptySamples));
    }

    #[test]
    fn lame_complexification() {
        let identity = LameModel::new(1.0, Arc::new(|_| 1.0), Arc::new(|_| (1.0, 0.0))).unwrap();
        assert_eq!((complexify_lame(&identity).a02)(&[0.3, 0.2]), c(1.0, 0.0));
        let quarter = LameModel::new(1.0, Arc::new(|_| 2.0), Arc::new(|_| (0.0, 1.0))).unwrap();
        assert_eq!((complexify_lame(&quarter).a02)(&[0.0, 0.0]), c(0.0, 2.0));
        assert_eq!(complexify((1.0, 0.0)), c(1.0, 0.0));
        assert_eq!(decomplexify(complexify((1.0, 0.0))), (1.0, 0.0));
        assert_eq!(decomplexify(c(0.0, 1.0)), (0.0, 1.0));
        assert_eq!(decomplexify(c(3.0, -4.0)), (3.0, -4.0));
        let skew = LameModel::new(1.0, Arc::new(|_| 1.0), Arc::new(|_| (1.0, 1.0))).unwrap();
        assert!(skew.validate(&[vec![0.0, 0.0]]).is_err());
        assert!(LameModel::new(0.0, Arc::new(|_| 1.0), Arc::new(|_| (1.0, 0.0))).is_err());
    }

    #[test]
    fn stress_table_for_first_axis() {
        let s = boundary_stress_coeffs([1.0, 0.0], 2.0).unwrap();
        assert_eq!(s.sigma[0][0], [2.0, 0.0]);
        assert_eq!(s.sigma[0][1], [0.0, -2.0]);
        assert_eq!(s.sigma[1][0], [0.0, 2.0]);
        assert_eq!(s.sigma[1][1], [2.0, 0.0]);
        // normal trace row: σ₁₁ = ϑ ∂/∂ν
        assert_eq!(s.sigma[0][0], [2.0 * s.normal[0], 2.0 * s.normal[1]]);
        assert!(matches!(
            boundary_stress_coeffs([1.0, 1.0], 1.0),
            Err(Error::NotUnitNormal { .. })
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn stress_split_and_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t: f64 = rng.random::<f64>() * TAU;
            let nu = [t.cos(), t.sin()];
            let theta = 0.5 + rng.random::<f64>();
            let s = boundary_stress_coeffs(nu, theta).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        // σ − ϑ∂_ν I is antisymmetric and equals ϑ∂_{τ₀}
                        let delta = if i == j { theta * nu[l] } else { 0.0 };
                        let a = s.sigma[i][j][l] - delta;
                        let b = s.sigma[j][i][l] - if i == j { theta * nu[l] } else { 0.0 };
                        assert!((a + b).abs() < 1e-14);
                        assert!((a - theta * s.tau0[i][j][l]).abs() < 1e-14);
                        // σ − σᵀ = 2ϑ∂_{τ₀}
                        let anti = s.sigma[i][j][l] - s.sigma[j][i][l];
                        assert!((anti - 2.0 * theta * s.tau0[i][j][l]).abs() < 1e-14);
                        // σ = ϑ(σ̃ + 2∂_{τ₀})
                        let rebuilt = theta * (s.sigma_tilde[i][j][l] + 2.0 * s.tau0[i][j][l]);
                        assert!((rebuilt - s.sigma[i][j][l]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn coefficient_presets_validate() {
        let pts = disk_samples(100, true);
        let m = EllipticCoefficients::monomial(0.5, pts.clone()).unwrap();
        assert_eq!(m.a02_at(&[0.0, 0.0]), c(0.0, 0.0));
        assert!((m.a02_at(&[0.6, 0.8]).re - 1.0).abs() < 1e-15);
        let bad = EllipticCoefficients::constant(crate::linalg::real_diag(&[1.0, -1.0]), c(1.0, 0.0), pts.clone());
        assert!(matches!(bad, Err(Error::NotPsd { .. })));
        let ramp = EllipticCoefficients::phase_ramp(1.0, -2.0, 2.0, pts).unwrap();
        let d = ramp.phase_decomposition().unwrap();
        assert!(d.phi <= 4.0 + 1e-12 && d.phi > 3.5);
    }

    #[test]
    fn tabulated_lookup() {
        let table = vec![
            TabulatedSample {
                x: vec![0.0, 0.0],
                a: CMatrix::identity(2, 2),
                a02: c(1.0, 0.0),
            },
            TabulatedSample {
                x: vec![0.5, 0.0],
                a: CMatrix::identity(2, 2),
                a02: c(0.0, 2.0),
            },
        ];
        let t = EllipticCoefficients::tabulated(table).unwrap();
        assert_eq!(t.a02_at(&[0.4, 0.1]), c(0.0, 2.0));
        assert_eq!(t.a02_samples().len(), 2);
    }

    proptest! {
        #[test]
        fn sqrt_is_idempotent_on_psd(seed in 0u64..10_000, n in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d0 = hermitian_sqrt(&random_psd(&mut rng, n)).unwrap().d;
            let again = hermitian_sqrt(&(d0.adjoint() * &d0)).unwrap().d;
            prop_assert!((&again - &d0).norm() <= 1e-10 * d0.norm().max(1.0));
        }

        #[test]
        fn polar_recompose(values in proptest::collection::vec((0.01f64..10.0, -10.0f64..10.0), 1..40)) {
            let samples: Vec<C64> = values.iter().map(|&(m, p)| C64::from_polar(m, p)).collect();
            let d = polar_decompose(&samples).unwrap();
            prop_assert!(d.phi >= 0.0);
            for (i, z) in samples.iter().enumerate() {
                let back = d.recompose(i).unwrap();
                prop_assert!((back - z).norm() <= 1e-12 * z.norm());
            }
        }

        #[test]
        fn lame_modulus_is_alpha(alpha in 0.0f64..5.0, angle in -10.0f64..10.0) {
            let model = LameModel::new(1.0, Arc::new(move |_| alpha), Arc::new(move |_| (angle.cos(), angle.sin()))).unwrap();
            let x = [0.1, 0.2];
            model.validate(&[x.to_vec()]).unwrap();
            let a02 = (complexify_lame(&model).a02)(&x);
            prop_assert!((a02.norm() - alpha).abs() <= 1e-14 * alpha.max(1.0));
        }

        #[test]
        fn field_roundtrip(re in proptest::collection::vec(-5.0f64..5.0, 0..20)) {
            let im: Vec<f64> = re.iter().map(|v| v * 0.5 - 1.0).collect();
            let u = complexify_field(&re, &im).unwrap();
            let (a, b) = decomplexify_field(&u);
            prop_assert_eq!(a, re);
            prop_assert_eq!(b, im);
        }
    }
}
