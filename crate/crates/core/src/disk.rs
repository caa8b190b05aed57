//! The model problem on the unit disk: radial profiles g_k(r, μ), the
//! boundary equation for μ, weighted and H⁺ inner products, ODE residuals,
//! basis expansions and the eigenvalue decay fit.
//!
//! The coefficient is a₀⁽²⁾ = |z|^{2d}, the interior operator is ϑΔ and the
//! boundary operator is B = 2ϑ∂̄_ν + Ψ*Ψ with Ψ*Ψ acting on e^{ikφ} by the
//! symbol ψ_k. With κ = μ/√ϑ and p = |k|/(d+1) the bounded radial solutions
//! are g_k(r) = J_p(κ r^{d+1}/(d+1)), and μ is an eigenvalue when
//! r∂_r g − k g + (ψ_k/ϑ) g vanishes at r = 1.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_j_and_prime};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::quadrature::{QuadratureRule, DEFAULT_NODES};

/// Boundary symbol convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCoeffMode {
    /// c_k = (1 + k²)^{ρ/2} − k
    #[default]
    PaperEqUnit,
    /// c_k = 2(1 + k²)^{ρ/2} − k, from Ψ*Ψ = 2(1 − ∂²_φ)^{ρ/2}
    DerivedFromB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskModel {
    pub vartheta: f64,
    pub d: f64,
    pub rho: f64,
    pub mode: BoundaryCoeffMode,
}

impl Default for DiskModel {
    fn default() -> Self {
        Self { vartheta: 1.0, d: 0.0, rho: 0.0, mode: BoundaryCoeffMode::PaperEqUnit }
    }
}

impl DiskModel {
    pub fn new(vartheta: f64, d: f64, rho: f64, mode: BoundaryCoeffMode) -> Result<Self> {
        let m = Self { vartheta, d, rho, mode };
        m.validate()?;
        Ok(m)
    }

    /// ϑ = 1, default boundary mode.
    pub fn unit(d: f64, rho: f64) -> Result<Self> {
        Self::new(1.0, d, rho, BoundaryCoeffMode::PaperEqUnit)
    }

    pub fn with_mode(mut self, mode: BoundaryCoeffMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vartheta > 0.0) || !self.vartheta.is_finite() {
            return Err(Error::InvalidParameter(format!("vartheta = {} must be > 0", self.vartheta)));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidParameter(format!("weight exponent d = {} must be >= 0", self.d)));
        }
        if !(0.0..=0.5).contains(&self.rho) {
            return Err(Error::RhoOutOfRange { rho: self.rho });
        }
        Ok(())
    }

    /// Bessel order |k|/(d+1).
    pub fn order(&self, k: i64) -> f64 {
        k.unsigned_abs() as f64 / (self.d + 1.0)
    }

    /// ψ_k, the action of Ψ*Ψ on e^{ikφ}.
    pub fn psi_symbol(&self, k: i64) -> f64 {
        let base = (1.0 + (k * k) as f64).powf(self.rho / 2.0);
        match self.mode {
            BoundaryCoeffMode::PaperEqUnit => base,
            BoundaryCoeffMode::DerivedFromB => 2.0 * base,
        }
    }

    /// c_k = ψ_k/ϑ − k.
    pub fn boundary_coeff(&self, k: i64) -> f64 {
        self.psi_symbol(k) / self.vartheta - k as f64
    }

    fn kappa(&self, mu: f64) -> f64 {
        mu / self.vartheta.sqrt()
    }
}

/// g_k(r, μ) = J_{|k|/(d+1)}(μ r^{d+1}/(d+1)).
pub fn radial_profile(k: i64, d: f64, mu: f64, r: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("weight exponent d = {d} must be >= 0")));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("radius r = {r} outside [0, 1]")));
    }
    let p = k.unsigned_abs() as f64 / (d + 1.0);
    bessel_j(p, mu.abs() * r.powf(d + 1.0) / (d + 1.0))
}

/// κ J′_p(κ/(d+1)) + c_k J_p(κ/(d+1)), i.e. (r∂_r − k + ψ_k/ϑ) g_k at r = 1.
pub fn boundary_residual(model: &DiskModel, k: i64, mu: f64) -> Result<f64> {
    model.validate()?;
    let kappa = model.kappa(mu.abs());
    let (j, dj) = bessel_j_and_prime(model.order(k), kappa / (model.d + 1.0))?;
    let dj = if kappa == 0.0 { 0.0 } else { kappa * dj };
    Ok(dj + model.boundary_coeff(k) * j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialEigenpair {
    pub k: i64,
    pub nu: usize,
    pub mu: f64,
    /// λ² = −μ²
    pub lambda_sq: f64,
    /// √h_d(g, g) of the unnormalized profile g_k(·, μ)
    pub norm_hd: f64,
    pub residual: f64,
}

const ROOT_TOL: f64 = 1e-11;

struct Bracket {
    iters: usize,
}

impl Convergency<f64> for Bracket {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.iters
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn polish(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    match find_root_brent(lo, hi, &f, &mut Bracket { iters: 200 }) {
        Ok(x) if x > lo.min(hi) && x < lo.max(hi) => x,
        _ => bisect(lo, hi, &f),
    }
}

/// First `count` positive zeros of J_p.
fn bessel_zeros(p: f64, count: usize, t_max: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let f = |t: f64| bessel_j(p, t).expect("nonnegative order and argument");
    let step = PI / 4.0;
    // J_p has no zeros in (0, p]
    let mut t = p.max(step);
    let mut ft = f(t);
    let mut zeros = Vec::with_capacity(count);
    while zeros.len() < count {
        let next = t + step;
        if next > t_max {
            return Err((zeros.len(), t_max));
        }
        let fnext = f(next);
        if fnext == 0.0 {
            zeros.push(next);
            t = next + 1e-9;
            ft = f(t);
            continue;
        }
        if (ft > 0.0) != (fnext > 0.0) {
            zeros.push(polish(t, next, f));
        }
        t = next;
        ft = fnext;
    }
    Ok(zeros)
}

/// First `count` roots of the boundary equation for wavenumber k, increasing.
///
/// In the variable t = κ/(d+1) the residual is (d+1)tJ′_p(t) + c_k J_p(t). It
/// is positive near 0 and alternates in sign at the zeros of J_p, and tJ′_p/J_p
/// decreases between consecutive zeros, so each interval (j_{ν−1}, j_ν) with
/// j₀ = 0 holds exactly one root.
pub fn find_eigenvalues(model: &DiskModel, k: i64, count: usize) -> Result<Vec<RadialEigenpair>> {
    model.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let p = model.order(k);
    let ck = model.boundary_coeff(k);
    let dp1 = model.d + 1.0;
    let resid_t = |t: f64| {
        let (j, dj) = bessel_j_and_prime(p, t).expect("nonnegative order and argument");
        dp1 * t * dj + ck * j
    };
    let t_max = PI * (count as f64 + p / 2.0 + 4.0) + 20.0;
    let zeros = bessel_zeros(p, count, t_max).map_err(|(found, t_max)| Error::BracketingFailed {
        k,
        found,
        requested: count,
        t_max,
    })?;

    let mu_of = |t: f64| model.vartheta.sqrt() * dp1 * t;
    let quad = QuadratureRule::cached(DEFAULT_NODES)?;
    let mut out = Vec::with_capacity(count);
    for nu in 1..=count {
        let hi = zeros[nu - 1];
        let lo = if nu == 1 {
            let mut lo = 0.5 * hi;
            while lo > 1e-300 && !(resid_t(lo) > 0.0) {
                lo *= 0.5;
            }
            lo
        } else {
            zeros[nu - 2]
        };
        let (rlo, rhi) = (resid_t(lo), resid_t(hi));
        if rlo == 0.0 || (rlo > 0.0) == (rhi > 0.0) {
            return Err(Error::BracketingFailed { k, found: nu - 1, requested: count, t_max: hi });
        }
        let mut t = polish(lo, hi, resid_t);
        // Newton steps: R′(t) = −(d+1)(t − p²/t)J_p + c_k J′_p
        for _ in 0..3 {
            let (j, dj) = bessel_j_and_prime(p, t)?;
            let r = dp1 * t * dj + ck * j;
            let dr = -dp1 * (t - p * p / t) * j + ck * dj;
            if dr == 0.0 {
                break;
            }
            let cand = t - r / dr;
            if cand > lo && cand < hi && resid_t(cand).abs() < r.abs() {
                t = cand;
            } else {
                break;
            }
        }
        let mu = mu_of(t);
        let residual = boundary_residual(model, k, mu)?;
        if !(residual.abs() < ROOT_TOL) {
            return Err(Error::BracketingFailed { k, found: nu - 1, requested: count, t_max: hi });
        }
        let profile = RadialProfile::new(model, k, mu);
        let norm_hd = weighted_inner_rule(|r| profile.value(r), |r| profile.value(r), model.d, &quad).sqrt();
        out.push(RadialEigenpair { k, nu, mu, lambda_sq: -mu * mu, norm_hd, residual });
    }
    Ok(out)
}

/// Eigenpairs for every k in `ks`, `count` per k, in input order.
pub fn find_eigenvalues_many(model: &DiskModel, ks: &[i64], count: usize) -> Result<Vec<Vec<RadialEigenpair>>> {
    ks.par_iter().map(|&k| find_eigenvalues(model, k, count)).collect()
}

/// Evaluable radial profile s ↦ scale·J_p(s), s = a r^{d+1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub k: i64,
    pub d: f64,
    pub p: f64,
    pub a: f64,
    pub scale: f64,
}

impl RadialProfile {
    /// Unnormalized g_k(·, μ) for the model.
    pub fn new(model: &DiskModel, k: i64, mu: f64) -> Self {
        Self { k, d: model.d, p: model.order(k), a: model.kappa(mu.abs()) / (model.d + 1.0), scale: 1.0 }
    }

    /// Profile of u = g(r)e^{ikφ} normalized to h(u, u) = 2π h_d(g, g) = 1.
    pub fn normalized(model: &DiskModel, pair: &RadialEigenpair) -> Self {
        let mut p = Self::new(model, pair.k, pair.mu);
        p.scale = 1.0 / (TAU.sqrt() * pair.norm_hd);
        p
    }

    fn j(&self, s: f64) -> (f64, f64) {
        bessel_j_and_prime(self.p, s).expect("nonnegative order and argument")
    }

    pub fn value(&self, r: f64) -> f64 {
        self.scale * self.j(self.a * r.powf(self.d + 1.0)).0
    }

    /// (g, g′, g″) at r > 0.
    pub fn derivatives(&self, r: f64) -> (f64, f64, f64) {
        let dp1 = self.d + 1.0;
        let s = self.a * r.powf(dp1);
        let (j, dj) = self.j(s);
        if s == 0.0 {
            return (self.scale * j, 0.0, 0.0);
        }
        // J″ = −J′/s − (1 − p²/s²)J
        let d2j = -dj / s - (1.0 - self.p * self.p / (s * s)) * j;
        let ds = dp1 * s / r;
        let d2s = self.d * ds / r;
        let g1 = dj * ds;
        let g2 = d2j * ds * ds + dj * d2s;
        (self.scale * j, self.scale * g1, self.scale * g2)
    }

    /// r g′ − k g at r = w^{2/(d+1)}, where s = a w².
    fn d_operator_w(&self, w: f64) -> f64 {
        let s = self.a * w * w;
        let jp = bessel_j(self.p, s).expect("nonnegative order and argument");
        let jp1 = bessel_j(self.p + 1.0, s).expect("nonnegative order and argument");
        let kk = self.k as f64;
        self.scale * ((kk.abs() - kk) * jp - (self.d + 1.0) * s * jp1)
    }

    fn value_w(&self, w: f64) -> f64 {
        self.scale * bessel_j(self.p, self.a * w * w).expect("nonnegative order and argument")
    }
}

fn r_of_w(w: f64, d: f64) -> f64 {
    w.powf(2.0 / (d + 1.0))
}

fn weighted_inner_rule(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, d: f64, quad: &QuadratureRule) -> f64 {
    // r = w^{2/(d+1)} turns r^{2d+1} dr into (2/(d+1)) w³ dw
    let s = quad.integrate(|w| {
        let r = r_of_w(w, d);
        w * w * w * f(r) * g(r)
    });
    2.0 / (d + 1.0) * s
}

/// h_d(f, g) = ∫₀¹ r^{2d+1} f(r) g(r) dr.
pub fn weighted_inner(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, d: f64, quad: &QuadratureRule) -> f64 {
    weighted_inner_rule(f, g, d, quad)
}

/// Radial profile values at the quadrature nodes, in the w variable.
fn sample_w(profile: &RadialProfile, quad: &QuadratureRule) -> Vec<f64> {
    quad.nodes.iter().map(|&w| profile.value_w(w)).collect()
}

/// Gram matrix [h(u_i, u_j)] of h-normalized eigenfunctions sharing one k.
pub fn radial_gram(model: &DiskModel, pairs: &[RadialEigenpair], quad: &QuadratureRule) -> Result<DMatrix<f64>> {
    if let Some(p) = pairs.iter().find(|p| p.k != pairs[0].k) {
        return Err(Error::InvalidParameter(format!("radial Gram needs one k, got {} and {}", pairs[0].k, p.k)));
    }
    let samples: Vec<Vec<f64>> =
        pairs.iter().map(|p| sample_w(&RadialProfile::normalized(model, p), quad)).collect();
    let dp1 = model.d + 1.0;
    let n = pairs.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let s: f64 = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .enumerate()
            .map(|(q, (&w, &wt))| wt * w * w * w * samples[i][q] * samples[j][q])
            .sum();
        TAU * 2.0 / dp1 * s
    }))
}

/// h(u, v) = ∫_D |z|^{2d} u v̄ dx for u = g_k e^{ikφ}, v = g_{k′} e^{ik′φ}, both
/// h-normalized.
pub fn h_inner(model: &DiskModel, a: &RadialEigenpair, b: &RadialEigenpair, quad: &QuadratureRule) -> f64 {
    if a.k != b.k {
        return 0.0;
    }
    let (pa, pb) = (RadialProfile::normalized(model, a), RadialProfile::normalized(model, b));
    TAU * weighted_inner_rule(|r| pa.value(r), |r| pb.value(r), model.d, quad)
}

/// (u, v)₊ = 4ϑ(∂̄u, ∂̄v)_{L²(D)} + (Ψu, Ψv)_{L²(∂D)} for h-normalized
/// eigenfunctions.
///
/// With ∂̄(g e^{ikφ}) = ½ e^{i(k+1)φ}(g′ − kg/r) the area term is
/// 2πϑ∫₀¹ (rg₁′ − kg₁)(rg₂′ − kg₂) dr/r and the boundary term is 2πψ_k g₁(1)g₂(1).
pub fn hplus_inner(model: &DiskModel, a: &RadialEigenpair, b: &RadialEigenpair, quad: &QuadratureRule) -> C64 {
    if a.k != b.k {
        return c(0.0, 0.0);
    }
    let (pa, pb) = (RadialProfile::normalized(model, a), RadialProfile::normalized(model, b));
    let dp1 = model.d + 1.0;
    // dr/r = (2/(d+1)) dw/w
    let area = 2.0 / dp1 * quad.integrate(|w| pa.d_operator_w(w) * pb.d_operator_w(w) / w);
    let boundary = model.psi_symbol(a.k) * pa.value(1.0) * pb.value(1.0);
    c(TAU * (model.vartheta * area + boundary), 0.0)
}

/// Max over the nodes of |ϑ(rg″ + g′ − k²g/r) + μ²r^{2d+1}g| divided by the
/// largest term magnitude, for user-supplied g, g′, g″.
pub fn ode_residual_with(
    model: &DiskModel,
    k: i64,
    mu: f64,
    g: impl Fn(f64) -> (f64, f64, f64),
    r_nodes: &[f64],
) -> Result<f64> {
    let kk = (k * k) as f64;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &r in r_nodes {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!("ODE node r = {r} outside (0, 1]")));
        }
        let (g0, g1, g2) = g(r);
        let terms = [
            model.vartheta * r * g2,
            model.vartheta * g1,
            -model.vartheta * kk * g0 / r,
            mu * mu * r.powf(2.0 * model.d + 1.0) * g0,
        ];
        worst = worst.max(terms.iter().sum::<f64>().abs());
        scale = scale.max(terms.iter().fold(0.0, |m, t| m.max(t.abs())));
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// Relative ODE residual of the closed-form profile of `pair`.
pub fn ode_residual(model: &DiskModel, pair: &RadialEigenpair, r_nodes: &[f64]) -> Result<f64> {
    let profile = RadialProfile::new(model, pair.k, pair.mu);
    ode_residual_with(model, pair.k, pair.mu, |r| profile.derivatives(r), r_nodes)
}

/// `count` equispaced nodes in [0.05, 0.999].
pub fn ode_nodes(count: usize) -> Vec<f64> {
    let (lo, hi) = (0.05, 0.999);
    if count <= 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionCoefficient {
    pub k: i64,
    pub nu: usize,
    pub mu: f64,
    pub coefficient: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub coefficients: Vec<ExpansionCoefficient>,
    /// ‖f − Pf‖_h / ‖f‖_h (0 when f = 0)
    pub remainder: f64,
    pub f_norm: f64,
    /// remainder after keeping ν ≤ n for all |k| ≤ K, n = 1..=N
    pub remainder_by_n: Vec<f64>,
}

/// Polar tensor grid: Gauss–Legendre in w, trapezoid in φ.
struct DiskGrid {
    quad: std::sync::Arc<QuadratureRule>,
    radii: Vec<f64>,
    angles: usize,
    /// (2/(d+1)) w³ γ_q · 2π/M
    weights: Vec<f64>,
}

impl DiskGrid {
    fn new(d: f64, angles: usize) -> Result<Self> {
        let quad = QuadratureRule::cached(DEFAULT_NODES)?;
        let radii = quad.nodes.iter().map(|&w| r_of_w(w, d)).collect();
        let weights = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(&w, &g)| 2.0 / (d + 1.0) * w * w * w * g * TAU / angles as f64)
            .collect();
        Ok(Self { quad, radii, angles, weights })
    }

    fn phi(&self, j: usize) -> f64 {
        TAU * j as f64 / self.angles as f64
    }
}

/// Projection of f(r, φ) onto the h-normalized eigenfunctions with |k| ≤ K and
/// ν ≤ N, using h(f, u) = ∫ |z|^{2d} f ū dx.
pub fn expand_function(
    model: &DiskModel,
    f: impl Fn(f64, f64) -> C64 + Sync,
    kmax: usize,
    nmax: usize,
) -> Result<Expansion> {
    model.validate()?;
    if nmax == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let ks: Vec<i64> = (-(kmax as i64)..=kmax as i64).collect();
    let spectra = find_eigenvalues_many(model, &ks, nmax)?;
    let grid = DiskGrid::new(model.d, (4 * kmax + 16).max(64))?;
    let m = grid.angles;
    let values: Vec<Vec<C64>> = grid
        .radii
        .par_iter()
        .map(|&r| (0..m).map(|j| f(r, grid.phi(j))).collect())
        .collect();
    let f_norm_sq: f64 = values
        .iter()
        .zip(&grid.weights)
        .map(|(row, &w)| w * row.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum();

    // basis radial samples, per (k, ν)
    let profiles: Vec<Vec<Vec<f64>>> = spectra
        .iter()
        .map(|pairs| pairs.iter().map(|p| sample_w(&RadialProfile::normalized(model, p), &grid.quad)).collect())
        .collect();
    let phases: Vec<Vec<C64>> =
        ks.iter().map(|&k| (0..m).map(|j| C64::from_polar(1.0, k as f64 * grid.phi(j))).collect()).collect();

    let mut coefficients = Vec::new();
    let mut coef = vec![vec![c(0.0, 0.0); nmax]; ks.len()];
    for (ki, pairs) in spectra.iter().enumerate() {
        for (ni, pair) in pairs.iter().enumerate() {
            let mut s = c(0.0, 0.0);
            for (q, row) in values.iter().enumerate() {
                let ang: C64 = row.iter().zip(&phases[ki]).map(|(v, e)| v * e.conj()).sum();
                s += grid.weights[q] * profiles[ki][ni][q] * ang;
            }
            coef[ki][ni] = s;
            coefficients.push(ExpansionCoefficient { k: pair.k, nu: pair.nu, mu: pair.mu, coefficient: s });
        }
    }

    let remainder_for = |n: usize| -> f64 {
        let mut err = 0.0;
        for (q, row) in values.iter().enumerate() {
            let mut sq = 0.0;
            for (j, v) in row.iter().enumerate() {
                let mut pf = c(0.0, 0.0);
                for ki in 0..ks.len() {
                    let radial: C64 = (0..n).map(|ni| coef[ki][ni] * profiles[ki][ni][q]).sum();
                    pf += radial * phases[ki][j];
                }
                sq += (v - pf).norm_sqr();
            }
            err += grid.weights[q] * sq;
        }
        err
    };
    let remainder_by_n: Vec<f64> = (1..=nmax)
        .into_par_iter()
        .map(|n| if f_norm_sq == 0.0 { 0.0 } else { (remainder_for(n) / f_norm_sq).sqrt() })
        .collect();
    Ok(Expansion {
        coefficients,
        remainder: *remainder_by_n.last().expect("nmax >= 1"),
        f_norm: f_norm_sq.sqrt(),
        remainder_by_n,
    })
}

/// One scattered sample f(x) at x = (x₁, x₂) in the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSample {
    pub x: [f64; 2],
    pub value: C64,
}

/// Weighted least-squares fit of scattered samples by the eigenfunctions with
/// |k| ≤ K and ν ≤ N, with weights |x|^{2d}. The remainder is the weighted
/// discrete residual norm relative to the weighted data norm.
pub fn expand_samples(model: &DiskModel, samples: &[DiskSample], kmax: usize, nmax: usize) -> Result<Expansion> {
    model.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if nmax == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.x[0].hypot(s.x[1]) > 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("sample ({}, {}) outside the unit disk", s.x[0], s.x[1])));
    }
    let ks: Vec<i64> = (-(kmax as i64)..=kmax as i64).collect();
    let spectra = find_eigenvalues_many(model, &ks, nmax)?;
    let pairs: Vec<RadialEigenpair> = spectra.into_iter().flatten().collect();
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| {
            let r = s.x[0].hypot(s.x[1]).min(1.0);
            if model.d == 0.0 { 1.0 } else { r.powf(model.d) }
        })
        .collect();
    let design = CMatrix::from_fn(samples.len(), pairs.len(), |i, j| {
        let s = &samples[i];
        let r = s.x[0].hypot(s.x[1]).min(1.0);
        let phi = s.x[1].atan2(s.x[0]);
        let g = RadialProfile::normalized(model, &pairs[j]).value(r);
        C64::from_polar(weights[i] * g, pairs[j].k as f64 * phi)
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().zip(&weights).map(|(s, &w)| s.value * w));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let coef = svd
        .solve(&rhs, 1e-12 * smax.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    let data_norm = rhs.norm();
    let mut remainder_by_n = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let mut truncated = coef.clone();
        for (j, p) in pairs.iter().enumerate() {
            if p.nu > n {
                truncated[j] = c(0.0, 0.0);
            }
        }
        let res = (&design * &truncated - &rhs).norm();
        remainder_by_n.push(if data_norm == 0.0 { 0.0 } else { res / data_norm });
    }
    let coefficients = pairs
        .iter()
        .zip(coef.iter())
        .map(|(p, &v)| ExpansionCoefficient { k: p.k, nu: p.nu, mu: p.mu, coefficient: v })
        .collect();
    Ok(Expansion {
        coefficients,
        remainder: *remainder_by_n.last().expect("nmax >= 1"),
        f_norm: data_norm,
        remainder_by_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub count: usize,
    pub rank_range: (usize, usize),
    /// −(2ρ+1)/2
    pub expected_slope: f64,
}

pub const DECAY_MIN_COUNT: usize = 200;

/// Least-squares slope of log μ_fam against log rank, μ_fam = 1/μ² sorted
/// descending over all k ∈ 0..=kmax, on ranks [count/4, count].
pub fn decay_exponent_fit(model: &DiskModel, count: usize, kmax: usize) -> Result<DecayFit> {
    if count < DECAY_MIN_COUNT {
        return Err(Error::InsufficientSpectrum { required: DECAY_MIN_COUNT, requested: count });
    }
    model.validate()?;
    let ks: Vec<i64> = (0..=kmax as i64).collect();
    // each k contributes at most `count` of the smallest `count` values
    let spectra = find_eigenvalues_many(model, &ks, count)?;
    let mut fam: Vec<f64> = spectra.iter().flatten().map(|p| 1.0 / (p.mu * p.mu)).collect();
    fam.sort_by(|a, b| b.total_cmp(a));
    fam.truncate(count);
    let (slope, intercept) = loglog_fit(&fam, count / 4, count);
    Ok(DecayFit {
        slope,
        intercept,
        count,
        rank_range: ((count / 4).max(1), count),
        expected_slope: -(2.0 * model.rho + 1.0) / 2.0,
    })
}

/// Slope and intercept of log values[n−1] against log n for n in [lo, hi].
pub fn loglog_fit(values: &[f64], lo: usize, hi: usize) -> (f64, f64) {
    let lo = lo.max(1);
    let hi = hi.min(values.len());
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| ((n as f64).ln(), values[n - 1].ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
