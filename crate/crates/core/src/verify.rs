//! Property suites over the disk model, each producing a [`Report`].

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::disk::{decay_exponent_fit, expand_function, find_eigenvalues, h_inner, hplus_inner, radial_gram, DiskModel};
use crate::ellipticity::Ray;
use crate::error::{Error, Result};
use crate::family::{assemble_disk_family, characteristic_values, corner_check, moduli_grid, ray_scan, CornerMode, FamilyMatrices};
use crate::linalg::c;
use crate::perturb::CompactPerturbation;
use crate::quadrature::{QuadratureRule, DEFAULT_NODES};
use crate::report::{Check, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Orthogonality,
    Rayleigh,
    Completeness,
    Corners,
    Rayscan,
    Decay,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Orthogonality, Suite::Rayleigh, Suite::Completeness, Suite::Corners, Suite::Rayscan, Suite::Decay];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Orthogonality => "orthogonality",
            Suite::Rayleigh => "rayleigh",
            Suite::Completeness => "completeness",
            Suite::Corners => "corners",
            Suite::Rayscan => "rayscan",
            Suite::Decay => "decay",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    /// wavenumbers 0..=kmax (orthogonality) or −kmax..=kmax (rayleigh)
    pub kmax: usize,
    /// radial indices per k
    pub nu_count: usize,
    pub expand_k: usize,
    pub expand_n: usize,
    /// family truncation: |k| ≤ family_k, ν ≤ family_n
    pub family_k: usize,
    pub family_n: usize,
    pub seed: u64,
    pub perturbation_norm: f64,
    pub corner_eps: f64,
    pub perturbed_corner_eps: f64,
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_points: usize,
    pub decay_count: usize,
    pub decay_kmax: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            kmax: 5,
            nu_count: 10,
            expand_k: 2,
            expand_n: 20,
            family_k: 2,
            family_n: 6,
            seed: 0,
            perturbation_norm: 0.3,
            corner_eps: 1e-6,
            perturbed_corner_eps: 0.5,
            scan_lo: 1.0,
            scan_hi: 50.0,
            scan_points: 2000,
            decay_count: 300,
            decay_kmax: 15,
        }
    }
}

/// Runs one suite; failures inside the suite yield a partial report.
pub fn verify_suite(suite: Suite, model: &DiskModel, opts: &SuiteOptions) -> Report {
    let mut report = Report::new(serde_json::json!({
        "suite": suite.name(),
        "model": model,
        "options": opts,
    }));
    let result = match suite {
        Suite::Orthogonality => orthogonality(model, opts),
        Suite::Rayleigh => rayleigh(model, opts),
        Suite::Completeness => completeness(model, opts),
        Suite::Corners => corners(model, opts),
        Suite::Rayscan => rayscan(model, opts),
        Suite::Decay => decay(model, opts),
    };
    match result {
        Ok(checks) => report.checks = checks,
        Err(e) => report.fail(e),
    }
    report
}

fn orthogonality(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let quad = QuadratureRule::cached(DEFAULT_NODES)?;
    let (mut off, mut diag): (f64, f64) = (0.0, 0.0);
    for k in 0..=opts.kmax as i64 {
        let pairs = find_eigenvalues(model, k, opts.nu_count)?;
        let g = radial_gram(model, &pairs, &quad)?;
        for i in 0..pairs.len() {
            for j in 0..pairs.len() {
                if i == j {
                    diag = diag.max((g[(i, j)] - 1.0).abs());
                } else {
                    off = off.max(g[(i, j)].abs());
                }
            }
        }
    }
    Ok(vec![
        Check::at_most("gram_off_diagonal_max", off, 1e-8),
        Check::at_most("gram_diagonal_deviation", diag, 1e-10),
    ])
}

fn rayleigh(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let quad = QuadratureRule::cached(DEFAULT_NODES)?;
    let (mut worst, mut cross): (f64, f64) = (0.0, 0.0);
    for k in -(opts.kmax as i64)..=opts.kmax as i64 {
        let pairs = find_eigenvalues(model, k, opts.nu_count)?;
        for (i, p) in pairs.iter().enumerate() {
            let plus = hplus_inner(model, p, p, &quad);
            let rhs = p.mu * p.mu * h_inner(model, p, p, &quad);
            worst = worst.max((plus - c(rhs, 0.0)).norm() / rhs);
            for q in &pairs[i + 1..] {
                // ‖u‖₊ = μ‖u‖_h, so normalize the cross term by μμ′
                cross = cross.max(hplus_inner(model, p, q, &quad).norm() / (p.mu * q.mu));
            }
        }
    }
    Ok(vec![
        Check::at_most("rayleigh_relative_max", worst, 1e-6),
        Check::at_most("hplus_cross_max", cross, 1e-7),
    ])
}

fn monotone_ratio(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
}

fn completeness(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let one = expand_function(model, |_, _| c(1.0, 0.0), opts.expand_k, opts.expand_n)?;
    let rez = expand_function(model, |r, phi| c(r * phi.cos(), 0.0), opts.expand_k, opts.expand_n)?;
    let mut checks = Vec::new();
    for (name, e) in [("one", &one), ("re_z", &rez)] {
        let ratio = monotone_ratio(&e.remainder_by_n);
        let mut strict = Check::at_most(format!("{name}_remainder_ratio_max"), ratio, 1.0);
        strict.passed = ratio < 1.0;
        checks.push(strict.with_detail("max r(N+1)/r(N); strictly decreasing iff < 1"));
        checks.push(Check::at_most(format!("{name}_remainder_final"), e.remainder, 1e-2));
    }
    Ok(checks)
}

fn perturbed(family: &FamilyMatrices, opts: &SuiteOptions) -> Result<FamilyMatrices> {
    let dc = CompactPerturbation::new(opts.seed, opts.perturbation_norm)?.matrix(family.dim);
    family.clone().with_perturbations(None, Some(dc))
}

fn corners(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let base = assemble_disk_family(model, opts.family_k, opts.family_n, None)?;
    let cvs = characteristic_values(&base)?;
    let clean = corner_check(&cvs, opts.corner_eps, model.rho, 2, CornerMode::SelfAdjointCompact)?;
    let mut outliers = Vec::new();
    for n in [opts.family_n, opts.family_n + 10] {
        let fam = perturbed(&assemble_disk_family(model, opts.family_k, n, None)?, opts)?;
        let r = corner_check(&characteristic_values(&fam)?, opts.perturbed_corner_eps, model.rho, 2, CornerMode::SelfAdjointCompact)?;
        outliers.push(r.outliers.len());
    }
    let mut stable = Check::at_most("perturbed_outlier_count_change", outliers[0].abs_diff(outliers[1]) as f64, 0.0);
    stable.detail = Some(format!("outliers at N, N+10: {outliers:?}"));
    Ok(vec![Check::at_least("unperturbed_inside_fraction", clean.inside_fraction, 1.0), stable])
}

fn rayscan(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let family = assemble_disk_family(model, opts.family_k, opts.family_n, None)?;
    let grid = moduli_grid(opts.scan_lo, opts.scan_hi, opts.scan_points)?;
    let real = ray_scan(&family, Ray::new(0.0), &grid)?;

    let mut mus: Vec<f64> =
        family.basis.iter().map(|b| b.mu).filter(|&m| m > opts.scan_lo && m < opts.scan_hi).collect();
    mus.sort_by(f64::total_cmp);
    // close pairs need extra resolution so each gets its own local minimum
    let spacing = (opts.scan_hi - opts.scan_lo) / (opts.scan_points.max(2) - 1) as f64;
    let mut points = grid.clone();
    for w in mus.windows(2) {
        let gap = w[1] - w[0];
        if gap < 3.0 * spacing {
            let (lo, hi) = ((w[0] - spacing).max(opts.scan_lo), (w[1] + spacing).min(opts.scan_hi));
            let n = (((hi - lo) * 3.0 / gap).ceil() as usize + 1).min(20_000);
            points.extend(moduli_grid(lo, hi, n.max(2))?);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    let imag = ray_scan(&family, Ray::new(FRAC_PI_2), &points)?;
    let deep: Vec<f64> = imag.dips.iter().filter(|d| d.sigma_min < 1e-6).map(|d| d.modulus).collect();
    let mut mismatch: f64 = 0.0;
    for &mu in &mus {
        let best = deep.iter().map(|&t| (t - mu).abs() / mu).fold(f64::INFINITY, f64::min);
        mismatch = mismatch.max(best);
    }
    for &t in &deep {
        let best = mus.iter().map(|&mu| (t - mu).abs() / mu).fold(f64::INFINITY, f64::min);
        mismatch = mismatch.max(best);
    }
    let mut count = Check::at_most("dip_count_mismatch", deep.len().abs_diff(mus.len()) as f64, 0.0);
    count.detail = Some(format!("{} dips below 1e-6, {} roots in range", deep.len(), mus.len()));
    Ok(vec![
        Check::at_least("p1_real_ray", real.p1, 0.9),
        Check::at_least("q1_real_ray", real.q1, f64::MIN_POSITIVE),
        Check::at_most("dip_vs_mu_relative", mismatch, 1e-8),
        count,
    ])
}

fn decay(model: &DiskModel, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let fit = decay_exponent_fit(model, opts.decay_count, opts.decay_kmax)?;
    let dev = (fit.slope - fit.expected_slope).abs();
    Ok(vec![Check::at_most("decay_slope_deviation", dev, 0.2)
        .soft()
        .with_detail(format!("slope {:.4}, expected {:.4}", fit.slope, fit.expected_slope))])
}

/// Characteristic values of a family paired with the nearest ±iμ of its basis
/// labels: max relative distance.
pub fn bessel_recovery_error(family: &FamilyMatrices) -> Result<f64> {
    let cvs = characteristic_values(family)?;
    let mut worst: f64 = 0.0;
    for b in &family.basis {
        for target in [c(0.0, b.mu), c(0.0, -b.mu)] {
            let best = cvs.iter().map(|cv| (cv.lambda - target).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(best / b.mu);
        }
    }
    let unmatched = cvs.len() as i64 - 2 * family.basis.len() as i64;
    if unmatched != 0 {
        return Ok(f64::INFINITY);
    }
    Ok(worst)
}
