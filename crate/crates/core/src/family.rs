//! Finite sections of the family L(λ) = L₀ + δ_s + δ_c + λ²C in an
//! H⁺-orthonormal basis. H⁻ is identified with H⁺ through L₀, so L₀ = I and
//! the H⁻ norm is Euclidean.

use std::f64::consts::{FRAC_PI_2, PI};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use nalgebra::Schur;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{find_eigenvalues_many, DiskModel};
use crate::ellipticity::Ray;
use crate::error::{Error, Result};
use crate::linalg::{c, null_space, numerical_rank, real_diag, sigma_min, singular_values, spectral_norm, CMatrix, CVector, C64};
use crate::perturb::dense_random;

/// First-pass clustering tolerance for ζ = λ² (relative).
pub const CLUSTER_TOL: f64 = 1e-8;
/// Second pass: clusters this close are merged when the chain structure at
/// their mean accounts for the combined multiplicity.
pub const DEFECTIVE_CLUSTER_TOL: f64 = 1e-3;
const KERNEL_TOL: f64 = 1e-9;
const CHAIN_TOL: f64 = 1e-8;
const SOLVE_SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub k: i64,
    pub nu: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMatrices {
    pub dim: usize,
    pub l0: CMatrix,
    pub ds: CMatrix,
    pub dc: CMatrix,
    pub c: CMatrix,
    pub basis_tag: String,
    /// eigenfunction labels of the coordinate basis, when known
    pub basis: Vec<BasisLabel>,
}

impl FamilyMatrices {
    pub fn new(l0: CMatrix, ds: CMatrix, dc: CMatrix, cm: CMatrix, basis_tag: impl Into<String>) -> Result<Self> {
        let n = l0.nrows();
        for (name, m) in [("L0", &l0), ("Ds", &ds), ("Dc", &dc), ("C", &cm)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidFamily(format!("{name} has non-finite entries")));
            }
        }
        if n == 0 {
            return Err(Error::InvalidFamily("dimension must be >= 1".into()));
        }
        Ok(Self { dim: n, l0, ds, dc, c: cm, basis_tag: basis_tag.into(), basis: Vec::new() })
    }

    /// L₀ = I, no perturbation, C = diag(values).
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(CMatrix::identity(n, n), CMatrix::zeros(n, n), CMatrix::zeros(n, n), real_diag(values), "diagonal")
    }

    pub fn with_perturbations(mut self, ds: Option<CMatrix>, dc: Option<CMatrix>) -> Result<Self> {
        for m in [&ds, &dc].into_iter().flatten() {
            if m.nrows() != self.dim || m.ncols() != self.dim {
                return Err(Error::DimensionMismatch(format!(
                    "perturbation is {}x{}, family has dimension {}",
                    m.nrows(),
                    m.ncols(),
                    self.dim
                )));
            }
        }
        if let Some(ds) = ds {
            self.ds = ds;
        }
        if let Some(dc) = dc {
            self.dc = dc;
        }
        Ok(self)
    }

    /// L₀ + δ_s + δ_c.
    pub fn a(&self) -> CMatrix {
        &self.l0 + &self.ds + &self.dc
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        self.a() + &self.c * (lambda * lambda)
    }

    /// Taylor coefficients (F₀, F₁, F₂) of L at λ₀.
    pub fn taylor(&self, lambda0: C64) -> [CMatrix; 3] {
        [self.eval(lambda0), &self.c * (lambda0 * 2.0), self.c.clone()]
    }

    pub fn to_json(&self, encoding: MatrixEncoding) -> String {
        let enc = |m: &CMatrix| encode_matrix(m, encoding);
        let file = FamilyFile {
            dim: self.dim,
            basis_tag: self.basis_tag.clone(),
            encoding,
            l0: Some(enc(&self.l0)),
            ds: Some(enc(&self.ds)),
            dc: Some(enc(&self.dc)),
            c: enc(&self.c),
            basis: self.basis.clone(),
        };
        serde_json::to_string_pretty(&file).expect("family serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidFamily(format!("family JSON: {e}")))?;
        let n = file.dim;
        let dec = |s: &Option<String>, name: &str, default: CMatrix| match s {
            Some(s) => decode_matrix(s, n, file.encoding).map_err(|e| match e {
                Error::InvalidFamily(m) => Error::InvalidFamily(format!("{name}: {m}")),
                other => other,
            }),
            None => Ok(default),
        };
        let l0 = dec(&file.l0, "L0", CMatrix::identity(n, n))?;
        let ds = dec(&file.ds, "Ds", CMatrix::zeros(n, n))?;
        let dc = dec(&file.dc, "Dc", CMatrix::zeros(n, n))?;
        let cm = dec(&Some(file.c.clone()), "C", CMatrix::zeros(n, n))?;
        let mut f = Self::new(l0, ds, dc, cm, file.basis_tag)?;
        f.basis = file.basis;
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixEncoding {
    /// little-endian f64, interleaved (re, im), row-major
    #[default]
    Base64,
    /// one line per row: re,im,re,im,...
    Csv,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    dim: usize,
    #[serde(default)]
    basis_tag: String,
    #[serde(default)]
    encoding: MatrixEncoding,
    #[serde(rename = "L0", default)]
    l0: Option<String>,
    #[serde(rename = "Ds", default)]
    ds: Option<String>,
    #[serde(rename = "Dc", default)]
    dc: Option<String>,
    #[serde(rename = "C")]
    c: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    basis: Vec<BasisLabel>,
}

pub fn encode_matrix(m: &CMatrix, encoding: MatrixEncoding) -> String {
    match encoding {
        MatrixEncoding::Base64 => {
            let mut bytes = Vec::with_capacity(16 * m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                    bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                }
            }
            BASE64.encode(bytes)
        }
        MatrixEncoding::Csv => (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

pub fn decode_matrix(text: &str, n: usize, encoding: MatrixEncoding) -> Result<CMatrix> {
    let values: Vec<f64> = match encoding {
        MatrixEncoding::Base64 => {
            let bytes = BASE64
                .decode(text.trim())
                .map_err(|e| Error::InvalidFamily(format!("base64: {e}")))?;
            if bytes.len() != 16 * n * n {
                return Err(Error::InvalidFamily(format!("{} bytes, expected {}", bytes.len(), 16 * n * n)));
            }
            bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect()
        }
        MatrixEncoding::Csv => {
            let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            if rows.len() != n {
                return Err(Error::InvalidFamily(format!("{} rows, expected {n}", rows.len())));
            }
            let mut out = Vec::with_capacity(2 * n * n);
            for (i, row) in rows.iter().enumerate() {
                let parsed: std::result::Result<Vec<f64>, _> = row.split(',').map(|x| x.trim().parse::<f64>()).collect();
                let parsed = parsed.map_err(|e| Error::InvalidFamily(format!("row {i}: {e}")))?;
                if parsed.len() != 2 * n {
                    return Err(Error::InvalidFamily(format!("row {i} has {} numbers, expected {}", parsed.len(), 2 * n)));
                }
                out.extend(parsed);
            }
            out
        }
    };
    Ok(CMatrix::from_fn(n, n, |i, j| c(values[2 * (i * n + j)], values[2 * (i * n + j) + 1])))
}

/// Family in the h-normalized (equivalently H⁺-orthonormal up to the factor μ)
/// disk eigenbasis with |k| ≤ K and ν ≤ N: L₀ = I and C = diag(1/μ²) sorted
/// descending.
pub fn assemble_disk_family(
    model: &DiskModel,
    kmax: usize,
    n_per_k: usize,
    perturbations: Option<(CMatrix, CMatrix)>,
) -> Result<FamilyMatrices> {
    let ks: Vec<i64> = (-(kmax as i64)..=kmax as i64).collect();
    let mut pairs: Vec<_> = find_eigenvalues_many(model, &ks, n_per_k)?.into_iter().flatten().collect();
    pairs.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.k.cmp(&b.k)));
    let diag: Vec<f64> = pairs.iter().map(|p| 1.0 / (p.mu * p.mu)).collect();
    let mut f = FamilyMatrices::diagonal(&diag)?;
    f.basis_tag = format!(
        "disk: vartheta={} d={} rho={} mode={:?} K={kmax} N={n_per_k}",
        model.vartheta, model.d, model.rho, model.mode
    );
    f.basis = pairs.iter().map(|p| BasisLabel { k: p.k, nu: p.nu, mu: p.mu }).collect();
    match perturbations {
        Some((ds, dc)) => f.with_perturbations(Some(ds), Some(dc)),
        None => Ok(f),
    }
}

/// u with L(λ)u = f.
pub fn solve(family: &FamilyMatrices, lambda: C64, f: &CVector) -> Result<CVector> {
    if f.len() != family.dim {
        return Err(Error::DimensionMismatch(format!("rhs has length {}, family dimension {}", f.len(), family.dim)));
    }
    let l = family.eval(lambda);
    let s = singular_values(&l);
    let (smax, smin) = (s[0], *s.last().expect("dim >= 1"));
    if !(smin > SOLVE_SINGULAR_TOL * smax) {
        return Err(Error::CharacteristicLambda { lambda, sigma_min: smin });
    }
    let lu = l.clone().full_piv_lu();
    let mut u = lu.solve(f).ok_or(Error::CharacteristicLambda { lambda, sigma_min: smin })?;
    // one step of iterative refinement
    let r = f - &l * &u;
    if let Some(du) = lu.solve(&r) {
        u += du;
    }
    Ok(u)
}

/// ‖w‖₋, Euclidean under the L₀ = I convention.
pub fn hminus_norm(family: &FamilyMatrices, w: &CVector) -> Result<f64> {
    if w.len() != family.dim {
        return Err(Error::DimensionMismatch(format!("vector has length {}, family dimension {}", w.len(), family.dim)));
    }
    Ok(w.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicValue {
    pub lambda: C64,
    pub zeta: C64,
    pub algebraic_multiplicity: usize,
    pub chain_length: usize,
}

fn eigenvalues(m: CMatrix) -> Vec<C64> {
    let (_, t) = Schur::new(m).unpack();
    t.diagonal().iter().copied().collect()
}

/// Finite eigenvalues ζ of (L₀ + δ_s + δ_c)v = −ζCv.
pub fn pencil_zetas(family: &FamilyMatrices) -> Result<Vec<C64>> {
    let cnorm = spectral_norm(&family.c);
    if cnorm == 0.0 {
        return Err(Error::SingularC);
    }
    let a = family.a();
    let anorm = spectral_norm(&a).max(f64::MIN_POSITIVE);
    let well_conditioned = |m: &CMatrix| {
        let s = singular_values(m);
        s.last().copied().unwrap_or(0.0) > 1e-10 * s[0]
    };
    // shift ζ ↦ ζ − s when A itself is singular; a regular pencil has a
    // nonsingular A + sC for all but finitely many s
    let shifts = [c(0.0, 0.0), C64::from_polar(anorm / cnorm, 0.7), C64::from_polar(anorm / cnorm, 2.3)];
    for s in shifts {
        let shifted = &a + &family.c * s;
        if !well_conditioned(&shifted) {
            continue;
        }
        let lu = shifted.full_piv_lu();
        let m = -lu.solve(&family.c).ok_or(Error::SingularC)?;
        let sig = eigenvalues(m);
        let top = sig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(sig.into_iter().filter(|z| z.norm() > 1e-13 * top).map(|z| s + 1.0 / z).collect());
    }
    if well_conditioned(&family.c) {
        let m = -family.c.clone().full_piv_lu().solve(&a).ok_or(Error::SingularC)?;
        return Ok(eigenvalues(m));
    }
    Err(Error::SingularC)
}

fn rel_close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

/// Single-linkage groups of indices.
fn link(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rel_close(values[i], values[j], tol) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

fn mean(values: &[C64]) -> C64 {
    values.iter().sum::<C64>() / values.len() as f64
}

/// Block lower-triangular Toeplitz matrix [F_{r−c}] of j×j blocks.
fn toeplitz(f: &[CMatrix; 3], j: usize) -> CMatrix {
    let n = f[0].nrows();
    let mut t = CMatrix::zeros(j * n, j * n);
    for r in 0..j {
        for col in 0..=r {
            if r - col < 3 {
                t.view_mut((r * n, col * n), (n, n)).copy_from(&f[r - col]);
            }
        }
    }
    t
}

fn kernel_scale(family: &FamilyMatrices, lambda0: C64) -> f64 {
    let cn = spectral_norm(&family.c);
    spectral_norm(&family.eval(lambda0)) + 2.0 * lambda0.norm() * cn + cn
}

/// s_j = dim ker T_j − dim ker T_{j−1}, the number of chains of length ≥ j,
/// for j = 1..=max_len (stopping early at the first zero).
pub fn chain_structure(family: &FamilyMatrices, lambda0: C64, max_len: usize) -> Vec<usize> {
    let f = family.taylor(lambda0);
    let tol = KERNEL_TOL * kernel_scale(family, lambda0);
    let mut out = Vec::new();
    let mut prev = 0;
    for j in 1..=max_len.max(1) {
        let s = singular_values(&toeplitz(&f, j));
        let dim = s.iter().filter(|&&v| v <= tol).count();
        let sj = dim.saturating_sub(prev);
        if sj == 0 {
            break;
        }
        out.push(sj);
        prev = dim;
    }
    out
}

/// Characteristic values λ = ±√ζ with multiplicities, sorted by |λ| then arg.
pub fn characteristic_values(family: &FamilyMatrices) -> Result<Vec<CharacteristicValue>> {
    let zetas = pencil_zetas(family)?;
    let first: Vec<Vec<C64>> =
        link(&zetas, CLUSTER_TOL).into_iter().map(|g| g.into_iter().map(|i| zetas[i]).collect()).collect();
    let means: Vec<C64> = first.iter().map(|g| mean(g)).collect();
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for group in link(&means, DEFECTIVE_CLUSTER_TOL) {
        if group.len() == 1 {
            clusters.push((means[group[0]], first[group[0]].len()));
            continue;
        }
        let all: Vec<C64> = group.iter().flat_map(|&i| first[i].iter().copied()).collect();
        let zbar = mean(&all);
        let total: usize = chain_structure(family, zbar.sqrt(), all.len()).iter().sum();
        if total >= all.len() {
            clusters.push((zbar, all.len()));
        } else {
            clusters.extend(group.iter().map(|&i| (means[i], first[i].len())));
        }
    }
    let mut out: Vec<CharacteristicValue> = clusters
        .par_iter()
        .flat_map_iter(|&(zeta, m)| {
            let lambda = zeta.sqrt();
            if zeta.norm() == 0.0 {
                let len = if m > 1 { chain_structure(family, lambda, 2 * m).len() } else { 2 };
                return vec![CharacteristicValue { lambda, zeta, algebraic_multiplicity: 2 * m, chain_length: len }];
            }
            let len = if m > 1 { chain_structure(family, lambda, m).len().max(1) } else { 1 };
            [lambda, -lambda]
                .into_iter()
                .map(|l| CharacteristicValue { lambda: l, zeta, algebraic_multiplicity: m, chain_length: len })
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()).then(a.lambda.arg().total_cmp(&b.lambda.arg())));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootChain {
    pub lambda0: C64,
    /// u₀ (eigenvector, unit norm), u₁, … (associated vectors)
    pub vectors: Vec<CVector>,
}

impl RootChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// max_m ‖Σ_{j≤m} F_{m−j}u_j‖ / ((‖F₀‖ + |λ₀|‖C‖) · max(1, max_j ‖u_j‖)).
pub fn chain_residual(family: &FamilyMatrices, chain: &RootChain) -> f64 {
    let f = family.taylor(chain.lambda0);
    let scale = (spectral_norm(&f[0]) + chain.lambda0.norm() * spectral_norm(&family.c)).max(f64::MIN_POSITIVE);
    let unorm = chain.vectors.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for m in 0..chain.vectors.len() {
        let mut r = CVector::zeros(family.dim);
        for j in 0..=m {
            if m - j < 3 {
                r += &f[m - j] * &chain.vectors[j];
            }
        }
        worst = worst.max(r.norm());
    }
    worst / (scale * unorm)
}

fn orthonormal_columns(vectors: &[CVector], n: usize) -> CMatrix {
    let mut q: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &q {
                let p = e.dotc(&w);
                w -= e * p;
            }
        }
        let nw = w.norm();
        if nw > 1e-12 {
            q.push(w / c(nw, 0.0));
        }
    }
    let mut m = CMatrix::zeros(n, q.len());
    for (j, e) in q.iter().enumerate() {
        m.set_column(j, e);
    }
    m
}

/// Maximal Jordan chains at a characteristic value; the total number of
/// vectors equals the algebraic multiplicity.
pub fn root_chains(family: &FamilyMatrices, cv: &CharacteristicValue) -> Result<Vec<RootChain>> {
    let lambda0 = cv.lambda;
    let n = family.dim;
    let m = cv.algebraic_multiplicity.max(1);
    let structure = chain_structure(family, lambda0, m);
    let total: usize = structure.iter().sum();
    if total != m {
        return Err(Error::ChainIncomplete {
            lambda: lambda0,
            reason: format!("kernel structure {structure:?} accounts for {total} of {m} root vectors"),
        });
    }
    let f = family.taylor(lambda0);
    let tol = KERNEL_TOL * kernel_scale(family, lambda0);
    let mut heads: Vec<CVector> = Vec::new();
    let mut chains = Vec::new();
    for len in (1..=structure.len()).rev() {
        let need = structure[len - 1] - structure.get(len).copied().unwrap_or(0);
        if need == 0 {
            continue;
        }
        let kernel = null_space(&toeplitz(&f, len), tol);
        let h = kernel.rows(0, n).into_owned();
        let q = orthonormal_columns(&heads, n);
        let projected = if q.ncols() == 0 { h.clone() } else { &h - &q * (q.adjoint() * &h) };
        let svd = projected.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        if order.len() < need || svd.singular_values[order[need - 1]] < 1e-6 {
            return Err(Error::ChainIncomplete {
                lambda: lambda0,
                reason: format!("no independent head for {need} chain(s) of length {len}"),
            });
        }
        for &idx in order.iter().take(need) {
            let y = v_t.row(idx).adjoint();
            let x = &kernel * y;
            let head_norm = x.rows(0, n).norm();
            let vectors: Vec<CVector> = (0..len).map(|j| x.rows(j * n, n).into_owned() / c(head_norm, 0.0)).collect();
            let chain = RootChain { lambda0, vectors };
            let res = chain_residual(family, &chain);
            if !(res <= CHAIN_TOL) {
                return Err(Error::ChainIncomplete {
                    lambda: lambda0,
                    reason: format!("chain relation residual {res:e} exceeds {CHAIN_TOL:e}"),
                });
            }
            heads.push(chain.vectors[0].clone());
            chains.push(chain);
        }
    }
    Ok(chains)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerMode {
    /// M_ε ∪ M_{−ε}
    #[default]
    SelfAdjointCompact,
    /// half-angle π(2ρ+1)/(2n) + ε
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerOutlier {
    pub lambda: C64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerReport {
    pub half_angle: f64,
    pub inside_fraction: f64,
    pub outliers: Vec<CornerOutlier>,
}

/// Classifies λ against the corners |arg λ ∓ π/2| < half-angle.
pub fn corner_check(cvs: &[CharacteristicValue], epsilon: f64, rho: f64, n: usize, mode: CornerMode) -> Result<CornerReport> {
    if cvs.is_empty() {
        return Err(Error::InvalidParameter("no characteristic values to classify".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be >= 0")));
    }
    let half_angle = match mode {
        CornerMode::SelfAdjointCompact => epsilon,
        CornerMode::General => {
            if n == 0 {
                return Err(Error::InvalidParameter("n must be >= 1".into()));
            }
            PI * (2.0 * rho + 1.0) / (2.0 * n as f64) + epsilon
        }
    };
    let outliers: Vec<CornerOutlier> = cvs
        .iter()
        .filter(|cv| {
            let a = cv.lambda.arg();
            !((a - FRAC_PI_2).abs() < half_angle || (a + FRAC_PI_2).abs() < half_angle)
        })
        .map(|cv| CornerOutlier { lambda: cv.lambda, modulus: cv.lambda.norm() })
        .collect();
    Ok(CornerReport {
        half_angle,
        inside_fraction: 1.0 - outliers.len() as f64 / cvs.len() as f64,
        outliers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayScanRow {
    pub modulus: f64,
    pub lambda: C64,
    /// min ‖L(λ)u‖₋ / ‖u‖₊
    pub sigma_min: f64,
    /// min ‖L(λ)u‖₋ / (|λ|²‖Cu‖₋)
    pub sigma_min_restricted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayDip {
    pub modulus: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayScan {
    pub phi: f64,
    pub rows: Vec<RayScanRow>,
    /// (1 − τ)·min σ_min
    pub p1: f64,
    /// τ·min σ_restricted
    pub q1: f64,
    pub tau: f64,
    /// smallest grid modulus
    pub k0: f64,
    pub p1_positive: bool,
    /// refined interior local minima of σ_min
    pub dips: Vec<RayDip>,
}

pub const RAY_TAU: f64 = 0.05;

/// `count` equispaced moduli in [lo, hi].
pub fn moduli_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::InvalidParameter(format!("modulus grid {lo}:{hi}:{count} needs 0 < lo <= hi, n >= 1")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

/// σ_min(L(λ)) and σ_min(L(λ)C⁻¹)/|λ|² along a ray. The lower bound
/// ‖L(λ)u‖ ≥ p₁‖u‖ + q₁|λ|²‖Cu‖ holds with p₁ = (1−τ)min σ_min and
/// q₁ = τ min σ_restricted for any τ ∈ [0, 1].
pub fn ray_scan(family: &FamilyMatrices, ray: Ray, moduli: &[f64]) -> Result<RayScan> {
    if moduli.is_empty() || moduli.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidParameter("moduli must be a nonempty list of positive numbers".into()));
    }
    let c_inv = {
        let s = singular_values(&family.c);
        if s.last().copied().unwrap_or(0.0) > 1e-14 * s[0] { family.c.clone().try_inverse() } else { None }
    };
    let sigma_at = |t: f64| sigma_min(&family.eval(ray.point(t)));
    let rows: Vec<RayScanRow> = moduli
        .par_iter()
        .map(|&t| {
            let lambda = ray.point(t);
            let l = family.eval(lambda);
            let restricted = match &c_inv {
                Some(ci) => sigma_min(&(&l * ci)) / (t * t),
                None => f64::NAN,
            };
            RayScanRow { modulus: t, lambda, sigma_min: sigma_min(&l), sigma_min_restricted: restricted }
        })
        .collect();
    let min_s = rows.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min);
    let min_r = rows.iter().map(|r| r.sigma_min_restricted).fold(f64::INFINITY, f64::min);
    let p1 = (1.0 - RAY_TAU) * min_s;
    let q1 = if min_r.is_finite() { RAY_TAU * min_r } else { 0.0 };
    let interior: Vec<usize> = (1..rows.len().saturating_sub(1))
        .filter(|&i| rows[i].sigma_min <= rows[i - 1].sigma_min && rows[i].sigma_min <= rows[i + 1].sigma_min)
        .collect();
    let dips = interior
        .par_iter()
        .map(|&i| {
            let (t, s) = golden_min(&sigma_at, rows[i - 1].modulus, rows[i + 1].modulus);
            RayDip { modulus: t, sigma_min: s }
        })
        .collect();
    Ok(RayScan {
        phi: ray.angle(),
        rows,
        p1,
        q1,
        tau: RAY_TAU,
        k0: moduli.iter().copied().fold(f64::INFINITY, f64::min),
        p1_positive: p1 > 0.0,
        dips,
    })
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a) <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleCompleteness {
    pub rank: usize,
    pub dim: usize,
    pub complete: bool,
    /// number of stacked root vectors
    pub vectors: usize,
    /// rank when only eigenvectors are stacked
    pub eigenvector_rank: usize,
}

pub const DOUBLE_RANK_TOL: f64 = 1e-8;

/// Rank of the companion-linearization root vectors [u_j; λ₀u_j + u_{j−1}]
/// collected over all characteristic values; complete when it equals 2N.
pub fn double_completeness_check(family: &FamilyMatrices) -> Result<DoubleCompleteness> {
    let cvs = characteristic_values(family)?;
    let chains: Vec<Vec<RootChain>> = cvs.par_iter().map(|cv| root_chains(family, cv)).collect::<Result<_>>()?;
    let n = family.dim;
    let mut all = Vec::new();
    let mut heads = Vec::new();
    for chain in chains.iter().flatten() {
        for (j, u) in chain.vectors.iter().enumerate() {
            let mut w = CVector::zeros(2 * n);
            w.rows_mut(0, n).copy_from(u);
            let mut lower = u * chain.lambda0;
            if j > 0 {
                lower += &chain.vectors[j - 1];
            }
            w.rows_mut(n, n).copy_from(&lower);
            let nw = w.norm();
            let w = w / c(nw, 0.0);
            if j == 0 {
                heads.push(w.clone());
            }
            all.push(w);
        }
    }
    let stack = |cols: &[CVector]| {
        let mut m = CMatrix::zeros(2 * n, cols.len());
        for (j, v) in cols.iter().enumerate() {
            m.set_column(j, v);
        }
        m
    };
    let rank = if all.is_empty() { 0 } else { numerical_rank(&stack(&all), DOUBLE_RANK_TOL) };
    let eigenvector_rank = if heads.is_empty() { 0 } else { numerical_rank(&stack(&heads), DOUBLE_RANK_TOL) };
    Ok(DoubleCompleteness { rank, dim: 2 * n, complete: rank == 2 * n, vectors: all.len(), eigenvector_rank })
}

/// Jordan structure planted in a seeded family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineeredBlock {
    pub zeta: C64,
    pub len: usize,
}

/// Family L₀ = I, δ_c = A − I, C = diag(1/(i+1)) with A = −C·S J S⁻¹, where J
/// holds Jordan blocks of the given lengths followed by simple eigenvalues and
/// S = I + (seeded matrix of norm 1/4). Then A + ζC = −C(SJS⁻¹ − ζ), so the
/// ζ-eigenstructure of the pencil is that of J.
pub fn engineered_jordan_family(seed: u64, dim: usize, blocks: &[usize]) -> Result<(FamilyMatrices, Vec<EngineeredBlock>)> {
    let planted: usize = blocks.iter().sum();
    if blocks.contains(&0) || planted > dim {
        return Err(Error::InvalidParameter(format!("blocks {blocks:?} do not fit in dimension {dim}")));
    }
    let mut j = CMatrix::zeros(dim, dim);
    let mut info = Vec::new();
    let mut pos = 0;
    let mut slot = 0usize;
    let eigen = |slot: usize| c(-(2.0 + 3.0 * slot as f64), 0.4 * ((slot % 3) as f64 - 1.0));
    for &len in blocks {
        let z = eigen(slot);
        for i in 0..len {
            j[(pos + i, pos + i)] = z;
            if i + 1 < len {
                j[(pos + i, pos + i + 1)] = c(1.0, 0.0);
            }
        }
        info.push(EngineeredBlock { zeta: z, len });
        pos += len;
        slot += 1;
    }
    while pos < dim {
        j[(pos, pos)] = eigen(slot);
        pos += 1;
        slot += 1;
    }
    let s = CMatrix::identity(dim, dim) + dense_random(seed, dim, 0.25);
    let s_inv = s.clone().try_inverse().ok_or_else(|| Error::InvalidParameter("similarity is singular".into()))?;
    let cm = real_diag(&(0..dim).map(|i| 1.0 / (i + 1) as f64).collect::<Vec<_>>());
    let a = -(&cm * (&s * &j * &s_inv));
    let id = CMatrix::identity(dim, dim);
    let mut f = FamilyMatrices::new(id.clone(), CMatrix::zeros(dim, dim), a - id, cm, format!("jordan seed={seed}"))?;
    f.basis_tag = format!("engineered jordan seed={seed} blocks={blocks:?}");
    Ok((f, info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::find_eigenvalues;

    fn two_by_two() -> FamilyMatrices {
        let mut dc = CMatrix::zeros(2, 2);
        dc[(0, 1)] = c(1.0, 0.0);
        FamilyMatrices::new(CMatrix::identity(2, 2), CMatrix::zeros(2, 2), dc, CMatrix::identity(2, 2), "2x2").unwrap()
    }

    #[test]
    fn solve_diagonal_and_identity() {
        let vals = [0.5, 0.2, 0.1];
        let f = FamilyMatrices::diagonal(&vals).unwrap();
        let rhs = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)]);
        let lambda = c(0.3, 1.1);
        let u = solve(&f, lambda, &rhs).unwrap();
        for i in 0..3 {
            let expect = rhs[i] / (1.0 + lambda * lambda * vals[i]);
            assert!((u[i] - expect).norm() < 1e-14);
        }
        assert_eq!(solve(&f, c(0.0, 0.0), &rhs).unwrap(), rhs);
    }

    #[test]
    fn solve_at_characteristic_value_fails() {
        let f = FamilyMatrices::diagonal(&[0.25]).unwrap();
        let rhs = CVector::from_vec(vec![c(1.0, 0.0)]);
        assert!(matches!(solve(&f, c(0.0, 2.0), &rhs), Err(Error::CharacteristicLambda { .. })));
    }

    #[test]
    fn solve_random_family_matches_dense_oracle() {
        let n = 8;
        let f = FamilyMatrices::diagonal(&(0..n).map(|i| 1.0 / (1.0 + i as f64)).collect::<Vec<_>>())
            .unwrap()
            .with_perturbations(Some(dense_random(1, n, 0.2)), Some(dense_random(2, n, 0.3)))
            .unwrap();
        let rhs = CVector::from_fn(n, |i, _| c(i as f64, 1.0));
        let lambda = c(0.7, 0.4);
        let u = solve(&f, lambda, &rhs).unwrap();
        let oracle = f.eval(lambda).lu().solve(&rhs).unwrap();
        assert!((&u - &oracle).norm() / oracle.norm() < 1e-12);
        assert!((f.eval(lambda) * &u - &rhs).norm() / rhs.norm() < 1e-12);
    }

    #[test]
    fn diagonal_characteristic_values() {
        let vals = [0.5, 0.2, 0.1];
        let cvs = characteristic_values(&FamilyMatrices::diagonal(&vals).unwrap()).unwrap();
        assert_eq!(cvs.len(), 6);
        for v in vals {
            let expect = c(0.0, 1.0 / v.sqrt());
            assert!(cvs.iter().any(|cv| (cv.lambda - expect).norm() < 1e-12));
            assert!(cvs.iter().any(|cv| (cv.lambda + expect).norm() < 1e-12));
            assert!(cvs.iter().any(|cv| (cv.zeta + 1.0 / v).norm() < 1e-12));
        }
        assert!(cvs.iter().all(|cv| cv.algebraic_multiplicity == 1 && cv.chain_length == 1));
    }

    #[test]
    fn double_root_two_by_two() {
        let f = two_by_two();
        let cvs = characteristic_values(&f).unwrap();
        assert_eq!(cvs.len(), 2);
        for cv in &cvs {
            assert!((cv.zeta + 1.0).norm() < 1e-12);
            assert_eq!(cv.algebraic_multiplicity, 2);
            assert_eq!(cv.chain_length, 2);
            let chains = root_chains(&f, cv).unwrap();
            assert_eq!(chains.len(), 1);
            assert_eq!(chains[0].len(), 2);
            assert!(chain_residual(&f, &chains[0]) < 1e-12);
        }
        let dc = double_completeness_check(&f).unwrap();
        assert_eq!((dc.rank, dc.dim), (4, 4));
        assert!(dc.complete);
        assert_eq!(dc.eigenvector_rank, 2);
    }

    #[test]
    fn scalar_family() {
        let f = FamilyMatrices::diagonal(&[1.0]).unwrap();
        let cvs = characteristic_values(&f).unwrap();
        assert!((cvs[0].lambda.norm() - 1.0).abs() < 1e-15);
        assert!((cvs[0].lambda + cvs[1].lambda).norm() == 0.0);
        assert!(double_completeness_check(&f).unwrap().complete);
    }

    #[test]
    fn singular_c_rejected() {
        let f = FamilyMatrices::new(
            CMatrix::identity(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            "zero C",
        )
        .unwrap();
        assert_eq!(characteristic_values(&f), Err(Error::SingularC));
    }

    #[test]
    fn singular_a_uses_shift() {
        let mut a = CMatrix::identity(2, 2);
        a[(1, 1)] = c(0.0, 0.0);
        let f = FamilyMatrices::new(a, CMatrix::zeros(2, 2), CMatrix::zeros(2, 2), CMatrix::identity(2, 2), "").unwrap();
        let mut z = pencil_zetas(&f).unwrap();
        z.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((z[0] + 1.0).norm() < 1e-12 && z[1].norm() < 1e-12);
    }

    #[test]
    fn disk_family_matches_bessel_roots() {
        let m = DiskModel::unit(0.0, 0.0).unwrap();
        let f = assemble_disk_family(&m, 0, 3, None).unwrap();
        let pairs = find_eigenvalues(&m, 0, 3).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert_eq!(f.c[(i, i)], c(1.0 / (p.mu * p.mu), 0.0));
        }
        assert_eq!(f.ds, CMatrix::zeros(3, 3));
        assert_eq!(f.dc, CMatrix::zeros(3, 3));
        let cvs = characteristic_values(&f).unwrap();
        for p in &pairs {
            assert!(cvs.iter().any(|cv| (cv.lambda - c(0.0, p.mu)).norm() < 1e-9 * p.mu));
        }
    }

    #[test]
    fn engineered_jordan_recovered() {
        let (f, blocks) = engineered_jordan_family(11, 6, &[2, 3]).unwrap();
        let cvs = characteristic_values(&f).unwrap();
        for b in &blocks {
            let cv = cvs.iter().find(|cv| (cv.zeta - b.zeta).norm() < 1e-6).expect("block found");
            assert_eq!(cv.algebraic_multiplicity, b.len);
            assert_eq!(cv.chain_length, b.len);
            let chains = root_chains(&f, cv).unwrap();
            assert_eq!(chains.len(), 1);
            assert_eq!(chains[0].len(), b.len);
        }
        let dc = double_completeness_check(&f).unwrap();
        assert_eq!(dc.rank, 12);
        assert!(dc.eigenvector_rank < 12);
    }

    #[test]
    fn corner_examples() {
        let cvs = characteristic_values(&FamilyMatrices::diagonal(&[0.5, 0.1]).unwrap()).unwrap();
        let r = corner_check(&cvs, 1e-6, 0.0, 2, CornerMode::SelfAdjointCompact).unwrap();
        assert_eq!(r.inside_fraction, 1.0);
        let real = [CharacteristicValue { lambda: c(1.0, 0.0), zeta: c(1.0, 0.0), algebraic_multiplicity: 1, chain_length: 1 }];
        let r = corner_check(&real, 0.1, 0.0, 2, CornerMode::SelfAdjointCompact).unwrap();
        assert_eq!(r.outliers.len(), 1);
        let r = corner_check(&real, 0.1, 0.5, 1, CornerMode::General).unwrap();
        assert!((r.half_angle - (PI + 0.1)).abs() < 1e-15);
        assert!(corner_check(&[], 0.1, 0.0, 2, CornerMode::SelfAdjointCompact).is_err());
    }

    #[test]
    fn ray_scan_diagonal() {
        let f = FamilyMatrices::diagonal(&[0.5, 0.2, 0.05]).unwrap();
        let grid = moduli_grid(1.0, 20.0, 200).unwrap();
        let s = ray_scan(&f, Ray::new(0.0), &grid).unwrap();
        assert!(s.p1 >= 0.9 && s.q1 > 0.0 && s.p1_positive);
        for r in &s.rows {
            assert!(r.sigma_min >= 1.0 - 1e-12);
            assert!(r.sigma_min_restricted >= 1.0 - 1e-12);
            // |λ|²‖(C⁻¹ + |λ|²)⁻¹‖ within a factor 2 of 1 once |λ|² ≥ 1/max c
            if r.modulus * r.modulus >= 2.0 {
                assert!(r.sigma_min_restricted <= 2.0);
            }
        }
        let s = ray_scan(&f, Ray::new(FRAC_PI_2), &grid).unwrap();
        let expect = [0.5f64, 0.2, 0.05].map(|v| 1.0 / v.sqrt());
        for e in expect {
            assert!(s.dips.iter().any(|d| (d.modulus - e).abs() < 1e-9 * e && d.sigma_min < 1e-6), "{e}");
        }
    }

    #[test]
    fn json_roundtrip_both_encodings() {
        let n = 3;
        let f = FamilyMatrices::diagonal(&[0.5, 0.25, 0.125])
            .unwrap()
            .with_perturbations(Some(dense_random(5, n, 0.1)), Some(dense_random(6, n, 0.2)))
            .unwrap();
        for enc in [MatrixEncoding::Base64, MatrixEncoding::Csv] {
            let back = FamilyMatrices::from_json(&f.to_json(enc)).unwrap();
            assert_eq!(back, f);
        }
        assert!(FamilyMatrices::from_json("{\"dim\": 2, \"C\": \"AAAA\"}").is_err());
        let minimal = "{\"dim\": 1, \"encoding\": \"csv\", \"C\": \"0.5,0\"}";
        let g = FamilyMatrices::from_json(minimal).unwrap();
        assert_eq!(g.l0, CMatrix::identity(1, 1));
    }

    #[test]
    fn hminus_examples() {
        let f = FamilyMatrices::diagonal(&[1.0, 1.0]).unwrap();
        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(hminus_norm(&f, &e1).unwrap(), 1.0);
        assert_eq!(hminus_norm(&f, &CVector::zeros(2)).unwrap(), 0.0);
        assert!(hminus_norm(&f, &CVector::zeros(3)).is_err());
    }
}
