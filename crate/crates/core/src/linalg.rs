//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { C64::default() })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Orthonormal basis (as columns) of the right null space of a square or tall
/// matrix: right singular vectors whose singular value is `<= abs_tol`.
pub fn null_space(m: &CMatrix, abs_tol: f64) -> CMatrix {
    let ncols = m.ncols();
    // pad wide matrices so the SVD returns a full set of right vectors
    let work = if m.nrows() < ncols {
        let mut padded = CMatrix::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = SVD::new(work, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let picks: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= abs_tol)
        .collect();
    let mut out = CMatrix::zeros(ncols, picks.len());
    for (col, &i) in picks.iter().enumerate() {
        for r in 0..ncols {
            out[(r, col)] = v_t[(i, r)].conj();
        }
    }
    out
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Element-wise max |A - A*|.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Radical-inverse (Halton) coordinate for `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Quasi-random points in the closed unit disk (area-uniform Halton(2,3)).
pub fn disk_samples(count: usize, include_origin: bool) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    if include_origin && count > 0 {
        out.push(vec![0.0, 0.0]);
    }
    let mut i = 1u64;
    while out.len() < count {
        let r = halton(i, 2).sqrt();
        let phi = std::f64::consts::TAU * halton(i, 3);
        out.push(vec![r * phi.cos(), r * phi.sin()]);
        i += 1;
    }
    out
}
