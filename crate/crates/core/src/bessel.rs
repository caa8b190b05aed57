//! Bessel functions of the first kind J_p(t) for real order p ≥ 0 and
//! real argument t ≥ 0.
//!
//! Small arguments (t ≤ 2, or t²/4 ≤ p + 1 where the series terms decrease
//! from the start) use the power series. Otherwise J_p and J'_p come from
//! Steed's method: the continued fraction CF1 for J'_p/J_p, downward
//! recurrence to a reduced order μ ≤ t + 1/2, and the complex continued
//! fraction CF2 together with the Wronskian to fix the normalization.
//! For t ≥ max(30, p²/8) the Hankel asymptotic expansion is used, because the
//! continued fractions lose accuracy roughly in proportion to t.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

const SERIES_EPS: f64 = 1e-17;
const CF_EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-30;
const MAX_ITER: usize = 100_000;
const HANKEL_MIN: f64 = 30.0;

/// J_p(t).
pub fn bessel_j(p: f64, t: f64) -> Result<f64> {
    bessel_j_and_prime(p, t).map(|(j, _)| j)
}

/// J'_p(t). At t = 0 this is the series limit: 0 for p = 0 or p > 1, 1/2 for
/// p = 1 and +∞ for 0 < p < 1.
pub fn bessel_j_prime(p: f64, t: f64) -> Result<f64> {
    bessel_j_and_prime(p, t).map(|(_, dj)| dj)
}

/// (J_p(t), J'_p(t)).
pub fn bessel_j_and_prime(p: f64, t: f64) -> Result<(f64, f64)> {
    if !(p >= 0.0) {
        return Err(Error::OrderNegative { order: p });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("Bessel argument t = {t} must be >= 0")));
    }
    if t == 0.0 {
        let j = if p == 0.0 { 1.0 } else { 0.0 };
        let dj = if p == 1.0 {
            0.5
        } else if p > 0.0 && p < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
        return Ok((j, dj));
    }
    if t <= 2.0 || t * t / 4.0 <= p + 1.0 {
        Ok(series(p, t))
    } else if t >= HANKEL_MIN.max(p * p / 8.0) {
        let j = hankel(p, t);
        Ok((j, p / t * j - hankel(p + 1.0, t)))
    } else {
        Ok(steed(p, t))
    }
}

/// (t/2)^p / Γ(p+1).
fn series_prefactor(p: f64, t: f64) -> f64 {
    if p + 1.0 < 170.0 {
        // Γ(p+1) by upward recurrence from an argument in [1, 2)
        let frac = p.fract();
        let mut g = gamma(frac + 1.0);
        let mut x = frac + 1.0;
        while x < p + 0.5 {
            g *= x;
            x += 1.0;
        }
        (t / 2.0).powf(p) / g
    } else {
        (p * (t / 2.0).ln() - ln_gamma(p + 1.0)).exp()
    }
}

fn series(p: f64, t: f64) -> (f64, f64) {
    let q = -t * t / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    // derivative: J'_p = (1/t) Σ (2m + p) c_m (t/2)^{2m+p}
    let mut dsum = p;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + p));
        sum += term;
        dsum += (2.0 * m + p) * term;
        if term.abs() < SERIES_EPS * sum.abs() && (2.0 * m + p) * term.abs() <= SERIES_EPS * dsum.abs().max(sum.abs())
        {
            break;
        }
        if m > 500.0 {
            break;
        }
    }
    let pre = series_prefactor(p, t);
    (pre * sum, pre * dsum / t)
}

/// J_p(t) ≈ √(2/(πt)) (P cos ω − Q sin ω), ω = t − (p/2 + 1/4)π.
fn hankel(p: f64, t: f64) -> f64 {
    let mu = 4.0 * p * p;
    let (mut pp, mut qq) = (1.0, 0.0);
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * t);
        // terms may grow while (2k−1)² < 4p²; growth after that is divergence
        if (term.abs() >= prev && odd * odd > mu) || term == 0.0 {
            break;
        }
        prev = term.abs();
        // signs cycle +Q, −P, −Q, +P
        match k % 4 {
            1 => qq += term,
            2 => pp -= term,
            3 => qq -= term,
            _ => pp += term,
        }
        if term.abs() < 1e-17 * pp.abs() {
            break;
        }
    }
    // reduce the phase coefficient before multiplying by π
    let phase = ((p / 2.0 + 0.25) % 2.0) * PI;
    let (st, ct) = t.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let (sw, cw) = (st * cp - ct * sp, ct * cp + st * sp);
    (2.0 / (PI * t)).sqrt() * (pp * cw - qq * sw)
}

fn steed(nu: f64, x: f64) -> (f64, f64) {
    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: h -> J'_nu / J_nu, isign tracks the sign of J_nu
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }

    // downward recurrence from nu to xmu on unnormalized values
    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let mut rjl1 = rjl;
    let mut rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
        if rjl.abs() > 1e250 {
            rjl *= 1e-250;
            rjpl *= 1e-250;
            rjl1 *= 1e-250;
            rjp1 *= 1e-250;
        }
    }
    if rjl == 0.0 {
        rjl = CF_EPS;
    }
    let f = rjpl / rjl;

    // CF2: p + iq = (J' + iY')/(J + iY) at order xmu
    let mut a = 0.25 - xmu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..MAX_ITER {
        a += 2.0 * (i as f64 - 1.0);
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < CF_EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let scale = rjmu / rjl;
    (rjl1 * scale, rjp1 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(1.0, 0.0).unwrap(), 0.5);
        assert!(bessel_j_prime(0.5, 0.0).unwrap().is_infinite());
    }

    #[test]
    fn negative_order_rejected() {
        assert_eq!(bessel_j(-1.0, 1.0), Err(Error::OrderNegative { order: -1.0 }));
        assert!(bessel_j_prime(-0.5, 1.0).is_err());
    }

    #[test]
    fn half_order_closed_forms() {
        for i in 1..400 {
            let t = i as f64 * 0.25;
            let j = bessel_j(0.5, t).unwrap();
            let exact = (2.0 / (PI * t)).sqrt() * t.sin();
            let tol = 1e-15 * t.max(10.0);
            assert!((j - exact).abs() < tol, "t = {t}: {j} vs {exact}");
            let j32 = bessel_j(1.5, t).unwrap();
            let exact32 = (2.0 / (PI * t)).sqrt() * (t.sin() / t - t.cos());
            assert!((j32 - exact32).abs() < tol, "t = {t}: {j32} vs {exact32}");
        }
    }

    #[test]
    fn half_order_far_out() {
        for i in 0..200 {
            let t = 40.0 + 7.3 * i as f64;
            let env = (2.0 / (PI * t)).sqrt();
            let (j, dj) = bessel_j_and_prime(0.5, t).unwrap();
            assert!((j - env * t.sin()).abs() < 1e-15 * env, "t = {t}");
            let exact_dj = env * (t.cos() - t.sin() / (2.0 * t));
            assert!((dj - exact_dj).abs() < 1e-15 * env, "t = {t}");
        }
    }

    #[test]
    fn continuity_at_hankel_threshold() {
        for &p in &[0.0, 2.5, 16.0, 20.0] {
            let t0 = HANKEL_MIN.max(p * p / 8.0);
            let h = t0 * 1e-12;
            let below = bessel_j(p, t0 - h).unwrap();
            let above = bessel_j(p, t0 + h).unwrap();
            let slope = bessel_j_prime(p, t0).unwrap();
            assert!((above - below - 2.0 * h * slope).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn continuity_across_regimes() {
        for &p in &[0.0, 0.4, 1.0, 2.5, 7.0, 12.5] {
            let t0: f64 = if p <= 3.0 { 2.0 } else { 2.0 * (p + 1.0f64).sqrt() };
            let h = t0 * 1e-12;
            let below = bessel_j(p, t0 - h).unwrap();
            let above = bessel_j(p, t0 + h).unwrap();
            let slope = bessel_j_prime(p, t0).unwrap();
            assert!((above - below - 2.0 * h * slope).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn derivative_identities() {
        for &p in &[1.0, 1.5, 2.0, 3.7] {
            for i in 1..200 {
                let t = 0.3 * i as f64;
                let dj = bessel_j_prime(p, t).unwrap();
                let lo = bessel_j(p - 1.0, t).unwrap();
                let hi = bessel_j(p + 1.0, t).unwrap();
                assert!((dj - (lo - hi) / 2.0).abs() < 1e-11, "p = {p}, t = {t}");
            }
        }
        let t = 1.0;
        assert!((bessel_j_prime(0.0, t).unwrap() + bessel_j(1.0, t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn first_zero_of_j0() {
        let (mut lo, mut hi) = (2.40, 2.41);
        assert!(bessel_j(0.0, lo).unwrap() > 0.0 && bessel_j(0.0, hi).unwrap() < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if bessel_j(0.0, mid).unwrap() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 2.404_825_557_695_773).abs() < 1e-14);
    }
}
