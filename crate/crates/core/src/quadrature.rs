//! Gauss–Legendre rules on (0, 1).

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 200;

/// Nodes and weights of a Q-point Gauss–Legendre rule mapped to (0, 1).
/// Exact for polynomials of degree ≤ 2Q − 1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("quadrature needs at least 2 nodes, got {q}")));
        }
        let degree = NonZeroUsize::new(q).expect("q >= 2");
        let rule = GaussLegendre::new(degree);
        let mut pairs: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
    }

    /// Cached rule of the given size.
    pub fn cached(q: usize) -> Result<Arc<QuadratureRule>> {
        type Cache = Mutex<Vec<(usize, Arc<QuadratureRule>)>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        if let Some((_, r)) = cache.lock().unwrap().iter().find(|(n, _)| *n == q) {
            return Ok(r.clone());
        }
        let rule = Arc::new(Self::new(q)?);
        cache.lock().unwrap().push((q, rule.clone()));
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_exact() {
        let q = 20;
        let rule = QuadratureRule::new(q).unwrap();
        for p in 0..(2 * q) {
            let v = rule.integrate(|x| x.powi(p as i32));
            assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn default_rule_sorted_in_unit_interval() {
        let rule = QuadratureRule::cached(DEFAULT_NODES).unwrap();
        assert_eq!(rule.len(), DEFAULT_NODES);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > 0.0 && *rule.nodes.last().unwrap() < 1.0);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let v = rule.integrate(|x| x.powi(399));
        assert!((v - 1.0 / 400.0).abs() < 1e-13);
    }

    #[test]
    fn too_few_nodes() {
        assert!(QuadratureRule::new(1).is_err());
    }
}
