use proptest::prelude::*;

use zs_core::family::{characteristic_values, solve, FamilyMatrices, MatrixEncoding};
use zs_core::linalg::{c, CVector};
use zs_core::perturb::{dense_random, CompactPerturbation};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn diagonal_family_values(values in prop::collection::vec(0.01..2.0f64, 1..8)) {
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * b.abs());
        let f = FamilyMatrices::diagonal(&sorted).unwrap();
        let cvs = characteristic_values(&f).unwrap();
        prop_assert_eq!(cvs.len(), 2 * sorted.len());
        for &v in &sorted {
            for sign in [1.0, -1.0] {
                let target = c(0.0, sign / v.sqrt());
                let hit = cvs.iter().any(|cv| (cv.lambda - target).norm() < 1e-10 * target.norm());
                prop_assert!(hit, "missing {}", target);
            }
        }
    }

    #[test]
    fn solve_inverts_family(seed in 0u64..1000, dim in 2usize..9, re in -3.0..3.0f64, im in 0.5..3.0f64) {
        let diag: Vec<f64> = (0..dim).map(|i| 1.0 / (i + 1) as f64).collect();
        let f = FamilyMatrices::diagonal(&diag)
            .unwrap()
            .with_perturbations(Some(dense_random(seed, dim, 0.2)), Some(dense_random(seed + 1, dim, 0.2)))
            .unwrap();
        let lambda = c(re, im);
        let rhs = CVector::from_fn(dim, |i, _| c(1.0 + i as f64, -0.5));
        if let Ok(x) = solve(&f, lambda, &rhs) {
            let resid = (f.eval(lambda) * &x - &rhs).norm() / rhs.norm();
            prop_assert!(resid < 1e-10, "residual {}", resid);
        }
    }

    #[test]
    fn json_round_trip(seed in 0u64..1000, dim in 1usize..7, csv: bool) {
        let diag: Vec<f64> = (0..dim).map(|i| 0.5 / (i + 1) as f64).collect();
        let f = FamilyMatrices::diagonal(&diag)
            .unwrap()
            .with_perturbations(Some(dense_random(seed, dim, 0.1)), Some(dense_random(seed + 7, dim, 0.3)))
            .unwrap();
        let enc = if csv { MatrixEncoding::Csv } else { MatrixEncoding::Base64 };
        let back = FamilyMatrices::from_json(&f.to_json(enc)).unwrap();
        prop_assert_eq!(back.dim, f.dim);
        for (a, b) in [(&back.l0, &f.l0), (&back.ds, &f.ds), (&back.dc, &f.dc), (&back.c, &f.c)] {
            if csv {
                prop_assert!((a - b).norm() <= 1e-15 * b.norm().max(1.0));
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn perturbation_truncations_nest(seed: u64, small in 1usize..20, extra in 0usize..20) {
        let p = CompactPerturbation::new(seed, 0.3).unwrap();
        let a = p.matrix(small);
        let b = p.matrix(small + extra);
        prop_assert_eq!(a, b.view((0, 0), (small, small)).into_owned());
    }
}

#[test]
fn rejects_malformed_json() {
    assert!(FamilyMatrices::from_json("{}").is_err());
    assert!(FamilyMatrices::from_json("not json").is_err());
    let good = FamilyMatrices::diagonal(&[0.5]).unwrap().to_json(MatrixEncoding::Base64);
    let extra = good.replacen('{', "{\"unexpected\": 1, ", 1);
    assert!(FamilyMatrices::from_json(&extra).is_err());
}
