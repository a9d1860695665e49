mod common;

use proptest::prelude::*;
use vanilla_bo::complexity::{
    build_model_class, default_pool, gram_for, greedy_mig, independent_gain, information_gain,
    information_gain_prefix, log_grid, random_groups, sobol_mig, EffectiveModel, ModelClassSpec, ModelVariant,
};
use vanilla_bo::gp::{KernelFamily, KernelSpec};
use vanilla_bo::linalg::Matrix;
use vanilla_bo::sampling::sobol;

fn dense_gain(k: &Matrix<f64>, idx: &[usize], noise: f64) -> f64 {
    let a: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| k[(i, j)] / noise + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    0.5 * common::dense_logdet(&a)
}

#[test]
fn single_point_gain() {
    let k = Matrix::from_rows(&[vec![1.0f64]]).unwrap();
    assert!((information_gain(&k, 1.0).unwrap() - 0.346_573_590_279_972_6).abs() < 1e-15);
    assert_eq!(information_gain(&Matrix::<f64>::zeros(0, 0), 1.0).unwrap(), 0.0);
}

#[test]
fn prefix_gains_match_dense_determinants() {
    let pts: Matrix<f64> = sobol(12, 3, Some(5)).unwrap();
    let k = gram_for(&KernelSpec::new(KernelFamily::Matern52, 3).unwrap(), 0.4, 1.3, &pts);
    let pre = information_gain_prefix(&k, 0.2).unwrap();
    for m in 1..=12 {
        let idx: Vec<usize> = (0..m).collect();
        assert!(common::rel_err(pre[m - 1], dense_gain(&k, &idx, 0.2)) < 1e-10);
    }
}

#[test]
fn greedy_is_near_the_exhaustive_optimum() {
    let spec = ModelClassSpec::new(ModelVariant::FixedLengthscale { lengthscale: 0.15 });
    let pool: Matrix<f64> = Matrix::from_fn(20, 1, |i, _| ((i * 7) % 20) as f64 / 19.0);
    let k = gram_for(&KernelSpec::new(KernelFamily::Rbf, 1).unwrap(), 0.15, 1.0, &pool);
    let mut best = f64::NEG_INFINITY;
    for a in 0..20 {
        for b in a + 1..20 {
            for c in b + 1..20 {
                for d in c + 1..20 {
                    best = best.max(dense_gain(&k, &[a, b, c, d], 1.0));
                }
            }
        }
    }
    let g = greedy_mig(&spec, 1, &pool, 4).unwrap();
    let v = *g.values.last().unwrap();
    assert!(v <= best + 1e-9);
    assert!(v >= (1.0 - (-1.0f64).exp()) * best);
}

#[test]
fn independent_kernel_matches_closed_form() {
    let spec = ModelClassSpec {
        noise_variance: 0.5,
        signal_variance: 2.0,
        ..ModelClassSpec::new(ModelVariant::Independent)
    };
    let s = sobol_mig(&spec, 7, 300, None).unwrap();
    for (&n, &v) in s.counts.iter().zip(&s.values) {
        assert_eq!(v, independent_gain(n, 2.0, 0.5));
    }
    let pool = default_pool(&spec, 7, 50, None).unwrap();
    let g = greedy_mig(&spec, 7, &pool, 50).unwrap();
    for (&n, &v) in g.counts.iter().zip(&g.values) {
        assert_eq!(v, independent_gain(n, 2.0, 0.5));
    }
}

#[test]
fn sobol_curve_never_beats_greedy() {
    for variant in [
        ModelVariant::FixedLengthscale { lengthscale: 0.5 },
        ModelVariant::ScaledLengthscale { base: 0.5, d_ref: 6.0 },
        ModelVariant::AddGpRandomGroups { lengthscale: 0.5, seed: 3 },
        ModelVariant::LocalGpShrunk { lengthscale: 0.5, shrink: 0.4 },
        ModelVariant::Rembo { d_e: 4, base: 0.5, seed: 1 },
    ] {
        let spec = ModelClassSpec::new(variant);
        let n = 60;
        let s = sobol_mig(&spec, 8, n, Some(2)).unwrap();
        let pool = default_pool(&spec, 8, n, Some(2)).unwrap();
        let g = greedy_mig(&spec, 8, &pool, n).unwrap();
        assert!(!g.truncated);
        for (&c, &v) in s.counts.iter().zip(&s.values) {
            assert!(v <= g.values[c - 1] + 1e-6, "{}: n={c} sobol {v} greedy {}", variant.name(), g.values[c - 1]);
        }
    }
}

#[test]
fn greedy_curve_is_monotone_and_submodular() {
    for seed in 0..5u64 {
        let spec = ModelClassSpec::new(ModelVariant::FixedLengthscale { lengthscale: 0.2 + 0.1 * seed as f64 });
        let pool: Matrix<f64> = sobol(200, 3, Some(seed)).unwrap();
        let g = greedy_mig(&spec, 3, &pool, 40).unwrap();
        let inc: Vec<f64> = std::iter::once(g.values[0]).chain(g.values.windows(2).map(|w| w[1] - w[0])).collect();
        for w in inc.windows(2) {
            assert!(w[0] >= 0.0 && w[1] <= w[0] + 1e-10, "{w:?}");
        }
    }
}

#[test]
fn exhausted_pool_truncates() {
    let spec = ModelClassSpec::new(ModelVariant::FixedLengthscale { lengthscale: 0.5 });
    let pool: Matrix<f64> = sobol(5, 2, None).unwrap();
    let g = greedy_mig(&spec, 2, &pool, 10).unwrap();
    assert!(g.truncated);
    assert_eq!(g.counts.len(), 5);
}

#[test]
fn addgp_grouping_probabilities() {
    assert_eq!(random_groups(1, 9), vec![vec![0]]);
    let joined = (0..4000u64).filter(|&s| random_groups(2, s).len() == 1).count();
    let p = joined as f64 / 4000.0;
    assert!((p - 0.5).abs() < 0.03, "{p}");
    for s in 0..50u64 {
        let mut all: Vec<usize> = random_groups(9, s).concat();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
    }
}

#[test]
fn local_variant_shrinks_the_domain() {
    let spec = ModelClassSpec::new(ModelVariant::LocalGpShrunk { lengthscale: 0.5, shrink: 0.4 });
    match build_model_class(&spec, 3).unwrap() {
        EffectiveModel::Grouped { side, lo, .. } => {
            assert!((side - 0.2).abs() < 1e-15);
            assert!((lo - 0.4).abs() < 1e-15);
        }
        _ => panic!("expected a grouped model"),
    }
}

#[test]
fn rembo_rejects_oversized_embedding() {
    let spec = ModelClassSpec::new(ModelVariant::Rembo { d_e: 5, base: 0.5, seed: 0 });
    assert!(build_model_class(&spec, 4).is_err());
    assert_eq!(build_model_class(&spec, 10).unwrap().point_dim(), 5);
}

#[test]
fn log_grid_shape() {
    assert_eq!(log_grid(1, 10), vec![1]);
    let g = log_grid(1000, 10);
    assert_eq!(*g.last().unwrap(), 1000);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gain_bounded_by_independent_kernel(ell in 0.05f64..3.0, d in 1usize..6, n in 1usize..60, noise in 0.05f64..2.0) {
        let spec = ModelClassSpec { noise_variance: noise, ..ModelClassSpec::new(ModelVariant::FixedLengthscale { lengthscale: ell }) };
        let s = sobol_mig(&spec, d, n, Some(1)).unwrap();
        for (&c, &v) in s.counts.iter().zip(&s.values) {
            prop_assert!(v >= 0.0);
            prop_assert!(v <= independent_gain(c, 1.0, noise) * (1.0 + 1e-12));
        }
        prop_assert!(s.values.windows(2).all(|w| w[1] >= w[0]));
    }
}
