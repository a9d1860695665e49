mod common;

use common::random_instance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vanilla_bo::fit::{scaled_lengthscale_prior, LengthscalePrior, MeanPrior, NoisePrior, SignalVariancePolicy};
use vanilla_bo::fit::{fit, map_objective, signal_variance_hat, standardize, FitConfig, FitMode};
use vanilla_bo::fit::{HyperpriorSpec, DEFAULT_MU0, DEFAULT_SIGMA0};
use vanilla_bo::gp::{Dataset, GpModel, Hyperparameters, KernelFamily, KernelSpec};
use vanilla_bo::linalg::Matrix;
use vanilla_bo::sampling::sobol;

fn objective_at(model: &GpModel<f64>, raw: &[f64], priors: &HyperpriorSpec, mode: FitMode) -> f64 {
    let hp = Hyperparameters::from_raw(raw).unwrap();
    let m = GpModel::new(*model.kernel(), hp, model.data().clone()).unwrap();
    map_objective(&m, priors, mode).unwrap().0
}

fn fixed_everything(hp: &Hyperparameters<f64>) -> HyperpriorSpec {
    HyperpriorSpec {
        lengthscale: LengthscalePrior::Fixed { value: hp.lengthscales[0] },
        noise: NoisePrior::Fixed { value: hp.noise_variance },
        signal_variance: SignalVariancePolicy::Fixed { value: hp.signal_variance },
        mean: MeanPrior::Fixed { value: hp.mean_constant },
    }
}

#[test]
fn map_objective_gradient_matches_finite_differences() {
    let specs = [
        HyperpriorSpec::default(),
        HyperpriorSpec::gamma_3_6(),
        HyperpriorSpec::scaled_gamma_3_6(),
        HyperpriorSpec::default().with_learned_signal_variance(),
    ];
    for (s, priors) in specs.iter().enumerate() {
        for seed in 0..5u64 {
            let inst = random_instance(200 + 10 * s as u64 + seed, 7, 3);
            let (_, g) = map_objective(&inst.model, priors, FitMode::Map).unwrap();
            let raw = inst.hp.to_raw();
            let h = 1e-6;
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..raw.len() {
                let mut p = raw.clone();
                let mut m = raw.clone();
                p[i] += h;
                m[i] -= h;
                let fd = (objective_at(&inst.model, &p, priors, FitMode::Map)
                    - objective_at(&inst.model, &m, priors, FitMode::Map))
                    / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * scale, "spec {s} seed {seed} coord {i}: {fd} vs {}", g[i]);
            }
        }
    }
}

#[test]
fn mle_mode_is_the_marginal_likelihood() {
    for seed in 0..10u64 {
        let inst = random_instance(seed, 6, 2);
        let (v, g) = map_objective(&inst.model, &HyperpriorSpec::default(), FitMode::Mle).unwrap();
        let (lml, lg) = inst.model.log_marginal_likelihood_with_gradient();
        assert_eq!(v, lml);
        let lg = lg.to_raw();
        for (a, b) in g.iter().zip(&lg) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn fully_fixed_priors_reduce_to_the_marginal_likelihood() {
    let mut inst = random_instance(3, 6, 2);
    let hp = Hyperparameters::new(vec![0.4, 0.4], 1.3, 0.02, 0.1).unwrap();
    inst.model = GpModel::new(*inst.model.kernel(), hp.clone(), inst.model.data().clone()).unwrap();
    let priors = fixed_everything(&hp);
    let (v, _) = map_objective(&inst.model, &priors, FitMode::Map).unwrap();
    assert_eq!(v, inst.model.log_marginal_likelihood());
    let r = fit(inst.model.data(), inst.model.kernel(), &priors, &FitConfig::default()).unwrap();
    assert_eq!(r.hp, hp);
}

fn gp_sample(n: usize, d: usize, ell: f64, noise: f64, seed: u64) -> Dataset<f64> {
    let x: Matrix<f64> = sobol(n, d, Some(seed)).unwrap();
    let spec = KernelSpec::new(KernelFamily::Rbf, d).unwrap();
    let hp = Hyperparameters::isotropic(d, ell, 1.0, noise).unwrap();
    let mut k = spec.gram(&hp, &x).unwrap();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    let chol = vanilla_bo::linalg::Cholesky::with_jitter(&k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let l = chol.factor();
    let y: Vec<f64> = (0..n).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect();
    Dataset::from_standardized(x, y).unwrap()
}

#[test]
fn recovers_generating_lengthscale() {
    let truth = 0.3;
    let spec = KernelSpec::new(KernelFamily::Rbf, 2).unwrap();
    let mut hits = 0;
    for seed in 0..10u64 {
        let data = gp_sample(30, 2, truth, 1e-3, seed);
        let cfg = FitConfig { seed, ..Default::default() };
        let r = fit(&data, &spec, &HyperpriorSpec::default(), &cfg).unwrap();
        let ell = r.hp.median_lengthscale();
        if ell > truth / 3.0 && ell < truth * 3.0 {
            hits += 1;
        }
    }
    assert!(hits >= 9, "only {hits}/10 within a factor of 3");
}

#[test]
fn fit_is_deterministic_and_keeps_unit_signal_variance() {
    let data = gp_sample(20, 3, 0.5, 1e-2, 4);
    let spec = KernelSpec::new(KernelFamily::Matern52, 3).unwrap();
    let cfg = FitConfig { seed: 9, ..Default::default() };
    let a = fit(&data, &spec, &HyperpriorSpec::default(), &cfg).unwrap();
    let b = fit(&data, &spec, &HyperpriorSpec::default(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.hp.signal_variance, 1.0);
    assert!(a.restarts_succeeded >= 1 && a.restart_index < cfg.n_restarts);
    assert!(a.objective_value.is_finite());
}

#[test]
fn learned_signal_variance_moves() {
    let data = gp_sample(25, 2, 0.4, 1e-3, 1);
    let y: Vec<f64> = data.targets().iter().map(|v| 3.0 * v).collect();
    let data = Dataset::from_standardized(data.inputs().clone(), y).unwrap();
    let spec = KernelSpec::new(KernelFamily::Rbf, 2).unwrap();
    let priors = HyperpriorSpec::default().with_learned_signal_variance();
    let r = fit(&data, &spec, &priors, &FitConfig::default()).unwrap();
    assert!(r.hp.signal_variance > 2.0, "{}", r.hp.signal_variance);
}

#[test]
fn fit_result_respects_bounds() {
    for seed in 0..5u64 {
        let data = gp_sample(15, 4, 0.6, 1e-2, 50 + seed);
        let spec = KernelSpec::new(KernelFamily::Rbf, 4).unwrap();
        let r = fit(&data, &spec, &HyperpriorSpec::gamma_3_6(), &FitConfig { seed, ..Default::default() }).unwrap();
        assert!(r.hp.lengthscales.iter().all(|&l| (1e-4..=1e4).contains(&l)));
        assert!((1e-6..=10.0).contains(&r.hp.noise_variance));
        assert!((-10.0..=10.0).contains(&r.hp.mean_constant));
    }
}

#[test]
fn signal_variance_hat_matches_dense_oracle() {
    let inst = random_instance(11, 7, 2);
    let hp = Hyperparameters::new(inst.hp.lengthscales.clone(), 1.0, inst.hp.noise_variance, 0.0).unwrap();
    let model = GpModel::new(*inst.model.kernel(), hp.clone(), inst.model.data().clone()).unwrap();
    let n = inst.x.len();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    common::kernel_value(inst.family, &hp, &inst.x[i], &inst.x[j])
                        + if i == j { hp.noise_variance } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let ainv = common::dense_inverse(&a);
    let q: f64 = (0..n).map(|i| (0..n).map(|j| inst.y[i] * ainv[i][j] * inst.y[j]).sum::<f64>()).sum();
    let got = signal_variance_hat(&inst.y, &model).unwrap();
    assert!(common::rel_err(got, q / n as f64) < 1e-10);
    assert!(signal_variance_hat(&inst.y, &inst.model).is_err());
}

#[test]
fn standardize_edge_cases() {
    let (y, st) = standardize(&[2.0, 2.0, 2.0]).unwrap();
    assert_eq!(y, vec![0.0; 3]);
    assert_eq!(st.scale, 1.0);
    let (y, _) = standardize(&[5.0]).unwrap();
    assert_eq!(y, vec![0.0]);
    assert!(standardize::<f64>(&[]).is_err());
    assert!(standardize(&[1.0, f64::NAN]).is_err());
}

#[test]
fn scaled_prior_mode_grows_like_sqrt_dim() {
    let base = scaled_lengthscale_prior(1, DEFAULT_MU0, DEFAULT_SIGMA0).unwrap().mode();
    for d in [4usize, 16, 100, 1000] {
        let m = scaled_lengthscale_prior(d, DEFAULT_MU0, DEFAULT_SIGMA0).unwrap().mode();
        assert!(((m / base) - (d as f64).sqrt()).abs() < 1e-9 * (d as f64).sqrt());
    }
}

#[test]
fn priors_round_trip_through_json() {
    for p in [
        HyperpriorSpec::default(),
        HyperpriorSpec::gamma_3_6(),
        HyperpriorSpec::scaled_gamma_3_6().with_learned_signal_variance(),
    ] {
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<HyperpriorSpec>(&s).unwrap(), p);
    }
}

proptest! {
    #[test]
    fn standardize_is_idempotent(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let (y, _) = standardize(&v).unwrap();
        let (y2, st2) = standardize(&y).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        prop_assert!(st2.mean.abs() < 1e-9);
    }

    #[test]
    fn standardization_inverts(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let (y, st) = standardize(&v).unwrap();
        for (a, b) in y.iter().zip(&v) {
            prop_assert!((st.inverse(*a) - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}
