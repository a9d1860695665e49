use proptest::prelude::*;
use vanilla_bo::benchmarks::{
    evaluate_noisy, hartmann6, levy, make_embedded, BaseFunction, NoiseStream, AMBIENT_DIMS, BENCHMARK_NOISE_STD,
    HARTMANN6_OPTIMIZER, HARTMANN6_OPTIMUM,
};

#[test]
fn hartmann_optimum_reference() {
    let v = -hartmann6(&HARTMANN6_OPTIMIZER);
    assert!((v - HARTMANN6_OPTIMUM).abs() < 1e-6, "{v}");
    assert!((HARTMANN6_OPTIMUM - 3.322368011415515).abs() < 1e-12);
}

#[test]
fn levy_minimum() {
    assert!(levy(&[1.0; 4]).abs() < 1e-15);
    assert!(levy(&[0.0, 2.0, -3.0, 4.0]) > 0.0);
}

#[test]
fn zero_regret_at_the_embedded_optimizer() {
    for &d in &AMBIENT_DIMS {
        for seed in 0..3u64 {
            let b = make_embedded(BaseFunction::Levy4, d, seed).unwrap();
            assert!((b.known_optimum - b.evaluate_true(&b.optimizer()).unwrap()).abs() < 1e-12);
            let h = make_embedded(BaseFunction::Hartmann6, d, seed).unwrap();
            assert!((h.known_optimum - h.evaluate_true(&h.optimizer()).unwrap()).abs() < 1e-6);
        }
    }
}

#[test]
fn levy_optimizer_sits_inside_the_box() {
    for seed in 0..50u64 {
        let b = make_embedded(BaseFunction::Levy4, 10, seed).unwrap();
        let x = b.optimizer();
        for &a in &b.active_dims {
            assert!((0.1..=0.9).contains(&x[a]), "seed {seed}: {}", x[a]);
        }
    }
}

#[test]
fn placement_is_seeded() {
    let a = make_embedded(BaseFunction::Hartmann6, 100, 4).unwrap();
    let b = make_embedded(BaseFunction::Hartmann6, 100, 4).unwrap();
    let c = make_embedded(BaseFunction::Hartmann6, 100, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.active_dims, c.active_dims);
    let mut dims = a.active_dims.clone();
    dims.sort_unstable();
    dims.dedup();
    assert_eq!(dims.len(), 6);
    assert!(make_embedded(BaseFunction::Hartmann6, 5, 0).is_err());
}

#[test]
fn noise_has_the_benchmark_spread() {
    let mut s = NoiseStream::new(BENCHMARK_NOISE_STD, 3).unwrap();
    let n = 20000;
    let d: Vec<f64> = (0..n).map(|_| s.draw()).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((sd / BENCHMARK_NOISE_STD - 1.0).abs() < 0.03);
    assert!(mean.abs() < 4.0 * BENCHMARK_NOISE_STD / (n as f64).sqrt());
    assert_eq!(s.calls(), n as u64);
    assert!(NoiseStream::new(-1.0, 0).is_err());
}

#[test]
fn noisy_evaluation_is_reproducible() {
    let b = make_embedded(BaseFunction::Levy4, 25, 1).unwrap();
    let x = vec![0.3; 25];
    let mut s1 = NoiseStream::new(b.noise_std, 8).unwrap();
    let mut s2 = NoiseStream::new(b.noise_std, 8).unwrap();
    let a: Vec<f64> = (0..5).map(|_| evaluate_noisy(&b, &x, &mut s1).unwrap()).collect();
    let c: Vec<f64> = (0..5).map(|_| evaluate_noisy(&b, &x, &mut s2).unwrap()).collect();
    assert_eq!(a, c);
    let quiet = b.clone().with_noise_std(0.0);
    let mut s3 = NoiseStream::new(0.0, 8).unwrap();
    assert_eq!(evaluate_noisy(&quiet, &x, &mut s3).unwrap(), b.evaluate_true(&x).unwrap());
}

#[test]
fn rejects_points_outside_the_cube() {
    let b = make_embedded(BaseFunction::Levy4, 10, 0).unwrap();
    assert!(b.evaluate_true(&[1.2; 10]).is_err());
    assert!(b.evaluate_true(&[0.5; 9]).is_err());
}

proptest! {
    #[test]
    fn inert_coordinates_do_not_matter(seed in 0u64..1000, x in prop::collection::vec(0.0f64..=1.0, 25),
                                       y in prop::collection::vec(0.0f64..=1.0, 25)) {
        for base in [BaseFunction::Levy4, BaseFunction::Hartmann6] {
            let b = make_embedded(base, 25, seed).unwrap();
            let mut z = y.clone();
            for &a in &b.active_dims {
                z[a] = x[a];
            }
            prop_assert_eq!(b.evaluate_true(&x).unwrap(), b.evaluate_true(&z).unwrap());
        }
    }

    #[test]
    fn native_round_trip(seed in 0u64..1000, x in prop::collection::vec(0.0f64..=1.0, 10)) {
        let b = make_embedded(BaseFunction::Hartmann6, 10, seed).unwrap();
        let z = b.to_native(&x).unwrap();
        let back = b.from_native(&z, 0.5).unwrap();
        for &a in &b.active_dims {
            prop_assert!((back[a] - x[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn values_never_exceed_the_optimum(seed in 0u64..100, x in prop::collection::vec(0.0f64..=1.0, 10)) {
        for base in [BaseFunction::Levy4, BaseFunction::Hartmann6] {
            let b = make_embedded(base, 10, seed).unwrap();
            prop_assert!(b.evaluate_true(&x).unwrap() <= b.known_optimum + 1e-9);
        }
    }
}
