use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanilla_bo::linalg::Matrix;
use vanilla_bo::sampling::{derive_seed, doe_size, gaussian_around, sobol, SobolStream};

/// Squared L2-star discrepancy (Warnock's formula).
fn l2_star_sq(pts: &Matrix<f64>) -> f64 {
    let (n, d) = (pts.rows() as f64, pts.cols() as i32);
    let a = 3f64.powi(-d);
    let b: f64 = pts.row_iter().map(|x| x.iter().map(|v| (1.0 - v * v) / 2.0).product::<f64>()).sum();
    let mut c = 0.0;
    for x in pts.row_iter() {
        for y in pts.row_iter() {
            c += x.iter().zip(y).map(|(p, q)| 1.0 - p.max(*q)).product::<f64>();
        }
    }
    a - 2.0 * b / n + c / (n * n)
}

#[test]
fn every_projection_is_dyadically_balanced() {
    for seed in [None, Some(3), Some(99)] {
        let m: Matrix<f64> = sobol(256, 12, seed).unwrap();
        for k in 0..12 {
            let mut bins = [0usize; 256];
            for r in m.row_iter() {
                bins[(r[k] * 256.0) as usize] += 1;
            }
            assert!(bins.iter().all(|&b| b == 1), "seed {seed:?} dim {k}");
        }
    }
}

#[test]
fn two_dim_nets_fill_elementary_boxes() {
    let m: Matrix<f64> = sobol(64, 2, Some(5)).unwrap();
    for (a, b) in [(8usize, 8usize), (4, 16), (16, 4), (2, 32)] {
        let mut boxes = vec![0usize; 64];
        for r in m.row_iter() {
            boxes[(r[0] * a as f64) as usize * b + (r[1] * b as f64) as usize] += 1;
        }
        assert!(boxes.iter().all(|&c| c == 1), "{a}x{b}");
    }
}

#[test]
fn lower_discrepancy_than_iid() {
    let n = 256;
    let s: Matrix<f64> = sobol(n, 4, Some(1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worse = 0;
    for _ in 0..20 {
        let u = Matrix::from_fn(n, 4, |_, _| rng.random::<f64>());
        if l2_star_sq(&u) <= l2_star_sq(&s) {
            worse += 1;
        }
    }
    assert_eq!(worse, 0);
}

#[test]
fn seeds_give_distinct_sequences() {
    let a: Matrix<f64> = sobol(16, 5, Some(1)).unwrap();
    let b: Matrix<f64> = sobol(16, 5, Some(2)).unwrap();
    let c: Matrix<f64> = sobol(16, 5, Some(1)).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
    assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
}

#[test]
fn high_dimensional_streams_work() {
    let m: Matrix<f64> = sobol(8, 1000, Some(4)).unwrap();
    assert!(m.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
    let mut s = SobolStream::new(1000, Some(4)).unwrap();
    s.seek(5).unwrap();
    let mut p = vec![0.0; 1000];
    s.next_into(&mut p).unwrap();
    assert_eq!(p.as_slice(), m.row(5));
    assert_eq!(s.position(), 6);
}

#[test]
fn gaussian_spread_matches_scale() {
    let n = 20000;
    let m = gaussian_around(&[0.5, 0.5], &[0.01, 0.05], n, 11).unwrap();
    for (k, want) in [(0usize, 0.01), (1, 0.05)] {
        let mean = m.row_iter().map(|r| r[k]).sum::<f64>() / n as f64;
        let var = m.row_iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() / want - 1.0).abs() < 0.05);
        assert!((mean - 0.5).abs() < 3.0 * want / (n as f64).sqrt() * 2.0);
    }
}

#[test]
fn gaussian_points_are_clipped() {
    let m = gaussian_around(&[0.0, 1.0], &[0.5, 0.5], 500, 2).unwrap();
    assert!(m.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(gaussian_around(&[1.5], &[0.1], 1, 0).is_err());
}

#[test]
fn design_size() {
    assert_eq!(doe_size(6), 8);
    assert_eq!(doe_size(25), 15);
    assert_eq!(doe_size(1000), 95);
}

proptest! {
    #[test]
    fn seek_agrees_with_sequential(seed in any::<u64>(), dim in 1usize..40, k in 0u64..300) {
        let mut a = SobolStream::new(dim, Some(seed)).unwrap();
        let all: Matrix<f64> = a.take(k as usize + 1).unwrap();
        let mut b = SobolStream::new(dim, Some(seed)).unwrap();
        b.seek(k).unwrap();
        let mut p = vec![0.0; dim];
        b.next_into(&mut p).unwrap();
        prop_assert_eq!(p.as_slice(), all.row(k as usize));
    }

    #[test]
    fn points_in_unit_cube(seed in any::<u64>(), dim in 1usize..60) {
        let m: Matrix<f64> = sobol(33, dim, Some(seed)).unwrap();
        prop_assert!(m.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
    }
}
