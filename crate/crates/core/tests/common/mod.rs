//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanilla_bo::gp::{Dataset, GpModel, Hyperparameters, KernelFamily, KernelSpec};
use vanilla_bo::linalg::Matrix;

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let src = m[c].clone();
                for (v, s) in m[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `log|A|` by LU elimination with partial pivoting.
pub fn dense_logdet(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        acc += piv.abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / piv;
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

pub fn kernel_value(family: KernelFamily, hp: &Hyperparameters<f64>, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hp.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    let r = r2.sqrt();
    let c = match family {
        KernelFamily::Rbf => (-0.5 * r2).exp(),
        KernelFamily::Matern52 => (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp(),
    };
    hp.signal_variance * c
}

pub struct Instance {
    pub model: GpModel<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub hp: Hyperparameters<f64>,
    pub family: KernelFamily,
}

/// Random well-conditioned GP instance.
pub fn random_instance(seed: u64, n: usize, d: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = if rng.random_bool(0.5) {
        KernelFamily::Rbf
    } else {
        KernelFamily::Matern52
    };
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let hp = Hyperparameters::new(
        (0..d).map(|_| rng.random_range(0.1..1.5)).collect(),
        rng.random_range(0.5..2.0),
        rng.random_range(1e-3..0.3),
        rng.random_range(-0.5..0.5),
    )
    .unwrap();
    let spec = KernelSpec::new(family, d).unwrap();
    let data = Dataset::from_standardized(Matrix::from_rows(&x).unwrap(), y.clone()).unwrap();
    let model = GpModel::new(spec, hp.clone(), data).unwrap();
    Instance {
        model,
        x,
        y,
        hp,
        family,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
