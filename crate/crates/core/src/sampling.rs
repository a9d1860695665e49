//! Sobol sequences with a seeded digital shift, and Gaussian sampling around a point.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sobol::params::JoeKuoD6;

use crate::error::{check_len, contract, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const BITS: usize = 32;

fn direction_table() -> &'static JoeKuoD6 {
    static TABLE: OnceLock<JoeKuoD6> = OnceLock::new();
    TABLE.get_or_init(JoeKuoD6::extended)
}

/// Largest supported dimension.
pub fn max_sobol_dim() -> usize {
    direction_table().max_dims
}

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let p = &direction_table().dim_params[dim_index - 1];
    let s = p.m.len();
    for i in 0..s.min(BITS) {
        v[i] = p.m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        let mut x = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (p.a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[i - k];
            }
        }
        v[i] = x;
    }
    v
}

/// Gray-code Sobol generator over `[0,1)^D`, optionally randomized by a digital shift.
#[derive(Debug, Clone)]
pub struct SobolStream {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    state: Vec<u32>,
    index: u64,
}

impl SobolStream {
    /// `seed = None` gives the unrandomized base sequence starting at the origin.
    pub fn new(dim: usize, seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(contract("sobol dimension must be at least 1"));
        }
        if dim > max_sobol_dim() {
            return Err(contract(format!(
                "sobol dimension {dim} exceeds the direction-number table ({})",
                max_sobol_dim()
            )));
        }
        let directions = (0..dim).map(direction_numbers).collect();
        let shift = match seed {
            None => vec![0; dim],
            Some(s) => {
                use rand::Rng;
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..dim).map(|_| rng.random::<u32>()).collect()
            }
        };
        Ok(Self {
            directions,
            shift,
            state: vec![0; dim],
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Index of the next point to be produced.
    pub fn position(&self) -> u64 {
        self.index
    }

    /// Jumps to point `index` of the sequence.
    pub fn seek(&mut self, index: u64) -> Result<()> {
        if index >= 1 << BITS {
            return Err(contract("sobol index exceeds 2^32"));
        }
        let gray = index ^ (index >> 1);
        for (st, dirs) in self.state.iter_mut().zip(&self.directions) {
            *st = (0..BITS)
                .filter(|&b| (gray >> b) & 1 == 1)
                .fold(0, |acc, b| acc ^ dirs[b]);
        }
        self.index = index;
        Ok(())
    }

    /// Writes the next point into `out`.
    pub fn next_into<S: Scalar>(&mut self, out: &mut [S]) -> Result<()> {
        check_len(self.dim(), out.len())?;
        if self.index >= 1 << BITS {
            return Err(contract("sobol sequence exhausted"));
        }
        let scale = S::lit(1.0 / 4_294_967_296.0);
        for ((o, &st), &sh) in out.iter_mut().zip(&self.state).zip(&self.shift) {
            *o = S::lit(f64::from(st ^ sh)) * scale;
        }
        self.index += 1;
        if self.index < 1 << BITS {
            let c = self.index.trailing_zeros() as usize;
            for (st, dirs) in self.state.iter_mut().zip(&self.directions) {
                *st ^= dirs[c];
            }
        }
        Ok(())
    }

    pub fn take<S: Scalar>(&mut self, n: usize) -> Result<Matrix<S>> {
        let d = self.dim();
        let mut m = Matrix::zeros(n, d);
        for i in 0..n {
            self.next_into(m.row_mut(i))?;
        }
        Ok(m)
    }
}

/// First `n` points of a `D`-dimensional Sobol sequence.
pub fn sobol<S: Scalar>(n: usize, dim: usize, seed: Option<u64>) -> Result<Matrix<S>> {
    if n == 0 {
        return Err(contract("sobol needs n >= 1"));
    }
    SobolStream::new(dim, seed)?.take(n)
}

/// Initial design size `ceil(3√D)`.
pub fn doe_size(dim: usize) -> usize {
    (3.0 * (dim as f64).sqrt()).ceil() as usize
}

/// `n` points `center + scale ⊙ N(0, I)` clipped to the unit cube.
pub fn gaussian_around<S: Scalar>(center: &[S], scale: &[S], n: usize, seed: u64) -> Result<Matrix<S>> {
    check_len(center.len(), scale.len())?;
    if center.iter().any(|&c| !(c >= S::zero() && c <= S::one())) {
        return Err(contract("center must lie in the unit cube"));
    }
    if scale.iter().any(|&s| !(s >= S::zero()) || !s.is_finite()) {
        return Err(contract("scale must be non-negative and finite"));
    }
    let d = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::zeros(n, d);
    for i in 0..n {
        let row = m.row_mut(i);
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            row[k] = (center[k] + scale[k] * S::lit(z)).max(S::zero()).min(S::one());
        }
    }
    Ok(m)
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
