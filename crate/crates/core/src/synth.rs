//! Synthetic ground-truth cubes with controlled multilinear rank.
//!
//! A cube is built as a Tucker product `G x1 A x2 B x3 C` of a core of size
//! `(r1, r2, r3)` and three factor matrices. All draws are uniform on
//! `[0, 1)`, so the cube is nonnegative and normalization is a pure rescale
//! by the maximum, which leaves every unfolding rank unchanged. Smoothness is
//! applied to the factor columns as repeated 3-tap neighbor averaging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::tensor::{Cube, Dims};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dims: Dims,
    pub rank: [usize; 3],
    /// Rounds of neighbor averaging; a fractional part blends in a partial round.
    pub smoothness: f64,
    pub seed: u64,
    /// Rescale so the largest entry is 1.
    pub normalize: bool,
}

impl SynthConfig {
    /// The 32x32x8, rank (4,4,2), smoothness 2, seed 7 benchmark instance.
    pub fn standard() -> Self {
        Self {
            dims: Dims::new(32, 32, 8),
            rank: [4, 4, 2],
            smoothness: 2.0,
            seed: 7,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(arg_err(format!("dims {} must be positive", self.dims)));
        }
        let sizes = [self.dims.h, self.dims.w, self.dims.b];
        for (mode, (&r, &n)) in self.rank.iter().zip(&sizes).enumerate() {
            if r == 0 {
                return Err(arg_err(format!("rank for mode {} must be positive", mode + 1)));
            }
            if r > n {
                return Err(arg_err(format!(
                    "rank exceeds dimension: mode {} rank {r} > {n}",
                    mode + 1
                )));
            }
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return Err(arg_err(format!(
                "smoothness must be nonnegative, got {}",
                self.smoothness
            )));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::standard()
    }
}

/// Column-major `n x r` factor.
fn random_factor(n: usize, r: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n * r).map(|_| rng.random::<f64>()).collect()
}

/// One 3-tap averaging pass on a column, repeating edge samples.
fn average_once(col: &mut [f64]) {
    let n = col.len();
    if n < 2 {
        return;
    }
    let src = col.to_vec();
    for i in 0..n {
        let prev = src[i.saturating_sub(1)];
        let next = src[(i + 1).min(n - 1)];
        col[i] = (prev + src[i] + next) / 3.0;
    }
}

fn smooth_factor(f: &mut [f64], n: usize, amount: f64) {
    let whole = amount.floor() as usize;
    let frac = amount - whole as f64;
    for col in f.chunks_mut(n) {
        for _ in 0..whole {
            average_once(col);
        }
        if frac > 0.0 {
            let before = col.to_vec();
            average_once(col);
            for (c, b) in col.iter_mut().zip(before) {
                *c = (1.0 - frac) * b + frac * *c;
            }
        }
    }
}

/// Deterministic synthetic cube for `cfg`.
pub fn synth_cube(cfg: &SynthConfig) -> Result<Cube> {
    cfg.validate()?;
    let d = cfg.dims;
    let [r1, r2, r3] = cfg.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let core: Vec<f64> = (0..r1 * r2 * r3).map(|_| rng.random::<f64>()).collect();
    let mut fa = random_factor(d.h, r1, &mut rng);
    let mut fb = random_factor(d.w, r2, &mut rng);
    let mut fc = random_factor(d.b, r3, &mut rng);
    smooth_factor(&mut fa, d.h, cfg.smoothness);
    smooth_factor(&mut fb, d.w, cfg.smoothness);
    smooth_factor(&mut fc, d.b, cfg.smoothness);

    // T1[p][q][k] = sum_s G[p][q][s] C[k][s]
    let mut t1 = vec![0.0; r1 * r2 * d.b];
    for p in 0..r1 {
        for q in 0..r2 {
            for k in 0..d.b {
                let mut acc = 0.0;
                for s in 0..r3 {
                    acc += core[(p * r2 + q) * r3 + s] * fc[s * d.b + k];
                }
                t1[(p * r2 + q) * d.b + k] = acc;
            }
        }
    }
    // T2[p][j][k] = sum_q B[j][q] T1[p][q][k]
    let mut t2 = vec![0.0; r1 * d.w * d.b];
    for p in 0..r1 {
        for j in 0..d.w {
            for q in 0..r2 {
                let bq = fb[q * d.w + j];
                for k in 0..d.b {
                    t2[(p * d.w + j) * d.b + k] += bq * t1[(p * r2 + q) * d.b + k];
                }
            }
        }
    }
    let mut data = vec![0.0; d.len()];
    for i in 0..d.h {
        for p in 0..r1 {
            let a = fa[p * d.h + i];
            let src = &t2[p * d.w * d.b..(p + 1) * d.w * d.b];
            let dst = &mut data[i * d.w * d.b..(i + 1) * d.w * d.b];
            for (o, &v) in dst.iter_mut().zip(src) {
                *o += a * v;
            }
        }
    }
    if cfg.normalize {
        let peak = data.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            data.iter_mut().for_each(|v| *v /= peak);
        }
    }
    Cube::from_vec(d, data)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}
