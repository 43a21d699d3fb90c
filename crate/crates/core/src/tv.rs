//! Anisotropic 3D total variation.
//!
//! Differences are taken against the predecessor along each mode only where
//! the predecessor exists, so an `H x W x B` cube has
//! `(H-1)WB + H(W-1)B + HW(B-1)` difference terms. The smoothed variant
//! replaces `|t|` with the Charbonnier surrogate `sqrt(t^2 + eps^2) - eps`.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::tensor::{Cube, Dims};

pub const DEFAULT_TV_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvConfig {
    pub epsilon: f64,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_TV_EPSILON,
        }
    }
}

impl TvConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = Self { epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(arg_err(format!("TV epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Number of difference terms in the TV sum for a cube of extents `d`.
pub fn difference_count(d: Dims) -> usize {
    (d.h - 1) * d.w * d.b + d.h * (d.w - 1) * d.b + d.h * d.w * (d.b - 1)
}

/// Calls `f(a, b)` for every (voxel, predecessor) pair of linear indices.
#[inline]
fn for_each_difference(d: Dims, mut f: impl FnMut(usize, usize)) {
    let row = d.w * d.b;
    for i in 0..d.h {
        for j in 0..d.w {
            let base = d.index(i, j, 0);
            for k in 0..d.b {
                let a = base + k;
                if k > 0 {
                    f(a, a - 1);
                }
                if j > 0 {
                    f(a, a - d.b);
                }
                if i > 0 {
                    f(a, a - row);
                }
            }
        }
    }
}

/// Exact anisotropic TV.
pub fn tv_value(x: &Cube) -> f64 {
    let v = x.data();
    let mut acc = 0.0;
    for_each_difference(x.dims(), |a, b| acc += (v[a] - v[b]).abs());
    acc
}

/// Charbonnier-smoothed TV; lies in `[tv - eps * T, tv]`.
pub fn tv_smoothed_value(x: &Cube, cfg: &TvConfig) -> f64 {
    let v = x.data();
    let e = cfg.epsilon;
    let mut acc = 0.0;
    for_each_difference(x.dims(), |a, b| {
        let t = v[a] - v[b];
        acc += charbonnier(t, e);
    });
    acc
}

#[inline]
fn charbonnier(t: f64, e: f64) -> f64 {
    // t^2 / (sqrt(t^2+e^2) + e) avoids the cancellation in sqrt(t^2+e^2) - e
    let t2 = t * t;
    t2 / ((t2 + e * e).sqrt() + e)
}

/// Gradient of [`tv_smoothed_value`].
pub fn tv_smoothed_grad(x: &Cube, cfg: &TvConfig) -> Cube {
    let d = x.dims();
    let v = x.data();
    let e2 = cfg.epsilon * cfg.epsilon;
    let mut g = vec![0.0; d.len()];
    for_each_difference(d, |a, b| {
        let t = v[a] - v[b];
        let s = t / (t * t + e2).sqrt();
        g[a] += s;
        g[b] -= s;
    });
    Cube::from_vec_unchecked(d, g)
}
