//! Observation model: Gaussian blur, decimation, their adjoints, additive
//! noise and the bicubic interpolation baseline.
//!
//! The forward operator is `DS`: blur every band with a normalized kernel
//! under half-sample symmetric boundary extension, then keep every `r`-th
//! pixel starting at phase 0. Half-sample symmetry (`c b a | a b c`) makes the
//! blur preserve the mean of each band, and the adjoint is formed exactly by
//! scattering through the same index map.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Result};
use crate::tensor::{Cube, Dims};

pub const DEFAULT_KERNEL_SIZE: usize = 7;
pub const DEFAULT_KERNEL_SIGMA: f64 = 2.0;

/// Normalized, symmetric 2D Gaussian point spread function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct BlurKernel {
    size: usize,
    sigma: f64,
    weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct KernelSpec {
    size: usize,
    sigma: f64,
}

impl TryFrom<KernelSpec> for BlurKernel {
    type Error = crate::Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        gaussian_kernel(spec.size, spec.sigma)
    }
}

impl From<BlurKernel> for KernelSpec {
    fn from(k: BlurKernel) -> Self {
        KernelSpec {
            size: k.size,
            sigma: k.sigma,
        }
    }
}

impl BlurKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Row-major `size x size` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.size + v]
    }

    pub fn identity() -> Self {
        Self {
            size: 1,
            sigma: 1.0,
            weights: vec![1.0],
        }
    }
}

impl Default for BlurKernel {
    fn default() -> Self {
        gaussian_kernel(DEFAULT_KERNEL_SIZE, DEFAULT_KERNEL_SIGMA).expect("valid default kernel")
    }
}

/// Builds a `size x size` Gaussian kernel normalized to unit sum.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<BlurKernel> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(arg_err(format!("kernel size must be odd and positive, got {size}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(arg_err(format!("kernel sigma must be positive, got {sigma}")));
    }
    let r = (size / 2) as f64;
    let mut weights = Vec::with_capacity(size * size);
    for u in 0..size {
        for v in 0..size {
            let du = u as f64 - r;
            let dv = v as f64 - r;
            weights.push((-(du * du + dv * dv) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(BlurKernel {
        size,
        sigma,
        weights,
    })
}

/// Forward model parameters: blur, decimation factor and noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationConfig {
    pub kernel: BlurKernel,
    pub factor: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            kernel: BlurKernel::default(),
            factor: 2,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl DegradationConfig {
    /// No blur, no decimation, no noise.
    pub fn identity() -> Self {
        Self {
            kernel: BlurKernel::identity(),
            factor: 1,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factor == 0 {
            return Err(arg_err("downsampling factor must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(arg_err(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Extents of the observation produced from an HR cube of extents `hr`.
    pub fn lr_dims(&self, hr: Dims) -> Result<Dims> {
        check_divisible(hr, self.factor)?;
        Ok(Dims::new(hr.h / self.factor, hr.w / self.factor, hr.b))
    }

    pub fn hr_dims(&self, lr: Dims) -> Dims {
        Dims::new(lr.h * self.factor, lr.w * self.factor, lr.b)
    }
}

/// Half-sample symmetric reflection of `idx` into `0..n`.
#[inline]
fn reflect(idx: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = idx.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Convolves every band with `k` under symmetric boundary extension.
pub fn blur(x: &Cube, k: &BlurKernel) -> Cube {
    let d = x.dims();
    if k.size == 1 {
        return x.scale(k.weights[0]);
    }
    let r = k.radius() as isize;
    let src = x.data();
    let mut out = vec![0.0; d.len()];
    for i in 0..d.h {
        for j in 0..d.w {
            let dst = &mut out[d.index(i, j, 0)..d.index(i, j, 0) + d.b];
            for u in 0..k.size {
                let si = reflect(i as isize + u as isize - r, d.h);
                for v in 0..k.size {
                    let sj = reflect(j as isize + v as isize - r, d.w);
                    let w = k.weight(u, v);
                    let s = &src[d.index(si, sj, 0)..d.index(si, sj, 0) + d.b];
                    for (o, &val) in dst.iter_mut().zip(s) {
                        *o += w * val;
                    }
                }
            }
        }
    }
    Cube::from_vec_unchecked(d, out)
}

/// Exact adjoint of [`blur`].
pub fn blur_adjoint(y: &Cube, k: &BlurKernel) -> Cube {
    let d = y.dims();
    if k.size == 1 {
        return y.scale(k.weights[0]);
    }
    let r = k.radius() as isize;
    let src = y.data();
    let mut out = vec![0.0; d.len()];
    for i in 0..d.h {
        for j in 0..d.w {
            let s = &src[d.index(i, j, 0)..d.index(i, j, 0) + d.b];
            for u in 0..k.size {
                let ti = reflect(i as isize + u as isize - r, d.h);
                for v in 0..k.size {
                    let tj = reflect(j as isize + v as isize - r, d.w);
                    let w = k.weight(u, v);
                    let base = d.index(ti, tj, 0);
                    for (o, &val) in out[base..base + d.b].iter_mut().zip(s) {
                        *o += w * val;
                    }
                }
            }
        }
    }
    Cube::from_vec_unchecked(d, out)
}

fn check_divisible(d: Dims, r: usize) -> Result<()> {
    if r == 0 {
        return Err(arg_err("downsampling factor must be at least 1"));
    }
    if !d.h.is_multiple_of(r) || !d.w.is_multiple_of(r) {
        return Err(shape_err(format!(
            "spatial dims {}x{} are not divisible by factor {r}",
            d.h, d.w
        )));
    }
    Ok(())
}

/// Keeps pixels `(r*i, r*j)`.
pub fn downsample(x: &Cube, r: usize) -> Result<Cube> {
    let d = x.dims();
    check_divisible(d, r)?;
    if r == 1 {
        return Ok(x.clone());
    }
    let od = Dims::new(d.h / r, d.w / r, d.b);
    let mut out = Vec::with_capacity(od.len());
    for i in 0..od.h {
        for j in 0..od.w {
            out.extend_from_slice(x.spectrum(r * i, r * j));
        }
    }
    Ok(Cube::from_vec_unchecked(od, out))
}

/// Adjoint of [`downsample`]: places each value on the `r`-strided grid.
pub fn zero_upsample(x: &Cube, r: usize) -> Result<Cube> {
    if r == 0 {
        return Err(arg_err("upsampling factor must be at least 1"));
    }
    let d = x.dims();
    let od = Dims::new(d.h * r, d.w * r, d.b);
    let mut out = vec![0.0; od.len()];
    for i in 0..d.h {
        for j in 0..d.w {
            let base = od.index(r * i, r * j, 0);
            out[base..base + d.b].copy_from_slice(x.spectrum(i, j));
        }
    }
    Ok(Cube::from_vec_unchecked(od, out))
}

/// Noise-free forward operator `DS x`.
pub fn degrade_noise_free(x: &Cube, cfg: &DegradationConfig) -> Result<Cube> {
    cfg.validate()?;
    check_divisible(x.dims(), cfg.factor)?;
    downsample(&blur(x, &cfg.kernel), cfg.factor)
}

/// `DS x + e` with `e` i.i.d. Gaussian drawn from a ChaCha8 stream seeded by
/// `cfg.seed`.
pub fn degrade(x: &Cube, cfg: &DegradationConfig) -> Result<Cube> {
    let mut y = degrade_noise_free(x, cfg)?;
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| arg_err(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in y.data_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(y)
}

/// `(DS)^T res`, the adjoint of [`degrade_noise_free`].
pub fn adjoint_degrade(res: &Cube, cfg: &DegradationConfig, hr_dims: Dims) -> Result<Cube> {
    let expected = cfg.lr_dims(hr_dims)?;
    if res.dims() != expected {
        return Err(shape_err(format!(
            "residual dims {} do not match {expected} expected for HR {hr_dims}",
            res.dims()
        )));
    }
    let up = zero_upsample(res, cfg.factor)?;
    Ok(blur_adjoint(&up, &cfg.kernel))
}

/// Keys cubic convolution kernel with `a = -0.5`.
#[inline]
fn keys(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Four source indices (edge-clamped) and weights for output position `p`.
fn cubic_taps(p: usize, r: usize, n: usize) -> ([usize; 4], [f64; 4]) {
    let base = p / r;
    let t = (p % r) as f64 / r as f64;
    let clamp = |i: isize| i.clamp(0, n as isize - 1) as usize;
    let b = base as isize;
    (
        [clamp(b - 1), clamp(b), clamp(b + 1), clamp(b + 2)],
        [keys(t + 1.0), keys(t), keys(1.0 - t), keys(2.0 - t)],
    )
}

/// Bicubic interpolation by an integer factor.
///
/// Output pixel `(r*i, r*j)` coincides with source pixel `(i, j)`; samples
/// outside the source are taken from the nearest edge.
pub fn bicubic_upsample(x: &Cube, r: usize) -> Result<Cube> {
    if r == 0 {
        return Err(arg_err("upsampling factor must be at least 1"));
    }
    if r == 1 {
        return Ok(x.clone());
    }
    let d = x.dims();
    let b = d.b;
    // rows first: (H*r) x W x B
    let mid_dims = Dims::new(d.h * r, d.w, b);
    let mut mid = vec![0.0; mid_dims.len()];
    for p in 0..mid_dims.h {
        let (idx, wts) = cubic_taps(p, r, d.h);
        for j in 0..d.w {
            let dst = mid_dims.index(p, j, 0);
            for (&si, &w) in idx.iter().zip(&wts) {
                let s = x.spectrum(si, j);
                for (o, &v) in mid[dst..dst + b].iter_mut().zip(s) {
                    *o += w * v;
                }
            }
        }
    }
    let od = Dims::new(d.h * r, d.w * r, b);
    let mut out = vec![0.0; od.len()];
    for q in 0..od.w {
        let (idx, wts) = cubic_taps(q, r, d.w);
        for p in 0..od.h {
            let dst = od.index(p, q, 0);
            for (&sj, &w) in idx.iter().zip(&wts) {
                let s = mid_dims.index(p, sj, 0);
                for k in 0..b {
                    out[dst + k] += w * mid[s + k];
                }
            }
        }
    }
    Cube::from_vec(od, out)
}
