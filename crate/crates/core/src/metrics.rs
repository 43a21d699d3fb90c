//! Reconstruction quality measures: PSNR, SAM and ERGAS.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Error, Result};
use crate::tensor::Cube;

/// PSNR reported for an exact match.
pub const PSNR_CAP: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Peak signal-to-noise ratio in dB.
    pub psnr: f64,
    /// Mean spectral angle in radians.
    pub sam: f64,
    pub ergas: f64,
    pub mse: f64,
    /// Pixels left out of SAM because one of the spectra is all zero.
    pub sam_skipped: usize,
}

impl MetricsReport {
    /// Computes all measures; `ratio` is the resolution ratio used by ERGAS.
    pub fn compute(reference: &Cube, estimate: &Cube, ratio: usize) -> Result<Self> {
        let (sam, sam_skipped) = sam_with_skipped(reference, estimate)?;
        Ok(Self {
            psnr: psnr(reference, estimate)?,
            sam,
            ergas: ergas(reference, estimate, ratio)?,
            mse: mse(reference, estimate)?,
            sam_skipped,
        })
    }

    /// Flat `key=value` block, one entry per line.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "psnr={}", self.psnr);
        let _ = writeln!(s, "sam={}", self.sam);
        let _ = writeln!(s, "ergas={}", self.ergas);
        let _ = writeln!(s, "mse={}", self.mse);
        let _ = writeln!(s, "sam_skipped={}", self.sam_skipped);
        s
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut psnr = None;
        let mut sam = None;
        let mut ergas = None;
        let mut mse = None;
        let mut skipped = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| arg_err(format!("not a key=value line: {line:?}")))?;
            let v = v.trim();
            let num = || v.parse::<f64>().map_err(|_| arg_err(format!("bad value {v:?}")));
            match k.trim() {
                "psnr" => psnr = Some(num()?),
                "sam" => sam = Some(num()?),
                "ergas" => ergas = Some(num()?),
                "mse" => mse = Some(num()?),
                "sam_skipped" => {
                    skipped = Some(v.parse().map_err(|_| arg_err(format!("bad count {v:?}")))?)
                }
                other => return Err(arg_err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |name: &str| arg_err(format!("missing key {name}"));
        Ok(Self {
            psnr: psnr.ok_or_else(|| missing("psnr"))?,
            sam: sam.ok_or_else(|| missing("sam"))?,
            ergas: ergas.ok_or_else(|| missing("ergas"))?,
            mse: mse.ok_or_else(|| missing("mse"))?,
            sam_skipped: skipped.unwrap_or(0),
        })
    }
}

fn check_dims(a: &Cube, b: &Cube) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(shape_err(format!(
            "reference {} and estimate {} differ in size",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// Mean squared error over all voxels.
pub fn mse(reference: &Cube, estimate: &Cube) -> Result<f64> {
    check_dims(reference, estimate)?;
    let n = reference.data().len() as f64;
    Ok(reference
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// `10 log10(MAX^2 / MSE)` with `MAX` the largest reference entry.
pub fn psnr(reference: &Cube, estimate: &Cube) -> Result<f64> {
    let err = mse(reference, estimate)?;
    if err == 0.0 {
        return Ok(PSNR_CAP);
    }
    let peak = reference.max();
    if peak <= 0.0 {
        return Err(arg_err(format!("reference peak must be positive, got {peak}")));
    }
    Ok((10.0 * (peak * peak / err).log10()).min(PSNR_CAP))
}

/// Mean spectral angle in radians.
pub fn sam(reference: &Cube, estimate: &Cube) -> Result<f64> {
    Ok(sam_with_skipped(reference, estimate)?.0)
}

/// Mean spectral angle and the number of skipped all-zero pixels.
pub fn sam_with_skipped(reference: &Cube, estimate: &Cube) -> Result<(f64, usize)> {
    check_dims(reference, estimate)?;
    let d = reference.dims();
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for i in 0..d.h {
        for j in 0..d.w {
            let a = reference.spectrum(i, j);
            let b = estimate.spectrum(i, j);
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                skipped += 1;
                continue;
            }
            // 2 atan2(|a' - b'|, |a' + b'|) on the unit spectra equals
            // arccos of the cosine but stays exact near 0 and pi
            let (mut diff, mut sum) = (0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                let (u, v) = (x / na, y / nb);
                diff += (u - v) * (u - v);
                sum += (u + v) * (u + v);
            }
            total += 2.0 * diff.sqrt().atan2(sum.sqrt());
            counted += 1;
        }
    }
    let mean = if counted == 0 { 0.0 } else { total / counted as f64 };
    Ok((mean, skipped))
}

/// `(100 / r) sqrt(mean_b (RMSE_b / mu_b)^2)`.
pub fn ergas(reference: &Cube, estimate: &Cube, ratio: usize) -> Result<f64> {
    check_dims(reference, estimate)?;
    if ratio == 0 {
        return Err(arg_err("resolution ratio must be at least 1"));
    }
    let d = reference.dims();
    let pixels = (d.h * d.w) as f64;
    let mut acc = 0.0;
    for band in 0..d.b {
        let r = reference.band(band);
        let e = estimate.band(band);
        let mean = r.iter().sum::<f64>() / pixels;
        if mean == 0.0 {
            return Err(Error::DegenerateBand { band });
        }
        let mse_b = r.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pixels;
        acc += mse_b / (mean * mean);
    }
    Ok(100.0 / ratio as f64 * (acc / d.b as f64).sqrt())
}
