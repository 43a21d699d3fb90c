//! Spectral penalties on unfoldings: SVD, singular value thresholding, the
//! MCP penalty with its local linear approximation weights, and the tensor
//! nuclear / tensor MCP penalties (weighted sums over the three unfoldings).

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::tensor::{unfold, Cube, Matrix};

/// Thin SVD `A = U diag(s) V^T` with `r = min(rows, cols)` components.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    /// `U diag(s) V^T` for replacement singular values `s`.
    pub fn recompose(&self, s: &[f64]) -> Matrix {
        let rows = self.u.rows();
        let cols = self.v.rows();
        let mut out = Matrix::zeros(rows, cols);
        for (j, &sj) in s.iter().enumerate().take(self.s.len()) {
            if sj == 0.0 {
                continue;
            }
            for r in 0..rows {
                let a = self.u.get(r, j) * sj;
                if a == 0.0 {
                    continue;
                }
                for c in 0..cols {
                    let cur = out.get(r, c);
                    out.set(r, c, cur + a * self.v.get(c, j));
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of a tall `m x n` matrix held column-major.
/// Returns (left vectors scaled by singular values, right rotation).
fn jacobi_tall(mut b: Vec<f64>, m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    let tol = f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let bp = &b[p * m..(p + 1) * m];
                    let bq = &b[q * m..(q + 1) * m];
                    let mut a = 0.0;
                    let mut bb = 0.0;
                    let mut g = 0.0;
                    for (&x, &y) in bp.iter().zip(bq) {
                        a += x * x;
                        bb += y * y;
                        g += x * y;
                    }
                    (a, bb, g)
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (b, v)
}

#[inline]
fn rotate(buf: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = buf.split_at_mut(q * len);
    let xp = &mut lo[p * len..(p + 1) * len];
    let xq = &mut hi[..len];
    for (x, y) in xp.iter_mut().zip(xq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Extends the orthonormal columns `cols` (each of length `m`) with unit
/// vectors orthogonal to all of them until `want` columns exist.
fn complete_basis(cols: &mut Vec<Vec<f64>>, m: usize, want: usize) {
    let mut e = 0;
    while cols.len() < want && e < m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in cols.iter() {
                let d: f64 = c.iter().zip(&cand).map(|(a, b)| a * b).sum();
                for (x, &y) in cand.iter_mut().zip(c) {
                    *x -= d * y;
                }
            }
        }
        let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            cand.iter_mut().for_each(|x| *x /= norm);
            cols.push(cand);
        }
    }
}

/// Thin SVD of a tall or square matrix given column-major.
fn svd_tall(a_colmajor: Vec<f64>, m: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let (b, v) = jacobi_tall(a_colmajor, m, n);
    let mut order: Vec<(usize, f64)> = (0..n)
        .map(|j| {
            let col = &b[j * m..(j + 1) * m];
            (j, col.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect();
    // stable sort keeps ties deterministic
    order.sort_by(|x, y| y.1.total_cmp(&x.1));

    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &(j, sigma) in &order {
        if sigma <= tiny {
            break;
        }
        u_cols.push(b[j * m..(j + 1) * m].iter().map(|x| x / sigma).collect());
        s.push(sigma);
        v_cols.push(v[j * n..(j + 1) * n].to_vec());
    }
    let nonzero = s.len();
    for &(j, _) in &order[nonzero..] {
        s.push(0.0);
        v_cols.push(v[j * n..(j + 1) * n].to_vec());
    }
    complete_basis(&mut u_cols, m, n);
    (u_cols, s, v_cols)
}

fn columns_to_matrix(cols: &[Vec<f64>], rows: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (r, &x) in c.iter().enumerate() {
            m.set(r, j, x);
        }
    }
    m
}

/// Thin singular value decomposition by one-sided Jacobi rotations.
///
/// Singular values come out nonincreasing. Signs are fixed so that the first
/// nonzero entry of every column of `U` is positive.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(arg_err("svd input contains non-finite values"));
    }
    let (rows, cols) = (a.rows(), a.cols());
    if rows == 0 || cols == 0 {
        return Ok(SvdFactors {
            u: Matrix::zeros(rows, 0),
            s: Vec::new(),
            v: Matrix::zeros(cols, 0),
        });
    }
    // Jacobi works on the columns of the tall orientation. Column-major A^T
    // is row-major A, so the wide case needs no copy.
    let (mut u_cols, s, mut v_cols) = if rows >= cols {
        svd_tall(a.transpose().into_vec(), rows, cols)
    } else {
        let (vc, s, uc) = svd_tall(a.data().to_vec(), cols, rows);
        (uc, s, vc)
    };
    for (uc, vc) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        if let Some(&first) = uc.iter().find(|x| **x != 0.0) {
            if first < 0.0 {
                uc.iter_mut().for_each(|x| *x = -*x);
                vc.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    Ok(SvdFactors {
        u: columns_to_matrix(&u_cols, rows),
        s,
        v: columns_to_matrix(&v_cols, cols),
    })
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

pub fn nuclear_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Singular value soft-thresholding, the proximal map of `tau * ||.||_*`.
pub fn svt(a: &Matrix, tau: f64) -> Result<Matrix> {
    if tau.is_nan() || tau < 0.0 {
        return Err(arg_err(format!("threshold must be nonnegative, got {tau}")));
    }
    let f = svd(a)?;
    let shrunk: Vec<f64> = f.s.iter().map(|&s| (s - tau).max(0.0)).collect();
    Ok(f.recompose(&shrunk))
}

/// Weighted singular value thresholding `U diag((s_j - tau*w_j)_+) V^T`.
///
/// This is the exact minimizer of the weighted nuclear norm proximal problem
/// only when `w` is nondecreasing, which [`mcp_weights`] guarantees for
/// sorted singular values.
pub fn weighted_svt(a: &Matrix, tau: f64, w: &[f64]) -> Result<Matrix> {
    if tau.is_nan() || tau < 0.0 {
        return Err(arg_err(format!("threshold must be nonnegative, got {tau}")));
    }
    if let Some(bad) = w.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(arg_err(format!("weights must be nonnegative, got {bad}")));
    }
    let f = svd(a)?;
    if w.len() < f.s.len() {
        return Err(arg_err(format!(
            "{} weights given for {} singular values",
            w.len(),
            f.s.len()
        )));
    }
    let shrunk: Vec<f64> = f
        .s
        .iter()
        .zip(w)
        .map(|(&s, &wj)| (s - tau * wj).max(0.0))
        .collect();
    Ok(f.recompose(&shrunk))
}

/// Parameters of the minimax concave penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McpParams {
    pub lambda: f64,
    pub a: f64,
}

impl Default for McpParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            a: 2.0,
        }
    }
}

impl McpParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        let p = Self { lambda, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(arg_err(format!("MCP lambda must be positive, got {}", self.lambda)));
        }
        if !(self.a > 1.0 && self.a.is_finite()) {
            return Err(arg_err(format!("MCP a must exceed 1, got {}", self.a)));
        }
        Ok(())
    }

    /// Value the penalty saturates at, `a * lambda^2 / 2`.
    pub fn saturation(&self) -> f64 {
        self.a * self.lambda * self.lambda / 2.0
    }
}

/// MCP: `lambda|t| - t^2/(2a)` below `a*lambda`, `a*lambda^2/2` beyond.
pub fn mcp_value(t: f64, p: &McpParams) -> f64 {
    let t = t.abs();
    if t >= p.a * p.lambda {
        p.saturation()
    } else {
        p.lambda * t - t * t / (2.0 * p.a)
    }
}

/// Sum of MCP over the singular values of `a`.
pub fn mcp_matrix_value(a: &Matrix, p: &McpParams) -> Result<f64> {
    Ok(singular_values(a)?.iter().map(|&s| mcp_value(s, p)).sum())
}

/// LLA weights `(lambda - s_j/a)_+`, the MCP derivative at each singular value.
pub fn mcp_weights(s: &[f64], p: &McpParams) -> Vec<f64> {
    s.iter().map(|&sj| (p.lambda - sj / p.a).max(0.0)).collect()
}

/// Nonnegative per-mode weights summing to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ModeWeights {
    alpha: [f64; 3],
}

impl ModeWeights {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        if alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(arg_err(format!("mode weights must be nonnegative, got {alpha:?}")));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(arg_err(format!("mode weights must sum to 1, got {sum}")));
        }
        Ok(Self { alpha })
    }

    pub fn get(&self, mode: usize) -> f64 {
        self.alpha[mode - 1]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.alpha
    }
}

impl Default for ModeWeights {
    fn default() -> Self {
        Self {
            alpha: [1.0 / 3.0; 3],
        }
    }
}

impl TryFrom<[f64; 3]> for ModeWeights {
    type Error = Error;

    fn try_from(alpha: [f64; 3]) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<ModeWeights> for [f64; 3] {
    fn from(w: ModeWeights) -> Self {
        w.alpha
    }
}

fn weighted_over_modes(
    x: &Cube,
    w: &ModeWeights,
    f: impl Fn(&Matrix) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for mode in 1..=3 {
        let alpha = w.get(mode);
        if alpha == 0.0 {
            continue;
        }
        total += alpha * f(unfold(x, mode)?.matrix())?;
    }
    Ok(total)
}

/// `sum_i alpha_i ||X_(i)||_*`.
pub fn tensor_nuclear(x: &Cube, w: &ModeWeights) -> Result<f64> {
    weighted_over_modes(x, w, nuclear_norm)
}

/// `sum_i alpha_i sum_j MCP(sigma_j(X_(i)))`.
pub fn tensor_mcp(x: &Cube, w: &ModeWeights, p: &McpParams) -> Result<f64> {
    weighted_over_modes(x, w, |m| mcp_matrix_value(m, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{fold, Dims};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn check_factors(a: &Matrix, f: &SvdFactors) {
        let r = a.rows().min(a.cols());
        assert_eq!(f.s.len(), r);
        assert_eq!((f.u.rows(), f.u.cols()), (a.rows(), r));
        assert_eq!((f.v.rows(), f.v.cols()), (a.cols(), r));
        let rec = f.recompose(&f.s);
        let err = rec.sub(a).unwrap().frobenius_norm();
        assert!(err <= 1e-9 * a.frobenius_norm().max(1.0), "reconstruction {err}");
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.s.iter().all(|&s| s >= 0.0));
        for m in [&f.u, &f.v] {
            let g = m.transpose().matmul(m).unwrap();
            let e = g.sub(&Matrix::identity(r)).unwrap().frobenius_norm();
            assert!(e <= 1e-9, "orthonormality {e}");
        }
        for j in 0..r {
            let first = (0..f.u.rows()).map(|i| f.u.get(i, j)).find(|x| *x != 0.0);
            assert!(first.unwrap() > 0.0);
        }
    }

    /// Eigenvalues of a symmetric 3x3 matrix from the characteristic
    /// polynomial via the trigonometric cubic solution.
    fn sym3_eigenvalues(m: &Matrix) -> [f64; 3] {
        let a = |i, j| m.get(i, j);
        let p1 = a(0, 1).powi(2) + a(0, 2).powi(2) + a(1, 2).powi(2);
        let q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
        let p2 = (a(0, 0) - q).powi(2) + (a(1, 1) - q).powi(2) + (a(2, 2) - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { q } else { 0.0 };
                b.set(i, j, (a(i, j) - d) / p);
            }
        }
        let g = |i, j| b.get(i, j);
        let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [e1, 3.0 * q - e1 - e3, e3]
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&Matrix::identity(3)).unwrap();
        assert_eq!(f.s, vec![1.0, 1.0, 1.0]);
        let f = svd(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(f.s, vec![3.0, 1.0]);
        let f = svd(&Matrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(f.s, vec![3.0, 1.0]);
        check_factors(&Matrix::diag(&[1.0, 3.0]), &f);
    }

    #[test]
    fn svd_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(r, c) in &[(8, 5), (5, 8), (1, 7), (7, 1), (6, 6), (32, 256), (8, 1024)] {
            let a = random_matrix(r, c, &mut rng);
            check_factors(&a, &svd(&a).unwrap());
        }
    }

    #[test]
    fn svd_rank_deficient_and_zero() {
        let a = Matrix::zeros(4, 3);
        let f = svd(&a).unwrap();
        assert_eq!(f.s, vec![0.0; 3]);
        check_factors(&a, &f);

        // rank 1 outer product
        let u = [1.0, -2.0, 0.5, 3.0];
        let v = [0.3, 0.0, -1.0];
        let mut m = Matrix::zeros(4, 3);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m.set(i, j, ui * vj);
            }
        }
        let f = svd(&m).unwrap();
        check_factors(&m, &f);
        assert!(f.s[1] <= 1e-12 * f.s[0]);
    }

    #[test]
    fn svd_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_matrix(8, 3, &mut rng);
            let ata = a.transpose().matmul(&a).unwrap();
            let eig = sym3_eigenvalues(&ata);
            let s = singular_values(&a).unwrap();
            for (sv, e) in s.iter().zip(eig) {
                assert!((sv * sv - e).abs() <= 1e-10 * eig[0], "{sv}^2 vs {e}");
            }
        }
        let a = random_matrix(8, 5, &mut rng);
        check_factors(&a, &svd(&a).unwrap());
    }

    #[test]
    fn svd_rejects_non_finite() {
        let a = Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn svt_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(5, 4, &mut rng);
        let out = svt(&a, 0.0).unwrap();
        assert!(out.sub(&a).unwrap().frobenius_norm() <= 1e-9);

        let out = svt(&Matrix::diag(&[3.0, 1.0]), 2.0).unwrap();
        let expect = Matrix::diag(&[1.0, 0.0]);
        assert!(out.sub(&expect).unwrap().frobenius_norm() <= 1e-12);
        assert!(svt(&a, -1.0).is_err());
    }

    fn prox_objective(m: &Matrix, a: &Matrix, tau: f64, w: Option<&[f64]>) -> f64 {
        let s = singular_values(m).unwrap();
        let pen: f64 = match w {
            None => s.iter().sum(),
            Some(w) => s.iter().zip(w).map(|(a, b)| a * b).sum(),
        };
        tau * pen + 0.5 * m.sub(a).unwrap().frobenius_norm().powi(2)
    }

    #[test]
    fn svt_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(4, 4, &mut rng);
        let tau = 0.5;
        let m = svt(&a, tau).unwrap();
        let best = prox_objective(&m, &a, tau, None);
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            let p = random_matrix(4, 4, &mut rng);
            let cand = Matrix::from_vec(
                4,
                4,
                m.data().iter().zip(p.data()).map(|(x, d)| x + scale * d).collect(),
            )
            .unwrap();
            assert!(prox_objective(&cand, &a, tau, None) > best);
        }
    }

    #[test]
    fn mcp_scalar_values() {
        let p = McpParams::new(1.0, 2.0).unwrap();
        assert_eq!(mcp_value(0.0, &p), 0.0);
        assert_eq!(mcp_value(1.0, &p), 0.75);
        assert_eq!(mcp_value(-1.0, &p), 0.75);
        assert_eq!(mcp_value(5.0, &p), 1.0);
        assert_eq!(mcp_value(2.0, &p), 1.0);
        // continuity at a*lambda
        assert!((mcp_value(2.0 - 1e-9, &p) - 1.0).abs() < 1e-9);
        assert!(McpParams::new(1.0, 1.0).is_err());
        assert!(McpParams::new(0.0, 2.0).is_err());
    }

    #[test]
    fn mcp_derivative_matches_weights() {
        let p = McpParams::new(0.7, 3.0).unwrap();
        let h = 1e-6;
        for n in 1..40 {
            let t = n as f64 * 0.05;
            if (t - p.a * p.lambda).abs() < 1e-3 {
                continue;
            }
            let d = (mcp_value(t + h, &p) - mcp_value(t - h, &p)) / (2.0 * h);
            let w = mcp_weights(&[t], &p)[0];
            assert!((d - w).abs() < 1e-6, "t={t}: {d} vs {w}");
        }
    }

    #[test]
    fn mcp_matrix_cases() {
        let p = McpParams::new(1.0, 2.0).unwrap();
        assert_eq!(mcp_matrix_value(&Matrix::zeros(3, 2), &p).unwrap(), 0.0);
        let v = mcp_matrix_value(&Matrix::diag(&[5.0, 1.0]), &p).unwrap();
        assert!((v - 1.75).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(3, 4, &mut rng);
        let perm_rows = Matrix::from_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
            .unwrap();
        let pa = perm_rows.matmul(&a).unwrap();
        let base = mcp_matrix_value(&a, &p).unwrap();
        assert!((mcp_matrix_value(&pa, &p).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn mcp_weight_cases() {
        let p = McpParams::new(1.0, 2.0).unwrap();
        assert_eq!(mcp_weights(&[4.0, 1.0, 0.0], &p), vec![0.0, 0.5, 1.0]);
        assert_eq!(mcp_weights(&[9.0, 5.0, 2.0], &p), vec![0.0; 3]);
        assert_eq!(mcp_weights(&[0.0; 4], &p), vec![1.0; 4]);
    }

    #[test]
    fn weighted_svt_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(5, 3, &mut rng);
        let w1 = weighted_svt(&a, 0.4, &[1.0; 3]).unwrap();
        let s = svt(&a, 0.4).unwrap();
        assert!(w1.sub(&s).unwrap().frobenius_norm() <= 1e-12);
        let w0 = weighted_svt(&a, 0.4, &[0.0; 3]).unwrap();
        assert!(w0.sub(&a).unwrap().frobenius_norm() <= 1e-9);

        let out = weighted_svt(&Matrix::diag(&[4.0, 1.0]), 1.0, &[0.0, 0.5]).unwrap();
        assert!(out.sub(&Matrix::diag(&[4.0, 0.5])).unwrap().frobenius_norm() <= 1e-12);

        assert!(weighted_svt(&a, 0.4, &[0.0, -1.0, 0.0]).is_err());
        assert!(weighted_svt(&a, 0.4, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn weighted_svt_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(4, 4, &mut rng);
        let tau = 0.8;
        let w = mcp_weights(&singular_values(&a).unwrap(), &McpParams::new(1.0, 2.0).unwrap());
        let m = weighted_svt(&a, tau, &w).unwrap();
        // the weighted penalty is evaluated on sorted singular values of each candidate
        let best = prox_objective(&m, &a, tau, Some(&w));
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            let p = random_matrix(4, 4, &mut rng);
            let cand = Matrix::from_vec(
                4,
                4,
                m.data().iter().zip(p.data()).map(|(x, d)| x + scale * d).collect(),
            )
            .unwrap();
            assert!(prox_objective(&cand, &a, tau, Some(&w)) > best);
        }
    }

    #[test]
    fn mode_weights_validation() {
        assert!(ModeWeights::new([0.5, 0.5, 0.0]).is_ok());
        assert!(ModeWeights::new([0.5, 0.6, 0.0]).is_err());
        assert!(ModeWeights::new([1.5, -0.5, 0.0]).is_err());
        let d = ModeWeights::default();
        assert_eq!(d.as_array().iter().sum::<f64>(), 1.0);
    }

    fn rank_one_cube(u: &[f64], v: &[f64], w: &[f64]) -> Cube {
        let dims = Dims::new(u.len(), v.len(), w.len());
        Cube::from_fn(dims, |i, j, k| u[i] * v[j] * w[k]).unwrap()
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn tensor_nuclear_cases() {
        let w = ModeWeights::default();
        assert_eq!(tensor_nuclear(&Cube::zeros(Dims::new(3, 4, 2)), &w).unwrap(), 0.0);
        let x = rank_one_cube(
            &unit(&[1.0, 2.0, -1.0]),
            &unit(&[0.5, 0.5, 1.0, -2.0]),
            &unit(&[3.0, 1.0]),
        );
        for alpha in [[1.0 / 3.0; 3], [1.0, 0.0, 0.0], [0.2, 0.3, 0.5]] {
            let v = tensor_nuclear(&x, &ModeWeights::new(alpha).unwrap()).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = Dims::new(4, 3, 5);
        let x = Cube::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap();
        let w = ModeWeights::new([0.2, 0.3, 0.5]).unwrap();
        let mut expect = 0.0;
        for mode in 1..=3 {
            let s = svd(unfold(&x, mode).unwrap().matrix()).unwrap().s;
            expect += w.get(mode) * s.iter().sum::<f64>();
        }
        assert!((tensor_nuclear(&x, &w).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn tensor_mcp_bounds_and_saturation() {
        let w = ModeWeights::default();
        let p = McpParams::new(0.3, 2.5).unwrap();
        assert_eq!(tensor_mcp(&Cube::zeros(Dims::new(2, 2, 2)), &w, &p).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let dims = Dims::new(4, 5, 3);
            let x = Cube::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap();
            let mcp = tensor_mcp(&x, &w, &p).unwrap();
            let nuc = tensor_nuclear(&x, &w).unwrap();
            let sat: f64 = [4usize, 5, 3]
                .iter()
                .enumerate()
                .map(|(i, r)| w.get(i + 1) * *r as f64)
                .sum::<f64>()
                * p.saturation();
            assert!(mcp <= p.lambda * nuc + 1e-12);
            assert!(mcp <= sat + 1e-12);
        }

        // scaled identity-like cube whose unfoldings have all singular values large
        let dims = Dims::new(2, 2, 2);
        let mut data = vec![0.0; 8];
        data[dims.index(0, 0, 0)] = 100.0;
        data[dims.index(1, 1, 1)] = 100.0;
        data[dims.index(0, 1, 1)] = 100.0;
        data[dims.index(1, 0, 0)] = -100.0;
        let x = Cube::from_vec(dims, data).unwrap();
        for mode in 1..=3 {
            let s = singular_values(unfold(&x, mode).unwrap().matrix()).unwrap();
            assert!(s.iter().all(|&v| v >= p.a * p.lambda));
        }
        let v = tensor_mcp(&x, &w, &p).unwrap();
        assert!((v - p.saturation() * 2.0).abs() < 1e-12);
    }

    #[test]
    fn penalties_are_orthogonally_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dims = Dims::new(3, 4, 2);
        let x = Cube::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap();
        let w = ModeWeights::default();
        let p = McpParams::new(0.5, 2.0).unwrap();
        for mode in 1..=3 {
            let m = unfold(&x, mode).unwrap().into_matrix();
            let q1 = svd(&random_matrix(m.rows(), m.rows(), &mut rng)).unwrap().u;
            let q2 = svd(&random_matrix(m.cols(), m.cols(), &mut rng)).unwrap().u;
            let t = q1.matmul(&m).unwrap().matmul(&q2.transpose()).unwrap();
            let before_n = nuclear_norm(&m).unwrap();
            let after_n = nuclear_norm(&t).unwrap();
            assert!((before_n - after_n).abs() < 1e-9);
            let before = mcp_matrix_value(&m, &p).unwrap();
            let after = mcp_matrix_value(&t, &p).unwrap();
            assert!((before - after).abs() < 1e-9);
            let y = fold(&t, mode, dims).unwrap();
            let mode_term = |c: &Cube| nuclear_norm(unfold(c, mode).unwrap().matrix()).unwrap();
            assert!((mode_term(&x) - mode_term(&y)).abs() < 1e-9);
        }
        let _ = tensor_mcp(&x, &w, &p).unwrap();
    }
}
