//! ADMM solver for TV plus low-rank regularized super-resolution.
//!
//! Each mode unfolding of `X` is split off into an auxiliary cube `M_i`
//! with the constraint `X = M_i` and scaled dual `Y_i`. One outer iteration
//! runs three updates:
//!
//! 1. `X`: a few Armijo-backtracked gradient steps on
//!    `||DSX - I||^2 + lambda1 TV_eps(X) + sum_i rho/2 ||M_i - X + Y_i/rho||^2`,
//!    with TV replaced by its Charbonnier smoothing.
//! 2. `M_i = fold_i(prox(X_(i) - Y_(i)/rho))`, where the prox is singular
//!    value thresholding at `lambda2 alpha_i / rho` for the nuclear norm and
//!    weighted thresholding with MCP weights taken at the current `X` for MCP.
//! 3. `Y_i += rho (M_i - X)`, then `rho *= rho_growth` up to [`RHO_MAX`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::degradation::{adjoint_degrade, bicubic_upsample, degrade_noise_free, zero_upsample, DegradationConfig};
use crate::error::{arg_err, shape_err, Result};
use crate::lowrank::{mcp_weights, singular_values, svt, tensor_mcp, tensor_nuclear, weighted_svt, McpParams, ModeWeights};
use crate::tensor::{fold, unfold, Cube};
use crate::tv::{tv_smoothed_grad, tv_smoothed_value, tv_value, TvConfig};

/// Upper bound for the growing penalty parameter.
pub const RHO_MAX: f64 = 1e6;

const ARMIJO_C: f64 = 1e-4;
const ARMIJO_MAX_HALVINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    Nuclear,
    Mcp,
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Penalty::Nuclear => "nuclear",
            Penalty::Mcp => "mcp",
        })
    }
}

impl std::str::FromStr for Penalty {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nuclear" => Ok(Penalty::Nuclear),
            "mcp" => Ok(Penalty::Mcp),
            other => Err(arg_err(format!("unknown penalty {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Bicubic,
    ZeroUpsample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub rho_growth: f64,
    pub alpha: ModeWeights,
    pub penalty: Penalty,
    pub mcp: McpParams,
    pub tv: TvConfig,
    pub max_outer: usize,
    pub max_inner: usize,
    pub tol: f64,
    pub degradation: DegradationConfig,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 1e-3,
            lambda2: 1e-2,
            rho: 1.0,
            rho_growth: 1.05,
            alpha: ModeWeights::default(),
            penalty: Penalty::Mcp,
            mcp: McpParams::default(),
            tv: TvConfig::default(),
            max_outer: 100,
            max_inner: 10,
            tol: 1e-4,
            degradation: DegradationConfig::default(),
            init: Init::Bicubic,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, name: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(arg_err(format!("{name} must be nonnegative, got {v}")))
            }
        };
        nonneg(self.lambda1, "lambda1")?;
        nonneg(self.lambda2, "lambda2")?;
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(arg_err(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.rho_growth >= 1.0 && self.rho_growth.is_finite()) {
            return Err(arg_err(format!("rho_growth must be at least 1, got {}", self.rho_growth)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(arg_err(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(arg_err("iteration caps must be positive"));
        }
        // ModeWeights is validated on construction and deserialization.
        self.mcp.validate()?;
        self.tv.validate()?;
        self.degradation.validate()
    }
}

/// Diagnostics for one outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Full objective with exact TV and the configured penalty.
    pub objective: f64,
    /// `max_i ||M_i - X||_F`.
    pub primal_residual: f64,
    /// `||X_new - X_old||_F / max(1, ||X_old||_F)`.
    pub rel_change: f64,
    /// Penalty parameter used during this iteration.
    pub rho: f64,
    /// Inner objective before and after the X update.
    pub inner_start: f64,
    pub inner_end: f64,
    pub inner_steps: usize,
    /// Whether every accepted gradient step decreased the inner objective.
    pub inner_monotone: bool,
}

impl IterationRecord {
    /// `iter=<k> obj=<v> pres=<v> dx=<v> rho=<v>`
    pub fn trace_line(&self) -> String {
        format!(
            "iter={} obj={:e} pres={:e} dx={:e} rho={:e}",
            self.iter, self.objective, self.primal_residual, self.rel_change, self.rho
        )
    }

    /// Parses a [`trace_line`](Self::trace_line); inner diagnostics are not
    /// part of the line and come back zeroed.
    pub fn parse_trace_line(line: &str) -> Result<Self> {
        let mut rec = IterationRecord {
            iter: 0,
            objective: 0.0,
            primal_residual: 0.0,
            rel_change: 0.0,
            rho: 0.0,
            inner_start: 0.0,
            inner_end: 0.0,
            inner_steps: 0,
            inner_monotone: true,
        };
        let mut seen = 0u8;
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| arg_err(format!("bad trace token {tok:?}")))?;
            let num = || v.parse::<f64>().map_err(|_| arg_err(format!("bad number {v:?}")));
            match k {
                "iter" => {
                    rec.iter = v.parse().map_err(|_| arg_err(format!("bad iter {v:?}")))?;
                    seen |= 1;
                }
                "obj" => {
                    rec.objective = num()?;
                    seen |= 2;
                }
                "pres" => {
                    rec.primal_residual = num()?;
                    seen |= 4;
                }
                "dx" => {
                    rec.rel_change = num()?;
                    seen |= 8;
                }
                "rho" => {
                    rec.rho = num()?;
                    seen |= 16;
                }
                other => return Err(arg_err(format!("unknown trace key {other:?}"))),
            }
        }
        if seen != 31 {
            return Err(arg_err(format!("incomplete trace line {line:?}")));
        }
        Ok(rec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
}

/// Iterates of the splitting.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Cube,
    pub m: [Cube; 3],
    pub y: [Cube; 3],
    pub rho: f64,
    pub iter: usize,
    pub trace: Vec<IterationRecord>,
}

impl SolverState {
    /// `X` from the configured initializer, `M_i = X`, `Y_i = 0`.
    pub fn new(i_obs: &Cube, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let r = cfg.degradation.factor;
        let x = match cfg.init {
            Init::Bicubic => bicubic_upsample(i_obs, r)?,
            Init::ZeroUpsample => zero_upsample(i_obs, r)?,
        };
        Ok(Self::from_parts(x, cfg.rho))
    }

    pub fn from_parts(x: Cube, rho: f64) -> Self {
        let zero = Cube::zeros(x.dims());
        Self {
            m: [x.clone(), x.clone(), x.clone()],
            y: [zero.clone(), zero.clone(), zero],
            x,
            rho,
            iter: 0,
            trace: Vec::new(),
        }
    }

    /// Runs one outer iteration and appends its record to the trace.
    pub fn step(&mut self, i_obs: &Cube, cfg: &SolverConfig) -> Result<IterationRecord> {
        let xu = update_x(self, i_obs, cfg)?;
        let rel_change = xu.x.sub(&self.x)?.frobenius_norm() / self.x.frobenius_norm().max(1.0);
        self.x = xu.x;
        self.m = update_m(self, cfg)?;
        let mut pres: f64 = 0.0;
        for m in &self.m {
            pres = pres.max(m.sub(&self.x)?.frobenius_norm());
        }
        self.y = update_y(self)?;
        let rho_used = self.rho;
        self.rho = (self.rho * cfg.rho_growth).min(RHO_MAX);
        self.iter += 1;
        let rec = IterationRecord {
            iter: self.iter,
            objective: objective(&self.x, i_obs, cfg)?,
            primal_residual: pres,
            rel_change,
            rho: rho_used,
            inner_start: xu.start,
            inner_end: xu.end,
            inner_steps: xu.steps,
            inner_monotone: xu.monotone,
        };
        log::debug!("{}", rec.trace_line());
        self.trace.push(rec.clone());
        Ok(rec)
    }
}

/// Result of [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub x: Cube,
    pub trace: Vec<IterationRecord>,
    pub stop: StopReason,
}

fn check_obs(x_dims: crate::Dims, i_obs: &Cube, cfg: &SolverConfig) -> Result<()> {
    let lr = cfg.degradation.lr_dims(x_dims)?;
    if lr != i_obs.dims() {
        return Err(shape_err(format!(
            "observation {} does not match {lr} implied by HR {x_dims} and factor {}",
            i_obs.dims(),
            cfg.degradation.factor
        )));
    }
    Ok(())
}

/// `||DS x - I||^2 + lambda1 TV(x) + lambda2 L(x)`.
pub fn objective(x: &Cube, i_obs: &Cube, cfg: &SolverConfig) -> Result<f64> {
    check_obs(x.dims(), i_obs, cfg)?;
    let fid = degrade_noise_free(x, &cfg.degradation)?.sub(i_obs)?.frobenius_norm().powi(2);
    let tv = if cfg.lambda1 != 0.0 { cfg.lambda1 * tv_value(x) } else { 0.0 };
    let lr = if cfg.lambda2 != 0.0 {
        cfg.lambda2
            * match cfg.penalty {
                Penalty::Nuclear => tensor_nuclear(x, &cfg.alpha)?,
                Penalty::Mcp => tensor_mcp(x, &cfg.alpha, &cfg.mcp)?,
            }
    } else {
        0.0
    };
    Ok(fid + tv + lr)
}

/// Smooth objective of the X subproblem with the current `M`, `Y` and `rho`.
pub struct InnerProblem<'a> {
    i_obs: &'a Cube,
    cfg: &'a SolverConfig,
    /// `M_i + Y_i / rho`
    targets: [Cube; 3],
    rho: f64,
}

impl<'a> InnerProblem<'a> {
    pub fn new(state: &SolverState, i_obs: &'a Cube, cfg: &'a SolverConfig) -> Result<Self> {
        check_obs(state.x.dims(), i_obs, cfg)?;
        let rho = state.rho;
        let target = |i: usize| -> Result<Cube> {
            let mut t = state.m[i].clone();
            t.axpy(1.0 / rho, &state.y[i])?;
            Ok(t)
        };
        Ok(Self {
            i_obs,
            cfg,
            targets: [target(0)?, target(1)?, target(2)?],
            rho,
        })
    }

    pub fn value(&self, x: &Cube) -> Result<f64> {
        let fid = degrade_noise_free(x, &self.cfg.degradation)?
            .sub(self.i_obs)?
            .frobenius_norm()
            .powi(2);
        let tv = if self.cfg.lambda1 != 0.0 {
            self.cfg.lambda1 * tv_smoothed_value(x, &self.cfg.tv)
        } else {
            0.0
        };
        let mut quad = 0.0;
        for t in &self.targets {
            quad += t.sub(x)?.frobenius_norm().powi(2);
        }
        Ok(fid + tv + 0.5 * self.rho * quad)
    }

    pub fn gradient(&self, x: &Cube) -> Result<Cube> {
        let res = degrade_noise_free(x, &self.cfg.degradation)?.sub(self.i_obs)?;
        let mut g = adjoint_degrade(&res, &self.cfg.degradation, x.dims())?.scale(2.0);
        if self.cfg.lambda1 != 0.0 {
            g.axpy(self.cfg.lambda1, &tv_smoothed_grad(x, &self.cfg.tv))?;
        }
        for t in &self.targets {
            g.axpy(self.rho, &x.sub(t)?)?;
        }
        Ok(g)
    }
}

/// Outcome of an X update.
#[derive(Clone, Debug)]
pub struct XUpdate {
    pub x: Cube,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Inner objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub monotone: bool,
}

/// Gradient descent with Armijo backtracking on the X subproblem, starting
/// from the current iterate.
pub fn update_x(state: &SolverState, i_obs: &Cube, cfg: &SolverConfig) -> Result<XUpdate> {
    let problem = InnerProblem::new(state, i_obs, cfg)?;
    let mut x = state.x.clone();
    let mut fx = problem.value(&x)?;
    let start = fx;
    let mut history = vec![fx];
    let mut steps = 0;
    for _ in 0..cfg.max_inner {
        let g = problem.gradient(&x)?;
        let gg = g.dot(&g)?;
        if gg == 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..ARMIJO_MAX_HALVINGS {
            let mut cand = x.clone();
            cand.axpy(-t, &g)?;
            let fc = problem.value(&cand)?;
            if fc <= fx - ARMIJO_C * t * gg {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                x = cand;
                fx = fc;
                history.push(fx);
                steps += 1;
            }
            None => break,
        }
    }
    let monotone = history.windows(2).all(|w| w[1] <= w[0]);
    Ok(XUpdate {
        x,
        start,
        end: fx,
        steps,
        history,
        monotone,
    })
}

/// Proximal step for every mode; modes are processed on separate threads.
pub fn update_m(state: &SolverState, cfg: &SolverConfig) -> Result<[Cube; 3]> {
    let dims = state.x.dims();
    let prox_mode = |mode: usize| -> Result<Cube> {
        let i = mode - 1;
        let mut arg = state.x.clone();
        arg.axpy(-1.0 / state.rho, &state.y[i])?;
        let tau = cfg.lambda2 * cfg.alpha.get(mode) / state.rho;
        if tau == 0.0 {
            return Ok(arg);
        }
        let a = unfold(&arg, mode)?.into_matrix();
        let shrunk = match cfg.penalty {
            Penalty::Nuclear => svt(&a, tau)?,
            Penalty::Mcp => {
                let s = singular_values(unfold(&state.x, mode)?.matrix())?;
                weighted_svt(&a, tau, &mcp_weights(&s, &cfg.mcp))?
            }
        };
        fold(&shrunk, mode, dims)
    };
    let results: Vec<Result<Cube>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (1..=3)
            .map(|mode| scope.spawn(move || prox_mode(mode)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("prox worker panicked"))
            .collect()
    });
    let mut it = results.into_iter();
    Ok([
        it.next().unwrap()?,
        it.next().unwrap()?,
        it.next().unwrap()?,
    ])
}

/// Dual ascent `Y_i + rho (M_i - X)` with the state's current `rho`.
pub fn update_y(state: &SolverState) -> Result<[Cube; 3]> {
    let next = |i: usize| -> Result<Cube> {
        let mut y = state.y[i].clone();
        y.axpy(state.rho, &state.m[i].sub(&state.x)?)?;
        Ok(y)
    };
    Ok([next(0)?, next(1)?, next(2)?])
}

/// Runs the ADMM loop from the configured initialization until the relative
/// change drops below `tol` or `max_outer` iterations have run.
pub fn solve(i_obs: &Cube, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let mut state = SolverState::new(i_obs, cfg)?;
    check_obs(state.x.dims(), i_obs, cfg)?;
    let mut stop = StopReason::MaxIterations;
    while state.iter < cfg.max_outer {
        let rec = state.step(i_obs, cfg)?;
        if rec.rel_change < cfg.tol {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(SolveOutcome {
        x: state.x,
        trace: state.trace,
        stop,
    })
}
