//! Command-line front end: `synth`, `degrade`, `baseline`, `solve`,
//! `metrics` and `export-band`.
//!
//! Exit codes: 0 on success (for `solve`, convergence within tolerance),
//! 2 when `solve` stops at the iteration cap, 1 on usage or I/O errors.

pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hsisr_core::cube_io::{export_band, read_cube, write_cube};
use hsisr_core::lowrank::singular_values;
use hsisr_core::solver::{Init, StopReason};
use hsisr_core::synth::numerical_rank;
use hsisr_core::{
    bicubic_upsample, degrade, gaussian_kernel, solve, synth_cube, unfold, DegradationConfig, Dims,
    McpParams, MetricsReport, ModeWeights, Penalty, SolverConfig, SynthConfig, TvConfig,
};

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hsisr", version, about = "Hyperspectral single-cube super-resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate a synthetic low-rank, smooth ground-truth cube.
    Synth(SynthArgs),
    /// Blur, decimate and optionally add noise to a cube.
    Degrade(DegradeArgs),
    /// Bicubic upsampling baseline.
    Baseline(BaselineArgs),
    /// Reconstruct a high-resolution cube with the ADMM solver.
    Solve(SolveArgs),
    /// Compare an estimate against a reference (PSNR, SAM, ERGAS).
    Metrics(MetricsArgs),
    /// Write one band as an 8-bit PGM image.
    ExportBand(ExportBandArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Cube extents as HxWxB.
    #[arg(long)]
    pub dims: Dims,
    /// Per-mode ranks as R1xR2xR3.
    #[arg(long)]
    pub rank: Dims,
    #[arg(long, default_value_t = 2.0)]
    pub smoothness: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip rescaling to a unit maximum.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Manifest path (default: <output>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Odd Gaussian kernel size.
    #[arg(long)]
    pub kernel_size: Option<usize>,
    #[arg(long)]
    pub kernel_sigma: Option<f64>,
    /// Downsampling factor.
    #[arg(long)]
    pub factor: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub factor: usize,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Nuclear,
    Mcp,
}

impl From<PenaltyArg> for Penalty {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::Nuclear => Penalty::Nuclear,
            PenaltyArg::Mcp => Penalty::Mcp,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Bicubic,
    ZeroUpsample,
}

impl From<InitArg> for Init {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Bicubic => Init::Bicubic,
            InitArg::ZeroUpsample => Init::ZeroUpsample,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Low-resolution observation.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// JSON solver configuration; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_growth: Option<f64>,
    /// Mode weights as a1,a2,a3 (must sum to 1).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub mcp_lambda: Option<f64>,
    #[arg(long)]
    pub mcp_a: Option<f64>,
    /// Charbonnier smoothing for the TV term.
    #[arg(long)]
    pub tv_eps: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Trace path (default: <output>.trace).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Ground truth; when given, metrics are stored in the manifest.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    /// Resolution ratio used by ERGAS.
    #[arg(long, default_value_t = 2)]
    pub ratio: usize,
    /// Print JSON instead of key=value lines.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportBandArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub band: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn manifest_path(explicit: &Option<PathBuf>, output: &Path) -> PathBuf {
    explicit
        .clone()
        .unwrap_or_else(|| with_suffix(output, ".manifest.json"))
}

fn load(path: &Path) -> Result<hsisr_core::Cube> {
    read_cube(path).with_context(|| format!("reading cube {}", path.display()))
}

fn store(x: &hsisr_core::Cube, path: &Path) -> Result<()> {
    write_cube(x, path).with_context(|| format!("writing cube {}", path.display()))
}

/// Applies kernel/factor flags on top of `base`.
fn apply_kernel_args(base: &mut DegradationConfig, k: &KernelArgs) -> Result<()> {
    if k.kernel_size.is_some() || k.kernel_sigma.is_some() {
        let size = k.kernel_size.unwrap_or(base.kernel.size());
        let sigma = k.kernel_sigma.unwrap_or(base.kernel.sigma());
        base.kernel = gaussian_kernel(size, sigma)?;
    }
    if let Some(f) = k.factor {
        base.factor = f;
    }
    Ok(())
}

/// Dispatches a parsed command and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<i32> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Degrade(a) => cmd_degrade(a, out),
        Command::Baseline(a) => cmd_baseline(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Metrics(a) => cmd_metrics(a, out),
        Command::ExportBand(a) => cmd_export_band(a, out),
    }
}

pub fn cmd_synth(a: SynthArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let start = Instant::now();
    let cfg = SynthConfig {
        dims: a.dims,
        rank: [a.rank.h, a.rank.w, a.rank.b],
        smoothness: a.smoothness,
        seed: a.seed,
        normalize: !a.no_normalize,
    };
    cfg.validate()?;
    let x = synth_cube(&cfg)?;
    store(&x, &a.output)?;
    let mut ranks = [0usize; 3];
    for (mode, slot) in (1..=3).zip(ranks.iter_mut()) {
        let s = singular_values(unfold(&x, mode)?.matrix())?;
        *slot = numerical_rank(&s, 1e-10);
    }
    writeln!(out, "dims={}", x.dims())?;
    writeln!(out, "numerical_ranks={}x{}x{}", ranks[0], ranks[1], ranks[2])?;

    let mut m = RunManifest::new("synth");
    m.synth = Some(cfg);
    m.output("cube", &a.output);
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.write(&manifest_path(&a.manifest, &a.output))?;
    Ok(EXIT_OK)
}

pub fn cmd_degrade(a: DegradeArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let start = Instant::now();
    let mut cfg = DegradationConfig {
        noise_sigma: a.noise,
        seed: a.seed,
        ..Default::default()
    };
    apply_kernel_args(&mut cfg, &a.kernel)?;
    cfg.validate()?;
    let x = load(&a.input)?;
    let d = x.dims();
    if !d.h.is_multiple_of(cfg.factor) || !d.w.is_multiple_of(cfg.factor) {
        bail!(
            "input dims {}x{} (height x width) are not divisible by factor {}",
            d.h,
            d.w,
            cfg.factor
        );
    }
    let y = degrade(&x, &cfg)?;
    store(&y, &a.output)?;
    writeln!(out, "dims={}", y.dims())?;

    let mut m = RunManifest::new("degrade");
    m.degradation = Some(cfg);
    m.input("cube", &a.input).output("cube", &a.output);
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.write(&manifest_path(&a.manifest, &a.output))?;
    Ok(EXIT_OK)
}

pub fn cmd_baseline(a: BaselineArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let start = Instant::now();
    let x = load(&a.input)?;
    let y = bicubic_upsample(&x, a.factor)?;
    store(&y, &a.output)?;
    writeln!(out, "dims={}", y.dims())?;

    let mut m = RunManifest::new("baseline");
    m.input("cube", &a.input).output("cube", &a.output);
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.write(&manifest_path(&a.manifest, &a.output))?;
    Ok(EXIT_OK)
}

/// Builds the solver configuration: defaults, then `--config`, then flags.
pub fn solver_config(a: &SolveArgs) -> Result<SolverConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => SolverConfig::default(),
    };
    if let Some(p) = a.penalty {
        cfg.penalty = p.into();
    }
    if let Some(v) = a.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = a.lambda2 {
        cfg.lambda2 = v;
    }
    if let Some(v) = a.rho {
        cfg.rho = v;
    }
    if let Some(v) = a.rho_growth {
        cfg.rho_growth = v;
    }
    if let Some(v) = &a.alpha {
        cfg.alpha = ModeWeights::new([v[0], v[1], v[2]])?;
    }
    if a.mcp_lambda.is_some() || a.mcp_a.is_some() {
        cfg.mcp = McpParams::new(
            a.mcp_lambda.unwrap_or(cfg.mcp.lambda),
            a.mcp_a.unwrap_or(cfg.mcp.a),
        )?;
    }
    if let Some(v) = a.tv_eps {
        cfg.tv = TvConfig::new(v)?;
    }
    if let Some(v) = a.max_outer {
        cfg.max_outer = v;
    }
    if let Some(v) = a.max_inner {
        cfg.max_inner = v;
    }
    if let Some(v) = a.tol {
        cfg.tol = v;
    }
    if let Some(v) = a.init {
        cfg.init = v.into();
    }
    apply_kernel_args(&mut cfg.degradation, &a.kernel)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_solve(a: SolveArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let start = Instant::now();
    let cfg = solver_config(&a)?;
    let lr = load(&a.input)?;
    let reference = a.reference.as_deref().map(load).transpose()?;
    if let Some(r) = &reference {
        let hr = cfg.degradation.hr_dims(lr.dims());
        if r.dims() != hr {
            bail!("reference dims {} do not match reconstruction dims {hr}", r.dims());
        }
    }
    let result = solve(&lr, &cfg)?;
    store(&result.x, &a.output)?;

    let trace_path = a.trace.clone().unwrap_or_else(|| with_suffix(&a.output, ".trace"));
    let mut trace = String::new();
    for rec in &result.trace {
        trace.push_str(&rec.trace_line());
        trace.push('\n');
    }
    fs::write(&trace_path, trace).with_context(|| format!("writing trace {}", trace_path.display()))?;

    let metrics = reference
        .as_ref()
        .map(|r| MetricsReport::compute(r, &result.x, cfg.degradation.factor))
        .transpose()?;

    let mut m = RunManifest::new("solve");
    m.degradation = Some(cfg.degradation.clone());
    m.solver = Some(cfg);
    m.input("observation", &a.input);
    if let Some(r) = &a.reference {
        m.input("reference", r);
    }
    m.output("cube", &a.output).output("trace", &trace_path);
    m.iterations = Some(result.trace.len());
    m.stop = Some(result.stop);
    m.final_record = result.trace.last().cloned();
    m.metrics = metrics.clone();
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.write(&manifest_path(&a.manifest, &a.output))?;

    writeln!(out, "dims={}", result.x.dims())?;
    writeln!(out, "iterations={}", result.trace.len())?;
    let stop = match result.stop {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
    };
    writeln!(out, "stop={stop}")?;
    if let Some(r) = metrics {
        write!(out, "{}", r.to_kv_text())?;
    }
    Ok(match result.stop {
        StopReason::Converged => EXIT_OK,
        StopReason::MaxIterations => EXIT_MAX_ITER,
    })
}

pub fn cmd_metrics(a: MetricsArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let reference = load(&a.reference)?;
    let estimate = load(&a.estimate)?;
    if reference.dims() != estimate.dims() {
        bail!(
            "reference dims {} and estimate dims {} differ",
            reference.dims(),
            estimate.dims()
        );
    }
    let report = MetricsReport::compute(&reference, &estimate, a.ratio)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        write!(out, "{}", report.to_kv_text())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_export_band(a: ExportBandArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let x = load(&a.input)?;
    export_band(&x, a.band, &a.output)
        .with_context(|| format!("exporting band {} to {}", a.band, a.output.display()))?;
    writeln!(out, "band={} size={}x{}", a.band, x.dims().w, x.dims().h)?;
    Ok(EXIT_OK)
}
