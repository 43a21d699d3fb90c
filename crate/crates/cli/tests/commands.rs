use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hsisr_cli::RunManifest;
use hsisr_core::cube_io::read_cube;
use hsisr_core::solver::StopReason;
use hsisr_core::{Dims, MetricsReport};
use tempfile::TempDir;

fn hsisr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsisr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hsisr(args);
    assert!(
        out.status.success(),
        "hsisr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn kv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value line");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn synth_standard(dir: &TempDir) -> PathBuf {
    let gt = p(dir, "gt.hsc");
    ok(&["synth", "--dims", "32x32x8", "--rank", "4x4x2", "--seed", "7", "-o", s(&gt)]);
    gt
}

#[test]
fn synth_shape_and_reported_ranks() {
    let dir = TempDir::new().unwrap();
    let gt = p(&dir, "gt.hsc");
    let out = ok(&["synth", "--dims", "32x32x8", "--rank", "4x4x2", "--seed", "7", "-o", s(&gt)]);
    let fields = kv(&out);
    assert_eq!(fields["dims"], "32x32x8");
    assert_eq!(fields["numerical_ranks"], "4x4x2");
    assert_eq!(read_cube(&gt).unwrap().dims(), Dims::new(32, 32, 8));
    let m = RunManifest::read(&p(&dir, "gt.hsc.manifest.json")).unwrap();
    assert_eq!(m.synth.unwrap().seed, 7);
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.hsc");
    let b = p(&dir, "b.hsc");
    for out in [&a, &b] {
        ok(&["synth", "--dims", "12x10x5", "--rank", "3x2x2", "--seed", "11", "-o", s(out)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synth_rejects_rank_above_dimension() {
    let dir = TempDir::new().unwrap();
    let out = hsisr(&[
        "synth", "--dims", "32x32x8", "--rank", "40x4x2", "--seed", "7", "-o",
        s(&p(&dir, "x.hsc")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank exceeds dimension"));
    assert!(!p(&dir, "x.hsc").exists());
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(hsisr(&["synth"]).status.code(), Some(1));
    assert_eq!(hsisr(&["solve", "-i", "a", "-o", "b", "--penalty", "lasso"]).status.code(), Some(1));
    assert_eq!(hsisr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hsisr(&["--help"]).status.code(), Some(0));
    assert_eq!(hsisr(&["--version"]).status.code(), Some(0));
    assert_eq!(hsisr(&["metrics", "--reference", "/nonexistent/a", "--estimate", "/nonexistent/b"]).status.code(), Some(1));
}

#[test]
fn degrade_shape_and_divisibility() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let lr = p(&dir, "lr.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr), "--factor", "2"]);
    assert_eq!(read_cube(&lr).unwrap().dims(), Dims::new(16, 16, 8));
    let m = RunManifest::read(&p(&dir, "lr.hsc.manifest.json")).unwrap();
    let d = m.degradation.unwrap();
    assert_eq!((d.factor, d.kernel.size(), d.seed), (2, 7, 0));

    let out = hsisr(&["degrade", "-i", s(&gt), "-o", s(&p(&dir, "bad.hsc")), "--factor", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("32x32") && err.contains("factor 3"), "{err}");
}

#[test]
fn degrade_identity_chain_is_bitwise() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let out = p(&dir, "same.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&out), "--factor", "1", "--kernel-size", "1", "--noise", "0"]);
    assert_eq!(std::fs::read(&gt).unwrap(), std::fs::read(&out).unwrap());
}

#[test]
fn noisy_degrade_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let a = p(&dir, "a.hsc");
    let b = p(&dir, "b.hsc");
    let c = p(&dir, "c.hsc");
    for (out, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        ok(&["degrade", "-i", s(&gt), "-o", s(out), "--noise", "0.01", "--seed", seed]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn baseline_shapes_and_identity() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let lr = p(&dir, "lr.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr)]);
    let up = p(&dir, "up.hsc");
    ok(&["baseline", "-i", s(&lr), "-o", s(&up), "--factor", "2"]);
    assert_eq!(read_cube(&up).unwrap().dims(), Dims::new(32, 32, 8));
    let same = p(&dir, "same.hsc");
    ok(&["baseline", "-i", s(&lr), "-o", s(&same), "--factor", "1"]);
    assert_eq!(std::fs::read(&lr).unwrap(), std::fs::read(&same).unwrap());
}

#[test]
fn solve_identity_problem_converges_with_exit_zero() {
    let dir = TempDir::new().unwrap();
    let gt = p(&dir, "gt.hsc");
    ok(&["synth", "--dims", "8x8x4", "--rank", "2x2x2", "--seed", "1", "-o", s(&gt)]);
    let x = p(&dir, "x.hsc");
    let out = hsisr(&[
        "solve", "-i", s(&gt), "-o", s(&x), "--factor", "1", "--kernel-size", "1",
        "--lambda1", "0", "--lambda2", "0", "--max-outer", "50",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = RunManifest::read(&p(&dir, "x.hsc.manifest.json")).unwrap();
    assert_eq!(m.stop, Some(StopReason::Converged));
    let truth = read_cube(&gt).unwrap();
    let rec = read_cube(&x).unwrap();
    assert!(rec.sub(&truth).unwrap().frobenius_norm() <= 1e-6 * truth.frobenius_norm());
}

#[test]
fn solve_iteration_cap_exits_two_and_trace_matches_manifest() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let lr = p(&dir, "lr.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr)]);
    let x = p(&dir, "x.hsc");
    let trace = p(&dir, "run.trace");
    let out = hsisr(&[
        "solve", "-i", s(&lr), "-o", s(&x), "--max-outer", "4", "--tol", "1e-12",
        "--trace", s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let m = RunManifest::read(&p(&dir, "x.hsc.manifest.json")).unwrap();
    assert_eq!(m.stop, Some(StopReason::MaxIterations));
    assert_eq!(m.iterations, Some(4));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 4);
    for (k, line) in text.lines().enumerate() {
        let rec = hsisr_core::IterationRecord::parse_trace_line(line).unwrap();
        assert_eq!(rec.iter, k + 1);
    }
    let last = text.lines().last().unwrap();
    assert_eq!(last, m.final_record.unwrap().trace_line());
    assert_eq!(read_cube(&x).unwrap().dims(), Dims::new(32, 32, 8));
}

#[test]
fn solve_rejects_bad_config_before_compute() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let x = p(&dir, "x.hsc");
    for bad in [
        vec!["--alpha", "0.5,0.5,0.5"],
        vec!["--lambda1", "-1"],
        vec!["--kernel-size", "4"],
        vec!["--rho", "0"],
    ] {
        let mut args = vec!["solve", "-i", s(&gt), "-o", s(&x)];
        args.extend(bad.iter().copied());
        let out = hsisr(&args);
        assert_eq!(out.status.code(), Some(1), "{bad:?}");
        assert!(!x.exists(), "{bad:?} produced output");
    }
}

#[test]
fn config_file_values_apply_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let lr = p(&dir, "lr.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr)]);
    let cfg = p(&dir, "cfg.json");
    std::fs::write(&cfg, r#"{"penalty": "nuclear", "lambda1": 0.0005, "max_outer": 3, "tol": 1e-12}"#).unwrap();
    let x = p(&dir, "x.hsc");
    let out = hsisr(&["solve", "-i", s(&lr), "-o", s(&x), "--config", s(&cfg), "--max-outer", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let solver = RunManifest::read(&p(&dir, "x.hsc.manifest.json")).unwrap().solver.unwrap();
    assert_eq!(solver.penalty, hsisr_core::Penalty::Nuclear);
    assert_eq!(solver.lambda1, 0.0005);
    assert_eq!(solver.max_outer, 2);
}

#[test]
fn metrics_identical_files_and_library_agreement() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let fields = kv(&ok(&["metrics", "--reference", s(&gt), "--estimate", s(&gt)]));
    assert_eq!(fields["psnr"].parse::<f64>().unwrap(), 100.0);
    assert_eq!(fields["sam"].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fields["ergas"].parse::<f64>().unwrap(), 0.0);

    let lr = p(&dir, "lr.hsc");
    let up = p(&dir, "up.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr)]);
    ok(&["baseline", "-i", s(&lr), "-o", s(&up)]);
    let text = ok(&["metrics", "--reference", s(&gt), "--estimate", s(&up), "--ratio", "2"]);
    let printed = MetricsReport::from_kv_text(&text).unwrap();
    let direct = MetricsReport::compute(&read_cube(&gt).unwrap(), &read_cube(&up).unwrap(), 2).unwrap();
    assert_eq!(printed, direct);

    let json = ok(&["metrics", "--reference", s(&gt), "--estimate", s(&up), "--json"]);
    let parsed: MetricsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed, direct);
}

#[test]
fn metrics_dim_mismatch_is_an_error() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let lr = p(&dir, "lr.hsc");
    ok(&["degrade", "-i", s(&gt), "-o", s(&lr)]);
    let out = hsisr(&["metrics", "--reference", s(&gt), "--estimate", s(&lr)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("differ"));
}

#[test]
fn export_band_writes_pgm() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let pgm = p(&dir, "b3.pgm");
    ok(&["export-band", "-i", s(&gt), "--band", "3", "-o", s(&pgm)]);
    let bytes = std::fs::read(&pgm).unwrap();
    let header = b"P5\n32 32\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    let pixels = &bytes[header.len()..];
    assert_eq!(pixels.len(), 32 * 32);
    assert_eq!(*pixels.iter().min().unwrap(), 0);
    assert_eq!(*pixels.iter().max().unwrap(), 255);

    let out = hsisr(&["export-band", "-i", s(&gt), "--band", "8", "-o", s(&pgm)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupted_input_is_reported_not_crashed() {
    let dir = TempDir::new().unwrap();
    let gt = synth_standard(&dir);
    let mut bytes = std::fs::read(&gt).unwrap();
    bytes[0] = b'X';
    let bad = p(&dir, "bad.hsc");
    std::fs::write(&bad, &bytes).unwrap();
    let out = hsisr(&["baseline", "-i", s(&bad), "-o", s(&p(&dir, "o.hsc"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.hsc"));
}
