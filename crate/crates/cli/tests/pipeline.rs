//! synth -> degrade -> baseline -> solve (nuclear, mcp) -> metrics x3.

use std::path::Path;
use std::process::Command;

use hsisr_cli::RunManifest;
use hsisr_core::cube_io::read_cube;
use hsisr_core::{Dims, MetricsReport};
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hsisr"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.code() != Some(1),
        "hsisr {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn full_pipeline_produces_three_comparable_reports() {
    let dir = TempDir::new().unwrap();
    let f = |name: &str| dir.path().join(name);
    let (gt, lr, bc) = (f("gt.hsc"), f("lr.hsc"), f("bicubic.hsc"));

    run(&["synth", "--dims", "32x32x8", "--rank", "4x4x2", "--smoothness", "2", "--seed", "7", "-o", s(&gt)]);
    run(&["degrade", "-i", s(&gt), "-o", s(&lr), "--factor", "2", "--kernel-size", "7", "--kernel-sigma", "2"]);
    run(&["baseline", "-i", s(&lr), "-o", s(&bc), "--factor", "2"]);

    let mut reports = Vec::new();
    let (_, text) = run(&["metrics", "--reference", s(&gt), "--estimate", s(&bc), "--ratio", "2"]);
    reports.push(MetricsReport::from_kv_text(&text).unwrap());

    for penalty in ["nuclear", "mcp"] {
        let out = f(&format!("{penalty}.hsc"));
        let (code, _) = run(&[
            "solve", "-i", s(&lr), "-o", s(&out), "--penalty", penalty,
            "--lambda1", "1e-4", "--lambda2", "1e-3", "--reference", s(&gt),
        ]);
        assert!(code == 0 || code == 2);
        assert_eq!(read_cube(&out).unwrap().dims(), Dims::new(32, 32, 8));

        let (_, text) = run(&["metrics", "--reference", s(&gt), "--estimate", s(&out), "--ratio", "2"]);
        let report = MetricsReport::from_kv_text(&text).unwrap();
        let manifest = RunManifest::read(&f(&format!("{penalty}.hsc.manifest.json"))).unwrap();
        assert_eq!(manifest.metrics.as_ref(), Some(&report));
        let trace = std::fs::read_to_string(f(&format!("{penalty}.hsc.trace"))).unwrap();
        assert_eq!(Some(trace.lines().count()), manifest.iterations);
        reports.push(report);
    }

    for r in &reports {
        assert!(r.psnr.is_finite() && r.sam.is_finite() && r.ergas.is_finite());
    }
    // Both reconstructions should improve on the interpolation baseline.
    assert!(reports[1].psnr > reports[0].psnr);
    assert!(reports[2].psnr > reports[0].psnr);
}
