//! Shared fixtures for the benchmarks.

use hsisr_core::{degrade, synth_cube, Cube, DegradationConfig, SynthConfig};

/// Standard synthetic instance and its degraded observation.
pub fn standard_pair() -> (Cube, Cube) {
    let gt = synth_cube(&SynthConfig::standard()).expect("standard synth config is valid");
    let lr = degrade(&gt, &DegradationConfig::default()).expect("standard dims divide by 2");
    (gt, lr)
}
