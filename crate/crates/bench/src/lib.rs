//! Shared inputs for the criterion benchmarks.

use wtsynth_core::bench::{bench_material, BenchConfig, BenchMaterial};
use wtsynth_core::optimize::{FitConfig, FitParams};
use wtsynth_core::{init_bank, synthesize, ControlTrack, Wavetable, WavetableBank};

pub const SAMPLE_RATE: f64 = 16000.0;
pub const FRAME_RATE: f64 = 250.0;

/// One second of benchmark material with the given harmonic and table counts.
pub fn material(harmonics: usize, n_tables: usize) -> BenchMaterial {
    let cfg = BenchConfig {
        harmonics,
        n_tables,
        ..BenchConfig::default()
    };
    bench_material(&cfg).expect("bench material")
}

/// A random bank and a constant track playing it for `seconds`.
pub fn bank_and_track(n_tables: usize, table_len: usize, seconds: f64) -> (WavetableBank, ControlTrack) {
    let bank = init_bank(n_tables, table_len, 0.3, 7).expect("bank");
    let attention = vec![1.0 / n_tables as f64; n_tables];
    let frames = (seconds * FRAME_RATE).round() as usize;
    let track = ControlTrack::constant(FRAME_RATE, frames, 220.0, 0.5, &attention).expect("track");
    (bank, track)
}

/// A rendered saw and sine of `len` samples, as estimate and target.
pub fn signal_pair(len: usize) -> (Vec<f64>, Vec<f64>) {
    let frames = len.div_ceil((SAMPLE_RATE / FRAME_RATE) as usize);
    let render = |table: Wavetable, f0: f64| {
        let bank = WavetableBank::new(vec![table]).expect("bank");
        let track = ControlTrack::constant(FRAME_RATE, frames, f0, 0.5, &[1.0]).expect("track");
        let mut x = synthesize(&bank, &track, SAMPLE_RATE, true).expect("render");
        x.truncate(len);
        x
    };
    (
        render(Wavetable::sawtooth(512).expect("saw"), 220.0),
        render(Wavetable::sine(512).expect("sine"), 233.0),
    )
}

/// Fit parameters, f0 and target for one gradient evaluation.
pub struct GradientCase {
    pub params: FitParams,
    pub f0: Vec<f64>,
    pub target: Vec<f64>,
    pub config: FitConfig,
}

pub fn gradient_case(n_tables: usize, seconds: f64) -> GradientCase {
    let frames = (seconds * FRAME_RATE).round() as usize;
    let (_, target) = signal_pair(frames * (SAMPLE_RATE / FRAME_RATE) as usize);
    let config = FitConfig::default();
    let params = FitParams::init(n_tables, config.table_len, frames, config.sigma, 0, 0.5).expect("params");
    GradientCase {
        params,
        f0: vec![233.0; frames],
        target,
        config,
    }
}
