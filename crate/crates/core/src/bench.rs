//! Timing harness comparing the additive baseline with mipmapped wavetable rendering.

use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_arg, Error, Result};
use crate::mipmap::{build_mipmaps, octaves_below_nyquist, MipmapBank, DEFAULT_BASE_F0};
use crate::oscillator::{
    hop_size, synthesize_additive, synthesize_mipmapped, ControlTrack, HarmonicTrack, DEFAULT_FRAME_RATE,
    DEFAULT_SAMPLE_RATE,
};
use crate::wavetable::init_bank;

pub const BENCH_F0_RANGE: (f64, f64) = (80.0, 800.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub trials: usize,
    /// Audio rendered per trial and per path.
    pub seconds: f64,
    pub sample_rate: f64,
    pub frame_rate: f64,
    pub harmonics: usize,
    pub n_tables: usize,
    pub table_len: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seconds: 1.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            frame_rate: DEFAULT_FRAME_RATE,
            harmonics: 100,
            n_tables: 10,
            table_len: 512,
            warmup: 10,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.trials >= 1, "trials must be at least 1");
        ensure_arg!(self.seconds > 0.0 && self.seconds.is_finite(), "seconds must be positive");
        ensure_arg!(self.harmonics >= 1, "harmonics must be at least 1");
        ensure_arg!(self.n_tables >= 1, "n_tables must be at least 1");
        ensure_arg!(
            BENCH_F0_RANGE.1 < self.sample_rate / 2.0,
            "sample rate too low for the {}-{} Hz material",
            BENCH_F0_RANGE.0,
            BENCH_F0_RANGE.1
        );
        hop_size(self.sample_rate, self.frame_rate)?;
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        ((self.seconds * self.frame_rate).round() as usize).max(1)
    }
}

/// Identical control material for both renderers.
#[derive(Debug, Clone)]
pub struct BenchMaterial {
    pub additive: HarmonicTrack,
    pub wavetable: ControlTrack,
    pub mipmaps: MipmapBank,
}

/// f0 random walk within [`BENCH_F0_RANGE`] and per-frame coefficients
/// uniform in [0, 1] (attention rows normalized).
pub fn bench_material(cfg: &BenchConfig) -> Result<BenchMaterial> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let frames = cfg.n_frames();
    let (lo, hi) = BENCH_F0_RANGE;
    let mut f = rng.random_range(lo..hi);
    let mut f0 = Vec::with_capacity(frames);
    for _ in 0..frames {
        f0.push(f);
        f = (f * (rng.random_range(-0.02..0.02f64)).exp2()).clamp(lo, hi);
    }
    let harm: Vec<f64> = (0..frames * cfg.harmonics).map(|_| rng.random::<f64>()).collect();
    let amplitude: Vec<f64> = (0..frames).map(|_| rng.random::<f64>()).collect();
    let mut attention = Vec::with_capacity(frames * cfg.n_tables);
    for _ in 0..frames {
        let row: Vec<f64> = (0..cfg.n_tables).map(|_| rng.random::<f64>() + 1e-12).collect();
        let s: f64 = row.iter().sum();
        attention.extend(row.iter().map(|c| c / s));
    }
    let bank = init_bank(cfg.n_tables, cfg.table_len, 0.3, cfg.seed)?.frozen();
    let mipmaps = build_mipmaps(&bank, cfg.sample_rate, octaves_below_nyquist(cfg.sample_rate, DEFAULT_BASE_F0))?;
    Ok(BenchMaterial {
        additive: HarmonicTrack::new(cfg.frame_rate, f0.clone(), cfg.harmonics, harm)?,
        wavetable: ControlTrack::new(cfg.frame_rate, f0, amplitude, cfg.n_tables, attention)?,
        mipmaps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub additive_ms_per_second_audio: f64,
    pub dwts_ms_per_second_audio: f64,
    /// `additive / dwts`.
    pub speedup_ratio: f64,
    pub trials: usize,
    pub harmonics: usize,
    pub n_tables: usize,
    /// Per-trial wall time in ms: `(additive, dwts)`.
    pub trial_ms: Vec<(f64, f64)>,
}

impl BenchReport {
    /// Writes `trial,additive_ms,dwts_ms`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["trial", "additive_ms", "dwts_ms"]).map_err(err)?;
        for (i, (a, d)) in self.trial_ms.iter().enumerate() {
            w.write_record([i.to_string(), a.to_string(), d.to_string()])
                .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn time_ms(f: impl FnOnce() -> Result<Vec<f64>>) -> Result<f64> {
    let start = Instant::now();
    let out = f()?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    black_box(out);
    Ok(ms)
}

/// Runs on the calling thread; the two renderers alternate within each trial.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let m = bench_material(cfg)?;
    let sr = cfg.sample_rate;
    let additive = || synthesize_additive(black_box(&m.additive), sr);
    let dwts = || synthesize_mipmapped(black_box(&m.mipmaps), black_box(&m.wavetable), sr);
    for _ in 0..cfg.warmup {
        black_box(additive()?);
        black_box(dwts()?);
    }
    let mut trial_ms = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let pair = if t % 2 == 0 {
            let a = time_ms(additive)?;
            (a, time_ms(dwts)?)
        } else {
            let d = time_ms(dwts)?;
            (time_ms(additive)?, d)
        };
        trial_ms.push(pair);
    }
    let audio_seconds = (cfg.n_frames() * hop_size(sr, cfg.frame_rate)?) as f64 / sr;
    let n = trial_ms.len() as f64;
    let additive_ms = trial_ms.iter().map(|p| p.0).sum::<f64>() / n / audio_seconds;
    let dwts_ms = trial_ms.iter().map(|p| p.1).sum::<f64>() / n / audio_seconds;
    Ok(BenchReport {
        additive_ms_per_second_audio: additive_ms,
        dwts_ms_per_second_audio: dwts_ms,
        speedup_ratio: additive_ms / dwts_ms,
        trials: cfg.trials,
        harmonics: cfg.harmonics,
        n_tables: cfg.n_tables,
        trial_ms,
    })
}
