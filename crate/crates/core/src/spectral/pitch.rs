//! Frame-wise YIN fundamental estimation.
//!
//! The difference function `d(τ) = Σ_{j<W} (x_j − x_{j+τ})²` is assembled from
//! prefix energies and an FFT cross-correlation, normalized by its cumulative
//! mean, and searched for the first dip below the threshold. The chosen lag is
//! refined with a parabola through its neighbours.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_arg, Result};
use crate::oscillator::hop_size;

pub const DEFAULT_F0_MIN: f64 = 20.0;
pub const DEFAULT_F0_MAX: f64 = 4000.0;
pub const DEFAULT_YIN_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub frame_rate: f64,
    pub f0: Vec<f64>,
    /// `1 − d'(τ)` at the selected lag, clamped to `[0, 1]`.
    pub confidence: Vec<f64>,
    pub voiced: Vec<bool>,
}

impl PitchTrack {
    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }

    /// Median f0 over voiced frames.
    pub fn voiced_median(&self) -> Option<f64> {
        let mut v: Vec<f64> = self
            .f0
            .iter()
            .zip(&self.voiced)
            .filter(|(_, v)| **v)
            .map(|(f, _)| *f)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }

    /// f0 per frame with unvoiced frames taking the nearest voiced value.
    pub fn filled_f0(&self) -> Vec<f64> {
        let n = self.f0.len();
        let mut out = vec![0.0; n];
        let voiced: Vec<usize> = (0..n).filter(|&t| self.voiced[t]).collect();
        if voiced.is_empty() {
            return out;
        }
        let mut next = 0;
        for (t, o) in out.iter_mut().enumerate() {
            while next + 1 < voiced.len() && voiced[next + 1] <= t {
                next += 1;
            }
            let a = voiced[next];
            let pick = match voiced.get(next + 1) {
                Some(&b) if b.abs_diff(t) < a.abs_diff(t) => b,
                _ => a,
            };
            *o = self.f0[pick];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: DEFAULT_F0_MIN,
            f0_max: DEFAULT_F0_MAX,
            threshold: DEFAULT_YIN_THRESHOLD,
        }
    }
}

struct Yin {
    tau_min: usize,
    tau_max: usize,
    window: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    seg: Vec<f64>,
    prefix: Vec<f64>,
    cmnd: Vec<f64>,
}

impl Yin {
    fn new(sample_rate: f64, cfg: &PitchConfig) -> Self {
        let tau_min = ((sample_rate / cfg.f0_max).floor() as usize).max(2);
        let tau_max = (sample_rate / cfg.f0_min).ceil() as usize + 1;
        let window = tau_max;
        let seg_len = window + tau_max + 1;
        let fft_len = (window + seg_len).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            tau_min,
            tau_max,
            window,
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
            a: vec![Complex64::default(); fft_len],
            b: vec![Complex64::default(); fft_len],
            seg: vec![0.0; seg_len],
            prefix: vec![0.0; seg_len + 1],
            cmnd: vec![1.0; tau_max + 2],
        }
    }

    fn difference(&mut self, signal: &[f64], start: usize) {
        for (j, s) in self.seg.iter_mut().enumerate() {
            *s = signal.get(start + j).copied().unwrap_or(0.0);
        }
        for j in 0..self.seg.len() {
            self.prefix[j + 1] = self.prefix[j] + self.seg[j] * self.seg[j];
        }
        for (j, (a, b)) in self.a.iter_mut().zip(self.b.iter_mut()).enumerate() {
            let x = self.seg.get(j).copied().unwrap_or(0.0);
            *a = Complex64::new(if j < self.window { x } else { 0.0 }, 0.0);
            *b = Complex64::new(x, 0.0);
        }
        self.forward.process(&mut self.a);
        self.forward.process(&mut self.b);
        for (a, b) in self.a.iter_mut().zip(&self.b) {
            *a = a.conj() * b;
        }
        self.inverse.process(&mut self.a);
        let scale = 1.0 / self.fft_len as f64;

        let w = self.window;
        let e0 = self.prefix[w];
        let mut running = 0.0;
        self.cmnd[0] = 1.0;
        for tau in 1..self.cmnd.len() {
            let etau = self.prefix[tau + w] - self.prefix[tau];
            let r = self.a[tau].re * scale;
            let d = (e0 + etau - 2.0 * r).max(0.0);
            running += d;
            self.cmnd[tau] = if running > 0.0 {
                d * tau as f64 / running
            } else {
                1.0
            };
        }
    }

    /// Returns `(lag, d'(lag), voiced)`.
    fn pick(&self, threshold: f64) -> (f64, f64, bool) {
        let (lo, hi) = (self.tau_min, self.tau_max);
        let mut chosen = None;
        let mut tau = lo;
        while tau <= hi {
            if self.cmnd[tau] < threshold {
                while tau < hi && self.cmnd[tau + 1] < self.cmnd[tau] {
                    tau += 1;
                }
                chosen = Some(tau);
                break;
            }
            tau += 1;
        }
        let voiced = chosen.is_some();
        let tau = chosen.unwrap_or_else(|| {
            (lo..=hi)
                .min_by(|&a, &b| self.cmnd[a].total_cmp(&self.cmnd[b]))
                .unwrap_or(lo)
        });
        let value = self.cmnd[tau];
        let mut refined = tau as f64;
        if tau > lo && tau < hi {
            let (a, b, c) = (self.cmnd[tau - 1], self.cmnd[tau], self.cmnd[tau + 1]);
            let den = a - 2.0 * b + c;
            if den > 0.0 {
                refined += (0.5 * (a - c) / den).clamp(-1.0, 1.0);
            }
        }
        (refined, value, voiced)
    }
}

pub fn estimate_f0(
    signal: &[f64],
    sample_rate: f64,
    frame_rate: f64,
    f0_min: f64,
    f0_max: f64,
) -> Result<PitchTrack> {
    estimate_f0_with(
        signal,
        sample_rate,
        frame_rate,
        &PitchConfig {
            f0_min,
            f0_max,
            ..PitchConfig::default()
        },
    )
}

/// One estimate per control frame; frame `t` analyses samples from `t * hop`.
pub fn estimate_f0_with(
    signal: &[f64],
    sample_rate: f64,
    frame_rate: f64,
    cfg: &PitchConfig,
) -> Result<PitchTrack> {
    ensure_arg!(cfg.f0_min >= 20.0, "f0_min {} must be at least 20 Hz", cfg.f0_min);
    ensure_arg!(
        cfg.f0_max > cfg.f0_min && cfg.f0_max < sample_rate / 2.0,
        "f0_max {} must exceed f0_min and stay below Nyquist",
        cfg.f0_max
    );
    ensure_arg!(
        cfg.threshold > 0.0 && cfg.threshold < 1.0,
        "threshold must lie in (0, 1)"
    );
    let hop = hop_size(sample_rate, frame_rate)?;
    let frames = signal.len().div_ceil(hop);
    let mut yin = Yin::new(sample_rate, cfg);
    let mut track = PitchTrack {
        frame_rate,
        f0: Vec::with_capacity(frames),
        confidence: Vec::with_capacity(frames),
        voiced: Vec::with_capacity(frames),
    };
    for t in 0..frames {
        yin.difference(signal, t * hop);
        let (lag, value, voiced) = yin.pick(cfg.threshold);
        track.f0.push(sample_rate / lag);
        track.confidence.push((1.0 - value).clamp(0.0, 1.0));
        track.voiced.push(voiced);
    }
    Ok(track)
}
