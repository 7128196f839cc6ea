use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::stft::Window;
use crate::error::Result;
use crate::oscillator::hop_size;

pub const LOUDNESS_FFT_SIZE: usize = 2048;
pub const LOUDNESS_FLOOR_DB: f64 = -120.0;

/// A-weighting gain in dB at `freq` Hz (IEC 61672 curve, 0 dB at 1 kHz).
pub fn a_weighting_db(freq: f64) -> f64 {
    if freq <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let f2 = freq * freq;
    let num = 12194.0f64.powi(2) * f2 * f2;
    let den = (f2 + 20.6f64.powi(2))
        * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
        * (f2 + 12194.0f64.powi(2));
    20.0 * (num / den).log10() + 2.0
}

struct FramePower {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    norm: f64,
    buf: Vec<Complex64>,
}

impl FramePower {
    fn new() -> Self {
        let n = LOUDNESS_FFT_SIZE;
        let window = Window::Hann.coefficients(n);
        let norm = 1.0 / (n as f64 * window.iter().map(|w| w * w).sum::<f64>());
        Self {
            fft: FftPlanner::new().plan_fft_forward(n),
            window,
            norm,
            buf: vec![Complex64::default(); n],
        }
    }

    /// Weighted mean-square power of the frame starting at `start`, zero-padded past the end.
    fn power(&mut self, signal: &[f64], start: usize, weights: &[f64]) -> f64 {
        let n = LOUDNESS_FFT_SIZE;
        for (j, b) in self.buf.iter_mut().enumerate() {
            let x = signal.get(start + j).copied().unwrap_or(0.0);
            *b = Complex64::new(x * self.window[j], 0.0);
        }
        self.fft.process(&mut self.buf);
        let mut total = 0.0;
        for (k, w) in weights.iter().enumerate() {
            let fold = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            total += fold * w * self.buf[k].norm_sqr();
        }
        total * self.norm
    }
}

fn loudness_with(signal: &[f64], sample_rate: f64, frame_rate: f64, weights: &[f64]) -> Result<Vec<f64>> {
    let hop = hop_size(sample_rate, frame_rate)?;
    let frames = signal.len().div_ceil(hop);
    let mut fp = FramePower::new();
    Ok((0..frames)
        .map(|t| {
            let p = fp.power(signal, t * hop, weights);
            if p > 0.0 {
                (10.0 * p.log10()).max(LOUDNESS_FLOOR_DB)
            } else {
                LOUDNESS_FLOOR_DB
            }
        })
        .collect())
}

/// Per-frame A-weighted power in dB, one frame per hop anchored at `t * hop`.
pub fn extract_loudness(signal: &[f64], sample_rate: f64, frame_rate: f64) -> Result<Vec<f64>> {
    let n = LOUDNESS_FFT_SIZE;
    let weights: Vec<f64> = (0..=n / 2)
        .map(|k| {
            let db = a_weighting_db(k as f64 * sample_rate / n as f64);
            10f64.powf(db / 10.0)
        })
        .collect();
    loudness_with(signal, sample_rate, frame_rate, &weights)
}

/// Same framing as [`extract_loudness`] without frequency weighting.
pub fn extract_power_db(signal: &[f64], sample_rate: f64, frame_rate: f64) -> Result<Vec<f64>> {
    let weights = vec![1.0; LOUDNESS_FFT_SIZE / 2 + 1];
    loudness_with(signal, sample_rate, frame_rate, &weights)
}
