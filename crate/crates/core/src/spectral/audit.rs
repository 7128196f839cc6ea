//! Spectral peak audit: how loud is the strongest peak that is not a harmonic of f0?

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::stft::Window;
use crate::error::{ensure_arg, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub fft_size: usize,
    /// Peaks closer than this many bins to a permitted harmonic are attributed to it.
    pub guard_bins: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            fft_size: 8192,
            guard_bins: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAudit {
    /// Power of the fundamental peak, dB (arbitrary reference).
    pub fundamental_db: f64,
    /// Strongest non-harmonic peak relative to the fundamental, dB.
    pub worst_relative_db: f64,
    pub worst_freq: f64,
}

/// Welch-averaged Hann power spectrum (`fft_size / 2 + 1` bins), hop `fft_size / 2`.
pub fn averaged_power_spectrum(signal: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    ensure_arg!(fft_size >= 16 && fft_size.is_power_of_two(), "fft size must be a power of two");
    ensure_arg!(!signal.is_empty(), "empty signal");
    let window = Window::Hann.coefficients(fft_size);
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let hop = fft_size / 2;
    let frames = if signal.len() <= fft_size {
        1
    } else {
        (signal.len() - fft_size) / hop + 1
    };
    let bins = fft_size / 2 + 1;
    let mut power = vec![0.0; bins];
    let mut buf = vec![Complex64::default(); fft_size];
    for t in 0..frames {
        for (j, b) in buf.iter_mut().enumerate() {
            let x = signal.get(t * hop + j).copied().unwrap_or(0.0);
            *b = Complex64::new(x * window[j], 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr() / frames as f64;
        }
    }
    Ok(power)
}

/// Audits `signal` for spectral peaks away from `k·f0`, `k ≥ 1`, `k·f0 < sr/2`.
pub fn harmonic_audit(signal: &[f64], sample_rate: f64, f0: f64, cfg: &AuditConfig) -> Result<HarmonicAudit> {
    ensure_arg!(f0 > 0.0 && f0 < sample_rate / 2.0, "f0 {f0} outside (0, Nyquist)");
    let power = averaged_power_spectrum(signal, cfg.fft_size)?;
    let bin_hz = sample_rate / cfg.fft_size as f64;
    let guard_hz = cfg.guard_bins as f64 * bin_hz;
    let nyquist = sample_rate / 2.0;

    let near_harmonic = |freq: f64| {
        let k = (freq / f0).round().max(1.0);
        k * f0 < nyquist && (freq - k * f0).abs() <= guard_hz
    };

    let f0_bin = (f0 / bin_hz).round() as usize;
    let lo = f0_bin.saturating_sub(cfg.guard_bins);
    let hi = (f0_bin + cfg.guard_bins).min(power.len() - 1);
    let fundamental = power[lo..=hi].iter().copied().fold(0.0, f64::max);
    ensure_arg!(fundamental > 0.0, "no energy at the fundamental");

    let mut worst = f64::NEG_INFINITY;
    let mut worst_freq = 0.0;
    for k in 1..power.len() - 1 {
        let p = power[k];
        if p > power[k - 1] && p >= power[k + 1] {
            let freq = k as f64 * bin_hz;
            if near_harmonic(freq) {
                continue;
            }
            let rel = 10.0 * (p / fundamental).log10();
            if rel > worst {
                worst = rel;
                worst_freq = freq;
            }
        }
    }
    Ok(HarmonicAudit {
        fundamental_db: 10.0 * fundamental.log10(),
        worst_relative_db: worst,
        worst_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn detects_inharmonic_tone() {
        let x: Vec<f64> = (0..16384)
            .map(|n| {
                let t = n as f64 / 16000.0;
                (TAU * 500.0 * t).sin() + 0.1 * (TAU * 1234.0 * t).sin()
            })
            .collect();
        let a = harmonic_audit(&x, 16000.0, 500.0, &AuditConfig::default()).unwrap();
        assert!((a.worst_relative_db - -20.0).abs() < 1.0, "{a:?}");
        assert!((a.worst_freq - 1234.0).abs() < 3.0);
    }

    #[test]
    fn harmonics_are_permitted() {
        let x: Vec<f64> = (0..16384)
            .map(|n| {
                let t = n as f64 / 16000.0;
                (1..10).map(|k| (TAU * 500.0 * k as f64 * t).sin() / k as f64).sum()
            })
            .collect();
        let a = harmonic_audit(&x, 16000.0, 500.0, &AuditConfig::default()).unwrap();
        assert!(a.worst_relative_db < -60.0, "{a:?}");
    }
}
