//! Multi-scale L1 spectral loss and its gradient with respect to the signal.
//!
//! Per FFT size the loss is the mean over frames and bins of `| |X| - |Y| |`,
//! summed across sizes. The gradient chains `sign(|X| - |Y|)` through the
//! smoothed magnitude `X / |X|_ε` and the adjoint of the windowed transform.

use rustfft::num_complex::Complex64;

use super::stft::{smoothed_magnitude, Stft, Window};
use crate::error::{ensure_arg, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub fft_sizes: Vec<usize>,
    /// Window length divided by hop.
    pub hop_divisor: usize,
    pub window: Window,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            fft_sizes: vec![64, 128, 256, 512, 1024, 2048],
            hop_divisor: 4,
            window: Window::Hann,
        }
    }
}

impl SpectralConfig {
    pub fn with_sizes(fft_sizes: &[usize]) -> Self {
        Self {
            fft_sizes: fft_sizes.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(!self.fft_sizes.is_empty(), "at least one fft size is required");
        for &n in &self.fft_sizes {
            ensure_arg!(n >= 32 && n.is_power_of_two(), "fft size {n} must be a power of two >= 32");
        }
        ensure_arg!(
            self.hop_divisor >= 1 && self.hop_divisor <= 32,
            "hop divisor {} must lie in 1..=32",
            self.hop_divisor
        );
        Ok(())
    }

    pub fn hop(&self, fft_size: usize) -> usize {
        (fft_size / self.hop_divisor).max(1)
    }

    pub fn max_fft_size(&self) -> usize {
        self.fft_sizes.iter().copied().max().unwrap_or(0)
    }
}

struct Scale {
    stft: Stft,
    target: Vec<f64>,
    norm: f64,
}

/// Loss against a fixed target, caching the target spectra and FFT plans.
pub struct SpectralLoss {
    n_samples: usize,
    scales: Vec<Scale>,
}

impl SpectralLoss {
    pub fn new(target: &[f64], config: &SpectralConfig) -> Result<Self> {
        config.validate()?;
        ensure_arg!(
            target.len() >= config.max_fft_size(),
            "signal of {} samples is shorter than the largest fft size {}",
            target.len(),
            config.max_fft_size()
        );
        let scales = config
            .fft_sizes
            .iter()
            .map(|&n| {
                let mut stft = Stft::new(n, config.hop(n), config.window)?;
                let spectra = stft.forward(target)?;
                let norm = 1.0 / spectra.len() as f64;
                Ok(Scale {
                    stft,
                    target: spectra.into_iter().map(smoothed_magnitude).collect(),
                    norm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_samples: target.len(),
            scales,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        ensure_arg!(
            x.len() == self.n_samples,
            "signal length {} does not match target length {}",
            x.len(),
            self.n_samples
        );
        Ok(())
    }

    pub fn loss(&mut self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let mut total = 0.0;
        for scale in &mut self.scales {
            let spectra = scale.stft.forward(x)?;
            let sum: f64 = spectra
                .iter()
                .zip(&scale.target)
                .map(|(z, m)| (smoothed_magnitude(*z) - m).abs())
                .sum();
            total += sum * scale.norm;
        }
        Ok(total)
    }

    pub fn loss_and_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(x)?;
        let mut total = 0.0;
        let mut grad = vec![0.0; x.len()];
        for scale in &mut self.scales {
            let mut spectra = scale.stft.forward(x)?;
            let mut sum = 0.0;
            for (z, &m) in spectra.iter_mut().zip(&scale.target) {
                let mag = smoothed_magnitude(*z);
                let diff = mag - m;
                sum += diff.abs();
                let sign = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *z *= sign * scale.norm / mag;
            }
            total += sum * scale.norm;
            scale.stft.adjoint_accumulate(&spectra, &mut grad);
        }
        Ok((total, grad))
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    ensure_arg!(
        x.len() == y.len(),
        "signals differ in length ({} vs {})",
        x.len(),
        y.len()
    );
    Ok(())
}

/// Sum over FFT sizes of the mean absolute magnitude difference.
pub fn multiscale_loss(x: &[f64], y: &[f64], config: &SpectralConfig) -> Result<f64> {
    check_pair(x, y)?;
    SpectralLoss::new(y, config)?.loss(x)
}

/// Gradient of [`multiscale_loss`] with respect to every sample of `x`.
pub fn multiscale_loss_grad(x: &[f64], target: &[f64], config: &SpectralConfig) -> Result<Vec<f64>> {
    check_pair(x, target)?;
    Ok(SpectralLoss::new(target, config)?.loss_and_grad(x)?.1)
}

/// Adjoint of the complex STFT; exposed for verifying the gradient machinery.
pub fn stft_adjoint(
    spectra: &[Complex64],
    n_samples: usize,
    fft_size: usize,
    hop: usize,
    window: Window,
) -> Result<Vec<f64>> {
    Stft::new(fft_size, hop, window)?.adjoint(spectra, n_samples)
}
