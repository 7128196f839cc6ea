use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_arg, invalid_arg, Error, Result};

/// Smoothing term in `sqrt(re² + im² + ε²)`, keeping the magnitude differentiable at zero.
pub const MAGNITUDE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Periodic Hann.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (TAU * n as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hann" => Ok(Window::Hann),
            "rect" | "rectangular" | "boxcar" => Ok(Window::Rectangular),
            other => Err(invalid_arg!("unknown window '{other}'")),
        }
    }
}

/// Magnitude spectrogram, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub n_frames: usize,
    pub n_bins: usize,
    pub fft_size: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.magnitudes[t * self.n_bins..(t + 1) * self.n_bins]
    }
}

/// Number of full frames; the trailing partial frame is dropped.
pub fn frame_count(n_samples: usize, fft_size: usize, hop: usize) -> usize {
    if n_samples < fft_size {
        0
    } else {
        (n_samples - fft_size) / hop + 1
    }
}

/// Windowed short-time transform with its adjoint.
pub struct Stft {
    fft_size: usize,
    hop: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Stft {
    pub fn new(fft_size: usize, hop: usize, window: Window) -> Result<Self> {
        ensure_arg!(fft_size >= 2, "fft size must be at least 2");
        ensure_arg!(hop >= 1, "hop must be at least 1");
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_size);
        let inverse = planner.plan_fft_inverse(fft_size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            fft_size,
            hop,
            window: window.coefficients(fft_size),
            forward,
            inverse,
            buf: vec![Complex64::default(); fft_size],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        frame_count(n_samples, self.fft_size, self.hop)
    }

    /// Half-spectrum frames (`n_frames * n_bins`, frame-major).
    pub fn forward(&mut self, signal: &[f64]) -> Result<Vec<Complex64>> {
        ensure_arg!(
            signal.len() >= self.fft_size,
            "signal of {} samples is shorter than one {}-sample window",
            signal.len(),
            self.fft_size
        );
        let frames = self.n_frames(signal.len());
        let bins = self.n_bins();
        let mut out = Vec::with_capacity(frames * bins);
        for t in 0..frames {
            let start = t * self.hop;
            let seg = &signal[start..start + self.fft_size];
            for ((b, &x), &w) in self.buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex64::new(x * w, 0.0);
            }
            self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
            out.extend_from_slice(&self.buf[..bins]);
        }
        Ok(out)
    }

    /// Adjoint of [`forward`](Self::forward) under the real inner product
    /// `⟨u, v⟩ = Σ Re(u)·Re(v) + Im(u)·Im(v)`, overlap-added into `n_samples`.
    pub fn adjoint(&mut self, spectra: &[Complex64], n_samples: usize) -> Result<Vec<f64>> {
        let frames = self.n_frames(n_samples);
        let bins = self.n_bins();
        ensure_arg!(
            spectra.len() == frames * bins,
            "expected {} spectral values, got {}",
            frames * bins,
            spectra.len()
        );
        let mut out = vec![0.0; n_samples];
        self.adjoint_accumulate(spectra, &mut out);
        Ok(out)
    }

    pub(crate) fn adjoint_accumulate(&mut self, spectra: &[Complex64], out: &mut [f64]) {
        let bins = self.n_bins();
        for (t, frame) in spectra.chunks_exact(bins).enumerate() {
            self.buf[..bins].copy_from_slice(frame);
            self.buf[bins..].fill(Complex64::default());
            self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
            let start = t * self.hop;
            for ((o, b), &w) in out[start..start + self.fft_size]
                .iter_mut()
                .zip(&self.buf)
                .zip(&self.window)
            {
                *o += w * b.re;
            }
        }
    }
}

#[inline]
pub(crate) fn smoothed_magnitude(z: Complex64) -> f64 {
    (z.re * z.re + z.im * z.im + MAGNITUDE_EPS * MAGNITUDE_EPS).sqrt()
}

pub fn stft_magnitude(signal: &[f64], fft_size: usize, hop: usize, window: Window) -> Result<Spectrogram> {
    let mut stft = Stft::new(fft_size, hop, window)?;
    let spectra = stft.forward(signal)?;
    Ok(Spectrogram {
        magnitudes: spectra.iter().map(|z| smoothed_magnitude(*z)).collect(),
        n_frames: stft.n_frames(signal.len()),
        n_bins: stft.n_bins(),
        fft_size,
        hop,
    })
}
