//! Differentiable wavetable synthesis.
//!
//! A bank of single-cycle wavetables is read by a phase accumulator and mixed
//! with per-frame attention weights. Because every stage is differentiable,
//! the tables and controls can be fitted to target audio by gradient descent
//! on a multi-scale spectral loss, and a fitted bank can then be frozen and
//! reused for one-shot fitting, pitch shifting and fast realtime rendering.

pub mod bench;
pub mod error;
pub mod io;
pub mod mipmap;
pub mod optimize;
pub mod oscillator;
pub mod spectral;
pub mod wavetable;

pub use error::{Error, Result};
pub use io::{bank_load, bank_save, track_load, track_save, wav_read, wav_write, AudioBuffer, WavCodec};
pub use mipmap::{build_mipmaps, MipmapBank};
pub use optimize::{
    fit, fit_oneshot, pitch_shift, rank_wavetables, AmplitudeMap, FitConfig, FitParams, FitResult,
};
pub use oscillator::{
    accumulate_phase, synthesize, synthesize_additive, synthesize_mipmapped, synthesize_with,
    upsample_controls, ControlTrack, HarmonicTrack, PhaseState, RenderOptions,
};
pub use spectral::{multiscale_loss, multiscale_loss_grad, SpectralConfig, Window};
pub use wavetable::{bandlimit, init_bank, read_fractional, Wavetable, WavetableBank};
