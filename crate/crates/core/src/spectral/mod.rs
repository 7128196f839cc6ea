//! Spectral analysis: STFT magnitudes, the multi-scale spectral loss and its
//! gradient, A-weighted loudness, and YIN fundamental estimation.

mod audit;
mod loss;
mod loudness;
mod pitch;
mod stft;

pub use audit::{averaged_power_spectrum, harmonic_audit, AuditConfig, HarmonicAudit};
pub use loss::{multiscale_loss, multiscale_loss_grad, stft_adjoint, SpectralConfig, SpectralLoss};
pub use loudness::{a_weighting_db, extract_loudness, extract_power_db, LOUDNESS_FFT_SIZE, LOUDNESS_FLOOR_DB};
pub use pitch::{
    estimate_f0, estimate_f0_with, PitchConfig, PitchTrack, DEFAULT_F0_MAX, DEFAULT_F0_MIN,
    DEFAULT_YIN_THRESHOLD,
};
pub use stft::{frame_count, stft_magnitude, Spectrogram, Stft, Window, MAGNITUDE_EPS};
