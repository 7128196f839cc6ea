//! Gradient-based fitting: full dictionary learning, one-shot fitting against
//! a frozen bank, and resynthesis with shifted pitch.

mod adam;
mod fit;
mod grad;
mod params;
mod resynth;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fit::{
    fit, fit_observed, fit_oneshot, fit_oneshot_observed, FitConfig, FitProgress, FitResult, OneshotResult,
};
pub use grad::{backward, forward, Gradients};
pub use params::{sigmoid, softmax_into, softplus, AmplitudeMap, FitParams};
pub use resynth::{pitch_shift, rank_wavetables, Ranking};
