use super::adam::{AdamConfig, AdamState};
use super::grad::Evaluator;
use super::params::{non_finite_block, AmplitudeMap, FitParams};
use crate::error::{ensure_arg, Error, Result};
use crate::oscillator::{hop_size, ControlTrack, DEFAULT_FRAME_RATE, DEFAULT_SAMPLE_RATE};
use crate::spectral::SpectralConfig;
use crate::wavetable::{WavetableBank, DEFAULT_INIT_SIGMA};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub spectral: SpectralConfig,
    pub antialias: bool,
    pub seed: u64,
    pub freeze_wavetables: bool,
    pub sigma: f64,
    pub table_len: usize,
    pub sample_rate: f64,
    pub frame_rate: f64,
    pub amplitude_map: AmplitudeMap,
    /// Amplitude every frame starts from.
    pub initial_amplitude: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            learning_rate: 1e-3,
            spectral: SpectralConfig::default(),
            antialias: true,
            seed: 0,
            freeze_wavetables: false,
            sigma: DEFAULT_INIT_SIGMA,
            table_len: 512,
            sample_rate: DEFAULT_SAMPLE_RATE,
            frame_rate: DEFAULT_FRAME_RATE,
            amplitude_map: AmplitudeMap::Softplus,
            initial_amplitude: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.iterations >= 1, "iterations must be at least 1");
        ensure_arg!(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning rate must be positive"
        );
        ensure_arg!(self.sigma > 0.0, "init sigma must be positive");
        self.spectral.validate()?;
        hop_size(self.sample_rate, self.frame_rate)?;
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// State passed to a fit observer after each evaluation.
#[derive(Debug)]
pub struct FitProgress<'a> {
    /// Number of optimizer steps taken so far.
    pub iteration: usize,
    /// Loss of `params`.
    pub loss: f64,
    pub params: &'a FitParams,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Learned tables, frozen.
    pub bank: WavetableBank,
    pub track: ControlTrack,
    /// Loss before each step, then the loss after the last one.
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OneshotResult {
    pub track: ControlTrack,
    pub loss_curve: Vec<f64>,
}

/// Learns a bank of `n_tables` tables and per-frame controls for `target`.
pub fn fit(target: &[f64], f0_frames: &[f64], n_tables: usize, config: &FitConfig) -> Result<FitResult> {
    fit_observed(target, f0_frames, n_tables, config, |_| {})
}

pub fn fit_observed(
    target: &[f64],
    f0_frames: &[f64],
    n_tables: usize,
    config: &FitConfig,
    observer: impl FnMut(&FitProgress),
) -> Result<FitResult> {
    config.validate()?;
    ensure_arg!(
        !config.freeze_wavetables,
        "freeze_wavetables is set; use fit_oneshot with a frozen bank"
    );
    let amp_logit = config.amplitude_map.inverse(config.initial_amplitude)?;
    let params = FitParams::init(
        n_tables,
        config.table_len,
        f0_frames.len(),
        config.sigma,
        config.seed,
        amp_logit,
    )?;
    let (params, loss_curve) = run(target, f0_frames, params, config, None, observer)?;
    Ok(FitResult {
        bank: params.bank()?.frozen(),
        track: params.track(f0_frames, config.frame_rate, config.amplitude_map)?,
        loss_curve,
    })
}

/// Fits attention and amplitude only, against a frozen bank.
pub fn fit_oneshot(
    target: &[f64],
    f0_frames: &[f64],
    frozen_bank: &WavetableBank,
    config: &FitConfig,
) -> Result<OneshotResult> {
    fit_oneshot_observed(target, f0_frames, frozen_bank, config, |_| {})
}

pub fn fit_oneshot_observed(
    target: &[f64],
    f0_frames: &[f64],
    frozen_bank: &WavetableBank,
    config: &FitConfig,
    observer: impl FnMut(&FitProgress),
) -> Result<OneshotResult> {
    config.validate()?;
    if !frozen_bank.is_frozen() {
        return Err(Error::InvalidState("one-shot fitting needs a frozen bank".into()));
    }
    let before = bit_pattern(frozen_bank);
    let amp_logit = config.amplitude_map.inverse(config.initial_amplitude)?;
    let params = FitParams::from_bank(frozen_bank, f0_frames.len(), amp_logit);
    let (params, loss_curve) = run(target, f0_frames, params, config, Some(frozen_bank.clone()), observer)?;
    if bit_pattern(frozen_bank) != before || bit_pattern(&params.bank()?) != before {
        return Err(Error::InvalidState("frozen bank changed during fitting".into()));
    }
    Ok(OneshotResult {
        track: params.track(f0_frames, config.frame_rate, config.amplitude_map)?,
        loss_curve,
    })
}

fn bit_pattern(bank: &WavetableBank) -> Vec<u64> {
    bank.to_flat().iter().map(|v| v.to_bits()).collect()
}

fn run(
    target: &[f64],
    f0_frames: &[f64],
    mut params: FitParams,
    config: &FitConfig,
    frozen: Option<WavetableBank>,
    mut observer: impl FnMut(&FitProgress),
) -> Result<(FitParams, Vec<f64>)> {
    let learn_tables = frozen.is_none();
    let mut eval = Evaluator::new(target, f0_frames, &params, config, frozen)?;
    let adam = config.adam();
    let mut w_state = AdamState::new(params.wavetable_params.len(), adam);
    let mut a_state = AdamState::new(params.attention_logits.len(), adam);
    let mut amp_state = AdamState::new(params.amp_logits.len(), adam);
    let mut curve = Vec::with_capacity(config.iterations + 1);

    for iteration in 0..=config.iterations {
        let out = eval.evaluate(&params, learn_tables)?;
        if !out.loss.is_finite() {
            return Err(Error::Numeric { iteration, block: "loss" });
        }
        curve.push(out.loss);
        observer(&FitProgress {
            iteration,
            loss: out.loss,
            params: &params,
        });
        if iteration == config.iterations {
            break;
        }
        let g = &out.grads;
        if let Some(block) = non_finite_block(&g.wavetable_params, &g.attention_logits, &g.amp_logits) {
            return Err(Error::Numeric { iteration, block });
        }
        if learn_tables {
            w_state.step(&mut params.wavetable_params, &g.wavetable_params)?;
        }
        a_state.step(&mut params.attention_logits, &g.attention_logits)?;
        amp_state.step(&mut params.amp_logits, &g.amp_logits)?;
        if let Some(block) = params.non_finite_block() {
            return Err(Error::Numeric { iteration, block });
        }
    }
    Ok((params, curve))
}
