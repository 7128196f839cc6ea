//! Forward rendering from unconstrained parameters and its reverse pass.
//!
//! The render is linear in the attention weights and amplitude (given the
//! other), and linear in the table samples through the interpolation weights
//! and the band-limiting projection. The reverse pass walks the same
//! per-sample plan as the forward render, scatters sample gradients back to
//! frame values with the smoothing weights, pushes table gradients through the
//! transpose of each projection (the projection itself, being orthogonal),
//! and finally applies the softmax and amplitude-map Jacobians.

use std::collections::BTreeMap;

use super::fit::FitConfig;
use super::params::FitParams;
use crate::error::{ensure_arg, Result};
use crate::oscillator::{
    frame_pos, hop_size, lerp_frames, plan_render, render_with, segment_limits, synthesize_with,
    ControlTrack, PhaseState, RenderOptions, RenderPlan,
};
use crate::spectral::SpectralLoss;
use crate::wavetable::{BandlimitCache, Bandlimiter, Wavetable, WavetableBank};

/// Gradients with the same layout as [`FitParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub wavetable_params: Vec<f64>,
    pub attention_logits: Vec<f64>,
    pub amp_logits: Vec<f64>,
}

impl Gradients {
    fn zeros(p: &FitParams) -> Self {
        Self {
            wavetable_params: vec![0.0; p.wavetable_params.len()],
            attention_logits: vec![0.0; p.attention_logits.len()],
            amp_logits: vec![0.0; p.amp_logits.len()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.wavetable_params
            .iter()
            .chain(&self.attention_logits)
            .chain(&self.amp_logits)
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn n_samples_for(params: &FitParams, config: &FitConfig) -> Result<usize> {
    Ok(params.n_frames * hop_size(config.sample_rate, config.frame_rate)?)
}

/// Applies the constraint mappings and renders one hop per frame.
pub fn forward(params: &FitParams, f0_frames: &[f64], config: &FitConfig) -> Result<Vec<f64>> {
    forward_len(params, f0_frames, config, n_samples_for(params, config)?)
}

pub(crate) fn forward_len(
    params: &FitParams,
    f0_frames: &[f64],
    config: &FitConfig,
    n_samples: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    let bank = params.bank()?;
    let track = params.track(f0_frames, config.frame_rate, config.amplitude_map)?;
    let opts = RenderOptions {
        antialias: config.antialias,
        n_samples: Some(n_samples),
        initial_phase: PhaseState::default(),
    };
    Ok(synthesize_with(&bank, &track, config.sample_rate, &opts)?.signal)
}

/// Loss and exact gradients of `multiscale_loss(forward(params), target)`.
pub fn backward(
    params: &FitParams,
    f0_frames: &[f64],
    target: &[f64],
    config: &FitConfig,
) -> Result<(f64, Gradients)> {
    let mut eval = Evaluator::new(target, f0_frames, params, config, None)?;
    let out = eval.evaluate(params, true)?;
    Ok((out.loss, out.grads))
}

pub(crate) struct Evaluation {
    pub loss: f64,
    pub grads: Gradients,
}

/// Reusable loss/gradient evaluator bound to one target and f0 track.
pub(crate) struct Evaluator<'a> {
    config: &'a FitConfig,
    f0_frames: Vec<f64>,
    n_samples: usize,
    loss: SpectralLoss,
    limiter: Bandlimiter,
    /// Band-limited copies of a frozen bank, reused across evaluations.
    frozen: Option<BandlimitCache>,
    frozen_bank: Option<WavetableBank>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        target: &[f64],
        f0_frames: &[f64],
        params: &FitParams,
        config: &'a FitConfig,
        frozen_bank: Option<WavetableBank>,
    ) -> Result<Self> {
        params.validate()?;
        let hop = hop_size(config.sample_rate, config.frame_rate)?;
        ensure_arg!(
            params.n_frames == f0_frames.len(),
            "{} f0 frames for {} parameter frames",
            f0_frames.len(),
            params.n_frames
        );
        ensure_arg!(
            target.len().div_ceil(hop) == params.n_frames,
            "target of {} samples needs {} frames at hop {hop}, got {}",
            target.len(),
            target.len().div_ceil(hop),
            params.n_frames
        );
        Ok(Self {
            config,
            f0_frames: f0_frames.to_vec(),
            n_samples: target.len(),
            loss: SpectralLoss::new(target, &config.spectral)?,
            limiter: Bandlimiter::new(params.table_len),
            frozen: frozen_bank.as_ref().map(|b| BandlimitCache::new(b.table_len())),
            frozen_bank,
        })
    }

    pub fn evaluate(&mut self, params: &FitParams, want_table_grads: bool) -> Result<Evaluation> {
        let cfg = self.config;
        let sr = cfg.sample_rate;
        let owned_bank;
        let bank = match &self.frozen_bank {
            Some(b) => b,
            None => {
                owned_bank = params.bank()?;
                &owned_bank
            }
        };
        let track = params.track(&self.f0_frames, cfg.frame_rate, cfg.amplitude_map)?;
        let len = bank.table_len();
        let plan = plan_render(&track, sr, self.n_samples, len, PhaseState::default())?;

        // Table set per frame segment, keyed by harmonic limit.
        let limits: Vec<Option<usize>> = if cfg.antialias {
            segment_limits(&plan, sr, len).into_iter().map(Some).collect()
        } else {
            vec![None; track.n_frames()]
        };
        let mut local = BandlimitCache::new(len);
        let cache = self.frozen.as_mut().unwrap_or(&mut local);
        for k in limits.iter().flatten() {
            cache.ensure(bank, *k);
        }
        let sets: Vec<&[Wavetable]> = limits
            .iter()
            .map(|k| match k {
                Some(k) => cache.get(*k),
                None => bank.tables(),
            })
            .collect();

        let signal = render_with(&sets, &track, &plan);
        let (loss, grad_signal) = self.loss.loss_and_grad(&signal)?;

        let mut grads = Gradients::zeros(params);
        let table_grads = backprop_render(
            &sets,
            &limits,
            &track,
            &plan,
            &grad_signal,
            &mut grads,
            want_table_grads,
        );
        if want_table_grads {
            project_table_grads(&mut self.limiter, table_grads, len, &mut grads.wavetable_params);
        }
        apply_constraint_jacobians(params, &track, cfg, &mut grads);
        Ok(Evaluation { loss, grads })
    }
}

/// Scatters `∂L/∂x(n)` into frame-level attention/amplitude gradients (stored
/// temporarily in the logit slots) and per-limit table gradients.
fn backprop_render(
    sets: &[&[Wavetable]],
    limits: &[Option<usize>],
    track: &ControlTrack,
    plan: &RenderPlan,
    grad_signal: &[f64],
    grads: &mut Gradients,
    want_table_grads: bool,
) -> BTreeMap<Option<usize>, Vec<f64>> {
    let n_tables = track.n_tables();
    let frames = track.n_frames();
    let len = sets.first().map_or(0, |s| s[0].len());
    let mut table_grads: BTreeMap<Option<usize>, Vec<f64>> = BTreeMap::new();
    let mut reads = vec![0.0; n_tables];

    let grad_att = &mut grads.attention_logits;
    let grad_amp = &mut grads.amp_logits;
    for (n, (&j, &gx)) in plan.index.iter().zip(grad_signal).enumerate() {
        if gx == 0.0 {
            continue;
        }
        let p = frame_pos(n, plan.hop, frames);
        let tables = sets[p.frame];
        let k = j as usize;
        let frac = j - k as f64;
        let (r0, r1) = (track.attention_row(p.frame), track.attention_row(p.next));
        let amp = lerp_frames(track.amplitude()[p.frame], track.amplitude()[p.next], p.alpha);

        let mut mix = 0.0;
        for i in 0..n_tables {
            reads[i] = tables[i].lerp(k, frac);
            mix += lerp_frames(r0[i], r1[i], p.alpha) * reads[i];
        }

        let g_amp = gx * mix;
        grad_amp[p.frame] += (1.0 - p.alpha) * g_amp;
        grad_amp[p.next] += p.alpha * g_amp;

        let ga = gx * amp;
        for i in 0..n_tables {
            let g_c = ga * reads[i];
            grad_att[p.frame * n_tables + i] += (1.0 - p.alpha) * g_c;
            grad_att[p.next * n_tables + i] += p.alpha * g_c;
        }

        if want_table_grads {
            let acc = table_grads
                .entry(limits[p.frame])
                .or_insert_with(|| vec![0.0; n_tables * len]);
            let next = if k + 1 == len { 0 } else { k + 1 };
            for i in 0..n_tables {
                let g_r = ga * lerp_frames(r0[i], r1[i], p.alpha);
                acc[i * len + k] += (1.0 - frac) * g_r;
                acc[i * len + next] += frac * g_r;
            }
        }
    }
    table_grads
}

/// Maps gradients w.r.t. band-limited tables back to the raw tables.
fn project_table_grads(
    limiter: &mut Bandlimiter,
    table_grads: BTreeMap<Option<usize>, Vec<f64>>,
    len: usize,
    out: &mut [f64],
) {
    let mut buf = vec![0.0; len];
    for (limit, g) in table_grads {
        match limit {
            None => out.iter_mut().zip(&g).for_each(|(o, v)| *o += v),
            Some(k) => {
                for (o, gi) in out.chunks_exact_mut(len).zip(g.chunks_exact(len)) {
                    limiter.project_into(gi, k, &mut buf);
                    o.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
                }
            }
        }
    }
}

/// Converts gradients w.r.t. attention weights and amplitudes (held in the
/// logit slots) into gradients w.r.t. the logits.
fn apply_constraint_jacobians(params: &FitParams, track: &ControlTrack, cfg: &FitConfig, grads: &mut Gradients) {
    let n = params.n_tables;
    for (t, g) in grads.attention_logits.chunks_exact_mut(n).enumerate() {
        let c = track.attention_row(t);
        let dot: f64 = c.iter().zip(g.iter()).map(|(c, g)| c * g).sum();
        for (gi, ci) in g.iter_mut().zip(c) {
            *gi = ci * (*gi - dot);
        }
    }
    for (g, &x) in grads.amp_logits.iter_mut().zip(&params.amp_logits) {
        *g *= cfg.amplitude_map.derivative(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::params::AmplitudeMap;
    use crate::oscillator::synthesize;
    use crate::spectral::SpectralConfig;

    fn small_config() -> FitConfig {
        FitConfig {
            spectral: SpectralConfig::with_sizes(&[64, 128]),
            table_len: 64,
            ..FitConfig::default()
        }
    }

    #[test]
    fn forward_matches_direct_synthesis() {
        let cfg = FitConfig::default();
        let sine = WavetableBank::new(vec![crate::wavetable::Wavetable::sine(512).unwrap()]).unwrap();
        let mut p = FitParams::from_bank(&sine, 250, AmplitudeMap::Softplus.inverse(1.0).unwrap());
        p.attention_logits.fill(3.0);
        let f0 = vec![440.0; 250];
        let x = forward(&p, &f0, &cfg).unwrap();
        let track = p.track(&f0, 250.0, AmplitudeMap::Softplus).unwrap();
        let direct = synthesize(&sine, &track, 16000.0, true).unwrap();
        assert_eq!(x, direct);
    }

    #[test]
    fn gradient_vanishes_at_target() {
        let cfg = small_config();
        let p = FitParams::init(3, 64, 8, 0.3, 1, 0.2).unwrap();
        let f0: Vec<f64> = (0..8).map(|t| 200.0 + 50.0 * t as f64).collect();
        let target = forward(&p, &f0, &cfg).unwrap();
        let (loss, g) = backward(&p, &f0, &target, &cfg).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.max_abs() < 1e-6);
    }

    #[test]
    fn suppressed_table_gets_no_gradient() {
        let cfg = small_config();
        let mut p = FitParams::init(3, 64, 8, 0.3, 2, 0.2).unwrap();
        for t in 0..8 {
            p.attention_logits[t * 3 + 1] = -40.0;
        }
        let f0 = vec![300.0; 8];
        let target = forward(&FitParams::init(3, 64, 8, 0.3, 9, 0.0).unwrap(), &f0, &cfg).unwrap();
        let (_, g) = backward(&p, &f0, &target, &cfg).unwrap();
        assert!(g.wavetable_params[64..128].iter().all(|v| v.abs() < 1e-10));
        assert!(g.wavetable_params[..64].iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cfg = small_config();
        let p = FitParams::init(2, 64, 8, 0.3, 1, 0.0).unwrap();
        assert!(forward(&p, &[100.0; 7], &cfg).is_err());
        assert!(backward(&p, &[100.0; 8], &[0.0; 1000], &cfg).is_err());
    }
}
