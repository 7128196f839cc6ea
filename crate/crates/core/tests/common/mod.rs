#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wtsynth_core::optimize::{backward, forward, FitConfig, FitParams, Gradients};
use wtsynth_core::SpectralConfig;

pub const FD_STEP: f64 = 1e-4;

/// Gradients below this are compared in absolute terms.
pub const ABS_FLOOR: f64 = 1e-8;

pub struct GradInstance {
    pub params: FitParams,
    pub f0: Vec<f64>,
    pub target: Vec<f64>,
    pub config: FitConfig,
}

/// N=3, L=64, T=8 (512 samples at hop 64), FFT sizes {64, 128}.
pub fn grad_instance(seed: u64) -> GradInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (n, l, t) = (3, 64, 8);
    let config = FitConfig {
        spectral: SpectralConfig::with_sizes(&[64, 128]),
        table_len: l,
        ..FitConfig::default()
    };
    let mut draw = |k: usize, s: f64| -> Vec<f64> { (0..k).map(|_| s * normal.sample(&mut rng)).collect() };
    let params = FitParams {
        n_tables: n,
        table_len: l,
        n_frames: t,
        wavetable_params: draw(n * l, 0.5),
        attention_logits: draw(t * n, 1.0),
        amp_logits: draw(t, 1.0),
    };
    let target = draw(t * 64, 0.3);
    let f0 = (0..t).map(|_| rng.random_range(80.0..1500.0)).collect();
    GradInstance {
        params,
        f0,
        target,
        config,
    }
}

pub fn loss_at(inst: &GradInstance, p: &FitParams) -> f64 {
    let x = forward(p, &inst.f0, &inst.config).unwrap();
    wtsynth_core::multiscale_loss(&x, &inst.target, &inst.config.spectral).unwrap()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CheckStats {
    pub coords: usize,
    pub passed: usize,
    pub worst: f64,
}

impl CheckStats {
    pub fn fraction(&self) -> f64 {
        self.passed as f64 / self.coords as f64
    }

    pub fn merge(&mut self, o: CheckStats) {
        self.coords += o.coords;
        self.passed += o.passed;
        self.worst = self.worst.max(o.worst);
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ABS_FLOOR {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Central differences for every coordinate against the analytic gradient.
type Field = fn(&mut FitParams) -> &mut Vec<f64>;

pub fn check_gradients(inst: &GradInstance, tol: f64) -> CheckStats {
    let (_, g) = backward(&inst.params, &inst.f0, &inst.target, &inst.config).unwrap();
    let mut stats = CheckStats::default();
    let Gradients {
        wavetable_params,
        attention_logits,
        amp_logits,
    } = g;
    let blocks: [(&[f64], Field); 3] = [
        (&wavetable_params, |p| &mut p.wavetable_params),
        (&attention_logits, |p| &mut p.attention_logits),
        (&amp_logits, |p| &mut p.amp_logits),
    ];
    for (analytic, field) in blocks {
        for (i, &a) in analytic.iter().enumerate() {
            let mut p = inst.params.clone();
            let x0 = field(&mut p)[i];
            field(&mut p)[i] = x0 + FD_STEP;
            let up = loss_at(inst, &p);
            field(&mut p)[i] = x0 - FD_STEP;
            let down = loss_at(inst, &p);
            let numeric = (up - down) / (2.0 * FD_STEP);
            let err = relative_error(a, numeric);
            stats.coords += 1;
            if err < tol {
                stats.passed += 1;
            }
            stats.worst = stats.worst.max(err);
        }
    }
    stats
}
