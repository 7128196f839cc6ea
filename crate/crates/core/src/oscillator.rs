//! Phase accumulation, control-rate smoothing and wavetable synthesis.
//!
//! Controls arrive at frame rate and are linearly smoothed to sample rate,
//! with frame `t` anchored at sample `t * hop`. The phase is kept internally
//! in cycles (`[0, 1)`) so table positions such as `f0 = sr / L` advance by
//! exactly one sample per step.

use std::f64::consts::TAU;

use crate::error::{ensure_arg, invalid_arg, Result};
use crate::mipmap::MipmapBank;
use crate::wavetable::{max_harmonic, BandlimitCache, Wavetable, WavetableBank};

pub const DEFAULT_SAMPLE_RATE: f64 = 16_000.0;
pub const DEFAULT_FRAME_RATE: f64 = 250.0;

/// Tolerance on the attention sum-to-one constraint.
pub const ATTENTION_SUM_TOL: f64 = 1e-6;

/// Samples per control frame; `sample_rate / frame_rate` must be a positive integer.
pub fn hop_size(sample_rate: f64, frame_rate: f64) -> Result<usize> {
    ensure_arg!(
        sample_rate > 0.0 && frame_rate > 0.0,
        "sample rate and frame rate must be positive"
    );
    let hop = sample_rate / frame_rate;
    let rounded = hop.round();
    ensure_arg!(
        rounded >= 1.0 && (hop - rounded).abs() < 1e-9,
        "hop {sample_rate}/{frame_rate} = {hop} is not a positive integer"
    );
    Ok(rounded as usize)
}

/// Frame-rate controls: fundamental, amplitude and per-table attention.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrack {
    frame_rate: f64,
    f0: Vec<f64>,
    amplitude: Vec<f64>,
    n_tables: usize,
    attention: Vec<f64>,
}

impl ControlTrack {
    /// `attention` holds `T * n_tables` weights, frame-major.
    pub fn new(
        frame_rate: f64,
        f0: Vec<f64>,
        amplitude: Vec<f64>,
        n_tables: usize,
        attention: Vec<f64>,
    ) -> Result<Self> {
        ensure_arg!(frame_rate > 0.0 && frame_rate.is_finite(), "frame rate must be positive");
        ensure_arg!(n_tables >= 1, "track needs at least one attention column");
        let frames = f0.len();
        ensure_arg!(
            amplitude.len() == frames && attention.len() == frames * n_tables,
            "control arrays disagree on frame count"
        );
        for (t, &f) in f0.iter().enumerate() {
            ensure_arg!(f.is_finite() && f >= 0.0, "frame {t}: f0 {f} must be finite and >= 0");
        }
        for (t, &a) in amplitude.iter().enumerate() {
            ensure_arg!(a.is_finite() && a >= 0.0, "frame {t}: amplitude {a} must be finite and >= 0");
        }
        for (t, row) in attention.chunks_exact(n_tables).enumerate() {
            ensure_arg!(
                row.iter().all(|c| c.is_finite() && *c >= 0.0),
                "frame {t}: attention weights must be finite and >= 0"
            );
            let sum: f64 = row.iter().sum();
            ensure_arg!(
                (sum - 1.0).abs() <= ATTENTION_SUM_TOL,
                "frame {t}: attention sums to {sum}, expected 1"
            );
        }
        Ok(Self {
            frame_rate,
            f0,
            amplitude,
            n_tables,
            attention,
        })
    }

    /// Same controls repeated for `frames` frames.
    pub fn constant(
        frame_rate: f64,
        frames: usize,
        f0: f64,
        amplitude: f64,
        attention: &[f64],
    ) -> Result<Self> {
        let attention_flat = attention.iter().copied().cycle().take(frames * attention.len()).collect();
        Self::new(
            frame_rate,
            vec![f0; frames],
            vec![amplitude; frames],
            attention.len(),
            attention_flat,
        )
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }

    pub fn n_tables(&self) -> usize {
        self.n_tables
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    pub fn attention_row(&self, frame: usize) -> &[f64] {
        &self.attention[frame * self.n_tables..(frame + 1) * self.n_tables]
    }

    /// Copy with every f0 multiplied by `factor`.
    pub fn with_scaled_f0(&self, factor: f64) -> Result<Self> {
        ensure_arg!(factor > 0.0 && factor.is_finite(), "f0 factor must be positive");
        let mut out = self.clone();
        out.f0.iter_mut().for_each(|f| *f *= factor);
        Ok(out)
    }

    /// Copy with every amplitude multiplied by `scale`.
    pub fn with_scaled_amplitude(&self, scale: f64) -> Result<Self> {
        ensure_arg!(scale >= 0.0 && scale.is_finite(), "amplitude scale must be >= 0");
        let mut out = self.clone();
        out.amplitude.iter_mut().for_each(|a| *a *= scale);
        Ok(out)
    }

    /// Columns permuted so column `r` is old column `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        ensure_arg!(order.len() == self.n_tables, "permutation length mismatch");
        let mut attention = Vec::with_capacity(self.attention.len());
        for row in self.attention.chunks_exact(self.n_tables) {
            for &i in order {
                attention.push(*row.get(i).ok_or_else(|| invalid_arg!("column {i} out of range"))?);
            }
        }
        Ok(Self {
            attention,
            ..self.clone()
        })
    }
}

/// Running oscillator phase, stored in cycles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseState {
    cycles: f64,
}

impl PhaseState {
    pub fn from_radians(phase: f64) -> Self {
        Self {
            cycles: (phase / TAU).rem_euclid(1.0),
        }
    }

    pub fn from_cycles(cycles: f64) -> Self {
        Self {
            cycles: cycles.rem_euclid(1.0),
        }
    }

    pub fn radians(self) -> f64 {
        self.cycles * TAU
    }

    pub fn cycles(self) -> f64 {
        self.cycles
    }

    #[inline(always)]
    fn advance(&mut self, increment: f64) {
        self.cycles += increment;
        if self.cycles >= 1.0 {
            self.cycles -= self.cycles.floor();
        }
    }
}

/// Phase in radians per sample: `φ(0) = initial`, `φ(n) = φ(n-1) + 2π·f0(n-1)/sr (mod 2π)`.
pub fn accumulate_phase(f0_per_sample: &[f64], sample_rate: f64, initial_phase: f64) -> Result<Vec<f64>> {
    ensure_arg!(sample_rate > 0.0, "sample rate must be positive");
    ensure_arg!(
        f0_per_sample.iter().all(|f| f.is_finite() && *f >= 0.0),
        "f0 must be finite and >= 0"
    );
    let mut phase = PhaseState::from_radians(initial_phase);
    Ok(f0_per_sample
        .iter()
        .map(|f| {
            let out = phase.radians();
            phase.advance(f / sample_rate);
            out
        })
        .collect())
}

/// Position of sample `n` between its frame anchors.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FramePos {
    pub frame: usize,
    pub next: usize,
    pub alpha: f64,
}

#[inline(always)]
pub(crate) fn frame_pos(n: usize, hop: usize, n_frames: usize) -> FramePos {
    let frame = n / hop;
    if frame + 1 >= n_frames {
        let last = n_frames - 1;
        FramePos {
            frame: last,
            next: last,
            alpha: 0.0,
        }
    } else {
        FramePos {
            frame,
            next: frame + 1,
            alpha: (n - frame * hop) as f64 / hop as f64,
        }
    }
}

/// Linear smoothing between two frame values; exact when they are equal.
#[inline(always)]
pub(crate) fn lerp_frames(v0: f64, v1: f64, alpha: f64) -> f64 {
    v0 + alpha * (v1 - v0)
}

/// Per-sample controls after linear smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleControls {
    pub f0: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub n_tables: usize,
    /// `n_samples * n_tables`, sample-major.
    pub attention: Vec<f64>,
}

pub fn upsample_controls(track: &ControlTrack, sample_rate: f64, n_samples: usize) -> Result<SampleControls> {
    let hop = hop_size(sample_rate, track.frame_rate)?;
    let n_tables = track.n_tables;
    ensure_arg!(
        track.n_frames() >= 1 || n_samples == 0,
        "cannot upsample an empty track to {n_samples} samples"
    );
    let mut out = SampleControls {
        f0: Vec::with_capacity(n_samples),
        amplitude: Vec::with_capacity(n_samples),
        n_tables,
        attention: Vec::with_capacity(n_samples * n_tables),
    };
    for n in 0..n_samples {
        let p = frame_pos(n, hop, track.n_frames());
        out.f0.push(lerp_frames(track.f0[p.frame], track.f0[p.next], p.alpha));
        out.amplitude
            .push(lerp_frames(track.amplitude[p.frame], track.amplitude[p.next], p.alpha));
        let (r0, r1) = (track.attention_row(p.frame), track.attention_row(p.next));
        out.attention
            .extend(r0.iter().zip(r1).map(|(a, b)| lerp_frames(*a, *b, p.alpha)));
    }
    Ok(out)
}

/// Sample-rate phase plan shared by the synthesis and gradient paths.
pub(crate) struct RenderPlan {
    pub hop: usize,
    /// Fractional table index per sample, in `[0, L)`.
    pub index: Vec<f64>,
    /// Largest f0 reached within each frame segment.
    pub segment_max_f0: Vec<f64>,
    pub final_phase: PhaseState,
}

pub(crate) fn plan_render(
    track: &ControlTrack,
    sample_rate: f64,
    n_samples: usize,
    table_len: usize,
    initial: PhaseState,
) -> Result<RenderPlan> {
    let hop = hop_size(sample_rate, track.frame_rate)?;
    let frames = track.n_frames();
    ensure_arg!(frames >= 1 || n_samples == 0, "track has no frames");
    let nyquist = sample_rate / 2.0;
    if let Some((t, f)) = track.f0.iter().enumerate().find(|(_, f)| **f >= nyquist) {
        return Err(invalid_arg!("frame {t}: f0 {f} Hz is at or above Nyquist ({nyquist} Hz)"));
    }

    let segment_max_f0 = (0..frames)
        .map(|t| track.f0[t].max(track.f0[(t + 1).min(frames - 1)]))
        .collect();

    let len = table_len as f64;
    let inv_sr = 1.0 / sample_rate;
    let mut phase = initial;
    let mut index = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let p = frame_pos(n, hop, frames);
        let mut j = phase.cycles * len;
        if j >= len {
            j -= len;
        }
        index.push(j);
        phase.advance(lerp_frames(track.f0[p.frame], track.f0[p.next], p.alpha) * inv_sr);
    }
    Ok(RenderPlan {
        hop,
        index,
        segment_max_f0,
        final_phase: phase,
    })
}

/// Harmonic limit per frame segment when anti-aliasing.
pub(crate) fn segment_limits(plan: &RenderPlan, sample_rate: f64, table_len: usize) -> Vec<usize> {
    plan.segment_max_f0
        .iter()
        .map(|&f| max_harmonic(sample_rate, f, table_len))
        .collect()
}

/// `x(n) = A(n) Σ_i c_i(n) · read(tables_i, j(n))` with per-segment table sets.
pub(crate) fn render_with(
    segment_tables: &[&[Wavetable]],
    track: &ControlTrack,
    plan: &RenderPlan,
) -> Vec<f64> {
    let n_samples = plan.index.len();
    let frames = track.n_frames();
    let n_tables = track.n_tables;
    let mut out = Vec::with_capacity(n_samples);
    for (n, &j) in plan.index.iter().enumerate() {
        let p = frame_pos(n, plan.hop, frames);
        let tables = segment_tables[p.frame];
        let k = j as usize;
        let frac = j - k as f64;
        let (r0, r1) = (track.attention_row(p.frame), track.attention_row(p.next));
        let mut acc = 0.0;
        for i in 0..n_tables {
            let c = lerp_frames(r0[i], r1[i], p.alpha);
            acc += c * tables[i].lerp(k, frac);
        }
        let amp = lerp_frames(track.amplitude[p.frame], track.amplitude[p.next], p.alpha);
        out.push(amp * acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub antialias: bool,
    /// Defaults to one hop per frame.
    pub n_samples: Option<usize>,
    pub initial_phase: PhaseState,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            antialias: true,
            n_samples: None,
            initial_phase: PhaseState::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Render {
    pub signal: Vec<f64>,
    pub final_phase: PhaseState,
}

fn check_widths(bank: &WavetableBank, track: &ControlTrack) -> Result<()> {
    ensure_arg!(
        bank.n_tables() == track.n_tables,
        "bank has {} tables but track has {} attention columns",
        bank.n_tables(),
        track.n_tables
    );
    Ok(())
}

pub fn synthesize_with(
    bank: &WavetableBank,
    track: &ControlTrack,
    sample_rate: f64,
    opts: &RenderOptions,
) -> Result<Render> {
    check_widths(bank, track)?;
    let hop = hop_size(sample_rate, track.frame_rate)?;
    let n_samples = opts.n_samples.unwrap_or(track.n_frames() * hop);
    let len = bank.table_len();
    let plan = plan_render(track, sample_rate, n_samples, len, opts.initial_phase)?;

    let signal = if opts.antialias {
        let limits = segment_limits(&plan, sample_rate, len);
        let mut cache = BandlimitCache::new(len);
        for &k in &limits {
            cache.ensure(bank, k);
        }
        let sets: Vec<&[Wavetable]> = limits.iter().map(|k| cache.get(*k)).collect();
        render_with(&sets, track, &plan)
    } else {
        let sets = vec![bank.tables(); track.n_frames()];
        render_with(&sets, track, &plan)
    };
    Ok(Render {
        signal,
        final_phase: plan.final_phase,
    })
}

/// Renders one hop of audio per frame, starting at phase zero.
pub fn synthesize(
    bank: &WavetableBank,
    track: &ControlTrack,
    sample_rate: f64,
    antialias: bool,
) -> Result<Vec<f64>> {
    let opts = RenderOptions {
        antialias,
        ..RenderOptions::default()
    };
    Ok(synthesize_with(bank, track, sample_rate, &opts)?.signal)
}

/// Per-sample loop shared by the realtime and additive renderers: smooths f0,
/// accumulates phase, and hands each sample's frame position, phase (cycles)
/// and f0 to `kernel`.
#[inline(always)]
fn drive(
    f0: &[f64],
    hop: usize,
    n_samples: usize,
    sample_rate: f64,
    mut kernel: impl FnMut(FramePos, f64, f64) -> f64,
) -> Vec<f64> {
    let frames = f0.len();
    let inv_sr = 1.0 / sample_rate;
    let mut phase = PhaseState::default();
    let mut out = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let p = frame_pos(n, hop, frames);
        let f = lerp_frames(f0[p.frame], f0[p.next], p.alpha);
        out.push(kernel(p, phase.cycles, f));
        phase.advance(f * inv_sr);
    }
    out
}

/// Realtime path: reads precomputed octave levels instead of projecting per frame.
pub fn synthesize_mipmapped(mip: &MipmapBank, track: &ControlTrack, sample_rate: f64) -> Result<Vec<f64>> {
    let bank = mip.source();
    check_widths(bank, track)?;
    let hop = hop_size(sample_rate, track.frame_rate)?;
    let frames = track.n_frames();
    ensure_arg!(frames >= 1, "track has no frames");
    let nyquist = sample_rate / 2.0;
    if let Some((t, f)) = track.f0.iter().enumerate().find(|(_, f)| **f >= nyquist) {
        return Err(invalid_arg!("frame {t}: f0 {f} Hz is at or above Nyquist ({nyquist} Hz)"));
    }
    let sets = (0..frames)
        .map(|t| {
            let f = track.f0[t].max(track.f0[(t + 1).min(frames - 1)]);
            mip.level_for(f)
                .map(|k| mip.level(k).tables())
                .ok_or_else(|| invalid_arg!("f0 {f} Hz is above the highest mipmap level"))
        })
        .collect::<Result<Vec<_>>>()?;
    let len = bank.table_len() as f64;
    let n_tables = track.n_tables;
    Ok(drive(&track.f0, hop, frames * hop, sample_rate, |p, cycles, _| {
        let tables = sets[p.frame];
        let mut j = cycles * len;
        if j >= len {
            j -= len;
        }
        let k = j as usize;
        let frac = j - k as f64;
        let (r0, r1) = (track.attention_row(p.frame), track.attention_row(p.next));
        let mut acc = 0.0;
        for i in 0..n_tables {
            acc += lerp_frames(r0[i], r1[i], p.alpha) * tables[i].lerp(k, frac);
        }
        lerp_frames(track.amplitude[p.frame], track.amplitude[p.next], p.alpha) * acc
    }))
}

/// Frame-rate controls for the additive baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTrack {
    frame_rate: f64,
    f0: Vec<f64>,
    n_harmonics: usize,
    amplitudes: Vec<f64>,
}

impl HarmonicTrack {
    /// `amplitudes` holds `T * n_harmonics` values, frame-major; column `k-1` is harmonic `k`.
    pub fn new(frame_rate: f64, f0: Vec<f64>, n_harmonics: usize, amplitudes: Vec<f64>) -> Result<Self> {
        ensure_arg!(frame_rate > 0.0, "frame rate must be positive");
        ensure_arg!(n_harmonics >= 1, "need at least one harmonic");
        ensure_arg!(
            amplitudes.len() == f0.len() * n_harmonics,
            "expected {} amplitudes, got {}",
            f0.len() * n_harmonics,
            amplitudes.len()
        );
        ensure_arg!(f0.iter().all(|f| f.is_finite() && *f >= 0.0), "f0 must be finite and >= 0");
        ensure_arg!(amplitudes.iter().all(|a| a.is_finite()), "amplitudes must be finite");
        Ok(Self {
            frame_rate,
            f0,
            n_harmonics,
            amplitudes,
        })
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }

    pub fn n_harmonics(&self) -> usize {
        self.n_harmonics
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    fn row(&self, frame: usize) -> &[f64] {
        &self.amplitudes[frame * self.n_harmonics..(frame + 1) * self.n_harmonics]
    }
}

/// `x(n) = Σ_k a_k(n) sin(k φ(n))`; every harmonic is evaluated, with gain
/// zero once `k·f0` reaches Nyquist. `sin(kφ)` comes from the Chebyshev
/// recurrence `s(k+1) = 2cos(φ)·s(k) − s(k−1)`.
pub fn synthesize_additive(track: &HarmonicTrack, sample_rate: f64) -> Result<Vec<f64>> {
    let hop = hop_size(sample_rate, track.frame_rate)?;
    let frames = track.n_frames();
    ensure_arg!(frames >= 1, "track has no frames");
    let nyquist = sample_rate / 2.0;
    if let Some((t, f)) = track.f0.iter().enumerate().find(|(_, f)| **f >= nyquist) {
        return Err(invalid_arg!("frame {t}: f0 {f} Hz is at or above Nyquist ({nyquist} Hz)"));
    }
    Ok(drive(&track.f0, hop, frames * hop, sample_rate, |p, cycles, f0| {
        let (r0, r1) = (track.row(p.frame), track.row(p.next));
        let (sin1, cos1) = (cycles * TAU).sin_cos();
        let twice_cos = 2.0 * cos1;
        let (mut prev, mut cur) = (0.0, sin1);
        let mut acc = 0.0;
        for k in 0..track.n_harmonics {
            let harmonic = (k + 1) as f64;
            let a = lerp_frames(r0[k], r1[k], p.alpha);
            let gain = if harmonic * f0 < nyquist { a } else { 0.0 };
            acc += gain * cur;
            let next = twice_cos * cur - prev;
            prev = cur;
            cur = next;
        }
        acc
    }))
}
