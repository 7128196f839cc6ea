use crate::error::{ensure_arg, Result};
use crate::oscillator::ControlTrack;
use crate::wavetable::{init_bank, WavetableBank};

/// How amplitude logits map to nonnegative amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMap {
    /// `ln(1 + e^x)`, unbounded above.
    #[default]
    Softplus,
    /// `1 / (1 + e^-x)`, capped at 1.
    Sigmoid,
}

impl AmplitudeMap {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            AmplitudeMap::Softplus => softplus(x),
            AmplitudeMap::Sigmoid => sigmoid(x),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            AmplitudeMap::Softplus => sigmoid(x),
            AmplitudeMap::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }

    /// Logit producing amplitude `a`.
    pub fn inverse(self, a: f64) -> Result<f64> {
        match self {
            AmplitudeMap::Softplus => {
                ensure_arg!(a > 0.0, "softplus inverse needs a > 0");
                Ok(a + (-(-a).exp_m1()).ln())
            }
            AmplitudeMap::Sigmoid => {
                ensure_arg!(a > 0.0 && a < 1.0, "sigmoid inverse needs 0 < a < 1");
                Ok((a / (1.0 - a)).ln())
            }
        }
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of `logits` into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Unconstrained optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub n_tables: usize,
    pub table_len: usize,
    pub n_frames: usize,
    /// `N * L`, table-major.
    pub wavetable_params: Vec<f64>,
    /// `T * N`, frame-major.
    pub attention_logits: Vec<f64>,
    /// `T`.
    pub amp_logits: Vec<f64>,
}

impl FitParams {
    /// Gaussian tables, uniform attention and a fixed starting amplitude.
    pub fn init(
        n_tables: usize,
        table_len: usize,
        n_frames: usize,
        sigma: f64,
        seed: u64,
        amp_logit: f64,
    ) -> Result<Self> {
        let bank = init_bank(n_tables, table_len, sigma, seed)?;
        Ok(Self::from_bank(&bank, n_frames, amp_logit))
    }

    pub fn from_bank(bank: &WavetableBank, n_frames: usize, amp_logit: f64) -> Self {
        Self {
            n_tables: bank.n_tables(),
            table_len: bank.table_len(),
            n_frames,
            wavetable_params: bank.to_flat(),
            attention_logits: vec![0.0; n_frames * bank.n_tables()],
            amp_logits: vec![amp_logit; n_frames],
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.n_tables >= 1 && self.table_len >= 2, "bad parameter dimensions");
        ensure_arg!(
            self.wavetable_params.len() == self.n_tables * self.table_len,
            "wavetable block has {} values, expected {}",
            self.wavetable_params.len(),
            self.n_tables * self.table_len
        );
        ensure_arg!(
            self.attention_logits.len() == self.n_frames * self.n_tables,
            "attention block has {} values, expected {}",
            self.attention_logits.len(),
            self.n_frames * self.n_tables
        );
        ensure_arg!(
            self.amp_logits.len() == self.n_frames,
            "amplitude block has {} values, expected {}",
            self.amp_logits.len(),
            self.n_frames
        );
        Ok(())
    }

    pub fn bank(&self) -> Result<WavetableBank> {
        WavetableBank::from_flat(self.n_tables, self.table_len, &self.wavetable_params)
    }

    /// Row-wise softmax of the attention logits.
    pub fn attention(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.attention_logits.len()];
        for (o, l) in out
            .chunks_exact_mut(self.n_tables)
            .zip(self.attention_logits.chunks_exact(self.n_tables))
        {
            softmax_into(l, o);
        }
        out
    }

    pub fn amplitude(&self, map: AmplitudeMap) -> Vec<f64> {
        self.amp_logits.iter().map(|&x| map.apply(x)).collect()
    }

    pub fn track(&self, f0_frames: &[f64], frame_rate: f64, map: AmplitudeMap) -> Result<ControlTrack> {
        ensure_arg!(
            f0_frames.len() == self.n_frames,
            "{} f0 frames for {} parameter frames",
            f0_frames.len(),
            self.n_frames
        );
        ControlTrack::new(
            frame_rate,
            f0_frames.to_vec(),
            self.amplitude(map),
            self.n_tables,
            self.attention(),
        )
    }

    /// Name of the first block holding a non-finite value.
    pub(crate) fn non_finite_block(&self) -> Option<&'static str> {
        non_finite_block(&self.wavetable_params, &self.attention_logits, &self.amp_logits)
    }
}

pub(crate) fn non_finite_block(w: &[f64], a: &[f64], amp: &[f64]) -> Option<&'static str> {
    let bad = |v: &[f64]| v.iter().any(|x| !x.is_finite());
    if bad(w) {
        Some("wavetable_params")
    } else if bad(a) {
        Some("attention_logits")
    } else if bad(amp) {
        Some("amp_logits")
    } else {
        None
    }
}
