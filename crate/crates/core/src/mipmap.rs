//! Octave-spaced band-limited copies of a frozen bank for the realtime path.

use crate::error::{ensure_arg, Error, Result};
use crate::wavetable::{max_harmonic, Bandlimiter, WavetableBank};

/// Lowest fundamental the default mipmap chain is built for.
pub const DEFAULT_BASE_F0: f64 = 20.0;

/// Level `k` serves fundamentals up to `base_f0 * 2^(k+1)`.
#[derive(Debug, Clone)]
pub struct MipmapBank {
    source: WavetableBank,
    levels: Vec<WavetableBank>,
    level_max_f0: Vec<f64>,
    harmonics: Vec<usize>,
}

impl MipmapBank {
    pub fn source(&self) -> &WavetableBank {
        &self.source
    }

    pub fn levels(&self) -> &[WavetableBank] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &WavetableBank {
        &self.levels[k]
    }

    pub fn level_max_f0(&self) -> &[f64] {
        &self.level_max_f0
    }

    /// Harmonic limit applied at each level.
    pub fn level_harmonics(&self) -> &[usize] {
        &self.harmonics
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Lowest level whose `max_f0` covers `f0`, or `None` above the top level.
    #[inline]
    pub fn level_for(&self, f0: f64) -> Option<usize> {
        self.level_max_f0.iter().position(|&m| f0 <= m)
    }
}

pub fn build_mipmaps(bank: &WavetableBank, sample_rate: f64, octaves: usize) -> Result<MipmapBank> {
    build_mipmaps_with_base(bank, sample_rate, octaves, DEFAULT_BASE_F0)
}

pub fn build_mipmaps_with_base(
    bank: &WavetableBank,
    sample_rate: f64,
    octaves: usize,
    base_f0: f64,
) -> Result<MipmapBank> {
    if !bank.is_frozen() {
        return Err(Error::InvalidState("mipmaps require a frozen bank".into()));
    }
    ensure_arg!(octaves >= 1, "octaves must be at least 1");
    ensure_arg!(sample_rate > 0.0, "sample rate must be positive");
    ensure_arg!(base_f0 > 0.0, "base f0 must be positive");

    let len = bank.table_len();
    let mut limiter = Bandlimiter::new(len);
    let mut levels = Vec::with_capacity(octaves);
    let mut level_max_f0 = Vec::with_capacity(octaves);
    let mut harmonics = Vec::with_capacity(octaves);
    for k in 0..octaves {
        let max_f0 = base_f0 * 2f64.powi(k as i32 + 1);
        let limit = max_harmonic(sample_rate, max_f0, len);
        let tables = bank
            .tables()
            .iter()
            .map(|t| limiter.project(t, limit))
            .collect::<Result<Vec<_>>>()?;
        levels.push(WavetableBank::new(tables)?.frozen());
        level_max_f0.push(max_f0);
        harmonics.push(limit);
    }
    Ok(MipmapBank {
        source: bank.clone(),
        levels,
        level_max_f0,
        harmonics,
    })
}

/// Octave count whose top level still has at least one harmonic below Nyquist.
pub fn octaves_below_nyquist(sample_rate: f64, base_f0: f64) -> usize {
    let mut k = 0;
    while base_f0 * 2f64.powi(k as i32 + 1) < sample_rate / 2.0 {
        k += 1;
    }
    k.max(1)
}
