//! Single-cycle wavetables and the learnable wavetable dictionary.
//!
//! A [`Wavetable`] stores exactly `L` samples of one period. Reads treat the
//! table as if a wrap sample `t[L] = t[0]` were appended, so linear
//! interpolation across the cycle boundary is continuous without the wrap
//! sample ever being stored or learned.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_arg, Error, Result};

/// Initialization spread that trains well for learned dictionaries.
pub const DEFAULT_INIT_SIGMA: f64 = 0.01;

/// One period of a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavetable {
    samples: Vec<f64>,
}

impl Wavetable {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        ensure_arg!(samples.len() >= 2, "wavetable needs at least 2 samples, got {}", samples.len());
        ensure_arg!(
            samples.iter().all(|s| s.is_finite()),
            "wavetable samples must be finite"
        );
        Ok(Self { samples })
    }

    /// Samples `f` at `len` evenly spaced phases in `[0, 1)`.
    pub fn from_fn(len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..len).map(|j| f(j as f64 / len as f64)).collect())
    }

    /// Sum of sine partials: `amps[k-1] * sin(2πk·j/len)`.
    pub fn from_harmonics(len: usize, amps: &[f64]) -> Result<Self> {
        Self::from_fn(len, |p| {
            amps.iter()
                .enumerate()
                .map(|(i, a)| a * (TAU * (i + 1) as f64 * p).sin())
                .sum()
        })
    }

    pub fn sine(len: usize) -> Result<Self> {
        Self::from_harmonics(len, &[1.0])
    }

    /// Falling ramp from 1 to -1 with the jump sample set to the midpoint 0,
    /// which makes every DFT coefficient purely imaginary (a pure sine series).
    pub fn sawtooth(len: usize) -> Result<Self> {
        Self::from_fn(len, |p| if p == 0.0 { 0.0 } else { 1.0 - 2.0 * p })
    }

    /// Square wave with midpoint values at both edges.
    pub fn square(len: usize) -> Result<Self> {
        Self::from_fn(len, |p| {
            if p == 0.0 || p == 0.5 {
                0.0
            } else if p < 0.5 {
                1.0
            } else {
                -1.0
            }
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Linear-interpolated read at fractional `index` in `[0, L)`.
    pub fn read(&self, index: f64) -> Result<f64> {
        let len = self.samples.len() as f64;
        ensure_arg!(
            (0.0..len).contains(&index),
            "fractional index {index} outside [0, {len})"
        );
        Ok(self.read_unchecked(index))
    }

    /// Same as [`read`](Self::read) without the range check.
    #[inline(always)]
    pub fn read_unchecked(&self, index: f64) -> f64 {
        let k = index as usize;
        let frac = index - k as f64;
        self.lerp(k, frac)
    }

    #[inline(always)]
    pub(crate) fn lerp(&self, k: usize, frac: f64) -> f64 {
        let next = if k + 1 == self.samples.len() { 0 } else { k + 1 };
        (1.0 - frac) * self.samples[k] + frac * self.samples[next]
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Linear-interpolated read of `table` at `index`, wrapping `t[L]` to `t[0]`.
pub fn read_fractional(table: &Wavetable, index: f64) -> Result<f64> {
    table.read(index)
}

/// The wavetable dictionary: `N` tables sharing length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavetableBank {
    tables: Vec<Wavetable>,
    frozen: bool,
}

impl WavetableBank {
    pub fn new(tables: Vec<Wavetable>) -> Result<Self> {
        ensure_arg!(!tables.is_empty(), "bank needs at least one table");
        let len = tables[0].len();
        ensure_arg!(
            tables.iter().all(|t| t.len() == len),
            "all tables in a bank must share one length"
        );
        Ok(Self {
            tables,
            frozen: false,
        })
    }

    /// Builds a bank from `n_tables * table_len` samples in table-major order.
    pub fn from_flat(n_tables: usize, table_len: usize, samples: &[f64]) -> Result<Self> {
        ensure_arg!(n_tables >= 1 && table_len >= 2, "bank dimensions {n_tables}x{table_len}");
        ensure_arg!(
            samples.len() == n_tables * table_len,
            "expected {} samples, got {}",
            n_tables * table_len,
            samples.len()
        );
        let tables = samples
            .chunks_exact(table_len)
            .map(|c| Wavetable::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tables)
    }

    pub fn n_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn table_len(&self) -> usize {
        self.tables[0].len()
    }

    pub fn tables(&self) -> &[Wavetable] {
        &self.tables
    }

    pub fn table(&self, i: usize) -> &Wavetable {
        &self.tables[i]
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    /// Samples of every table concatenated in table-major order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tables.iter().flat_map(|t| t.samples.iter().copied()).collect()
    }

    /// Overwrites all samples from a table-major slice.
    pub fn set_flat(&mut self, samples: &[f64]) -> Result<()> {
        if self.frozen {
            return Err(Error::InvalidState("cannot modify a frozen bank".into()));
        }
        let len = self.table_len();
        ensure_arg!(samples.len() == self.n_tables() * len, "flat sample count mismatch");
        ensure_arg!(samples.iter().all(|s| s.is_finite()), "bank samples must be finite");
        for (t, chunk) in self.tables.iter_mut().zip(samples.chunks_exact(len)) {
            t.samples.copy_from_slice(chunk);
        }
        Ok(())
    }

    /// Returns a bank whose table `r` is this bank's table `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        ensure_arg!(order.len() == self.n_tables(), "permutation length mismatch");
        let tables = order
            .iter()
            .map(|&i| {
                self.tables
                    .get(i)
                    .cloned()
                    .ok_or_else(|| crate::error::invalid_arg!("table index {i} out of range"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tables,
            frozen: self.frozen,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.tables.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }
}

/// Draws an unfrozen bank with i.i.d. `N(0, sigma²)` samples.
pub fn init_bank(n_tables: usize, table_len: usize, sigma: f64, seed: u64) -> Result<WavetableBank> {
    ensure_arg!(n_tables >= 1, "n_tables must be at least 1");
    ensure_arg!(table_len >= 4, "table_len must be at least 4, got {table_len}");
    ensure_arg!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive, got {sigma}");
    let normal = Normal::new(0.0, sigma).map_err(|e| crate::error::invalid_arg!("{e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..n_tables * table_len)
        .map(|_| normal.sample(&mut rng))
        .collect();
    WavetableBank::from_flat(n_tables, table_len, &samples)
}

/// Highest harmonic of `f0` that stays at or below Nyquist, capped at `L/2`.
///
/// A non-positive `f0` places no limit beyond the table's own resolution.
pub fn max_harmonic(sample_rate: f64, f0: f64, table_len: usize) -> usize {
    let cap = table_len / 2;
    if f0 <= 0.0 {
        return cap;
    }
    let k = (sample_rate / (2.0 * f0)).floor();
    if k >= cap as f64 {
        cap
    } else {
        k.max(0.0) as usize
    }
}

/// Orthogonal projection of tables onto harmonics `1..=K`.
///
/// Holds FFT plans so repeated projections at one table length stay cheap.
pub struct Bandlimiter {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Bandlimiter {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            len,
            forward,
            inverse,
            buf: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn table_len(&self) -> usize {
        self.len
    }

    /// Projects `input` into `out`; both must have the planned length.
    pub fn project_into(&mut self, input: &[f64], max_harmonic: usize, out: &mut [f64]) {
        let n = self.len;
        debug_assert!(input.len() == n && out.len() == n);
        for (b, &x) in self.buf.iter_mut().zip(input) {
            *b = Complex64::new(x, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (bin, b) in self.buf.iter_mut().enumerate() {
            let harmonic = bin.min(n - bin);
            if harmonic == 0 || harmonic > max_harmonic {
                *b = Complex64::default();
            }
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re * scale;
        }
    }

    pub fn project(&mut self, table: &Wavetable, max_harmonic: usize) -> Result<Wavetable> {
        ensure_arg!(table.len() == self.len, "table length {} != planned {}", table.len(), self.len);
        ensure_arg!(
            max_harmonic <= self.len / 2,
            "max harmonic {max_harmonic} exceeds L/2 = {}",
            self.len / 2
        );
        let mut out = vec![0.0; self.len];
        self.project_into(&table.samples, max_harmonic, &mut out);
        Ok(Wavetable { samples: out })
    }
}

/// Removes DC and every harmonic above `max_harmonic` from `table`.
pub fn bandlimit(table: &Wavetable, max_harmonic: usize) -> Result<Wavetable> {
    Bandlimiter::new(table.len()).project(table, max_harmonic)
}

/// Band-limited copies of a bank's tables, memoized by harmonic limit.
pub(crate) struct BandlimitCache {
    limiter: Bandlimiter,
    entries: HashMap<usize, Vec<Wavetable>>,
}

impl BandlimitCache {
    pub(crate) fn new(table_len: usize) -> Self {
        Self {
            limiter: Bandlimiter::new(table_len),
            entries: HashMap::new(),
        }
    }

    pub(crate) fn ensure(&mut self, bank: &WavetableBank, max_harmonic: usize) {
        let limiter = &mut self.limiter;
        self.entries.entry(max_harmonic).or_insert_with(|| {
            bank.tables()
                .iter()
                .map(|t| {
                    let mut out = vec![0.0; t.len()];
                    limiter.project_into(&t.samples, max_harmonic, &mut out);
                    Wavetable { samples: out }
                })
                .collect()
        });
    }

    /// Tables for a limit previously passed to [`ensure`](Self::ensure).
    pub(crate) fn get(&self, max_harmonic: usize) -> &[Wavetable] {
        &self.entries[&max_harmonic]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri4() -> Wavetable {
        Wavetable::new(vec![0.0, 1.0, 0.0, -1.0]).unwrap()
    }

    #[test]
    fn read_examples() {
        let t = tri4();
        assert_eq!(t.read(0.5).unwrap(), 0.5);
        assert!((t.read(3.75).unwrap() - -0.25).abs() < 1e-15);
        assert_eq!(t.read(2.0).unwrap(), 0.0);
        assert!(read_fractional(&t, 4.0).is_err());
        assert!(read_fractional(&t, -0.1).is_err());
    }

    #[test]
    fn wrap_continuity() {
        let bank = init_bank(1, 64, 0.3, 11).unwrap();
        let t = bank.table(0);
        let near_end = t.read(64.0 - 1e-6).unwrap();
        assert!((near_end - t.samples()[0]).abs() < 1e-5 * t.max_abs());
    }

    #[test]
    fn init_bank_stats_and_determinism() {
        let bank = init_bank(20, 512, 0.01, 7).unwrap();
        let flat = bank.to_flat();
        assert_eq!(flat.len(), 20 * 512);
        let mean = flat.iter().sum::<f64>() / flat.len() as f64;
        let var = flat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / flat.len() as f64;
        assert!((var.sqrt() - 0.01).abs() < 0.002, "std {}", var.sqrt());
        assert!(!bank.is_frozen());

        let a = init_bank(1, 4, 0.01, 0).unwrap().to_flat();
        let b = init_bank(1, 4, 0.01, 0).unwrap().to_flat();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );

        let tiny = init_bank(5, 512, 1e-9, 3).unwrap();
        assert!(tiny.max_abs() < 1e-6);
    }

    #[test]
    fn init_bank_rejects_bad_args() {
        assert!(init_bank(0, 512, 0.01, 0).is_err());
        assert!(init_bank(1, 3, 0.01, 0).is_err());
        assert!(init_bank(1, 8, 0.0, 0).is_err());
        assert!(init_bank(1, 8, -1.0, 0).is_err());
    }

    #[test]
    fn bandlimit_full_band_is_identity_without_dc() {
        let bank = init_bank(1, 64, 1.0, 5).unwrap();
        let mut s = bank.table(0).samples().to_vec();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        s.iter_mut().for_each(|x| *x -= mean);
        let t = Wavetable::new(s).unwrap();
        let out = bandlimit(&t, 32).unwrap();
        for (a, b) in out.samples().iter().zip(t.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bandlimit_removes_higher_harmonic() {
        let t = Wavetable::from_harmonics(128, &[0.0, 0.0, 1.0]).unwrap();
        let out = bandlimit(&t, 2).unwrap();
        assert!(out.max_abs() < 1e-9);
    }

    #[test]
    fn bandlimit_saw_to_fundamental_matches_direct_dft() {
        let len = 512;
        let saw = Wavetable::sawtooth(len).unwrap();
        // direct first DFT coefficient
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &x) in saw.samples().iter().enumerate() {
            let th = TAU * j as f64 / len as f64;
            re += x * th.cos();
            im -= x * th.sin();
        }
        let mag = 2.0 * (re * re + im * im).sqrt() / len as f64;
        let arg = im.atan2(re);
        let out = bandlimit(&saw, 1).unwrap();
        for (j, &y) in out.samples().iter().enumerate() {
            let expect = mag * (TAU * j as f64 / len as f64 + arg).cos();
            assert!((y - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn bandlimit_rejects_out_of_range_harmonic() {
        let t = Wavetable::sine(16).unwrap();
        assert!(bandlimit(&t, 9).is_err());
        assert!(bandlimit(&t, 8).is_ok());
    }

    #[test]
    fn nyquist_bin_only_kept_at_full_band() {
        let t = Wavetable::new((0..8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        assert!(bandlimit(&t, 3).unwrap().max_abs() < 1e-12);
        assert!((bandlimit(&t, 4).unwrap().samples()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_harmonic_examples() {
        assert_eq!(max_harmonic(16000.0, 40.0, 512), 200);
        assert_eq!(max_harmonic(16000.0, 20.0, 512), 256);
        assert_eq!(max_harmonic(16000.0, 5000.0, 512), 1);
        assert_eq!(max_harmonic(16000.0, 0.0, 512), 256);
    }

    #[test]
    fn frozen_bank_rejects_mutation() {
        let mut bank = init_bank(2, 8, 0.1, 1).unwrap();
        bank.freeze();
        let flat = bank.to_flat();
        assert!(matches!(bank.set_flat(&flat), Err(Error::InvalidState(_))));
    }

    #[test]
    fn bank_requires_uniform_lengths() {
        let a = Wavetable::sine(8).unwrap();
        let b = Wavetable::sine(16).unwrap();
        assert!(WavetableBank::new(vec![a, b]).is_err());
        assert!(WavetableBank::new(vec![]).is_err());
    }
}
