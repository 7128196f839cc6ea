use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optimize::FitConfig;
use crate::oscillator::{hop_size, DEFAULT_FRAME_RATE, DEFAULT_SAMPLE_RATE};
use crate::spectral::SpectralConfig;

/// Flat `key = value` run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sample_rate: f64,
    pub frame_rate: f64,
    pub n_tables: usize,
    pub table_len: usize,
    pub fft_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub antialias: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            frame_rate: DEFAULT_FRAME_RATE,
            n_tables: 20,
            table_len: 512,
            fft_sizes: SpectralConfig::default().fft_sizes,
            learning_rate: 1e-3,
            iterations: 1000,
            seed: 0,
            antialias: true,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Format(format!("line {line}: bad value '{raw}' for {key}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {line}: expected key = value")))?;
            let (key, val) = (key.trim(), val.trim());
            match key {
                "sample_rate" => cfg.sample_rate = value(key, val, line)?,
                "frame_rate" => cfg.frame_rate = value(key, val, line)?,
                "n_tables" => cfg.n_tables = value(key, val, line)?,
                "table_len" => cfg.table_len = value(key, val, line)?,
                "fft_sizes" => {
                    cfg.fft_sizes = val
                        .split(',')
                        .map(|s| value(key, s.trim(), line))
                        .collect::<Result<_>>()?
                }
                "learning_rate" => cfg.learning_rate = value(key, val, line)?,
                "iterations" => cfg.iterations = value(key, val, line)?,
                "seed" => cfg.seed = value(key, val, line)?,
                "antialias" => cfg.antialias = value(key, val, line)?,
                other => return Err(Error::Format(format!("line {line}: unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        hop_size(self.sample_rate, self.frame_rate)?;
        self.spectral().validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n_tables == 0 {
            return bad("n_tables must be at least 1");
        }
        if self.table_len < 4 {
            return bad("table_len must be at least 4");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        Ok(())
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            fft_sizes: self.fft_sizes.clone(),
            ..SpectralConfig::default()
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            spectral: self.spectral(),
            antialias: self.antialias,
            seed: self.seed,
            table_len: self.table_len,
            sample_rate: self.sample_rate,
            frame_rate: self.frame_rate,
            ..FitConfig::default()
        }
    }
}

impl std::fmt::Display for RunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut sizes = String::new();
        for (i, s) in self.fft_sizes.iter().enumerate() {
            if i > 0 {
                sizes.push(',');
            }
            write!(sizes, "{s}")?;
        }
        writeln!(f, "sample_rate = {}", self.sample_rate)?;
        writeln!(f, "frame_rate = {}", self.frame_rate)?;
        writeln!(f, "n_tables = {}", self.n_tables)?;
        writeln!(f, "table_len = {}", self.table_len)?;
        writeln!(f, "fft_sizes = {sizes}")?;
        writeln!(f, "learning_rate = {}", self.learning_rate)?;
        writeln!(f, "iterations = {}", self.iterations)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "antialias = {}", self.antialias)
    }
}
