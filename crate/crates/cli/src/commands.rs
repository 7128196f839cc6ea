use std::fmt;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use wtsynth_core::bench::{run_bench, BenchConfig};
use wtsynth_core::io::{
    bank_load, bank_save, f0_load, loss_curve_save, pitch_save, track_load, track_save, wav_read_file, wav_write,
    AudioBuffer, RunConfig, WavCodec,
};
use wtsynth_core::optimize::{self, fit_oneshot, pitch_shift, rank_wavetables, FitConfig};
use wtsynth_core::oscillator::hop_size;
use wtsynth_core::spectral::{estimate_f0, DEFAULT_F0_MAX, DEFAULT_F0_MIN};
use wtsynth_core::{synthesize, Error};

use crate::{BenchArgs, F0Args, FitArgs, FitCommon, InspectArgs, OneshotArgs, RenderArgs, ShiftArgs, SynthArgs};

/// Bad flags or inputs detected by the CLI itself.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

macro_rules! usage {
    ($($arg:tt)*) => {
        anyhow::Error::new(Usage(format!($($arg)*)))
    };
}

/// 2 for usage and input problems (including missing files), 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let input_io = |k: ErrorKind| matches!(k, ErrorKind::NotFound | ErrorKind::PermissionDenied);
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidArgument(_) | Error::Format(_) | Error::Unsupported(_) => 2,
                Error::Io(io) if input_io(io.kind()) => 2,
                _ => 1,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return if input_io(io.kind()) { 2 } else { 1 };
        }
    }
    1
}

fn codec(render: &RenderArgs) -> Result<WavCodec> {
    render.codec.parse().map_err(|e: Error| usage!("{e}"))
}

fn write_audio(path: &Path, samples: Vec<f64>, sr: f64, codec: WavCodec) -> Result<()> {
    let buf = AudioBuffer::new(sr, samples)?;
    let (peak, dur) = (buf.peak(), buf.duration());
    wav_write(path, &buf, codec).with_context(|| format!("writing {}", path.display()))?;
    let db = if peak > 0.0 { 20.0 * peak.log10() } else { f64::NEG_INFINITY };
    println!("wrote {} ({dur:.3} s, peak {peak:.4} / {db:.1} dBFS)", path.display());
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let codec = codec(&a.render)?;
    let bank = bank_load(&a.bank).with_context(|| format!("loading bank {}", a.bank.display()))?;
    let track = track_load(&a.track, a.render.fps).with_context(|| format!("loading track {}", a.track.display()))?;
    let x = synthesize(&bank, &track, a.render.sr, a.antialias)?;
    write_audio(&a.out_wav, x, a.render.sr, codec)
}

pub fn shift(a: ShiftArgs) -> Result<()> {
    if !a.octaves.is_finite() {
        return Err(usage!("--octaves must be finite"));
    }
    let codec = codec(&a.render)?;
    let bank = bank_load(&a.bank).with_context(|| format!("loading bank {}", a.bank.display()))?;
    let track = track_load(&a.track, a.render.fps).with_context(|| format!("loading track {}", a.track.display()))?;
    let x = pitch_shift(&bank, &track, 2f64.powf(a.octaves), a.render.sr)?;
    write_audio(&a.out_wav, x, a.render.sr, codec)
}

/// Target audio, per-frame f0 and the resolved fit settings.
struct FitInputs {
    target: Vec<f64>,
    f0: Vec<f64>,
    config: FitConfig,
    run: RunConfig,
}

fn resolve_run_config(c: &FitCommon, base: RunConfig) -> Result<RunConfig> {
    let mut run = match &c.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => base,
    };
    if let Some(v) = c.iters {
        run.iterations = v as usize;
    }
    if let Some(v) = c.lr {
        run.learning_rate = v;
    }
    if let Some(v) = c.seed {
        run.seed = v;
    }
    if let Some(v) = c.fps {
        run.frame_rate = v;
    }
    if let Some(v) = &c.fft_sizes {
        run.fft_sizes = v.clone();
    }
    Ok(run)
}

fn load_fit_inputs(wav: &Path, c: &FitCommon, mut run: RunConfig) -> Result<FitInputs> {
    let file = wav_read_file(wav).with_context(|| format!("reading {}", wav.display()))?;
    if file.channels > 1 {
        eprintln!("warning: downmixing {} channels to mono", file.channels);
    }
    let sr = file.audio.sample_rate;
    if c.config.is_some() && run.sample_rate != sr {
        return Err(usage!(
            "{} is {sr} Hz but the config expects {} Hz; resample the file first",
            wav.display(),
            run.sample_rate
        ));
    }
    run.sample_rate = sr;
    run.validate().map_err(|e| usage!("{e}"))?;
    let target = file.audio.samples;
    let hop = hop_size(sr, run.frame_rate).map_err(|e| usage!("{e}"))?;
    let frames = target.len().div_ceil(hop);
    if frames == 0 {
        return Err(usage!("{} has no samples", wav.display()));
    }

    let f0 = if c.f0 == "auto" {
        let track = estimate_f0(&target, sr, run.frame_rate, DEFAULT_F0_MIN, DEFAULT_F0_MAX.min(sr / 2.0 - 1.0))?;
        if !track.voiced.iter().any(|v| *v) {
            return Err(usage!("no pitched frames found in {}; pass --f0 with a file", wav.display()));
        }
        track.filled_f0()
    } else {
        let path = PathBuf::from(&c.f0);
        let f0 = f0_load(&path).with_context(|| format!("reading f0 track {}", path.display()))?;
        if f0.len() != frames {
            return Err(usage!("f0 track has {} frames, the target needs {frames}", f0.len()));
        }
        f0
    };
    let config = FitConfig {
        table_len: run.table_len,
        ..run.fit_config()
    };
    Ok(FitInputs { target, f0, config, run })
}

fn loss_path(c: &FitCommon, track: &Path) -> PathBuf {
    c.loss_csv.clone().unwrap_or_else(|| track.with_extension("loss.csv"))
}

fn report_curve(curve: &[f64]) {
    let (first, last) = (curve[0], curve[curve.len() - 1]);
    println!(
        "loss {first:.6} -> {last:.6} ({:.2}% of initial, {} iterations)",
        100.0 * last / first,
        curve.len() - 1
    );
}

pub fn fit(a: FitArgs) -> Result<()> {
    let mut run = resolve_run_config(&a.common, RunConfig::default())?;
    if let Some(n) = a.n_tables {
        run.n_tables = n;
    }
    if let Some(l) = a.table_len {
        run.table_len = l;
    }
    let inp = load_fit_inputs(&a.target_wav, &a.common, run)?;
    let r = optimize::fit(&inp.target, &inp.f0, inp.run.n_tables, &inp.config)?;
    bank_save(&a.out_bank, &r.bank).with_context(|| format!("writing {}", a.out_bank.display()))?;
    track_save(&a.out_track, &r.track).with_context(|| format!("writing {}", a.out_track.display()))?;
    let lp = loss_path(&a.common, &a.out_track);
    loss_curve_save(&lp, &r.loss_curve).with_context(|| format!("writing {}", lp.display()))?;
    report_curve(&r.loss_curve);
    println!(
        "wrote {}, {}, {}",
        a.out_bank.display(),
        a.out_track.display(),
        lp.display()
    );
    Ok(())
}

pub fn oneshot(a: OneshotArgs) -> Result<()> {
    let base = RunConfig {
        iterations: 300,
        learning_rate: 1e-2,
        ..RunConfig::default()
    };
    let run = resolve_run_config(&a.common, base)?;
    let bank = bank_load(&a.bank).with_context(|| format!("loading bank {}", a.bank.display()))?;
    let run = RunConfig {
        n_tables: bank.n_tables(),
        table_len: bank.table_len(),
        ..run
    };
    let inp = load_fit_inputs(&a.target_wav, &a.common, run)?;
    let r = fit_oneshot(&inp.target, &inp.f0, &bank, &inp.config)?;
    track_save(&a.out_track, &r.track).with_context(|| format!("writing {}", a.out_track.display()))?;
    let lp = loss_path(&a.common, &a.out_track);
    loss_curve_save(&lp, &r.loss_curve).with_context(|| format!("writing {}", lp.display()))?;
    report_curve(&r.loss_curve);
    println!("wrote {}, {}", a.out_track.display(), lp.display());
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        trials: a.trials as usize,
        seconds: a.seconds,
        sample_rate: a.sr,
        frame_rate: a.fps,
        harmonics: a.harmonics,
        n_tables: a.n_tables,
        warmup: a.warmup,
        seed: a.seed,
        ..BenchConfig::default()
    };
    let r = run_bench(&cfg)?;
    println!("trials                        {}", r.trials);
    println!("harmonics                     {}", r.harmonics);
    println!("n_tables                      {}", r.n_tables);
    println!("additive_ms_per_second_audio  {:.3}", r.additive_ms_per_second_audio);
    println!("dwts_ms_per_second_audio      {:.3}", r.dwts_ms_per_second_audio);
    println!("speedup_ratio                 {:.2}", r.speedup_ratio);
    if let Some(p) = &a.csv {
        r.write_csv(p).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn inspect(a: InspectArgs) -> Result<()> {
    let bank = bank_load(&a.bank).with_context(|| format!("loading bank {}", a.bank.display()))?;
    let track = match &a.track {
        Some(p) => Some(track_load(p, a.fps).with_context(|| format!("loading track {}", p.display()))?),
        None => None,
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let ranking = track.as_ref().map(|t| rank_wavetables(&bank, t)).transpose()?;
    let order: Vec<usize> = match &ranking {
        Some(r) => r.order.clone(),
        None => (0..bank.n_tables()).collect(),
    };

    for (rank, &i) in order.iter().enumerate() {
        let mut text = String::from("sample,value\n");
        for (j, v) in bank.table(i).samples().iter().enumerate() {
            text.push_str(&format!("{j},{v}\n"));
        }
        fs::write(a.out_dir.join(format!("rank_{rank:02}_table_{i:02}.csv")), text)?;
    }

    if let (Some(track), Some(r)) = (&track, &ranking) {
        let mut text = String::from("rank,table,mean_attention\n");
        for (rank, &i) in r.order.iter().enumerate() {
            text.push_str(&format!("{rank},{i},{}\n", r.mean_attention[i]));
        }
        fs::write(a.out_dir.join("ranking.csv"), text)?;

        let mut text = String::from("frame,time_s");
        for &i in &r.order {
            text.push_str(&format!(",table_{i}"));
        }
        text.push('\n');
        for t in 0..track.n_frames() {
            text.push_str(&format!("{t},{}", t as f64 / track.frame_rate()));
            let row = track.attention_row(t);
            for &i in &r.order {
                text.push_str(&format!(",{}", row[i]));
            }
            text.push('\n');
        }
        fs::write(a.out_dir.join("attention.csv"), text)?;
    }
    println!("wrote {} table files to {}", order.len(), a.out_dir.display());
    Ok(())
}

pub fn f0(a: F0Args) -> Result<()> {
    let file = wav_read_file(&a.wav).with_context(|| format!("reading {}", a.wav.display()))?;
    let sr = file.audio.sample_rate;
    let track = estimate_f0(&file.audio.samples, sr, a.fps, a.fmin, a.fmax)?;
    pitch_save(&a.out_csv, &track).with_context(|| format!("writing {}", a.out_csv.display()))?;
    match track.voiced_median() {
        Some(m) => println!("{} frames, median f0 {m:.2} Hz", track.n_frames()),
        None => println!("{} frames, no pitched frames", track.n_frames()),
    }
    Ok(())
}
