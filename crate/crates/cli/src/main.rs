mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "wtsynth", version, about = "Differentiable wavetable synthesizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a bank and control track to a WAV file.
    Synth(SynthArgs),
    /// Learn a wavetable bank and controls from a target recording.
    Fit(FitArgs),
    /// Fit controls for a target against a fixed, pretrained bank.
    Oneshot(OneshotArgs),
    /// Re-render a track with its pitch moved by some octaves.
    Shift(ShiftArgs),
    /// Time additive synthesis against mipmapped wavetable synthesis.
    Bench(BenchArgs),
    /// Export tables and attention over time as CSV for plotting.
    Inspect(InspectArgs),
    /// Estimate the fundamental frequency of a recording.
    F0(F0Args),
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Sample rate of the rendered audio.
    #[arg(long, default_value_t = 16000.0)]
    sr: f64,
    /// Control frames per second of the track file.
    #[arg(long, default_value_t = 250.0)]
    fps: f64,
    /// Output sample encoding (pcm16 or float32).
    #[arg(long, default_value = "pcm16")]
    codec: String,
}

#[derive(Args, Debug)]
struct SynthArgs {
    bank: PathBuf,
    track: PathBuf,
    out_wav: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
    /// Band-limit tables to the frame's fundamental.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    antialias: bool,
}

#[derive(Args, Debug)]
struct FitCommon {
    /// `auto` to estimate from the target, or a CSV with an f0_hz column.
    #[arg(long, default_value = "auto")]
    f0: String,
    /// Optimizer steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    iters: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fps: Option<f64>,
    /// Comma-separated FFT sizes for the spectral loss.
    #[arg(long, value_delimiter = ',')]
    fft_sizes: Option<Vec<usize>>,
    /// key = value run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the `iteration,loss` curve (default: next to the track).
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    target_wav: PathBuf,
    out_bank: PathBuf,
    out_track: PathBuf,
    #[arg(long)]
    n_tables: Option<usize>,
    #[arg(long)]
    table_len: Option<usize>,
    #[command(flatten)]
    common: FitCommon,
}

#[derive(Args, Debug)]
struct OneshotArgs {
    target_wav: PathBuf,
    bank: PathBuf,
    out_track: PathBuf,
    #[command(flatten)]
    common: FitCommon,
}

#[derive(Args, Debug)]
struct ShiftArgs {
    bank: PathBuf,
    track: PathBuf,
    out_wav: PathBuf,
    /// Octaves to move by; negative shifts down.
    #[arg(long, allow_negative_numbers = true)]
    octaves: f64,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Seconds of audio rendered per trial.
    #[arg(long, default_value_t = 1.0)]
    seconds: f64,
    #[arg(long, default_value_t = 16000.0)]
    sr: f64,
    #[arg(long, default_value_t = 250.0)]
    fps: f64,
    #[arg(long, default_value_t = 100)]
    harmonics: usize,
    #[arg(long, default_value_t = 10)]
    n_tables: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-trial timings as `trial,additive_ms,dwts_ms`.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    bank: PathBuf,
    /// Rank tables by this track's mean attention.
    #[arg(long)]
    track: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 250.0)]
    fps: f64,
}

#[derive(Args, Debug)]
struct F0Args {
    wav: PathBuf,
    out_csv: PathBuf,
    #[arg(long, default_value_t = 250.0)]
    fps: f64,
    #[arg(long, default_value_t = 20.0)]
    fmin: f64,
    #[arg(long, default_value_t = 4000.0)]
    fmax: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit(a),
        Command::Oneshot(a) => commands::oneshot(a),
        Command::Shift(a) => commands::shift(a),
        Command::Bench(a) => commands::bench(a),
        Command::Inspect(a) => commands::inspect(a),
        Command::F0(a) => commands::f0(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
