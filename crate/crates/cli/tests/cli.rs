use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wtsynth_core::io::{bank_save, track_save, wav_read, wav_write, AudioBuffer, WavCodec};
use wtsynth_core::spectral::estimate_f0;
use wtsynth_core::{ControlTrack, Wavetable, WavetableBank};

fn wtsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wtsynth")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn bank(&self, tables: Vec<Wavetable>) -> PathBuf {
        let p = self.path("bank.dwtb");
        bank_save(&p, &WavetableBank::new(tables).unwrap()).unwrap();
        p
    }

    fn track(&self, name: &str, track: &ControlTrack) -> PathBuf {
        let p = self.path(name);
        track_save(&p, track).unwrap();
        p
    }

    fn wav(&self, name: &str, samples: Vec<f64>) -> PathBuf {
        let p = self.path(name);
        wav_write(&p, &AudioBuffer::new(16000.0, samples).unwrap(), WavCodec::Float32).unwrap();
        p
    }
}

fn sine(f: f64, secs: f64, amp: f64) -> Vec<f64> {
    (0..(secs * 16000.0) as usize).map(|n| amp * (TAU * f * n as f64 / 16000.0).sin()).collect()
}

fn median_f0(path: &Path) -> f64 {
    let audio = wav_read(path).unwrap();
    estimate_f0(&audio.samples, 16000.0, 250.0, 20.0, 4000.0)
        .unwrap()
        .voiced_median()
        .unwrap()
}

#[test]
fn sine_bank_renders_requested_pitch() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![Wavetable::sine(512).unwrap()]);
    let track = fx.track("t.csv", &ControlTrack::constant(250.0, 250, 440.0, 0.5, &[1.0]).unwrap());
    let out = fx.path("out.wav");
    let r = wtsynth(&["synth", s(&bank), s(&track), s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let f = median_f0(&out);
    assert!((f - 440.0).abs() < 2.0, "{f}");
    let audio = wav_read(&out).unwrap();
    assert_eq!(audio.samples.len(), 16000);
    assert!((audio.peak() - 0.5).abs() < 1e-3);
}

#[test]
fn zero_amplitude_is_silent() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![Wavetable::sawtooth(512).unwrap(), Wavetable::sine(512).unwrap()]);
    let track = fx.track("t.csv", &ControlTrack::constant(250.0, 50, 300.0, 0.0, &[0.5, 0.5]).unwrap());
    let out = fx.path("out.wav");
    assert_eq!(code(&wtsynth(&["synth", s(&bank), s(&track), s(&out)])), 0);
    assert!(wav_read(&out).unwrap().samples.iter().all(|v| *v == 0.0));
}

#[test]
fn shift_by_zero_matches_synth_and_down_one_halves_pitch() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![Wavetable::sine(512).unwrap()]);
    let track = fx.track("t.csv", &ControlTrack::constant(250.0, 250, 440.0, 0.5, &[1.0]).unwrap());
    let (plain, same, down) = (fx.path("plain.wav"), fx.path("same.wav"), fx.path("down.wav"));
    assert_eq!(code(&wtsynth(&["synth", s(&bank), s(&track), s(&plain)])), 0);
    assert_eq!(code(&wtsynth(&["shift", s(&bank), s(&track), s(&same), "--octaves", "0"])), 0);
    assert_eq!(std::fs::read(&plain).unwrap(), std::fs::read(&same).unwrap());
    assert_eq!(code(&wtsynth(&["shift", s(&bank), s(&track), s(&down), "--octaves", "-1"])), 0);
    let f = median_f0(&down);
    assert!((f - 220.0).abs() < 1.0, "{f}");
}

#[test]
fn shift_past_nyquist_is_rejected() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![Wavetable::sine(64).unwrap()]);
    let track = fx.track("t.csv", &ControlTrack::constant(250.0, 10, 440.0, 0.5, &[1.0]).unwrap());
    let out = fx.path("out.wav");
    let r = wtsynth(&["shift", s(&bank), s(&track), s(&out), "--octaves", "5"]);
    assert_eq!(code(&r), 2);
    assert!(!out.exists());
}

#[test]
fn missing_inputs_exit_with_usage_code() {
    let fx = Fixture::new();
    let out = fx.path("out.wav");
    assert_eq!(code(&wtsynth(&["synth", "/nonexistent/bank", "/nonexistent/track", s(&out)])), 2);
    assert_eq!(code(&wtsynth(&["f0", "/nonexistent.wav", s(&fx.path("f0.csv"))])), 2);
    assert_eq!(code(&wtsynth(&["frobnicate"])), 2);
}

#[test]
fn zero_iterations_is_a_usage_error() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(220.0, 0.2, 0.5));
    let r = wtsynth(&["fit", s(&wav), s(&fx.path("b")), s(&fx.path("t.csv")), "--iters", "0"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn empty_bank_file_is_rejected() {
    let fx = Fixture::new();
    let bank = fx.path("empty.dwtb");
    std::fs::write(&bank, b"").unwrap();
    let r = wtsynth(&["inspect", s(&bank), "--out-dir", s(&fx.path("plots"))]);
    assert_eq!(code(&r), 2);
}

#[test]
fn inspect_orders_tables_by_attention() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![
        Wavetable::sine(32).unwrap(),
        Wavetable::sawtooth(32).unwrap(),
        Wavetable::square(32).unwrap(),
    ]);
    let track = fx.track("t.csv", &ControlTrack::constant(250.0, 20, 200.0, 1.0, &[0.2, 0.7, 0.1]).unwrap());
    let dir = fx.path("plots");
    let r = wtsynth(&["inspect", s(&bank), "--track", s(&track), "--out-dir", s(&dir)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let ranking = std::fs::read_to_string(dir.join("ranking.csv")).unwrap();
    let tables: Vec<&str> = ranking.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(tables, ["1", "0", "2"]);
    assert!(dir.join("rank_00_table_01.csv").exists());
    let attention = std::fs::read_to_string(dir.join("attention.csv")).unwrap();
    assert_eq!(attention.lines().next().unwrap(), "frame,time_s,table_1,table_0,table_2");
    assert_eq!(attention.lines().count(), 21);
}

#[test]
fn fit_writes_bank_track_and_curve() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(220.0, 0.2, 0.5));
    let (bank, track, curve) = (fx.path("b.dwtb"), fx.path("t.csv"), fx.path("loss.csv"));
    let r = wtsynth(&[
        "fit", s(&wav), s(&bank), s(&track), "--n-tables", "2", "--table-len", "64", "--iters", "5",
        "--fft-sizes", "64,128", "--loss-csv", s(&curve),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(std::fs::metadata(&bank).unwrap().len(), 12 + 2 * 64 * 4);
    assert_eq!(std::fs::read_to_string(&curve).unwrap().lines().count(), 7);
    assert_eq!(std::fs::read_to_string(&track).unwrap().lines().count(), 51);

    let out = fx.path("re.wav");
    assert_eq!(code(&wtsynth(&["synth", s(&bank), s(&track), s(&out)])), 0);
}

#[test]
fn oneshot_and_f0_tracks_against_fixed_bank() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(330.0, 0.2, 0.5));
    let bank = fx.bank(vec![Wavetable::sine(128).unwrap(), Wavetable::sawtooth(128).unwrap()]);
    let f0 = fx.path("f0.csv");
    assert_eq!(code(&wtsynth(&["f0", s(&wav), s(&f0)])), 0);
    let track = fx.path("t.csv");
    let r = wtsynth(&[
        "oneshot", s(&wav), s(&bank), s(&track), "--f0", s(&f0), "--iters", "3", "--fft-sizes", "64,128",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(fx.path("t.loss.csv").exists());
}

#[test]
fn f0_file_with_wrong_length_is_rejected() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(220.0, 0.2, 0.5));
    let f0 = fx.path("f0.csv");
    std::fs::write(&f0, "frame,f0_hz\n0,220\n1,220\n").unwrap();
    let r = wtsynth(&["fit", s(&wav), s(&fx.path("b")), s(&fx.path("t.csv")), "--f0", s(&f0), "--iters", "1"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn sample_rate_mismatch_with_config_is_rejected() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(220.0, 0.2, 0.5));
    let cfg = fx.path("run.cfg");
    std::fs::write(&cfg, "sample_rate = 44100\n").unwrap();
    let r = wtsynth(&["fit", s(&wav), s(&fx.path("b")), s(&fx.path("t.csv")), "--config", s(&cfg)]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("44100"));
}

#[test]
fn bench_runs_a_single_trial() {
    let fx = Fixture::new();
    let csv = fx.path("bench.csv");
    let r = wtsynth(&["bench", "--trials", "1", "--warmup", "0", "--seconds", "0.1", "--csv", s(&csv)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("speedup_ratio"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);
    assert_eq!(code(&wtsynth(&["bench", "--trials", "0"])), 2);
}

#[test]
fn missing_f0_file_is_a_usage_error() {
    let fx = Fixture::new();
    let wav = fx.wav("t.wav", sine(220.0, 0.2, 0.5));
    let r = wtsynth(&["fit", s(&wav), s(&fx.path("b")), s(&fx.path("t.csv")), "--f0", "/nonexistent/f0.csv"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn inspect_without_track_keeps_bank_order() {
    let fx = Fixture::new();
    let bank = fx.bank(vec![Wavetable::sine(16).unwrap(), Wavetable::sawtooth(16).unwrap()]);
    let dir = fx.path("plots");
    assert_eq!(code(&wtsynth(&["inspect", s(&bank), "--out-dir", s(&dir)])), 0);
    assert!(dir.join("rank_00_table_00.csv").exists());
    assert!(dir.join("rank_01_table_01.csv").exists());
    assert!(!dir.join("attention.csv").exists());
    let sine = std::fs::read_to_string(dir.join("rank_00_table_00.csv")).unwrap();
    assert_eq!(sine.lines().count(), 17);
}

#[test]
fn bench_parity_with_equal_work() {
    let r = wtsynth(&["bench", "--trials", "30", "--warmup", "3", "--harmonics", "10", "--n-tables", "10"]);
    assert_eq!(code(&r), 0);
    let out = String::from_utf8_lossy(&r.stdout).to_string();
    let ratio: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("speedup_ratio"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
}
