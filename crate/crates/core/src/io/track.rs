use std::path::Path;

use crate::error::{Error, Result};
use crate::oscillator::{ControlTrack, ATTENTION_SUM_TOL};
use crate::spectral::PitchTrack;

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}

fn parse_field(s: &str, line: u64, column: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}: {column} value '{s}' is not a number")))
}

/// Writes `frame,f0_hz,amp,c_0..c_{N-1}`.
pub fn track_save(path: impl AsRef<Path>, track: &ControlTrack) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["frame".to_string(), "f0_hz".into(), "amp".into()];
    header.extend((0..track.n_tables()).map(|i| format!("c_{i}")));
    w.write_record(&header).map_err(csv_error)?;
    for t in 0..track.n_frames() {
        let mut row = vec![t.to_string(), track.f0()[t].to_string(), track.amplitude()[t].to_string()];
        row.extend(track.attention_row(t).iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a track written by [`track_save`]; the file carries no frame rate.
pub fn track_load(path: impl AsRef<Path>, frame_rate: f64) -> Result<ControlTrack> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() < 4 || names[..3] != ["frame", "f0_hz", "amp"] {
        return Err(Error::Format(format!(
            "track header must be frame,f0_hz,amp,c_0..; got {}",
            names.join(",")
        )));
    }
    let n_tables = names.len() - 3;
    for (i, name) in names[3..].iter().enumerate() {
        if *name != format!("c_{i}") {
            return Err(Error::Format(format!("column {} should be c_{i}, got '{name}'", i + 3)));
        }
    }

    let (mut f0, mut amp, mut att) = (Vec::new(), Vec::new(), Vec::new());
    for (t, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(t as u64 + 2, |p| p.line());
        let frame = parse_field(&rec[0], line, "frame")?;
        if frame != t as f64 {
            return Err(Error::Format(format!("line {line}: frame {frame}, expected {t}")));
        }
        f0.push(parse_field(&rec[1], line, "f0_hz")?);
        amp.push(parse_field(&rec[2], line, "amp")?);
        let start = att.len();
        for (i, v) in rec.iter().skip(3).enumerate() {
            att.push(parse_field(v, line, &format!("c_{i}"))?);
        }
        let row = &att[start..];
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ATTENTION_SUM_TOL || row.iter().any(|c| *c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "line {line} (frame {t}): attention weights sum to {sum} and must be nonnegative summing to 1"
            )));
        }
    }
    ControlTrack::new(frame_rate, f0, amp, n_tables, att)
}

/// Writes `frame,f0_hz,confidence`.
pub fn pitch_save(path: impl AsRef<Path>, track: &PitchTrack) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["frame", "f0_hz", "confidence"]).map_err(csv_error)?;
    for (t, (f, c)) in track.f0.iter().zip(&track.confidence).enumerate() {
        w.write_record([t.to_string(), f.to_string(), c.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `f0_hz` column of an f0 or control-track CSV.
pub fn f0_load(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.clone();
    let col = header
        .iter()
        .position(|h| h.trim() == "f0_hz")
        .ok_or_else(|| Error::Format("no f0_hz column".into()))?;
    let mut out = Vec::new();
    for (t, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(t as u64 + 2, |p| p.line());
        let f = parse_field(&rec[col], line, "f0_hz")?;
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::Format(format!("line {line}: f0 {f} must be finite and >= 0")));
        }
        out.push(f);
    }
    Ok(out)
}

/// Writes `iteration,loss`.
pub fn loss_curve_save(path: impl AsRef<Path>, curve: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["iteration", "loss"]).map_err(csv_error)?;
    for (i, l) in curve.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
