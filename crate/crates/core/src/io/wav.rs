use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{ensure_arg, invalid_arg, Error, Result};

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl AudioBuffer {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        ensure_arg!(sample_rate > 0.0 && sample_rate.is_finite(), "sample rate must be positive");
        ensure_arg!(samples.iter().all(|s| s.is_finite()), "samples must be finite");
        Ok(Self { sample_rate, samples })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavCodec {
    #[default]
    Pcm16,
    Float32,
}

impl FromStr for WavCodec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pcm16" | "int16" | "s16" => Ok(WavCodec::Pcm16),
            "float32" | "f32" => Ok(WavCodec::Float32),
            other => Err(invalid_arg!("unknown codec '{other}'")),
        }
    }
}

/// A decoded file plus the channel count it had on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct WavFile {
    pub audio: AudioBuffer,
    pub channels: u16,
}

/// The file is already open when decoding starts, so read failures mean short or damaged data.
fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Format(format!("truncated or unreadable data: {io}")),
        hound::Error::FormatError(m) => Error::Format(m.into()),
        hound::Error::Unsupported => Error::Unsupported("wav encoding".into()),
        other => Error::Format(other.to_string()),
    }
}

/// Reads PCM-16 or float-32 audio; stereo is averaged to mono.
pub fn wav_read(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    Ok(wav_read_file(path)?.audio)
}

pub fn wav_read_file(path: impl AsRef<Path>) -> Result<WavFile> {
    let file = File::open(path)?;
    let mut reader = hound::WavReader::new(BufReader::new(file)).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels;
    if channels == 0 || channels > 2 {
        return Err(Error::Unsupported(format!("{channels} channels")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!("{bits}-bit {fmt:?} samples")));
        }
    };
    if !interleaved.len().is_multiple_of(channels as usize) {
        return Err(Error::Format("partial sample frame at end of data".into()));
    }
    let samples = interleaved
        .chunks_exact(channels as usize)
        .map(|f| f.iter().sum::<f64>() / channels as f64)
        .collect();
    let audio = AudioBuffer::new(spec.sample_rate as f64, samples).map_err(|e| Error::Format(e.to_string()))?;
    Ok(WavFile { audio, channels })
}

/// Clamps to [−1, 1], scales by 32767 and rounds half away from zero.
pub fn quantize_pcm16(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Writes a mono file with a canonical 44-byte header.
pub fn wav_write(path: impl AsRef<Path>, buffer: &AudioBuffer, codec: WavCodec) -> Result<()> {
    let rate = buffer.sample_rate;
    ensure_arg!(
        rate.fract() == 0.0 && rate >= 1.0 && rate <= u32::MAX as f64,
        "sample rate {rate} is not a whole number of Hz"
    );
    let (format_tag, bytes_per_sample) = match codec {
        WavCodec::Pcm16 => (1u16, 2u32),
        WavCodec::Float32 => (3u16, 4u32),
    };
    let data_len = u32::try_from(buffer.samples.len() as u64 * bytes_per_sample as u64)
        .ok()
        .filter(|n| *n <= u32::MAX - 36)
        .ok_or_else(|| invalid_arg!("audio too long for a wav file"))?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVEfmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&format_tag.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?;
    w.write_all(&(rate as u32).to_le_bytes())?;
    w.write_all(&(rate as u32 * bytes_per_sample).to_le_bytes())?;
    w.write_all(&(bytes_per_sample as u16).to_le_bytes())?;
    w.write_all(&(bytes_per_sample as u16 * 8).to_le_bytes())?;
    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    match codec {
        WavCodec::Pcm16 => {
            for &s in &buffer.samples {
                w.write_all(&quantize_pcm16(s).to_le_bytes())?;
            }
        }
        WavCodec::Float32 => {
            for &s in &buffer.samples {
                w.write_all(&(s as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
