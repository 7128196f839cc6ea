//! WAV audio, bank and control-track files, and run configuration.

mod bank;
mod config;
mod track;
mod wav;

pub use bank::{bank_file_len, bank_load, bank_save, decode_bank, encode_bank, BANK_MAGIC};
pub use config::RunConfig;
pub use track::{f0_load, loss_curve_save, pitch_save, track_load, track_save};
pub use wav::{quantize_pcm16, wav_read, wav_read_file, wav_write, AudioBuffer, WavCodec, WavFile};
