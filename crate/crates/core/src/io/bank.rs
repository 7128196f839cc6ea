use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::wavetable::WavetableBank;

/// Layout: `DWTB`, u32 LE table count, u32 LE table length, then f32 LE
/// samples table by table. The wrap sample is not stored.
pub const BANK_MAGIC: &[u8; 4] = b"DWTB";
const HEADER_LEN: usize = 12;

/// Size in bytes of a bank file holding `n_tables` tables of `table_len` samples.
pub fn bank_file_len(n_tables: usize, table_len: usize) -> usize {
    HEADER_LEN + 4 * n_tables * table_len
}

pub fn encode_bank(bank: &WavetableBank) -> Result<Vec<u8>> {
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} overflows u32")));
    let mut out = Vec::with_capacity(bank_file_len(bank.n_tables(), bank.table_len()));
    out.extend_from_slice(BANK_MAGIC);
    out.extend_from_slice(&dim(bank.n_tables())?.to_le_bytes());
    out.extend_from_slice(&dim(bank.table_len())?.to_le_bytes());
    for t in bank.tables() {
        for &s in t.samples() {
            out.extend_from_slice(&(s as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a bank file; the result is frozen.
pub fn decode_bank(bytes: &[u8]) -> Result<WavetableBank> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("bank file has {} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..4] != BANK_MAGIC {
        return Err(Error::Format("bad magic, expected DWTB".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (n, l) = (word(0) as usize, word(1) as usize);
    if n == 0 || l < 2 {
        return Err(Error::Format(format!("bad bank dimensions {n} x {l}")));
    }
    let expected = n
        .checked_mul(l)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "{n} x {l} bank needs {} bytes, file has {}",
            expected.map_or_else(|| "too many".to_string(), |e| e.to_string()),
            bytes.len()
        )));
    }
    let samples: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let bank = WavetableBank::from_flat(n, l, &samples).map_err(|e| Error::Format(e.to_string()))?;
    Ok(bank.frozen())
}

pub fn bank_save(path: impl AsRef<Path>, bank: &WavetableBank) -> Result<()> {
    fs::write(path, encode_bank(bank)?)?;
    Ok(())
}

pub fn bank_load(path: impl AsRef<Path>) -> Result<WavetableBank> {
    decode_bank(&fs::read(path)?)
}
