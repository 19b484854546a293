//! `DNLSFLD1` binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 8    | magic `DNLSFLD1`                |
//! | 8      | 8    | dimension `d` (u64)             |
//! | 16     | 8    | points per axis `N` (u64)       |
//! | 24     | 8    | half box length `L` (f64)       |
//! | 32     | 16·N^d | samples as `(re, im)` f64 pairs, row-major |

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexField, Grid, Space};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DNLSFLD1";
pub const HEADER_LEN: usize = 32;

/// Encodes a physical-space field.
pub fn encode(field: &ComplexField) -> Result<Vec<u8>> {
    field.expect_space(Space::Physical)?;
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&grid.half_length().to_le_bytes());
    for z in field.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

fn le_u64(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes.try_into().expect("8-byte slice"))
}

fn le_f64(bytes: &[u8]) -> f64 {
    f64::from_le_bytes(bytes.try_into().expect("8-byte slice"))
}

/// Decodes and validates a snapshot. Trailing bytes are an error.
pub fn decode(bytes: &[u8]) -> Result<ComplexField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Snapshot("bad magic, expected DNLSFLD1".into()));
    }
    let dim = le_u64(&bytes[8..16]);
    let n = le_u64(&bytes[16..24]);
    let half_length = le_f64(&bytes[24..32]);
    let dim = usize::try_from(dim)
        .ok()
        .filter(|d| (1..=3).contains(d))
        .ok_or_else(|| Error::Snapshot(format!("dimension {dim} not in 1..=3")))?;
    let n = usize::try_from(n)
        .ok()
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| Error::Snapshot(format!("implausible axis length {n}")))?;
    let grid = Grid::new(dim, n, half_length).map_err(|e| Error::Snapshot(e.to_string()))?;

    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "expected {expected} bytes for {n}^{dim} samples, found {}",
            bytes.len()
        )));
    }
    let data: Vec<Complex64> = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|pair| Complex64::new(le_f64(&pair[..8]), le_f64(&pair[8..])))
        .collect();
    ComplexField::from_vec(grid, data, Space::Physical).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn write(field: &ComplexField, mut writer: impl Write) -> Result<()> {
    let bytes = encode(field)?;
    writer
        .write_all(&bytes)
        .map_err(|e| Error::io("<snapshot writer>", e))
}

pub fn read(mut reader: impl Read) -> Result<ComplexField> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<snapshot reader>", e))?;
    decode(&bytes)
}

pub fn save(field: &ComplexField, path: &Path) -> Result<()> {
    std::fs::write(path, encode(field)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<ComplexField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_field() -> ComplexField {
        let grid = Grid::new(2, 8, 1.5).unwrap();
        ComplexField::from_fn(grid, |x| Complex64::new(x[0], -x[1] * 0.5))
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample_field()).unwrap();
        assert_eq!(&bytes[..8], b"DNLSFLD1");
        assert_eq!(le_u64(&bytes[8..16]), 2);
        assert_eq!(le_u64(&bytes[16..24]), 8);
        assert_eq!(le_f64(&bytes[24..32]), 1.5);
        assert_eq!(bytes.len(), 32 + 16 * 64);
        // first sample is at (-1.5, -1.5)
        assert_eq!(le_f64(&bytes[32..40]), -1.5);
        assert_eq!(le_f64(&bytes[40..48]), 0.75);
    }

    #[test]
    fn rejects_malformed_input() {
        let good = encode(&sample_field()).unwrap();
        assert!(decode(&good[..20]).is_err());
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut magic = good.clone();
        magic[7] = b'2';
        assert!(decode(&magic).is_err());
        let mut dim = good.clone();
        dim[8] = 4;
        assert!(decode(&dim).is_err());
        let mut nan = good.clone();
        nan[32..40].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&nan).unwrap_err().to_string().contains("index 0"));
        let mut huge = good;
        huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode(&huge).is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            dim in 1usize..=2,
            half in 8usize..=12,
            l in 0.1f64..100.0,
            seed in any::<u64>(),
        ) {
            let n = 2 * half;
            let grid = Grid::new(dim, n, l).unwrap();
            let mut state = seed;
            let field = ComplexField::from_fn(grid, |_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                let im = (state >> 20) as f64 / (1u64 << 44) as f64;
                Complex64::new(re, im)
            });
            let back = decode(&encode(&field).unwrap()).unwrap();
            prop_assert_eq!(back, field);
        }
    }
}
