//! Packed index file.
//!
//! Layout, all little-endian: `"HVIX"`, `u16` version, `u16` flags, `u32`
//! dim in bits, `u64` row count, length-prefixed label, `rows` length-prefixed
//! ids, then `rows × dim/64` words. Strings carry a `u32` byte length.

use std::io::{Read, Write};

use hvd_core::HammingIndex;

use crate::sidecar::write_str;
use crate::{HvdError, Result};

pub const MAGIC: &[u8; 4] = b"HVIX";
pub const VERSION: u16 = 1;
/// Set for a single-vector (compound) index.
pub const FLAG_SINGLE_VECTOR: u16 = 1;

pub fn write_index<W: Write>(mut w: W, index: &HammingIndex, flags: u16) -> Result<()> {
    let dim = u32::try_from(index.dim()).map_err(|_| HvdError::Data("dimension too large".into()))?;
    let mut head = Vec::with_capacity(20);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.extend_from_slice(&flags.to_le_bytes());
    head.extend_from_slice(&dim.to_le_bytes());
    head.extend_from_slice(&(index.len() as u64).to_le_bytes());
    w.write_all(&head)?;
    write_str(&mut w, index.label())?;
    for id in index.ids() {
        write_str(&mut w, id)?;
    }
    let mut buf = Vec::with_capacity(8 * 4096);
    for chunk in index.data().chunks(4096) {
        buf.clear();
        for word in chunk {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_bytes(index: &HammingIndex, flags: u16) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + index.data().len() * 8 + index.len() * 16);
    write_index(&mut out, index, flags)?;
    Ok(out)
}

/// Returns the index and its flags.
pub fn read_index<R: Read>(mut r: R) -> Result<(HammingIndex, u16)> {
    let mut head = [0u8; 20];
    r.read_exact(&mut head).map_err(|_| fmt("truncated header"))?;
    if &head[..4] != MAGIC {
        return Err(fmt("bad magic"));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != VERSION {
        return Err(fmt(&format!("unsupported version {version}")));
    }
    let flags = u16::from_le_bytes([head[6], head[7]]);
    let dim = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
    let rows = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes"));
    if dim == 0 || !dim.is_multiple_of(64) {
        return Err(fmt(&format!("dimension {dim} is not a positive multiple of 64")));
    }
    let rows = usize::try_from(rows).map_err(|_| fmt("row count too large"))?;
    let label = read_str(&mut r)?;
    let mut ids = Vec::with_capacity(rows.min(1 << 20));
    for _ in 0..rows {
        ids.push(read_str(&mut r)?);
    }
    let words = rows
        .checked_mul(dim / 64)
        .ok_or_else(|| fmt("row count too large"))?;
    let mut data = Vec::with_capacity(words.min(1 << 24));
    let mut buf = vec![0u8; 8 * 4096];
    let mut left = words;
    while left > 0 {
        let n = left.min(4096);
        r.read_exact(&mut buf[..8 * n]).map_err(|_| fmt("truncated rows"))?;
        data.extend(buf[..8 * n].chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))));
        left -= n;
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(fmt("trailing bytes"));
    }
    let index = HammingIndex::from_parts(label, dim, ids, data)?;
    Ok((index, flags))
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|_| fmt("truncated string"))?;
    let len = u32::from_le_bytes(len) as usize;
    let mut s = vec![0u8; len];
    r.read_exact(&mut s).map_err(|_| fmt("truncated string"))?;
    String::from_utf8(s).map_err(|_| fmt("string is not UTF-8"))
}

fn fmt(msg: &str) -> HvdError {
    HvdError::Format(format!("index file: {msg}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hvd_core::{BitHypervector, Rng};

    fn sample(n: usize) -> HammingIndex {
        let mut rng = Rng::from_seed(3);
        let mut idx = HammingIndex::new("language", 128).unwrap();
        for i in 0..n {
            idx.push(format!("r{i}"), &BitHypervector::random(128, &mut rng).unwrap()).unwrap();
        }
        idx
    }

    #[test]
    fn byte_layout() {
        let idx = sample(2);
        let bytes = to_bytes(&idx, FLAG_SINGLE_VECTOR).unwrap();
        assert_eq!(&bytes[..4], b"HVIX");
        assert_eq!(&bytes[4..6], &1u16.to_le_bytes());
        assert_eq!(&bytes[6..8], &1u16.to_le_bytes());
        assert_eq!(&bytes[8..12], &128u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
        assert_eq!(&bytes[20..24], &8u32.to_le_bytes());
        assert_eq!(&bytes[24..32], b"language");
        assert_eq!(&bytes[32..36], &2u32.to_le_bytes());
        assert_eq!(&bytes[36..38], b"r0");
        let rows = &bytes[bytes.len() - 32..];
        assert_eq!(&rows[..8], &idx.data()[0].to_le_bytes());
        assert_eq!(bytes.len(), 20 + 12 + 2 * 6 + 2 * 16);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        for n in [0, 1, 57] {
            let idx = sample(n);
            let bytes = to_bytes(&idx, 0).unwrap();
            let (back, flags) = read_index(&bytes[..]).unwrap();
            assert_eq!(flags, 0);
            assert_eq!(back.label(), idx.label());
            assert_eq!(back.ids(), idx.ids());
            assert_eq!(back.data(), idx.data());
            assert_eq!(to_bytes(&back, 0).unwrap(), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = to_bytes(&sample(3), 0).unwrap();
        assert!(read_index(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_index(&extra[..]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_index(&bad[..]).is_err());
        let mut bad = bytes;
        bad[4] = 9;
        assert!(read_index(&bad[..]).is_err());
    }
}
