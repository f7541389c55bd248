//! Binary embedding sidecar.
//!
//! Layout, all little-endian: `"EMBF"`, `u32` dim, then repeated entries of
//! (`u32` byte length, UTF-8 id, `dim` × `f32`).

use std::collections::HashMap;
use std::io::{self, Read, Write};

use crate::{HvdError, Result};

pub const MAGIC: &[u8; 4] = b"EMBF";

pub struct SidecarWriter<W> {
    out: W,
    dim: usize,
}

impl<W: Write> SidecarWriter<W> {
    pub fn new(mut out: W, dim: usize) -> Result<Self> {
        let d = u32::try_from(dim).map_err(|_| HvdError::Data(format!("dimension {dim} too large")))?;
        out.write_all(MAGIC)?;
        out.write_all(&d.to_le_bytes())?;
        Ok(Self { out, dim })
    }

    pub fn write(&mut self, id: &str, v: &[f32]) -> Result<()> {
        if v.len() != self.dim {
            return Err(HvdError::Data(format!(
                "embedding for {id:?} has {} values, sidecar dimension is {}",
                v.len(),
                self.dim
            )));
        }
        write_str(&mut self.out, id)?;
        let mut bytes = Vec::with_capacity(4 * v.len());
        for x in v {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        self.out.write_all(&bytes)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streams `(id, embedding)` entries.
pub struct SidecarReader<R> {
    input: R,
    dim: usize,
    buf: Vec<u8>,
}

impl<R: Read> SidecarReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut head = [0u8; 8];
        input
            .read_exact(&mut head)
            .map_err(|_| HvdError::Format("embedding sidecar truncated header".into()))?;
        if &head[..4] != MAGIC {
            return Err(HvdError::Format("embedding sidecar: bad magic".into()));
        }
        let dim = u32::from_le_bytes(head[4..].try_into().expect("4 bytes")) as usize;
        if dim == 0 {
            return Err(HvdError::Format("embedding sidecar: zero dimension".into()));
        }
        Ok(Self {
            input,
            dim,
            buf: vec![0; 4 * dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn read_entry(&mut self) -> Result<Option<(String, Vec<f32>)>> {
        let mut len = [0u8; 4];
        if !read_exact_or_eof(&mut self.input, &mut len)? { return Ok(None) }
        let len = u32::from_le_bytes(len) as usize;
        let mut id = vec![0u8; len];
        self.input.read_exact(&mut id).map_err(truncated)?;
        let id = String::from_utf8(id).map_err(|_| HvdError::Format("embedding sidecar: id is not UTF-8".into()))?;
        self.input.read_exact(&mut self.buf).map_err(truncated)?;
        let v = self
            .buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Some((id, v)))
    }
}

impl<R: Read> Iterator for SidecarReader<R> {
    type Item = Result<(String, Vec<f32>)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_entry().transpose()
    }
}

fn truncated(_: io::Error) -> HvdError {
    HvdError::Format("embedding sidecar truncated entry".into())
}

/// Reads a full buffer, or returns `false` on a clean end of stream.
fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => return Err(HvdError::Format("embedding sidecar truncated entry".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let len = u32::try_from(s.len()).map_err(|_| HvdError::Data("string too long".into()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

/// Whole-file load. Repeated ids keep every entry in file order.
pub fn load<R: Read>(input: R) -> Result<(usize, HashMap<String, Vec<Vec<f32>>>)> {
    let reader = SidecarReader::new(input)?;
    let dim = reader.dim();
    let mut map: HashMap<String, Vec<Vec<f32>>> = HashMap::new();
    for entry in reader {
        let (id, v) = entry?;
        map.entry(id).or_default().push(v);
    }
    Ok((dim, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut w = SidecarWriter::new(Vec::new(), 3).unwrap();
        w.write("a", &[1.0, -0.0, f32::MIN_POSITIVE]).unwrap();
        w.write("ünï", &[0.1, 0.2, 0.3]).unwrap();
        w.write("a", &[4.0, 5.0, 6.0]).unwrap();
        assert!(w.write("b", &[1.0]).is_err());
        let bytes = w.finish().unwrap();
        assert_eq!(&bytes[..4], b"EMBF");
        assert_eq!(bytes.len(), 8 + (4 + 1 + 12) + (4 + 5 + 12) + (4 + 1 + 12));

        let entries: Vec<_> = SidecarReader::new(&bytes[..]).unwrap().map(|e| e.unwrap()).collect();
        assert_eq!(entries[0].0, "a");
        assert_eq!(entries[0].1[1].to_bits(), (-0.0f32).to_bits());
        assert_eq!(entries[1].1, vec![0.1, 0.2, 0.3]);
        let (dim, map) = load(&bytes[..]).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(map["a"].len(), 2);
    }

    #[test]
    fn corrupt_input() {
        assert!(SidecarReader::new(&b"EMB"[..]).is_err());
        assert!(SidecarReader::new(&b"XXXX\x01\0\0\0"[..]).is_err());
        let mut w = SidecarWriter::new(Vec::new(), 2).unwrap();
        w.write("id", &[1.0, 2.0]).unwrap();
        let mut bytes = w.finish().unwrap();
        bytes.pop();
        let r: Vec<_> = SidecarReader::new(&bytes[..]).unwrap().collect();
        assert!(r[0].is_err());
    }

    #[test]
    fn empty_sidecar() {
        let bytes = SidecarWriter::new(Vec::new(), 5).unwrap().finish().unwrap();
        assert_eq!(SidecarReader::new(&bytes[..]).unwrap().count(), 0);
    }
}
