//! The LVT tensor container and simple text manifests.
//!
//! LVT layout, little-endian with no padding:
//!
//! ```text
//! "LVT1"            4 bytes magic
//! rank              u32
//! extents           rank x u32
//! dtype             u32 (0 = f32)
//! payload           product(extents) x f32, row-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{format_err, invalid, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"LVT1";
pub const DTYPE_F32: u32 = 0;

/// Serializes `t`. Rank-0, zero-extent and non-finite tensors are rejected.
pub fn encode_lvt(t: &Tensor) -> Result<Vec<u8>> {
    if t.rank() == 0 {
        return Err(invalid("cannot store a tensor with empty shape"));
    }
    if t.shape().contains(&0) {
        return Err(invalid(format!("cannot store zero extent in {:?}", t.shape())));
    }
    if !t.is_finite() {
        return Err(invalid("cannot store a tensor containing NaN or infinity"));
    }
    let mut out = Vec::with_capacity(12 + 4 * t.rank() + 4 * t.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &e in t.shape() {
        let e = u32::try_from(e).map_err(|_| invalid("extent exceeds u32"))?;
        out.extend_from_slice(&e.to_le_bytes());
    }
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_lvt(bytes: &[u8]) -> Result<Tensor> {
    let mut cur = bytes;
    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(format_err("truncated LVT stream"));
        }
        let (head, tail) = cur.split_at(n);
        cur = tail;
        Ok(head)
    };
    if take(4)? != MAGIC {
        return Err(format_err("bad magic, expected LVT1"));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let rank = u32_at(take(4)?) as usize;
    if rank == 0 {
        return Err(format_err("rank 0 is not a valid LVT tensor"));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(u32_at(take(4)?) as usize);
    }
    let dtype = u32_at(take(4)?);
    if dtype != DTYPE_F32 {
        return Err(format_err(format!("unsupported dtype code {dtype}")));
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| format_err("extent product overflows"))?;
    let payload = take(count.checked_mul(4).ok_or_else(|| format_err("payload too large"))?)?;
    if !cur.is_empty() {
        return Err(format_err(format!("{} trailing bytes after payload", cur.len())));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(shape, data).map_err(|e| format_err(e.to_string()))
}

pub fn write_lvt(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let bytes = encode_lvt(t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_lvt(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_lvt(&bytes)
}

/// Ordered `key = value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| format_err(format!("manifest is missing `{key}`")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?
            .parse()
            .map_err(|_| format_err(format!("manifest value for `{key}` is malformed")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format_err(format!("manifest line {} has no `=`", i + 1)))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }
}

/// A directory holding `manifest.txt` plus one `<name>.lvt` per tensor.
pub fn write_tensor_dir(
    dir: impl AsRef<Path>,
    manifest: &Manifest,
    tensors: &[(String, &Tensor)],
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.txt"), manifest.to_text())?;
    for (name, t) in tensors {
        write_lvt(dir.join(format!("{name}.lvt")), t)?;
    }
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    Manifest::parse(&fs::read_to_string(dir.as_ref().join("manifest.txt"))?)
}

pub fn read_named(dir: impl AsRef<Path>, name: &str) -> Result<Tensor> {
    read_lvt(dir.as_ref().join(format!("{name}.lvt")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_exact() {
        let t = Tensor::new(vec![2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let b = encode_lvt(&t).unwrap();
        assert_eq!(&b[..4], b"LVT1");
        assert_eq!(b.len(), 4 + 4 + 8 + 4 + 16);
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[16..20], &0u32.to_le_bytes());
        assert_eq!(&b[24..28], &1.0f32.to_le_bytes());
        assert_eq!(decode_lvt(&b).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tensors_at_write() {
        let empty = Tensor::new(vec![], vec![1.0]).unwrap();
        assert!(encode_lvt(&empty).is_err());
        let nan = Tensor::new(vec![2], vec![1.0, f32::NAN]).unwrap();
        assert!(encode_lvt(&nan).is_err());
        let zero = Tensor::new(vec![0, 3], vec![]).unwrap();
        assert!(encode_lvt(&zero).is_err());
    }

    #[test]
    fn rejects_corrupt_streams() {
        let t = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut b = encode_lvt(&t).unwrap();
        assert!(decode_lvt(&b[..b.len() - 1]).is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(decode_lvt(&extra).is_err());
        b[0] = b'X';
        assert!(matches!(decode_lvt(&b), Err(crate::Error::Format(_))));
    }

    #[test]
    fn manifest_roundtrip() {
        let mut m = Manifest::new();
        m.set("rank", 4).set("targets", "0,1,2");
        m.set("rank", 8);
        let back = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.parse_value::<usize>("rank").unwrap(), 8);
        assert!(back.require("missing").is_err());
    }
}
