//! Model files: the architecture plus every parameter tensor.
//!
//! Layout, little-endian: magic `V0XN`, u32 version, u32 length and bytes of
//! the architecture as TOML, u32 tensor count, then per tensor a u16 name
//! length, the name, a u8 rank and u64 extents; then all values as f64 in
//! directory order, and a CRC-32 of everything before it.

use std::path::Path;

use voxnet_core::model::{build, ArchConfig, Model, ParamStore};
use voxnet_core::Tensor;

use crate::config::to_toml;
use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: &[u8; 4] = b"V0XN";
pub const VERSION: u32 = 1;

pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let config = to_toml(model.config())?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(config.as_bytes());
    out.extend_from_slice(&(model.params().len() as u32).to_le_bytes());
    for (name, t) in model.params().iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.rank() as u8);
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for (_, t) in model.params().iter() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated")?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self, n: usize) -> std::result::Result<&'a str, String> {
        std::str::from_utf8(self.take(n)?).map_err(|_| "string is not UTF-8".to_string())
    }
}

pub fn decode_model(bytes: &[u8], origin: &Path) -> Result<Model> {
    let fail = |d: String| Error::format(origin, d);
    if bytes.len() < 12 {
        return Err(fail("truncated".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(fail("not a model file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(fail("checksum mismatch".into()));
    }
    let mut c = Cursor { bytes: body, at: 4 };
    let version = c.u32().map_err(fail)?;
    if version != VERSION {
        return Err(fail(format!("unsupported model version {version}")));
    }
    let config_len = c.u32().map_err(fail)? as usize;
    let config: ArchConfig = crate::config::from_toml(c.str(config_len).map_err(fail)?, origin)?;
    let count = c.u32().map_err(fail)? as usize;
    let mut directory = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = c.u16().map_err(fail)? as usize;
        let name = c.str(name_len).map_err(fail)?.to_string();
        let rank = c.u8().map_err(fail)? as usize;
        let shape = (0..rank)
            .map(|_| c.u64().map(|d| d as usize))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(fail)?;
        directory.push((name, shape));
    }
    let mut params = ParamStore::new();
    for (name, shape) in directory {
        let n: usize = shape.iter().product();
        let raw = c.take(n.checked_mul(8).ok_or("tensor too large").map_err(|e| fail(e.into()))?).map_err(fail)?;
        let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        params.insert(name, Tensor::new(shape, data)?);
    }
    if c.at != body.len() {
        return Err(fail(format!("{} trailing bytes", body.len() - c.at)));
    }
    Ok(build(&config)?.with_params(params)?)
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    fsutil::write_atomic(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    decode_model(&fsutil::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxnet_core::model::Architecture;

    #[test]
    fn round_trip_is_bit_exact() {
        for arch in Architecture::ALL {
            let mut m = build(&ArchConfig::toy(arch)).unwrap();
            m.initialize(3);
            let bytes = encode_model(&m).unwrap();
            let back = decode_model(&bytes, Path::new("m")).unwrap();
            assert_eq!(back.params(), m.params());
            assert_eq!(back.config(), m.config());
            assert_eq!(encode_model(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn corruption_rejected() {
        let mut m = build(&ArchConfig::toy(Architecture::AlexNet3d)).unwrap();
        m.initialize(1);
        let mut bytes = encode_model(&m).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(decode_model(&bytes, Path::new("m")).is_err());
        assert!(decode_model(b"V0XN", Path::new("m")).is_err());
    }
}
