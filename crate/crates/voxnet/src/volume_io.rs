//! The VVOL volume file format.
//!
//! All integers are little-endian.
//!
//! | offset     | size  | field                                      |
//! |------------|-------|--------------------------------------------|
//! | 0          | 4     | magic `VVOL`                               |
//! | 4          | 2     | format version (1)                         |
//! | 6          | 2     | channel count C                            |
//! | 8          | 4     | depth D                                    |
//! | 12         | 4     | height H                                   |
//! | 16         | 4     | width W                                    |
//! | 20         | 1     | label: 0 AD, 1 MCI, 2 CN, 255 none         |
//! | 21         | 1     | reserved, zero                             |
//! | 22         | 2     | id length L                                |
//! | 24         | L     | id, UTF-8                                  |
//! | 24+L       | 4·N   | f32 voxels, N = C·D·H·W, `c, z, y, x` order |
//! | 24+L+4·N   | 4     | CRC-32 (IEEE) of every preceding byte      |

use std::path::Path;

use voxnet_core::volume::VolumeRecord;
use voxnet_core::Diagnosis;

use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: &[u8; 4] = b"VVOL";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;
const NO_LABEL: u8 = 255;

/// Everything before the payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeHeader {
    pub channels: usize,
    pub extents: [usize; 3],
    pub label: Option<Diagnosis>,
    pub id: String,
}

impl VolumeHeader {
    pub fn voxels(&self) -> usize {
        self.channels * self.extents.iter().product::<usize>()
    }

    fn payload_offset(&self) -> usize {
        HEADER_LEN + self.id.len()
    }

    fn file_len(&self) -> usize {
        self.payload_offset() + 4 * self.voxels() + 4
    }
}

/// Why bytes failed to decode as a volume.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("truncated: {needed} bytes needed, {found} present")]
    Truncated { needed: usize, found: usize },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("{0}")]
    Invalid(String),
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub fn encode_volume(record: &VolumeRecord) -> Result<Vec<u8>, DecodeError> {
    record.validate().map_err(|e| DecodeError::Invalid(e.to_string()))?;
    let too_big = |what: &str| DecodeError::Invalid(format!("{what} does not fit the header"));
    let channels = u16::try_from(record.channels).map_err(|_| too_big("channel count"))?;
    let id_len = u16::try_from(record.id.len()).map_err(|_| too_big("id"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + record.id.len() + 4 * record.data.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    for e in record.extents {
        out.extend_from_slice(&u32::try_from(e).map_err(|_| too_big("extent"))?.to_le_bytes());
    }
    out.push(record.label.map_or(NO_LABEL, |d| d.id() as u8));
    out.push(0);
    out.extend_from_slice(&id_len.to_le_bytes());
    out.extend_from_slice(record.id.as_bytes());
    for v in &record.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parses the header alone; `bytes` may stop anywhere after the id.
pub fn decode_header(bytes: &[u8]) -> Result<VolumeHeader, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated {
            needed: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(DecodeError::Version(version));
    }
    let label = match bytes[20] {
        NO_LABEL => None,
        b => Some(
            Diagnosis::from_id(b as usize).ok_or_else(|| DecodeError::Invalid(format!("unknown label byte {b}")))?,
        ),
    };
    let id_len = u16_at(bytes, 22) as usize;
    let id_end = HEADER_LEN + id_len;
    if bytes.len() < id_end {
        return Err(DecodeError::Truncated {
            needed: id_end,
            found: bytes.len(),
        });
    }
    let id = std::str::from_utf8(&bytes[HEADER_LEN..id_end])
        .map_err(|_| DecodeError::Invalid("id is not UTF-8".into()))?
        .to_string();
    Ok(VolumeHeader {
        channels: u16_at(bytes, 6) as usize,
        extents: [u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize, u32_at(bytes, 16) as usize],
        label,
        id,
    })
}

pub fn decode_volume(bytes: &[u8]) -> Result<VolumeRecord, DecodeError> {
    let header = decode_header(bytes)?;
    let needed = header.file_len();
    if bytes.len() < needed {
        return Err(DecodeError::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(DecodeError::Trailing(bytes.len() - needed));
    }
    let body = &bytes[..needed - 4];
    let stored = u32_at(bytes, needed - 4);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(DecodeError::Checksum { stored, computed });
    }
    let data = body[header.payload_offset()..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    VolumeRecord::new(header.id, header.channels, header.extents, data, header.label)
        .map_err(|e| DecodeError::Invalid(e.to_string()))
}

pub fn save_volume(path: &Path, record: &VolumeRecord) -> Result<()> {
    let bytes = encode_volume(record).map_err(|e| Error::format(path, e.to_string()))?;
    fsutil::write_atomic(path, &bytes)
}

pub fn load_volume(path: &Path) -> Result<VolumeRecord> {
    decode_volume(&fsutil::read(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads just enough of `path` to decode its header.
pub fn load_header(path: &Path) -> Result<VolumeHeader> {
    use std::io::Read;
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = vec![0u8; HEADER_LEN + u16::MAX as usize];
    let mut filled = 0;
    loop {
        let n = file.read(&mut buf[filled..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        filled += n;
        if filled >= HEADER_LEN && filled >= HEADER_LEN + u16_at(&buf, 22) as usize {
            break;
        }
    }
    decode_header(&buf[..filled]).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> VolumeRecord {
        let data = (0..24).map(|i| i as f32 / 24.0).collect();
        VolumeRecord::new("s1", 3, [2, 2, 2], data, Some(Diagnosis::MCI)).unwrap()
    }

    #[test]
    fn round_trip() {
        let r = record();
        assert_eq!(decode_volume(&encode_volume(&r).unwrap()).unwrap(), r);
        let unlabelled = VolumeRecord { label: None, ..r };
        assert_eq!(decode_volume(&encode_volume(&unlabelled).unwrap()).unwrap(), unlabelled);
    }

    #[test]
    fn corruption_detected() {
        let bytes = encode_volume(&record()).unwrap();
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(matches!(decode_volume(&bad), Err(DecodeError::Checksum { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_volume(&bad), Err(DecodeError::BadMagic(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_volume(&bad), Err(DecodeError::Version(9))));
        assert!(matches!(decode_volume(&bytes[..bytes.len() - 1]), Err(DecodeError::Truncated { .. })));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode_volume(&long), Err(DecodeError::Trailing(1))));
    }
}
