//! Binary weight image.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                 |
//! |--------|------|---------------------------------------|
//! | 0      | 4    | magic `PPNW`                          |
//! | 4      | 4    | format version (1)                    |
//! | 8      | 4    | NPU count (2)                         |
//! | 12     | 8·k  | per NPU: row count, row stride (words) |
//! | ...    | 4·w  | raw 32-bit words, NPU1 then NPU2      |
//!
//! Each word packs eight signed 4-bit weights, nibble 0 = lowest target.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::synapse::WeightMemory;

pub const MAGIC: [u8; 4] = *b"PPNW";
pub const VERSION: u32 = 1;

/// Geometry of one NPU's region as stored in the header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionHeader {
    pub rows: u32,
    pub row_stride_words: u32,
}

/// Raw regions of an image; target counts come from the network description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightImage {
    pub regions: Vec<(RegionHeader, Vec<u32>)>,
}

impl WeightImage {
    pub fn from_memories(mems: &[&WeightMemory]) -> Self {
        let regions = mems
            .iter()
            .map(|m| {
                (
                    RegionHeader {
                        rows: m.rows() as u32,
                        row_stride_words: m.row_stride_words() as u32,
                    },
                    m.words().to_vec(),
                )
            })
            .collect();
        Self { regions }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.regions.len() as u32).to_le_bytes());
        for (h, _) in &self.regions {
            out.extend_from_slice(&h.rows.to_le_bytes());
            out.extend_from_slice(&h.row_stride_words.to_le_bytes());
        }
        for (_, words) in &self.regions {
            for w in words {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let mut take = |what: &str| -> Result<u32> {
            if cursor.len() < 4 {
                return Err(Error::WeightImage(format!(
                    "truncated while reading {what}"
                )));
            }
            let (head, rest) = cursor.split_at(4);
            cursor = rest;
            Ok(u32::from_le_bytes(head.try_into().expect("4 bytes")))
        };
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::WeightImage("bad magic".into()));
        }
        take("magic")?;
        let version = take("version")?;
        if version != VERSION {
            return Err(Error::WeightImage(format!("unsupported version {version}")));
        }
        let count = take("region count")?;
        let mut headers = Vec::new();
        for _ in 0..count {
            headers.push(RegionHeader {
                rows: take("row count")?,
                row_stride_words: take("row stride")?,
            });
        }
        let mut regions = Vec::new();
        for h in headers {
            let n = h.rows as usize * h.row_stride_words as usize;
            let words = (0..n)
                .map(|_| take("weight word"))
                .collect::<Result<Vec<_>>>()?;
            regions.push((h, words));
        }
        if !cursor.is_empty() {
            return Err(Error::WeightImage(format!(
                "{} trailing bytes",
                cursor.len()
            )));
        }
        Ok(Self { regions })
    }

    /// Rebuilds region `index` for a population with `targets` targets.
    pub fn memory(&self, index: usize, targets: usize) -> Result<WeightMemory> {
        let (h, words) = self
            .regions
            .get(index)
            .ok_or_else(|| Error::WeightImage(format!("no region for NPU {}", index + 1)))?;
        let mem = WeightMemory::from_words(h.rows as usize, targets, words.clone())?;
        if mem.row_stride_words() != h.row_stride_words as usize {
            return Err(Error::WeightImage(format!(
                "NPU {} stride {} does not fit {} targets",
                index + 1,
                h.row_stride_words,
                targets
            )));
        }
        Ok(mem)
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        let bytes = self.to_bytes();
        std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
        Ok(checksum(&bytes))
    }

    /// Reads and verifies against `expected` (hex SHA-256) when given.
    pub fn read(path: &Path, expected: Option<&str>) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if let Some(expected) = expected {
            let found = checksum(&bytes);
            if !found.eq_ignore_ascii_case(expected) {
                return Err(Error::Checksum {
                    expected: expected.to_string(),
                    found,
                });
            }
        }
        Self::from_bytes(&bytes)
    }

    pub fn total_words(&self) -> usize {
        self.regions.iter().map(|(_, w)| w.len()).sum()
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let a = WeightMemory::from_dense(1, 8, &[1, -8, 7, 0, 0, 0, 0, 0]).unwrap();
        let b = WeightMemory::zeros(2, 9);
        let bytes = WeightImage::from_memories(&[&a, &b]).to_bytes();
        assert_eq!(&bytes[..4], b"PPNW");
        assert_eq!(&bytes[4..12], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(
            &bytes[12..28],
            &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]
        );
        assert_eq!(&bytes[28..32], &[0x81, 0x07, 0, 0]);
        assert_eq!(bytes.len(), 28 + 4 * 5);
        let back = WeightImage::from_bytes(&bytes).unwrap();
        assert_eq!(back.memory(0, 8).unwrap(), a);
        assert_eq!(back.memory(1, 9).unwrap(), b);
    }

    #[test]
    fn rejects_corruption() {
        let a = WeightMemory::zeros(1, 8);
        let mut bytes = WeightImage::from_memories(&[&a]).to_bytes();
        assert!(WeightImage::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(WeightImage::from_bytes(&bytes).is_err());
        bytes[0] = b'X';
        assert!(WeightImage::from_bytes(&bytes).is_err());
    }

    #[test]
    fn checksum_is_verified() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let img = WeightImage::from_memories(&[&WeightMemory::zeros(3, 8)]);
        let sum = img.write(&path).unwrap();
        assert_eq!(WeightImage::read(&path, Some(&sum)).unwrap(), img);
        let bad = "0".repeat(64);
        assert!(matches!(
            WeightImage::read(&path, Some(&bad)),
            Err(Error::Checksum { .. })
        ));
    }
}
