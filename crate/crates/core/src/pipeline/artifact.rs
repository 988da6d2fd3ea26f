//! Flat binary field files: magic, `u32` LE header length, JSON header, then
//! `count × components` little-endian `f64` values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MICHFLD\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    /// Artifact name, e.g. `"stress"`.
    pub kind: String,
    pub version: u32,
    /// Number of records (vertices or tets).
    pub count: usize,
    /// Values per record.
    pub components: usize,
    /// What each record is attached to: `"vertex"` or `"tet"`.
    pub location: String,
    /// Stage-specific scalars.
    #[serde(default)]
    pub extra: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub header: FieldHeader,
    pub data: Vec<f64>,
}

impl Field {
    pub fn new(header: FieldHeader, data: Vec<f64>) -> Result<Self> {
        if data.len() != header.count * header.components {
            return Err(Error::InvalidInput(format!(
                "{} field: {} values for {} × {}",
                header.kind,
                data.len(),
                header.count,
                header.components
            )));
        }
        Ok(Self { header, data })
    }

    pub fn records(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.header.components.max(1))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let len = u32::try_from(header.len()).map_err(|_| Error::InvalidInput("field header too large".into()))?;
        let mut out = Vec::with_capacity(12 + header.len() + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&header);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], name: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse { path: name.to_string(), line: 0, msg: msg.to_string() };
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(bad("not a field artifact"));
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = bytes.get(12..12 + len).ok_or_else(|| bad("truncated header"))?;
        let header: FieldHeader = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
        let payload = &bytes[12 + len..];
        if payload.len() != 8 * header.count * header.components {
            return Err(bad("payload size does not match header"));
        }
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?, &path.display().to_string())
    }

    /// Check kind and shape before use.
    pub fn expect(self, kind: &str, count: usize, components: usize) -> Result<Self> {
        let h = &self.header;
        if h.kind != kind || h.count != count || h.components != components {
            return Err(Error::InvalidInput(format!(
                "artifact {} has kind {} with {} × {}, expected {kind} with {count} × {components}",
                h.kind, h.kind, h.count, h.components
            )));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(count: usize, components: usize) -> FieldHeader {
        FieldHeader {
            kind: "test".into(),
            version: 1,
            count,
            components,
            location: "vertex".into(),
            extra: serde_json::json!({ "scale": 0.5 }),
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(Field::from_bytes(b"hello", "x").is_err());
        let mut b = Field::new(header(1, 2), vec![1.0, 2.0]).unwrap().to_bytes().unwrap();
        b.pop();
        assert!(Field::from_bytes(&b, "x").is_err());
        assert!(Field::new(header(2, 2), vec![1.0]).is_err());
    }

    #[test]
    fn expect_checks_shape() {
        let f = Field::new(header(1, 2), vec![1.0, 2.0]).unwrap();
        assert!(f.clone().expect("test", 1, 2).is_ok());
        assert!(f.clone().expect("test", 2, 1).is_err());
        assert!(f.expect("stress", 1, 2).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(vals in proptest::collection::vec(any::<f64>(), 0..60)) {
            let n = vals.len() / 3;
            let data = vals[..3 * n].to_vec();
            let f = Field::new(header(n, 3), data.clone()).unwrap();
            let back = Field::from_bytes(&f.to_bytes().unwrap(), "mem").unwrap();
            prop_assert_eq!(&back.header, &f.header);
            prop_assert!(back.data.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
