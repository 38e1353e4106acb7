//! `OODF` feature files carrying externally computed per-segment features.
//!
//! Layout: magic `OODF`, little-endian `u32` count, `u32` dim, then `count`
//! records of `u32` frameIndex, `u32` segmentId and `dim` little-endian `f32`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"OODF";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub frame_index: u32,
    pub segment_id: u32,
    pub values: Vec<f32>,
}

/// Contents of one feature file, records in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub dim: u32,
    pub records: Vec<FeatureRecord>,
}

impl FeatureTable {
    pub fn new(dim: u32, records: Vec<FeatureRecord>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimMismatch("feature dim must be at least 1".into()));
        }
        if let Some(r) = records.iter().find(|r| r.values.len() != dim as usize) {
            return Err(Error::DimMismatch(format!(
                "record ({}, {}) has {} values, expected {dim}",
                r.frame_index,
                r.segment_id,
                r.values.len()
            )));
        }
        Ok(Self { dim, records })
    }

    /// Keyed by `(frameIndex, segmentId)`; a repeated key keeps the last record.
    pub fn to_map(&self) -> BTreeMap<(u32, u32), Vec<f32>> {
        self.records
            .iter()
            .map(|r| ((r.frame_index, r.segment_id), r.values.clone()))
            .collect()
    }
}

pub fn encode_features(table: &FeatureTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + table.records.len() * (8 + table.dim as usize * 4));
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&(table.records.len() as u32).to_le_bytes());
    out.extend_from_slice(&table.dim.to_le_bytes());
    for r in &table.records {
        out.extend_from_slice(&r.frame_index.to_le_bytes());
        out.extend_from_slice(&r.segment_id.to_le_bytes());
        for v in &r.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureTable> {
    if bytes.len() < 4 || bytes[..4] != FEATURE_MAGIC {
        return Err(Error::BadMagic {
            expected: FEATURE_MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < 12 {
        return Err(Error::DimMismatch("feature header truncated".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let count = u32_at(4) as u64;
    let dim = u32_at(8);
    if dim == 0 {
        return Err(Error::DimMismatch("feature dim must be at least 1".into()));
    }
    let record_len = 8 + dim as u64 * 4;
    let payload = (bytes.len() - 12) as u64;
    if count.checked_mul(record_len) != Some(payload) {
        return Err(Error::DimMismatch(format!(
            "{count} records of dim {dim} do not fit {payload} payload bytes"
        )));
    }
    let records = bytes[12..]
        .chunks_exact(record_len as usize)
        .map(|rec| FeatureRecord {
            frame_index: u32::from_le_bytes(rec[0..4].try_into().unwrap()),
            segment_id: u32::from_le_bytes(rec[4..8].try_into().unwrap()),
            values: rec[8..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        })
        .collect();
    FeatureTable::new(dim, records)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    decode_features(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_feature_file(path: impl AsRef<Path>, table: &FeatureTable) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_features(table)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_records() {
        let t = FeatureTable::new(8, vec![]).unwrap();
        let back = decode_features(&encode_features(&t)).unwrap();
        assert!(back.to_map().is_empty());
        assert_eq!(back.dim, 8);
    }

    #[test]
    fn two_records() {
        let t = FeatureTable::new(
            3,
            vec![
                FeatureRecord { frame_index: 0, segment_id: 1, values: vec![1.0, 2.0, 3.0] },
                FeatureRecord { frame_index: 4, segment_id: 2, values: vec![0.5, 0.0, -1.0] },
            ],
        )
        .unwrap();
        let map = decode_features(&encode_features(&t)).unwrap().to_map();
        assert_eq!(map.len(), 2);
        assert_eq!(map[&(4, 2)], vec![0.5, 0.0, -1.0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(decode_features(b"OODS"), Err(Error::BadMagic { .. })));
        let t = FeatureTable::new(2, vec![FeatureRecord { frame_index: 0, segment_id: 1, values: vec![1.0, 2.0] }]).unwrap();
        let bytes = encode_features(&t);
        assert!(matches!(decode_features(&bytes[..bytes.len() - 1]), Err(Error::DimMismatch(_))));
        let mut zero_dim = bytes.clone();
        zero_dim[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_features(&zero_dim), Err(Error::DimMismatch(_))));
    }

    proptest! {
        #[test]
        fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..80)) {
            let mut b = b"OODF".to_vec();
            b.extend_from_slice(&bytes);
            let _ = decode_features(&b);
        }
    }
}
