//! `OODS` float rasters: score maps and depth maps.
//!
//! Layout: magic `OODS`, little-endian `u32` height, `u32` width, then
//! `height * width` little-endian `f32` values in row-major order. Nothing
//! may follow the last value.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ScoreMap;

pub const RASTER_MAGIC: [u8; 4] = *b"OODS";
const HEADER_LEN: usize = 12;

pub fn encode_raster(map: &ScoreMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + map.values().len() * 4);
    out.extend_from_slice(&RASTER_MAGIC);
    out.extend_from_slice(&map.height().to_le_bytes());
    out.extend_from_slice(&map.width().to_le_bytes());
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raster(bytes: &[u8]) -> Result<ScoreMap> {
    if bytes.len() < 4 || bytes[..4] != RASTER_MAGIC {
        return Err(Error::BadMagic {
            expected: RASTER_MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::DimMismatch(format!(
            "header truncated at {} bytes",
            bytes.len()
        )));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let expected = (height as u128) * (width as u128) * 4;
    let payload = (bytes.len() - HEADER_LEN) as u128;
    if payload != expected {
        return Err(Error::DimMismatch(format!(
            "{height}x{width} raster needs {expected} payload bytes, found {payload}"
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScoreMap::new(height, width, values)
}

pub fn read_score_map(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raster(&bytes)
}

pub fn write_score_map(path: impl AsRef<Path>, map: &ScoreMap) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_raster(map)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        let map = ScoreMap::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let bytes = encode_raster(&map);
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(decode_raster(&bytes).unwrap(), map);
    }

    #[test]
    fn truncated_after_header() {
        let map = ScoreMap::new(2, 2, vec![0.0; 4]).unwrap();
        let bytes = encode_raster(&map);
        assert!(matches!(decode_raster(&bytes[..12]), Err(Error::DimMismatch(_))));
        assert!(matches!(decode_raster(&bytes[..7]), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn rejects_bad_magic_and_nan() {
        assert!(matches!(decode_raster(b"OODF\0\0"), Err(Error::BadMagic { .. })));
        assert!(matches!(decode_raster(b""), Err(Error::BadMagic { .. })));
        let mut bytes = encode_raster(&ScoreMap::new(1, 2, vec![0.0, 1.0]).unwrap());
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_raster(&bytes), Err(Error::NonFiniteValue(1))));
    }

    #[test]
    fn zero_dims_rejected() {
        let mut bytes = b"OODS".to_vec();
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&5u32.to_le_bytes());
        assert!(matches!(decode_raster(&bytes), Err(Error::DimMismatch(_))));
    }

    proptest! {
        #[test]
        fn never_panics_on_garbage(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let _ = decode_raster(&bytes);
            let mut with_magic = b"OODS".to_vec();
            with_magic.extend_from_slice(&bytes);
            let _ = decode_raster(&with_magic);
        }
    }
}
