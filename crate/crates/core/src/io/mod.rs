//! Readers and writers for every on-disk format the toolkit exchanges.

pub mod features;
pub mod manifest;
pub mod masks;
pub mod raster;

pub use features::{decode_features, encode_features, read_feature_file, write_feature_file, FeatureRecord, FeatureTable};
pub use manifest::{write_manifest, Dataset, DatasetManifest, FrameEntry, SequenceEntry};
pub use masks::{read_masks, read_rgb_png, read_roi_png, write_masks, write_rgb_png, write_roi_png, MaskPaths};
pub use raster::{decode_raster, encode_raster, read_score_map, write_score_map};
