//! PNG masks and frame images.
//!
//! Semantic masks are 8-bit grayscale with codes 0 = VOID, 1 = NOT_OOD,
//! 2 = OOD. Instance and class masks are 16-bit grayscale with 0 as
//! background. ROI masks are 8-bit grayscale, nonzero inside. Frame images
//! are 8-bit RGB.

use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::io::raster::read_score_map;
use crate::model::{FrameTruth, Label, RgbImage};

/// Decoded PNG raster, samples widened to `u16`.
struct Raster {
    height: u32,
    width: u32,
    color: ColorType,
    depth: BitDepth,
    samples: Vec<u16>,
}

fn png_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    buf.truncate(info.buffer_size());
    let samples = match info.bit_depth {
        BitDepth::Eight => buf.iter().map(|&b| b as u16).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
        other => return Err(png_err(path, format!("unsupported bit depth {other:?}"))),
    };
    Ok(Raster {
        height: info.height,
        width: info.width,
        color: info.color_type,
        depth: info.bit_depth,
        samples,
    })
}

fn read_png(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(path, &bytes)
}

fn encode_png(
    path: &Path,
    height: u32,
    width: u32,
    color: ColorType,
    depth: BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder.write_header().map_err(|e| png_err(path, e))?;
        writer.write_image_data(data).map_err(|e| png_err(path, e))?;
        writer.finish().map_err(|e| png_err(path, e))?;
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn expect_gray(path: &Path, r: &Raster, depth: BitDepth) -> Result<()> {
    if r.color != ColorType::Grayscale || r.depth != depth {
        return Err(png_err(
            path,
            format!(
                "expected {depth:?}-bit grayscale, found {:?} {:?}",
                r.color, r.depth
            ),
        ));
    }
    Ok(())
}

pub fn write_semantic_png(path: impl AsRef<Path>, height: u32, width: u32, labels: &[Label]) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u8> = labels.iter().map(|l| l.code()).collect();
    write_file(
        path,
        &encode_png(path, height, width, ColorType::Grayscale, BitDepth::Eight, &data)?,
    )
}

pub fn read_semantic_png(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<Label>)> {
    let path = path.as_ref();
    let r = read_png(path)?;
    expect_gray(path, &r, BitDepth::Eight)?;
    let labels = r
        .samples
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            Label::from_code(c as u8)
                .ok_or_else(|| Error::IllegalLabel(format!("semantic code {c} at pixel {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((r.height, r.width, labels))
}

pub fn write_u16_png(path: impl AsRef<Path>, height: u32, width: u32, values: &[u16]) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
    write_file(
        path,
        &encode_png(path, height, width, ColorType::Grayscale, BitDepth::Sixteen, &data)?,
    )
}

pub fn read_u16_png(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u16>)> {
    let path = path.as_ref();
    let r = read_png(path)?;
    expect_gray(path, &r, BitDepth::Sixteen)?;
    Ok((r.height, r.width, r.samples))
}

pub fn write_roi_png(path: impl AsRef<Path>, height: u32, width: u32, roi: &[bool]) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u8> = roi.iter().map(|&b| b as u8).collect();
    write_file(
        path,
        &encode_png(path, height, width, ColorType::Grayscale, BitDepth::Eight, &data)?,
    )
}

pub fn read_roi_png(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<bool>)> {
    let path = path.as_ref();
    let r = read_png(path)?;
    expect_gray(path, &r, BitDepth::Eight)?;
    Ok((r.height, r.width, r.samples.iter().map(|&v| v != 0).collect()))
}

pub fn write_rgb_png(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    write_file(
        path,
        &encode_png(
            path,
            image.height(),
            image.width(),
            ColorType::Rgb,
            BitDepth::Eight,
            image.data(),
        )?,
    )
}

pub fn read_rgb_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let r = read_png(path)?;
    if r.color != ColorType::Rgb || r.depth != BitDepth::Eight {
        return Err(png_err(path, format!("expected 8-bit RGB, found {:?} {:?}", r.color, r.depth)));
    }
    RgbImage::new(r.height, r.width, r.samples.iter().map(|&v| v as u8).collect())
}

/// Reads one frame's ground truth.
///
/// Without a class mask every OOD pixel gets class 1. Depth, when present,
/// is an `OODS` raster in meters.
pub fn read_masks(
    semantic_path: impl AsRef<Path>,
    instance_path: impl AsRef<Path>,
    class_path: Option<&Path>,
    depth_path: Option<&Path>,
) -> Result<FrameTruth> {
    let (h, w, semantic) = read_semantic_png(semantic_path)?;
    let (ih, iw, instance) = read_u16_png(instance_path)?;
    if (ih, iw) != (h, w) {
        return Err(Error::SizeMismatch(format!(
            "semantic {h}x{w} vs instance {ih}x{iw}"
        )));
    }
    let class_id = match class_path {
        Some(p) => {
            let (ch, cw, class_id) = read_u16_png(p)?;
            if (ch, cw) != (h, w) {
                return Err(Error::SizeMismatch(format!("semantic {h}x{w} vs class {ch}x{cw}")));
            }
            class_id
        }
        None => semantic.iter().map(|&l| (l == Label::Ood) as u16).collect(),
    };
    let depth = match depth_path {
        Some(p) => {
            let d = read_score_map(p)?;
            if (d.height(), d.width()) != (h, w) {
                return Err(Error::SizeMismatch(format!(
                    "semantic {h}x{w} vs depth {}x{}",
                    d.height(),
                    d.width()
                )));
            }
            Some(d.into_values())
        }
        None => None,
    };
    FrameTruth::new(h, w, semantic, instance, class_id, depth)
}

/// Paths written by [`write_masks`].
pub struct MaskPaths<'a> {
    pub semantic: &'a Path,
    pub instance: &'a Path,
    pub class: Option<&'a Path>,
    pub depth: Option<&'a Path>,
}

pub fn write_masks(paths: &MaskPaths<'_>, truth: &FrameTruth) -> Result<()> {
    let (h, w) = (truth.height(), truth.width());
    write_semantic_png(paths.semantic, h, w, truth.semantic())?;
    write_u16_png(paths.instance, h, w, truth.instance())?;
    if let Some(p) = paths.class {
        write_u16_png(p, h, w, truth.class_id())?;
    }
    if let (Some(p), Some(d)) = (paths.depth, truth.depth()) {
        crate::io::raster::write_score_map(p, &crate::model::ScoreMap::new(h, w, d.to_vec())?)?;
    }
    Ok(())
}
