//! Built-in appearance descriptor for image crops.

use crate::model::RgbImage;

pub const PATCH_SIDE: usize = 16;
pub const HIST_BINS: usize = 8;
/// 16·16·3 resized values followed by 3·8 histogram bins.
pub const DESCRIPTOR_DIM: usize = PATCH_SIDE * PATCH_SIDE * 3 + 3 * HIST_BINS;

/// Bilinear sample at continuous pixel-center coordinates, clamped to the
/// image.
fn sample(img: &RgbImage, y: f64, x: f64, ch: usize) -> f64 {
    let (h, w) = (img.height() as f64, img.width() as f64);
    let y = y.clamp(0.0, h - 1.0);
    let x = x.clamp(0.0, w - 1.0);
    let (y0, x0) = (y.floor(), x.floor());
    let (y1, x1) = ((y0 + 1.0).min(h - 1.0), (x0 + 1.0).min(w - 1.0));
    let (fy, fx) = (y - y0, x - x0);
    let at = |r: f64, c: f64| img.pixel(r as u32, c as u32)[ch] as f64;
    let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
    let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Fixed-length descriptor of a patch: a 16×16 bilinear resize with each
/// channel standardized to zero mean and unit variance (all zeros for a flat
/// channel), then an 8-bin histogram per channel normalized to sum 1.
pub fn builtin_descriptor(patch: &RgbImage) -> Vec<f64> {
    let (h, w) = (patch.height() as f64, patch.width() as f64);
    let n = PATCH_SIDE * PATCH_SIDE;
    let mut resized = vec![0.0; n * 3];
    for i in 0..PATCH_SIDE {
        let y = (i as f64 + 0.5) * h / PATCH_SIDE as f64 - 0.5;
        for j in 0..PATCH_SIDE {
            let x = (j as f64 + 0.5) * w / PATCH_SIDE as f64 - 0.5;
            for ch in 0..3 {
                resized[(i * PATCH_SIDE + j) * 3 + ch] = sample(patch, y, x, ch);
            }
        }
    }
    for ch in 0..3 {
        let mean = (0..n).map(|k| resized[k * 3 + ch]).sum::<f64>() / n as f64;
        let var = (0..n).map(|k| (resized[k * 3 + ch] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for k in 0..n {
            let v = &mut resized[k * 3 + ch];
            *v = if sd > 1e-9 { (*v - mean) / sd } else { 0.0 };
        }
    }

    let mut hist = vec![0.0; 3 * HIST_BINS];
    for px in patch.data().chunks_exact(3) {
        for ch in 0..3 {
            hist[ch * HIST_BINS + px[ch] as usize * HIST_BINS / 256] += 1.0;
        }
    }
    let total = (patch.height() * patch.width()) as f64;
    hist.iter_mut().for_each(|v| *v /= total);

    resized.extend(hist);
    resized
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(h: u32, w: u32, scale: u32) -> RgbImage {
        let mut img = RgbImage::filled(h * scale, w * scale, [0, 0, 0]).unwrap();
        for r in 0..h * scale {
            for c in 0..w * scale {
                let (a, b) = (r / scale, c / scale);
                img.set_pixel(r, c, [(a * 40) as u8, (b * 30) as u8, ((a + b) * 10) as u8]);
            }
        }
        img
    }

    #[test]
    fn constant_patch() {
        let d = builtin_descriptor(&RgbImage::filled(5, 7, [10, 200, 255]).unwrap());
        assert_eq!(d.len(), DESCRIPTOR_DIM);
        assert!(d[..768].iter().all(|v| v.abs() < 1e-12));
        let hist = &d[768..];
        assert_eq!(hist[0], 1.0);
        assert_eq!(hist[8 + 6], 1.0);
        assert_eq!(hist[16 + 7], 1.0);
        assert_eq!(hist.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn scaled_copy_keeps_histogram() {
        let a = builtin_descriptor(&gradient(4, 5, 1));
        let b = builtin_descriptor(&gradient(4, 5, 3));
        for (x, y) in a[768..].iter().zip(&b[768..]) {
            assert!((x - y).abs() < 1e-6);
        }
        assert_eq!(a, builtin_descriptor(&gradient(4, 5, 1)));
    }

    #[test]
    fn single_pixel_patch() {
        let d = builtin_descriptor(&RgbImage::filled(1, 1, [1, 2, 3]).unwrap());
        assert!(d.iter().all(|v| v.is_finite()));
    }
}
