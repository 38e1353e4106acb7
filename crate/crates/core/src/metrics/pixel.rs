//! Precision-recall and ROC summaries over per-pixel scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_aligned;
use crate::model::{FrameTruth, Label, ScoreMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvePoint {
    /// Pixels with score strictly above this count as predicted OOD.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PixelEvalResult {
    pub auprc: f64,
    pub fpr95: f64,
    pub positives: u64,
    pub negatives: u64,
    /// Ordered by descending threshold.
    pub curve: Vec<CurvePoint>,
}

/// Collects `(score, is_ood)` for every non-VOID pixel.
fn labeled_scores(scores: &[ScoreMap], truths: &[FrameTruth]) -> Result<Vec<(f32, bool)>> {
    check_aligned(scores.len(), truths.len(), "score maps")?;
    let mut out = Vec::new();
    for (s, t) in scores.iter().zip(truths) {
        if (s.height(), s.width()) != (t.height(), t.width()) {
            return Err(Error::SizeMismatch(format!(
                "score {}x{} vs truth {}x{}",
                s.height(),
                s.width(),
                t.height(),
                t.width()
            )));
        }
        out.extend(
            s.values()
                .iter()
                .zip(t.semantic())
                .filter(|(_, l)| **l != Label::Void)
                .map(|(v, l)| (*v, *l == Label::Ood)),
        );
    }
    Ok(out)
}

/// AuPRC and FPR at 95% TPR over all ROI pixels of all frames.
///
/// One curve point per distinct score value, with the threshold placed
/// halfway to the next lower value. AuPRC integrates precision over recall
/// with the trapezoidal rule, starting from recall 0 at the first point's
/// precision. FPR95 is taken at the highest threshold reaching TPR ≥ 0.95.
pub fn pixel_metrics(scores: &[ScoreMap], truths: &[FrameTruth]) -> Result<PixelEvalResult> {
    let mut px = labeled_scores(scores, truths)?;
    let pos = px.iter().filter(|p| p.1).count() as u64;
    let neg = px.len() as u64 - pos;
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    if neg == 0 {
        return Err(Error::NoNegatives);
    }
    px.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut curve = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < px.len() {
        let v = px[i].0;
        while i < px.len() && px[i].0 == v {
            if px[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let threshold = match px.get(i) {
            Some(next) => (v as f64 + next.0 as f64) / 2.0,
            None => v as f64 - 1.0,
        };
        curve.push(CurvePoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / pos as f64,
            fpr: fp as f64 / neg as f64,
        });
    }

    let mut auprc = 0.0;
    let (mut r0, mut p0) = (0.0, curve[0].precision);
    for c in &curve {
        auprc += (c.recall - r0) * (c.precision + p0) / 2.0;
        r0 = c.recall;
        p0 = c.precision;
    }
    let fpr95 = curve
        .iter()
        .find(|c| c.recall >= 0.95)
        .map(|c| c.fpr)
        .expect("last point has recall 1");
    Ok(PixelEvalResult {
        auprc,
        fpr95,
        positives: pos,
        negatives: neg,
        curve,
    })
}
