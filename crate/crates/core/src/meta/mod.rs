//! Meta classification: rejecting false-positive OOD segments with an
//! L1-penalised logistic model over hand-crafted segment features.

pub mod features;
pub mod lasso;
pub mod protocol;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScoreMap, Segment};
use crate::segmentation::Mask;

pub use features::{
    extract_meta_features, label_segments_for_training, MetaFeatures, FEATURE_COUNT, FEATURE_NAMES,
};
pub use lasso::{LogisticProblem, Standardizer};
pub use protocol::{run_protocol, MetaSample, MetaSequence, Protocol, ProtocolOutcome};

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;
/// Candidate penalties searched when λ is not fixed by the caller.
pub const LAMBDA_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
pub const CV_FOLDS: usize = 5;

/// Fitted meta classifier. Weights act on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub lambda: f64,
    pub decision_threshold: f64,
}

impl MetaModel {
    pub fn standardizer(&self) -> Standardizer {
        Standardizer {
            means: self.feature_means.clone(),
            stds: self.feature_stds.clone(),
        }
    }

    /// Probability that a segment with these features is a true positive.
    pub fn probability(&self, f: &MetaFeatures) -> f64 {
        let z: f64 = self
            .standardizer()
            .apply(f.as_slice())
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum::<f64>()
            + self.intercept;
        lasso::sigmoid(z)
    }

    pub fn keeps(&self, f: &MetaFeatures) -> bool {
        self.probability(f) >= self.decision_threshold
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != FEATURE_COUNT
            || self.feature_means.len() != FEATURE_COUNT
            || self.feature_stds.len() != FEATURE_COUNT
        {
            return Err(Error::DimMismatch(format!(
                "meta model must have {FEATURE_COUNT} weights, means and stds"
            )));
        }
        if self.feature_stds.iter().any(|s| !(*s > 0.0)) || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("meta model needs positive stds and finite weights".into()));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::InvalidConfig("decision threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub decision_threshold: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            tol: lasso::DEFAULT_TOL,
            max_iter: lasso::DEFAULT_MAX_ITER,
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
        }
    }
}

fn check_samples(samples: &[(MetaFeatures, bool)]) -> Result<()> {
    let pos = samples.iter().filter(|s| s.1).count();
    if pos == 0 || pos == samples.len() {
        return Err(Error::DegenerateData(format!(
            "need both labels, got {pos} TP of {}",
            samples.len()
        )));
    }
    Ok(())
}

pub fn train_meta(samples: &[(MetaFeatures, bool)], lambda: f64) -> Result<MetaModel> {
    train_meta_with(samples, lambda, &TrainOptions::default())
}

pub fn train_meta_with(
    samples: &[(MetaFeatures, bool)],
    lambda: f64,
    opts: &TrainOptions,
) -> Result<MetaModel> {
    check_samples(samples)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| s.0.as_slice().to_vec()).collect();
    let standardizer = Standardizer::fit(&raw)?;
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1 as u8 as f64).collect();
    let problem = LogisticProblem {
        x: &x,
        y: &y,
        lambda,
    };
    let fit = lasso::fit_l1_logistic(&problem, opts.tol, opts.max_iter)?;
    Ok(MetaModel {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: fit.weights,
        intercept: fit.intercept,
        feature_means: standardizer.means,
        feature_stds: standardizer.stds,
        lambda,
        decision_threshold: opts.decision_threshold,
    })
}

/// F1 of the TP class.
fn f1(pred: &[bool], truth: &[bool]) -> f64 {
    let tp = pred.iter().zip(truth).filter(|(p, t)| **p && **t).count() as f64;
    let fp = pred.iter().zip(truth).filter(|(p, t)| **p && !**t).count() as f64;
    let fn_ = pred.iter().zip(truth).filter(|(p, t)| !**p && **t).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Picks λ from [`LAMBDA_GRID`] by cross-validated F1 (folds by index
/// modulo [`CV_FOLDS`]). Ties go to the larger λ. Folds whose training part
/// is single-class or fails to converge are skipped.
pub fn select_lambda(samples: &[(MetaFeatures, bool)], opts: &TrainOptions) -> Result<f64> {
    check_samples(samples)?;
    let mut best = (f64::NEG_INFINITY, LAMBDA_GRID[LAMBDA_GRID.len() - 1]);
    for &lambda in LAMBDA_GRID.iter().rev() {
        let mut scores = Vec::new();
        for fold in 0..CV_FOLDS {
            let (test, train): (Vec<_>, Vec<_>) = samples
                .iter()
                .enumerate()
                .partition(|(i, _)| i % CV_FOLDS == fold);
            let train: Vec<(MetaFeatures, bool)> = train.into_iter().map(|(_, s)| *s).collect();
            if test.is_empty() {
                continue;
            }
            let Ok(model) = train_meta_with(&train, lambda, opts) else {
                continue;
            };
            let pred: Vec<bool> = test.iter().map(|(_, s)| model.keeps(&s.0)).collect();
            let truth: Vec<bool> = test.iter().map(|(_, s)| s.1).collect();
            scores.push(f1(&pred, &truth));
        }
        if scores.is_empty() {
            continue;
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        if mean > best.0 {
            best = (mean, lambda);
        }
    }
    Ok(best.1)
}

/// Keeps the segments whose predicted TP probability reaches the model's
/// decision threshold. Segment ids are untouched.
pub fn apply_meta(model: &MetaModel, segs: &[Segment], score: &ScoreMap, roi: &Mask) -> Result<Vec<Segment>> {
    let mut kept = Vec::new();
    for seg in segs {
        let f = extract_meta_features(seg, score, roi)?;
        if model.keeps(&f) {
            kept.push(seg.clone());
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(v: f64) -> MetaFeatures {
        let mut a = [0.0; FEATURE_COUNT];
        a[0] = v;
        a[4] = v * 0.1;
        MetaFeatures(a)
    }

    fn zero_model(prior: f64) -> MetaModel {
        MetaModel {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights: vec![0.0; FEATURE_COUNT],
            intercept: (prior / (1.0 - prior)).ln(),
            feature_means: vec![0.0; FEATURE_COUNT],
            feature_stds: vec![1.0; FEATURE_COUNT],
            lambda: 1.0,
            decision_threshold: 0.5,
        }
    }

    #[test]
    fn zero_weight_model_follows_prior() {
        assert!(zero_model(0.9).keeps(&feats(3.0)));
        assert!(!zero_model(0.1).keeps(&feats(3.0)));
    }

    #[test]
    fn huge_lambda_gives_prior_logit() {
        let samples: Vec<_> = (0..20).map(|i| (feats(i as f64), i % 4 == 0)).collect();
        let m = train_meta(&samples, 1e3).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        let prior: f64 = 5.0 / 20.0;
        assert!((m.intercept - (prior / (1.0 - prior)).ln()).abs() < 1e-6);
    }

    #[test]
    fn separable_1d_is_learned() {
        let samples: Vec<_> = (0..20).map(|i| (feats(i as f64), i >= 10)).collect();
        let m = train_meta(&samples, 0.01).unwrap();
        assert!(samples.iter().all(|(f, y)| m.keeps(f) == *y));
    }

    #[test]
    fn single_class_is_degenerate() {
        let samples: Vec<_> = (0..5).map(|i| (feats(i as f64), true)).collect();
        assert!(matches!(train_meta(&samples, 0.1), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let m = zero_model(0.3);
        let back: MetaModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        back.validate().unwrap();
    }

    #[test]
    fn lambda_selection_returns_grid_value() {
        let samples: Vec<_> = (0..30).map(|i| (feats(i as f64), i % 3 != 0 && i > 5)).collect();
        let l = select_lambda(&samples, &TrainOptions::default()).unwrap();
        assert!(LAMBDA_GRID.contains(&l));
    }
}
