//! Meta-training protocols.
//!
//! * `M1`: sequence-wise leave-one-out inside one dataset. Each sequence is
//!   predicted by a model that never saw it.
//! * `M2`: train on a second dataset, predict every sequence of the first.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta::{select_lambda, train_meta_with, MetaFeatures, MetaModel, TrainOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    M1,
    M2,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Protocol::M1),
            "M2" => Ok(Protocol::M2),
            _ => Err(Error::UnknownOp(s.to_string())),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::M1 => "M1",
            Protocol::M2 => "M2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaSample {
    pub frame_index: u32,
    pub segment_id: u32,
    pub features: MetaFeatures,
    pub is_tp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaSequence {
    pub sequence_id: String,
    pub samples: Vec<MetaSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainedFold {
    pub trained_on: Vec<String>,
    pub model: MetaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplePrediction {
    pub frame_index: u32,
    pub segment_id: u32,
    pub probability: f64,
    pub keep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SequenceOutcome {
    pub sequence_id: String,
    pub model_index: usize,
    pub predictions: Vec<SamplePrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtocolOutcome {
    pub protocol: Protocol,
    pub models: Vec<TrainedFold>,
    pub sequences: Vec<SequenceOutcome>,
}

fn fit_on(seqs: &[&MetaSequence], lambda: Option<f64>, opts: &TrainOptions) -> Result<TrainedFold> {
    let samples: Vec<(MetaFeatures, bool)> = seqs
        .iter()
        .flat_map(|s| s.samples.iter().map(|m| (m.features, m.is_tp)))
        .collect();
    let lambda = match lambda {
        Some(l) => l,
        None => select_lambda(&samples, opts)?,
    };
    Ok(TrainedFold {
        trained_on: seqs.iter().map(|s| s.sequence_id.clone()).collect(),
        model: train_meta_with(&samples, lambda, opts)?,
    })
}

fn predict(seq: &MetaSequence, model_index: usize, model: &MetaModel) -> SequenceOutcome {
    SequenceOutcome {
        sequence_id: seq.sequence_id.clone(),
        model_index,
        predictions: seq
            .samples
            .iter()
            .map(|s| {
                let probability = model.probability(&s.features);
                SamplePrediction {
                    frame_index: s.frame_index,
                    segment_id: s.segment_id,
                    probability,
                    keep: probability >= model.decision_threshold,
                }
            })
            .collect(),
    }
}

/// Runs a protocol. `lambda = None` selects λ by cross-validation on each
/// training split.
pub fn run_protocol(
    dataset_a: &[MetaSequence],
    dataset_b: Option<&[MetaSequence]>,
    protocol: Protocol,
    lambda: Option<f64>,
    opts: &TrainOptions,
) -> Result<ProtocolOutcome> {
    match protocol {
        Protocol::M1 => {
            if dataset_a.len() < 2 {
                return Err(Error::TooFewSequences {
                    needed: 2,
                    got: dataset_a.len(),
                });
            }
            let folds: Vec<TrainedFold> = (0..dataset_a.len())
                .into_par_iter()
                .map(|held| {
                    let train: Vec<&MetaSequence> = dataset_a
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != held)
                        .map(|(_, s)| s)
                        .collect();
                    fit_on(&train, lambda, opts)
                })
                .collect::<Result<_>>()?;
            let sequences = dataset_a
                .iter()
                .zip(&folds)
                .enumerate()
                .map(|(i, (seq, fold))| predict(seq, i, &fold.model))
                .collect();
            Ok(ProtocolOutcome {
                protocol,
                models: folds,
                sequences,
            })
        }
        Protocol::M2 => {
            let b = dataset_b.ok_or(Error::TooFewSequences { needed: 1, got: 0 })?;
            if b.is_empty() || dataset_a.is_empty() {
                return Err(Error::TooFewSequences {
                    needed: 1,
                    got: b.len().min(dataset_a.len()),
                });
            }
            let train: Vec<&MetaSequence> = b.iter().collect();
            let fold = fit_on(&train, lambda, opts)?;
            let sequences = dataset_a.iter().map(|s| predict(s, 0, &fold.model)).collect();
            Ok(ProtocolOutcome {
                protocol,
                models: vec![fold],
                sequences,
            })
        }
    }
}
