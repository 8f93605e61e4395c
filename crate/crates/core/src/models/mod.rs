//! Target classifiers: gradient-boosted trees, random forests and a linear
//! margin classifier, with label/probability/raw-score evaluation and JSON
//! persistence.
//!
//! Both ensemble kinds expose an additive raw score
//! `raw(x) = base + sum_t contribution(leaf_t(x))` whose sign gives the label
//! (ties go to class 1):
//!
//! * gradient boosting: `base = F0`, `contribution(w) = lr * w`
//! * random forest: `base = 0`, `contribution(w1) = (2 * w1 - 1) / |T|`, i.e.
//!   the averaged class-1 weight minus the averaged class-0 weight.

mod gb;
mod linear;
mod rf;
mod tree;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Scaler;
use crate::error::{FccaError, Result};

pub use gb::{train_gb, GbParams};
pub use linear::{train_linear_svm, LinearModel, LinearParams};
pub use rf::{train_rf, RfParams};
pub use tree::{Interval, LeafBox, Node, Tree};

pub const MODEL_FORMAT: &str = "fcca-model-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gb,
    Rf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub trees: Vec<Tree>,
    /// Gradient boosting only; 1.0 for forests.
    pub learning_rate: f64,
    /// Gradient boosting initial raw score (log-odds); 0.0 for forests.
    pub init_raw: f64,
    pub n_features: usize,
}

impl Ensemble {
    pub fn base(&self) -> f64 {
        match self.kind {
            EnsembleKind::Gb => self.init_raw,
            EnsembleKind::Rf => 0.0,
        }
    }

    pub fn contribution(&self, leaf_value: f64) -> f64 {
        match self.kind {
            EnsembleKind::Gb => self.learning_rate * leaf_value,
            EnsembleKind::Rf => (2.0 * leaf_value - 1.0) / self.trees.len() as f64,
        }
    }

    pub fn raw(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base(), |acc, t| acc + self.contribution(t.leaf_value(x)))
    }

    fn class1_probability(&self, x: &[f64], raw: f64) -> f64 {
        match self.kind {
            EnsembleKind::Gb => sigmoid(raw),
            EnsembleKind::Rf => {
                self.trees.iter().map(|t| t.leaf_value(x)).sum::<f64>() / self.trees.len() as f64
            }
        }
    }
}

/// Label, class-1 probability and raw decision value of one input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
    pub raw: f64,
}

impl Prediction {
    fn from_raw(raw: f64, class1_probability: f64) -> Self {
        let label = u8::from(raw >= 0.0);
        // Keep `label == 1 <=> probability >= 0.5` when rounding disagrees with the sign.
        let probability = match label {
            1 => class1_probability.max(0.5),
            _ => class1_probability.min(below_half()),
        };
        Prediction {
            label,
            probability,
            raw,
        }
    }

    /// Probability of the predicted class.
    pub fn confidence(&self) -> f64 {
        if self.label == 1 {
            self.probability
        } else {
            1.0 - self.probability
        }
    }
}

fn below_half() -> f64 {
    f64::from_bits(0.5f64.to_bits() - 1)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetModel {
    Ensemble(Ensemble),
    Linear(LinearModel),
}

impl TargetModel {
    pub fn n_features(&self) -> usize {
        match self {
            TargetModel::Ensemble(e) => e.n_features,
            TargetModel::Linear(l) => l.w.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TargetModel::Ensemble(e) if e.kind == EnsembleKind::Gb => "gb",
            TargetModel::Ensemble(_) => "rf",
            TargetModel::Linear(_) => "linear",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features() {
            return Err(FccaError::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    /// Like [`predict`](Self::predict) without the dimension check.
    pub fn predict_unchecked(&self, x: &[f64]) -> Prediction {
        match self {
            TargetModel::Ensemble(e) => {
                let raw = e.raw(x);
                Prediction::from_raw(raw, e.class1_probability(x, raw))
            }
            // The margin classifier is not calibrated; the logistic of the
            // decision value stands in for a probability.
            TargetModel::Linear(l) => {
                let raw = l.decision(x);
                Prediction::from_raw(raw, sigmoid(raw))
            }
        }
    }

    pub fn accuracy(&self, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let correct = rows
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict_unchecked(x).label == y)
            .count();
        correct as f64 / rows.len() as f64
    }
}

/// A distinct `(feature, threshold)` pair used by an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitThreshold {
    pub threshold: f64,
    /// Summed training impurity decrease over every split using this pair.
    pub gain: f64,
    pub count: usize,
}

/// Distinct split thresholds per feature, ascending within each feature.
pub fn split_thresholds(model: &Ensemble) -> BTreeMap<usize, Vec<SplitThreshold>> {
    let mut acc: BTreeMap<usize, BTreeMap<u64, SplitThreshold>> = BTreeMap::new();
    for tree in &model.trees {
        for (feature, threshold, gain) in tree.splits() {
            // Thresholds lie in (0, 1), so the bit pattern orders like the value.
            let entry = acc
                .entry(feature)
                .or_default()
                .entry(threshold.to_bits())
                .or_insert(SplitThreshold {
                    threshold,
                    gain: 0.0,
                    count: 0,
                });
            entry.gain += gain;
            entry.count += 1;
        }
    }
    acc.into_iter()
        .map(|(j, m)| {
            let mut v: Vec<SplitThreshold> = m.into_values().collect();
            v.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
            (j, v)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    nodes: Vec<Node>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init_raw: Option<f64>,
    #[serde(default)]
    trees: Vec<TreeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    n_features: usize,
    scaler: Option<Scaler>,
    feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<Vec<f64>>,
}

/// A model together with the feature metadata needed to use it standalone.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: TargetModel,
    pub scaler: Option<Scaler>,
    pub feature_names: Vec<String>,
    pub eps: Option<Vec<f64>>,
}

impl SavedModel {
    pub fn to_json(&self) -> Result<String> {
        let mut file = ModelFile {
            format: MODEL_FORMAT.into(),
            kind: self.model.kind_name().into(),
            lr: None,
            init_raw: None,
            trees: Vec::new(),
            w: None,
            b: None,
            n_features: self.model.n_features(),
            scaler: self.scaler.clone(),
            feature_names: self.feature_names.clone(),
            eps: self.eps.clone(),
        };
        match &self.model {
            TargetModel::Ensemble(e) => {
                file.lr = Some(e.learning_rate);
                file.init_raw = Some(e.init_raw);
                file.trees = e
                    .trees
                    .iter()
                    .map(|t| TreeFile {
                        nodes: t.nodes.clone(),
                    })
                    .collect();
            }
            TargetModel::Linear(l) => {
                file.w = Some(l.w.clone());
                file.b = Some(l.b);
            }
        }
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(FccaError::Model(format!(
                "unsupported model format {:?}",
                file.format
            )));
        }
        let ensemble = |kind| {
            Ok::<_, FccaError>(TargetModel::Ensemble(Ensemble {
                kind,
                trees: file
                    .trees
                    .iter()
                    .map(|t| Tree {
                        nodes: t.nodes.clone(),
                    })
                    .collect(),
                learning_rate: file.lr.unwrap_or(1.0),
                init_raw: file.init_raw.unwrap_or(0.0),
                n_features: file.n_features,
            }))
        };
        let model = match file.kind.as_str() {
            "gb" => ensemble(EnsembleKind::Gb)?,
            "rf" => ensemble(EnsembleKind::Rf)?,
            "linear" => TargetModel::Linear(LinearModel {
                w: file
                    .w
                    .clone()
                    .ok_or_else(|| FccaError::Model("linear model without weights".into()))?,
                b: file.b.unwrap_or(0.0),
            }),
            other => return Err(FccaError::Model(format!("unknown model kind {other:?}"))),
        };
        Ok(SavedModel {
            model,
            scaler: file.scaler,
            feature_names: file.feature_names,
            eps: file.eps,
        })
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|e| FccaError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| FccaError::io(path, e))?;
    SavedModel::from_json(&text)
}
