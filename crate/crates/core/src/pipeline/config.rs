use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{FccaError, Result};
use crate::models::{GbParams, LinearParams, RfParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Gb,
    Rf,
    Linear,
}

impl std::str::FromStr for TargetKind {
    type Err = FccaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gb" => Ok(TargetKind::Gb),
            "rf" => Ok(TargetKind::Rf),
            "linear" => Ok(TargetKind::Linear),
            other => Err(FccaError::Config(format!("unknown target model `{other}`"))),
        }
    }
}

/// Everything a pipeline run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub label_column: Option<String>,
    pub target: TargetKind,
    pub gb: GbParams,
    pub rf: RfParams,
    pub linear: LinearParams,
    /// Points whose predicted-class probability lies in `[p0, p1]` are queried.
    pub p0: f64,
    pub p1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub margin: f64,
    /// Use eps computed on the full dataset instead of per training fold.
    pub global_eps: bool,
    pub q: Vec<f64>,
    pub heatmap_levels: Vec<f64>,
    pub depth: usize,
    /// `None` means `10 / n_train`.
    pub lambda_reg: Option<f64>,
    pub folds: usize,
    /// Run only this fold.
    pub fold: Option<usize>,
    /// Rows beyond the cap are held out as an external test set.
    pub cap: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub gtre_prune: bool,
    /// Largest training-accuracy drop, in accuracy units, the pruning loop accepts.
    pub gtre_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::new(),
            label_column: None,
            target: TargetKind::Gb,
            gb: GbParams::default(),
            rf: RfParams::default(),
            linear: LinearParams::default(),
            p0: 0.5,
            p1: 1.0,
            lambda0: 0.1,
            lambda1: 1.0,
            lambda2: 0.0,
            margin: crate::counterfactual::DEFAULT_MARGIN,
            global_eps: false,
            q: vec![0.0],
            heatmap_levels: (0..10).map(|i| i as f64 / 10.0).collect(),
            depth: 3,
            lambda_reg: None,
            folds: 5,
            fold: None,
            cap: None,
            seed: 0,
            out: None,
            gtre_prune: false,
            gtre_tolerance: 0.01,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FccaError::Config(m));
        if !(0.5 <= self.p0 && self.p0 <= self.p1 && self.p1 <= 1.0) {
            return bad(format!("need 0.5 <= p0 <= p1 <= 1, got p0={} p1={}", self.p0, self.p1));
        }
        for (name, v) in [("lambda0", self.lambda0), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.margin > 0.0) {
            return bad("margin must be positive".into());
        }
        if self.q.is_empty() || self.q.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return bad("every Q must lie in [0, 1]".into());
        }
        if self.heatmap_levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return bad("heatmap levels must lie in [0, 1]".into());
        }
        if self.depth == 0 {
            return bad("surrogate depth must be >= 1".into());
        }
        if let Some(l) = self.lambda_reg {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("lambda_reg must be finite and non-negative".into());
            }
        }
        if self.folds < 2 {
            return bad("need at least 2 folds".into());
        }
        if let Some(f) = self.fold {
            if f >= self.folds {
                return bad(format!("fold {f} out of range for {} folds", self.folds));
            }
        }
        if !(self.gtre_tolerance >= 0.0) {
            return bad("gtre tolerance must be non-negative".into());
        }
        Ok(())
    }

    /// Applies a `key = value` config file on top of `self`.
    ///
    /// Lines are `key = value`, `# comments` and `[section]` headers; a key
    /// inside a section is looked up as `section.key`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FccaError::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            let v = v.trim().trim_matches('"');
            self.set(&key, v)
                .map_err(|e| FccaError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FccaError::io(path, e))?;
        self.apply_text(&text)?;
        // Relative dataset paths are relative to the config file.
        if self.dataset.is_relative() && !self.dataset.as_os_str().is_empty() {
            if let Some(dir) = path.parent() {
                self.dataset = dir.join(&self.dataset);
            }
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        fn flag(v: &str) -> std::result::Result<bool, String> {
            match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("expected a boolean, got `{v}`")),
            }
        }
        fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
            v.split(',').map(|s| num(s.trim())).collect()
        }
        match key {
            "data.path" | "dataset" => self.dataset = PathBuf::from(v),
            "data.label" | "label" => self.label_column = Some(v.to_string()),
            "target.kind" | "target" => self.target = v.parse().map_err(|e: FccaError| e.to_string())?,
            "target.n_estimators" => self.gb.n_estimators = num(v)?,
            "target.max_depth" => self.gb.max_depth = num(v)?,
            "target.learning_rate" => self.gb.learning_rate = num(v)?,
            "target.n_trees" => self.rf.n_trees = num(v)?,
            "target.rf_max_depth" => self.rf.max_depth = num(v)?,
            "target.max_features" => self.rf.max_features = Some(num(v)?),
            "target.c" => self.linear.c = num(v)?,
            "target.epochs" => self.linear.epochs = num(v)?,
            "counterfactual.p0" | "p0" => self.p0 = num(v)?,
            "counterfactual.p1" | "p1" => self.p1 = num(v)?,
            "counterfactual.lambda0" | "lambda0" => self.lambda0 = num(v)?,
            "counterfactual.lambda1" | "lambda1" => self.lambda1 = num(v)?,
            "counterfactual.lambda2" | "lambda2" => self.lambda2 = num(v)?,
            "counterfactual.margin" | "margin" => self.margin = num(v)?,
            "counterfactual.global_eps" => self.global_eps = flag(v)?,
            "thresholds.q" | "q" => self.q = list(v)?,
            "thresholds.heatmap_levels" => self.heatmap_levels = list(v)?,
            "surrogate.depth" | "depth" => self.depth = num(v)?,
            "surrogate.lambda_reg" => self.lambda_reg = Some(num(v)?),
            "run.folds" | "folds" => self.folds = num(v)?,
            "run.fold" => self.fold = Some(num(v)?),
            "run.cap" => self.cap = Some(num(v)?),
            "run.seed" | "seed" => self.seed = num(v)?,
            "run.out" | "out" => self.out = Some(PathBuf::from(v)),
            "gtre.prune" => self.gtre_prune = flag(v)?,
            "gtre.tolerance" => self.gtre_tolerance = num(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}
