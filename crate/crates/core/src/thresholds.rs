//! Splitting thresholds read off counterfactual couples.
//!
//! Each couple `(x0, x_ce)` that moves feature `j` by more than `eps_j`
//! yields the threshold `t_j = x_ce_j + eps_j sign(x0_j - x_ce_j)`, the point
//! just inside the original side of the boundary. Thresholds are pooled per
//! feature with their multiplicity `pi_t`, and a quantile `Q` of the
//! multiplicities keeps only the most frequently hit ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::Scaler;
use crate::error::{FccaError, Result};

const GRID: f64 = 1e10;
pub const HEATMAP_BINS: usize = 20;
pub const HEATMAP_WIDTH: f64 = 0.05;

/// Integer key of `t` on the `1e-10` threshold grid.
pub fn grid_key(t: f64) -> i64 {
    (t * GRID).round() as i64
}

fn grid_value(key: i64) -> f64 {
    key as f64 / GRID
}

/// Per-feature multiset of thresholds in scaled units.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ThresholdBag {
    /// `counts[j]`: threshold grid key to multiplicity.
    counts: Vec<BTreeMap<i64, usize>>,
    pub n_couples: usize,
    /// `(couple index, feature, t)` for every kept threshold, by couple.
    pub provenance: Vec<(usize, usize, f64)>,
    /// Thresholds that landed on or outside `[0, 1]` after the shift.
    pub discarded: usize,
}

impl ThresholdBag {
    pub fn empty(n_features: usize) -> Self {
        ThresholdBag {
            counts: vec![BTreeMap::new(); n_features],
            ..Default::default()
        }
    }

    pub fn n_features(&self) -> usize {
        self.counts.len()
    }

    pub fn insert(&mut self, feature: usize, t: f64, multiplicity: usize) {
        *self.counts[feature].entry(grid_key(t)).or_default() += multiplicity;
    }

    /// `(t, pi_t)` for feature `j`, ascending in `t`.
    pub fn thresholds(&self, j: usize) -> Vec<(f64, usize)> {
        self.counts[j]
            .iter()
            .map(|(&k, &c)| (grid_value(k), c))
            .collect()
    }

    pub fn multiplicity(&self, j: usize, t: f64) -> usize {
        self.counts[j].get(&grid_key(t)).copied().unwrap_or(0)
    }

    /// Number of distinct thresholds over all features.
    pub fn n_distinct(&self) -> usize {
        self.counts.iter().map(BTreeMap::len).sum()
    }

    /// Sum of all multiplicities.
    pub fn total(&self) -> usize {
        self.counts.iter().flat_map(|m| m.values()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(BTreeMap::is_empty)
    }

    /// One multiplicity per distinct threshold, feature by feature.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.counts.iter().flat_map(|m| m.values().copied()).collect()
    }

    /// `{feature_name: [{t_scaled, t_original_units, multiplicity}]}`.
    pub fn to_json(&self, feature_names: &[String], scaler: Option<&Scaler>) -> Value {
        let mut out = Map::new();
        for (j, name) in feature_names.iter().enumerate() {
            let list: Vec<Value> = self
                .thresholds(j)
                .into_iter()
                .map(|(t, pi)| {
                    serde_json::json!({
                        "t_scaled": t,
                        "t_original_units": scaler.map(|s| s.inverse(j, t)),
                        "multiplicity": pi,
                    })
                })
                .collect();
            out.insert(name.clone(), Value::Array(list));
        }
        Value::Object(out)
    }

    /// Rebuilds a bag from [`ThresholdBag::to_json`] output. Provenance is not
    /// stored in the JSON and comes back empty.
    pub fn from_json(value: &Value, feature_names: &[String]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            t_scaled: f64,
            multiplicity: usize,
        }
        let obj = value
            .as_object()
            .ok_or_else(|| FccaError::Data("threshold JSON must be an object".into()))?;
        let mut bag = ThresholdBag::empty(feature_names.len());
        for (name, list) in obj {
            let j = feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| FccaError::Data(format!("unknown feature `{name}` in thresholds")))?;
            let entries: Vec<Entry> = serde_json::from_value(list.clone())?;
            for e in entries {
                if !(e.t_scaled > 0.0 && e.t_scaled < 1.0) || e.multiplicity == 0 {
                    return Err(FccaError::Data(format!("bad threshold entry for `{name}`")));
                }
                bag.insert(j, e.t_scaled, e.multiplicity);
            }
        }
        Ok(bag)
    }
}

/// Thresholds from `(x0, x_ce)` couples; see the module docs for the rule.
/// Moves of exactly `eps_j` or less produce nothing.
pub fn extract_thresholds(couples: &[(&[f64], &[f64])], eps: &[f64]) -> ThresholdBag {
    let m = eps.len();
    let per_couple: Vec<Vec<(usize, f64)>> = couples
        .par_iter()
        .map(|(x0, xce)| {
            (0..m)
                .filter(|&j| (x0[j] - xce[j]).abs() > eps[j])
                .map(|j| {
                    let dir = if x0[j] > xce[j] { 1.0 } else { -1.0 };
                    (j, grid_value(grid_key(xce[j] + eps[j] * dir)))
                })
                .collect()
        })
        .collect();
    let mut bag = ThresholdBag::empty(m);
    bag.n_couples = couples.len();
    for (i, ts) in per_couple.into_iter().enumerate() {
        for (j, t) in ts {
            if t <= 0.0 || t >= 1.0 {
                bag.discarded += 1;
                continue;
            }
            bag.insert(j, t, 1);
            bag.provenance.push((i, j, t));
        }
    }
    bag
}

/// Thresholds surviving the quantile filter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileSelection {
    pub q: f64,
    /// Multiplicity cut: thresholds with `pi_t >= f_q` survive.
    pub f_q: f64,
    /// Per feature, ascending.
    pub tau: Vec<Vec<f64>>,
}

impl QuantileSelection {
    /// Uses every given threshold, as if selected at `Q = 0`.
    pub fn from_thresholds(tau: Vec<Vec<f64>>) -> Self {
        let mut tau = tau;
        for t in tau.iter_mut() {
            t.sort_by(f64::total_cmp);
            t.dedup();
        }
        QuantileSelection {
            q: 0.0,
            f_q: 0.0,
            tau,
        }
    }

    pub fn n_thresholds(&self) -> usize {
        self.tau.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.tau.iter().map(Vec::len).collect()
    }
}

/// Linear-interpolation quantile of unsorted `values` (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let frac = pos - lo as f64;
    v[lo] + frac * (v[lo + 1] - v[lo])
}

/// Keeps thresholds whose multiplicity reaches the `q`-quantile of the
/// multiplicities, one sample per distinct threshold.
pub fn select_quantile(bag: &ThresholdBag, q: f64) -> Result<QuantileSelection> {
    if !(0.0..=1.0).contains(&q) {
        return Err(FccaError::Config(format!("quantile {q} outside [0, 1]")));
    }
    if bag.is_empty() {
        return Err(FccaError::Data("no thresholds extracted".into()));
    }
    let pis: Vec<f64> = bag.multiplicities().into_iter().map(|p| p as f64).collect();
    let f_q = quantile(&pis, q);
    let tau = (0..bag.n_features())
        .map(|j| {
            bag.thresholds(j)
                .into_iter()
                .filter(|&(_, pi)| pi as f64 >= f_q)
                .map(|(t, _)| t)
                .collect()
        })
        .collect();
    Ok(QuantileSelection { q, f_q, tau })
}

/// Feature by value-bin grid; a cell holds the largest level at which some
/// threshold in the bin is still selected, `None` when no threshold is.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub levels: Vec<f64>,
    pub cells: Vec<[Option<f64>; HEATMAP_BINS]>,
}

fn bin_of(t: f64) -> usize {
    ((t / HEATMAP_WIDTH).floor() as usize).min(HEATMAP_BINS - 1)
}

pub fn heatmap(bag: &ThresholdBag, levels: &[f64]) -> Result<Heatmap> {
    let cuts: Vec<(f64, f64)> = levels
        .iter()
        .map(|&q| select_quantile(bag, q).map(|s| (q, s.f_q)))
        .collect::<Result<_>>()?;
    let cells = (0..bag.n_features())
        .map(|j| {
            let mut row = [None; HEATMAP_BINS];
            for (t, pi) in bag.thresholds(j) {
                let top = cuts
                    .iter()
                    .filter(|&&(_, f)| pi as f64 >= f)
                    .map(|&(q, _)| q)
                    .fold(None, |a: Option<f64>, q| Some(a.map_or(q, |a| a.max(q))));
                if let Some(q) = top {
                    let cell: &mut Option<f64> = &mut row[bin_of(t)];
                    *cell = Some(cell.map_or(q, |c| c.max(q)));
                }
            }
            row
        })
        .collect();
    Ok(Heatmap {
        levels: levels.to_vec(),
        cells,
    })
}

impl Heatmap {
    /// Long format: `feature,bin_start,bin_end,q` with an empty `q` for
    /// empty cells.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        let mut s = String::from("feature,bin_start,bin_end,q\n");
        for (name, row) in feature_names.iter().zip(&self.cells) {
            for (b, cell) in row.iter().enumerate() {
                let lo = b as f64 * HEATMAP_WIDTH;
                let q = cell.map(|q| q.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{name},{lo:.2},{:.2},{q}", lo + HEATMAP_WIDTH);
            }
        }
        s
    }

    /// Occupied `(feature, bin)` cells.
    pub fn occupied(&self) -> BTreeSet<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| c.is_some())
                    .map(move |(b, _)| (j, b))
            })
            .collect()
    }
}

/// Cells occupied by a plain threshold list, as for a heatmap at one level.
pub fn occupied_bins(tau: &[Vec<f64>]) -> BTreeSet<(usize, usize)> {
    tau.iter()
        .enumerate()
        .flat_map(|(j, ts)| ts.iter().map(move |&t| (j, bin_of(t))))
        .collect()
}

pub fn write_bag_json(
    path: impl AsRef<Path>,
    bag: &ThresholdBag,
    feature_names: &[String],
    scaler: Option<&Scaler>,
) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&bag.to_json(feature_names, scaler))?;
    std::fs::write(path, text).map_err(|e| FccaError::io(path, e))
}

pub fn read_bag_json(path: impl AsRef<Path>, feature_names: &[String]) -> Result<ThresholdBag> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| FccaError::io(path, e))?;
    ThresholdBag::from_json(&serde_json::from_str(&text)?, feature_names)
}
