//! End-to-end runs: per fold, fit the target, pick the query set, solve the
//! counterfactual batch, extract and filter thresholds, binarize, train both
//! surrogates and assemble the report.

mod config;
mod report;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::counterfactual::{solve_batch, write_ce_csv, CeProblem, CeSolution, CeStatus};
use crate::data::{compute_feature_eps, load_csv, make_folds, scale_minmax, Dataset, Scaler};
use crate::discretize::{binarize, consistency_ceiling_check, metrics, BinDataset};
use crate::error::{FccaError, Result};
use crate::models::{
    save_model, split_thresholds, train_gb, train_linear_svm, train_rf, Ensemble, GbParams, LinearParams,
    Prediction, RfParams, SavedModel, TargetModel,
};
use crate::surrogate::{
    train_cart, train_cart_bin, train_optimal, tree_objective, CartParams, ColumnSource, SurrogateTree,
};
use crate::thresholds::{
    extract_thresholds, grid_key, heatmap, occupied_bins, select_quantile, write_bag_json, QuantileSelection,
    ThresholdBag,
};

pub use config::{RunConfig, TargetKind};
pub use report::{
    aggregate, Aggregate, BagReport, CeReport, ConfigEcho, DiscReport, FoldReport, FoldTimings, GtreInfo,
    QAggregate, QReport, RunReport, Stat, TargetReport, TreeReport, REPORT_FORMAT,
};

/// Tolerance for the optimal-versus-CART objective comparison.
const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Fcca,
    Gtre,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Fcca => "fcca",
            Mode::Gtre => "gtre",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub timings: Vec<FoldTimings>,
}

/// Loads the configured CSV and scales it to `[0, 1]`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if cfg.dataset.as_os_str().is_empty() {
        return Err(FccaError::Config("no dataset given".into()));
    }
    scale_minmax(&load_csv(&cfg.dataset, cfg.label_column.as_deref())?)
}

/// Scales an unscaled dataset with a stored scaler, clamping to `[0, 1]`.
/// Feature names must match the scaler's model.
pub fn apply_scaler(ds: &Dataset, scaler: &Scaler, feature_names: &[String]) -> Result<Dataset> {
    if ds.feature_names != feature_names {
        return Err(FccaError::Data(format!(
            "dataset features {:?} do not match model features {:?}",
            ds.feature_names, feature_names
        )));
    }
    let rows: Vec<Vec<f64>> = ds
        .rows
        .iter()
        .map(|r| scaler.transform_row(r).into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .collect();
    let eps = compute_feature_eps(&rows, ds.n_features());
    Ok(Dataset {
        rows,
        eps,
        scaler: Some(scaler.clone()),
        ..ds.clone()
    })
}

pub fn fit_target(train: &Dataset, cfg: &RunConfig) -> Result<TargetModel> {
    Ok(match cfg.target {
        TargetKind::Gb => TargetModel::Ensemble(fit_gb(train, cfg)?),
        TargetKind::Rf => TargetModel::Ensemble(train_rf(
            train,
            &RfParams {
                seed: cfg.seed,
                ..cfg.rf.clone()
            },
        )?),
        TargetKind::Linear => TargetModel::Linear(train_linear_svm(
            train,
            &LinearParams {
                seed: cfg.seed,
                ..cfg.linear.clone()
            },
        )?),
    })
}

fn fit_gb(train: &Dataset, cfg: &RunConfig) -> Result<Ensemble> {
    train_gb(
        train,
        &GbParams {
            seed: cfg.seed,
            ..cfg.gb.clone()
        },
    )
}

/// Correctly classified rows whose predicted-class probability lies in
/// `[p0, p1]`. An empty set is an `Infeasible` error carrying a histogram of
/// the probabilities.
pub fn select_m(ds: &Dataset, model: &TargetModel, p0: f64, p1: f64) -> Result<Vec<usize>> {
    let preds: Vec<Prediction> = ds.rows.iter().map(|x| model.predict(x)).collect::<Result<_>>()?;
    let m: Vec<usize> = preds
        .iter()
        .enumerate()
        .filter(|(i, p)| p.label == ds.labels[*i] && p0 <= p.confidence() && p.confidence() <= p1)
        .map(|(i, _)| i)
        .collect();
    if m.is_empty() {
        return Err(FccaError::Infeasible(format!(
            "no correctly classified row has predicted-class probability in [{p0}, {p1}]; {}",
            confidence_histogram(&preds, &ds.labels)
        )));
    }
    Ok(m)
}

/// Ten bins over `[0.5, 1]`, each `correct/all`.
fn confidence_histogram(preds: &[Prediction], labels: &[u8]) -> String {
    let mut all = [0usize; 10];
    let mut correct = [0usize; 10];
    for (p, &y) in preds.iter().zip(labels) {
        let b = (((p.confidence() - 0.5) / 0.05).floor().max(0.0) as usize).min(9);
        all[b] += 1;
        correct[b] += usize::from(p.label == y);
    }
    let mut s = String::from("probability histogram (correct/all):");
    for b in 0..10 {
        let lo = 0.5 + 0.05 * b as f64;
        let _ = write!(s, " [{lo:.2},{:.2}) {}/{}", lo + 0.05, correct[b], all[b]);
    }
    s
}

/// SHA-256 over `(row, status, x_ce bits)` of every solved problem, in order.
pub fn ce_batch_hash(batch: &[(usize, Option<&CeSolution>)]) -> String {
    let mut h = Sha256::new();
    for (i, sol) in batch {
        h.update((*i as u64).to_le_bytes());
        match sol {
            None => h.update([2u8]),
            Some(s) => {
                h.update([u8::from(s.status == CeStatus::Infeasible)]);
                for v in &s.x_ce {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Rows of one fold; `train` carries the resolution used for counterfactuals.
pub struct FoldData {
    pub fold: usize,
    pub train_idx: Vec<usize>,
    pub train: Dataset,
    pub test: Dataset,
    pub external: Option<Dataset>,
}

impl FoldData {
    fn new(ds: &Dataset, train_idx: Vec<usize>, test_idx: &[usize], external: &[usize], fold: usize, global_eps: bool) -> Self {
        let mut train = ds.subset(&train_idx);
        if !global_eps {
            train.eps = compute_feature_eps(&train.rows, ds.n_features());
        }
        FoldData {
            fold,
            train,
            test: ds.subset(test_idx),
            external: (!external.is_empty()).then(|| ds.subset(external)),
            train_idx,
        }
    }
}

/// Target model, query set and counterfactual batch of one fold.
pub struct CeStage {
    pub model: TargetModel,
    pub queried: Vec<usize>,
    /// Aligned with `queried`; `None` where the solver rejected the problem.
    pub solutions: Vec<Option<CeSolution>>,
    pub bag: ThresholdBag,
    pub report: CeReport,
    pub target: TargetReport,
}

fn ce_stage(fd: &FoldData, cfg: &RunConfig, t: &mut FoldTimings) -> Result<CeStage> {
    let clock = Instant::now();
    let model = fit_target(&fd.train, cfg)?;
    let target = TargetReport {
        train_accuracy: model.accuracy(&fd.train.rows, &fd.train.labels),
        test_accuracy: model.accuracy(&fd.test.rows, &fd.test.labels),
        external_accuracy: fd.external.as_ref().map(|e| model.accuracy(&e.rows, &e.labels)),
    };
    t.fit_target = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let queried = select_m(&fd.train, &model, cfg.p0, cfg.p1)?;
    t.select_m = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let problems = queried
        .iter()
        .map(|&i| {
            Ok(CeProblem::new(&model, fd.train.rows[i].clone(), fd.train.eps.clone())?
                .with_costs(cfg.lambda0, cfg.lambda1, cfg.lambda2)
                .with_margin(cfg.margin))
        })
        .collect::<Result<Vec<_>>>()?;
    let solutions: Vec<Option<CeSolution>> = solve_batch(&model, &problems)
        .into_iter()
        .zip(&queried)
        .map(|(r, &i)| {
            r.map_err(|e| log::warn!("fold {}: counterfactual for row {i} failed: {e}", fd.fold))
                .ok()
        })
        .collect();
    t.counterfactuals = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let optimal: Vec<(usize, &CeSolution)> = queried
        .iter()
        .zip(&solutions)
        .filter_map(|(&i, s)| s.as_ref().filter(|s| s.is_optimal()).map(|s| (i, s)))
        .collect();
    let couples: Vec<(&[f64], &[f64])> = optimal
        .iter()
        .map(|(i, s)| (fd.train.rows[*i].as_slice(), s.x_ce.as_slice()))
        .collect();
    let bag = extract_thresholds(&couples, &fd.train.eps);
    t.thresholds = clock.elapsed().as_secs_f64();

    let mean = |f: &dyn Fn(&CeSolution) -> f64| {
        (!optimal.is_empty()).then(|| optimal.iter().map(|(_, s)| f(s)).sum::<f64>() / optimal.len() as f64)
    };
    let hashed: Vec<(usize, Option<&CeSolution>)> =
        queried.iter().zip(&solutions).map(|(&i, s)| (i, s.as_ref())).collect();
    let report = CeReport {
        queried: queried.len(),
        optimal: optimal.len(),
        infeasible: solutions.iter().flatten().filter(|s| !s.is_optimal()).count(),
        failed: solutions.iter().filter(|s| s.is_none()).count(),
        mean_cost: mean(&|s| s.cost),
        mean_changed_features: mean(&|s| s.changed.len() as f64),
        batch_hash: ce_batch_hash(&hashed),
    };
    Ok(CeStage {
        model,
        queried,
        solutions,
        bag,
        report,
        target,
    })
}

/// Binarized folds and both surrogates for one threshold set.
pub struct SelectionOutcome {
    pub report: DiscReport,
    pub bin_train: BinDataset,
    pub bin_test: BinDataset,
    pub cart: SurrogateTree,
    pub optimal: SurrogateTree,
}

/// Binarizes train, test and external rows with the same thresholds, trains
/// CART and the optimal tree on the training side and evaluates both.
pub fn evaluate_selection(
    train: &Dataset,
    test: &Dataset,
    external: Option<&Dataset>,
    sel: &QuantileSelection,
    depth: usize,
    lambda_reg: f64,
) -> Result<SelectionOutcome> {
    let bin_train = binarize(train, sel)?;
    let bin_test = binarize(test, sel)?;
    let bin_ext = external.map(|e| binarize(e, sel)).transpose()?;
    let m_train = metrics(&bin_train);
    let m_test = metrics(&bin_test);
    let cart = train_cart_bin(
        &bin_train,
        &CartParams {
            max_depth: depth,
            min_leaf: 1,
            lambda_reg,
        },
    )?;
    let optimal = train_optimal(&bin_train, depth, lambda_reg)?;
    let eval = |t: &SurrogateTree| {
        TreeReport::new(
            t,
            t.evaluate_bin(&bin_train),
            t.evaluate_bin(&bin_test),
            bin_ext.as_ref().map(|b| t.evaluate_bin(b)),
        )
    };
    let (cart_r, opt_r) = (eval(&cart), eval(&optimal));
    let ceiling_ok = consistency_ceiling_check(&m_train, cart_r.train_accuracy)
        && consistency_ceiling_check(&m_train, opt_r.train_accuracy);
    let dominance_ok = tree_objective(&optimal, &bin_train, lambda_reg)
        <= tree_objective(&cart, &bin_train, lambda_reg) + DOMINANCE_TOL;
    if !ceiling_ok || !dominance_ok {
        log::error!("surrogate check failed: ceiling_ok={ceiling_ok} dominance_ok={dominance_ok}");
    }
    let report = DiscReport {
        n_thresholds: sel.n_thresholds(),
        thresholds_per_feature: sel.counts(),
        n_columns: m_train.n_columns,
        eta: m_train.eta,
        delta: m_train.delta,
        distinct_cells: m_train.distinct_cells,
        dropped_features: m_train.dropped_features.len(),
        test_eta: m_test.eta,
        test_delta: m_test.delta,
        cart: cart_r,
        optimal: opt_r,
        ceiling_ok,
        dominance_ok,
    };
    Ok(SelectionOutcome {
        report,
        bin_train,
        bin_test,
        cart,
        optimal,
    })
}

fn continuous_cart(fd: &FoldData, depth: usize, lambda_reg: f64) -> Result<TreeReport> {
    let tree = train_cart(
        &fd.train.rows,
        &fd.train.labels,
        ColumnSource::continuous(&fd.train.feature_names),
        &CartParams {
            max_depth: depth,
            min_leaf: 1,
            lambda_reg,
        },
    )?;
    Ok(TreeReport::new(
        &tree,
        tree.evaluate(&fd.train.rows, &fd.train.labels),
        tree.evaluate(&fd.test.rows, &fd.test.labels),
        fd.external.as_ref().map(|e| tree.evaluate(&e.rows, &e.labels)),
    ))
}

/// Split thresholds of the reference ensemble, optionally pruned: the
/// lowest-gain threshold is dropped while CART training accuracy on the
/// remaining columns stays within `tolerance` of the unpruned accuracy.
/// Returns the selection and the number of accepted pruning steps.
pub fn gtre_thresholds(
    train: &Dataset,
    gb: &Ensemble,
    prune: bool,
    tolerance: f64,
    depth: usize,
) -> Result<(QuantileSelection, usize, usize)> {
    let m = train.n_features();
    let mut all: Vec<(usize, f64, f64)> = split_thresholds(gb)
        .into_iter()
        .flat_map(|(j, v)| v.into_iter().map(move |s| (j, s.threshold, s.gain)))
        .collect();
    let initial = all.len();
    if initial == 0 {
        return Err(FccaError::Data("reference ensemble has no splits".into()));
    }
    let to_sel = |kept: &[(usize, f64, f64)]| {
        let mut tau = vec![Vec::new(); m];
        for &(j, t, _) in kept {
            tau[j].push(t);
        }
        QuantileSelection::from_thresholds(tau)
    };
    let mut steps = 0;
    if prune {
        // Pruning order: ascending gain, then feature, then threshold.
        all.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.total_cmp(&b.1)));
        let params = CartParams {
            max_depth: depth,
            ..Default::default()
        };
        let acc = |kept: &[(usize, f64, f64)]| -> Result<f64> {
            let bds = binarize(train, &to_sel(kept))?;
            Ok(train_cart_bin(&bds, &params)?.evaluate_bin(&bds).accuracy)
        };
        let base = acc(&all)?;
        while all.len() > 1 {
            if base - acc(&all[1..])? > tolerance {
                break;
            }
            all.remove(0);
            steps += 1;
        }
    }
    Ok((to_sel(&all), initial, steps))
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> (usize, f64) {
    let shared = a.intersection(b).count();
    let union = a.len() + b.len() - shared;
    (shared, if union == 0 { 1.0 } else { shared as f64 / union as f64 })
}

fn keyed(sel: &QuantileSelection) -> BTreeSet<(usize, i64)> {
    sel.tau
        .iter()
        .enumerate()
        .flat_map(|(j, ts)| ts.iter().map(move |&t| (j, grid_key(t))))
        .collect()
}

fn q_dir_name(q: f64) -> String {
    format!("q_{q}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FccaError::io(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| FccaError::io(path, e))
}

fn write_selection(dir: &Path, sel: &QuantileSelection, out: &SelectionOutcome, train: &Dataset) -> Result<()> {
    create_dir(dir)?;
    out.bin_train.write_csv(dir.join("train.csv"))?;
    out.bin_test.write_csv(dir.join("test.csv"))?;
    let tau: Vec<serde_json::Value> = sel
        .tau
        .iter()
        .enumerate()
        .map(|(j, ts)| {
            serde_json::json!({
                "feature": train.feature_names[j],
                "scaled": ts,
                "original": ts.iter().map(|&t| train.to_original(j, t)).collect::<Vec<_>>(),
            })
        })
        .collect();
    write_json(
        &dir.join("selection.json"),
        &serde_json::json!({ "q": sel.q, "f_q": sel.f_q, "thresholds": tau }),
    )?;
    for (name, tree) in [("cart", &out.cart), ("optimal", &out.optimal)] {
        write_json(&dir.join(format!("{name}.json")), &tree.to_json())?;
        write_text(&dir.join(format!("{name}.txt")), &tree.to_text())?;
    }
    Ok(())
}

fn write_ce_stage(dir: &Path, fd: &FoldData, stage: &CeStage, cfg: &RunConfig) -> Result<()> {
    let names = &fd.train.feature_names;
    save_model(
        dir.join("model.json"),
        &SavedModel {
            model: stage.model.clone(),
            scaler: fd.train.scaler.clone(),
            feature_names: names.clone(),
            eps: Some(fd.train.eps.clone()),
        },
    )?;
    let rows: Vec<(usize, &CeSolution)> = stage
        .queried
        .iter()
        .zip(&stage.solutions)
        .filter_map(|(&i, s)| s.as_ref().map(|s| (fd.train_idx[i], s)))
        .collect();
    write_ce_csv(dir.join("counterfactuals.csv"), &rows, names, fd.train.scaler.as_ref())?;
    write_bag_json(dir.join("thresholds.json"), &stage.bag, names, fd.train.scaler.as_ref())?;
    if !stage.bag.is_empty() {
        write_text(&dir.join("heatmap.csv"), &heatmap(&stage.bag, &cfg.heatmap_levels)?.to_csv(names))?;
    }
    Ok(())
}

fn run_fold(fd: &FoldData, cfg: &RunConfig, mode: Mode, out: Option<&Path>) -> Result<(FoldReport, FoldTimings)> {
    let start = Instant::now();
    let mut t = FoldTimings {
        fold: fd.fold,
        ..Default::default()
    };
    let dir = out.map(|o| o.join(format!("fold_{}", fd.fold)));
    if let Some(d) = &dir {
        create_dir(d)?;
    }
    let stage = ce_stage(fd, cfg, &mut t)?;
    if let Some(d) = &dir {
        write_ce_stage(d, fd, &stage, cfg)?;
    }
    let lambda_reg = cfg.lambda_reg.unwrap_or(10.0 / fd.train.n_rows() as f64);
    let ext = fd.external.as_ref();

    let mut per_q = Vec::new();
    let mut gtre = None;
    match mode {
        Mode::Fcca => {
            for &q in &cfg.q {
                let clock = Instant::now();
                let sel = select_quantile(&stage.bag, q)?;
                let o = evaluate_selection(&fd.train, &fd.test, ext, &sel, cfg.depth, lambda_reg)?;
                if let Some(d) = &dir {
                    write_selection(&d.join(q_dir_name(q)), &sel, &o, &fd.train)?;
                }
                per_q.push(QReport {
                    q,
                    f_q: sel.f_q,
                    result: o.report,
                });
                t.per_q.push(clock.elapsed().as_secs_f64());
            }
        }
        Mode::Gtre => {
            let clock = Instant::now();
            let gb = match (&stage.model, cfg.target) {
                (TargetModel::Ensemble(e), TargetKind::Gb) => e.clone(),
                _ => fit_gb(&fd.train, cfg)?,
            };
            let (sel, initial, steps) = gtre_thresholds(&fd.train, &gb, cfg.gtre_prune, cfg.gtre_tolerance, cfg.depth)?;
            let o = evaluate_selection(&fd.train, &fd.test, ext, &sel, cfg.depth, lambda_reg)?;
            let fcca = select_quantile(&stage.bag, 0.0)?;
            let (shared, threshold_jaccard) = jaccard(&keyed(&sel), &keyed(&fcca));
            let (_, heatmap_jaccard) = jaccard(&occupied_bins(&sel.tau), &occupied_bins(&fcca.tau));
            gtre = Some(GtreInfo {
                initial_thresholds: initial,
                kept_thresholds: sel.n_thresholds(),
                pruning_steps: steps,
                fcca_thresholds: fcca.n_thresholds(),
                shared_thresholds: shared,
                threshold_jaccard,
                heatmap_jaccard,
            });
            if let Some(d) = &dir {
                write_selection(&d.join("gtre"), &sel, &o, &fd.train)?;
            }
            per_q.push(QReport {
                q: sel.q,
                f_q: sel.f_q,
                result: o.report,
            });
            t.per_q.push(clock.elapsed().as_secs_f64());
        }
    }
    let report = FoldReport {
        fold: fd.fold,
        n_train: fd.train.n_rows(),
        n_test: fd.test.n_rows(),
        lambda_reg,
        target: stage.target,
        counterfactuals: stage.report,
        thresholds: BagReport {
            distinct: stage.bag.n_distinct(),
            total: stage.bag.total(),
            discarded: stage.bag.discarded,
        },
        cart_continuous: continuous_cart(fd, cfg.depth, lambda_reg)?,
        per_q,
        gtre,
    };
    t.total = start.elapsed().as_secs_f64();
    Ok((report, t))
}

/// Runs every configured fold of `ds` (already scaled) in parallel and
/// writes artifacts under `cfg.out` when set.
pub fn run_dataset(ds: &Dataset, cfg: &RunConfig, mode: Mode) -> Result<RunOutput> {
    cfg.validate()?;
    if ds.scaler.is_none() {
        return Err(FccaError::Data("dataset must be scaled before a run".into()));
    }
    let plan = make_folds(ds, cfg.folds, cfg.cap, cfg.seed)?;
    let folds: Vec<usize> = match cfg.fold {
        Some(f) => vec![f],
        None => (0..cfg.folds).collect(),
    };
    let out = cfg.out.as_deref();
    if let Some(o) = out {
        create_dir(o)?;
    }
    let results: Vec<(FoldReport, FoldTimings)> = folds
        .par_iter()
        .map(|&k| {
            let fd = FoldData::new(
                ds,
                plan.train_indices(k),
                &plan.test_indices(k),
                &plan.external_test,
                k,
                cfg.global_eps,
            );
            run_fold(&fd, cfg, mode, out)
        })
        .collect::<Result<_>>()?;
    let (fold_reports, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report = RunReport {
        format: REPORT_FORMAT.into(),
        mode: mode.name().into(),
        dataset: cfg
            .dataset
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        n_rows: ds.n_rows(),
        n_features: ds.n_features(),
        feature_names: ds.feature_names.clone(),
        dropped_features: ds.dropped.clone(),
        n_external: plan.external_test.len(),
        config: ConfigEcho::from(cfg),
        aggregate: aggregate(&fold_reports),
        folds: fold_reports,
    };
    let output = RunOutput { report, timings };
    if let Some(o) = out {
        write_run(o, &output)?;
    }
    Ok(output)
}

/// Writes `report.json`, `timings.json` and the CSV tables.
pub fn write_run(dir: &Path, output: &RunOutput) -> Result<()> {
    write_text(&dir.join("report.json"), &output.report.to_json())?;
    write_json(&dir.join("timings.json"), &output.timings)?;
    write_text(&dir.join("folds.csv"), &output.report.folds_csv())?;
    write_text(&dir.join("tradeoff.csv"), &output.report.tradeoff_csv())
}

pub fn run_fcca(cfg: &RunConfig) -> Result<RunOutput> {
    run_dataset(&load_dataset(cfg)?, cfg, Mode::Fcca)
}

pub fn gtre_baseline(cfg: &RunConfig) -> Result<RunOutput> {
    run_dataset(&load_dataset(cfg)?, cfg, Mode::Gtre)
}

/// Q grid `{0, 0.1, ..., 0.9}`.
pub fn default_q_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

/// One row of the accuracy / granularity tradeoff table (fold means).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TradeoffRow {
    pub q: f64,
    pub eta: f64,
    pub delta: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// A run over every Q in `cfg.q`, reusing one counterfactual batch per fold.
pub fn sweep_q(cfg: &RunConfig) -> Result<(RunOutput, Vec<TradeoffRow>)> {
    let output = run_fcca(cfg)?;
    let rows = tradeoff(&output.report);
    Ok((output, rows))
}

pub fn tradeoff(report: &RunReport) -> Vec<TradeoffRow> {
    report
        .aggregate
        .per_q
        .iter()
        .map(|a| TradeoffRow {
            q: a.q,
            eta: a.eta.mean,
            delta: a.delta.mean,
            train_accuracy: a.optimal_train.mean,
            test_accuracy: a.optimal_test.mean,
        })
        .collect()
}
