use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fcca::counterfactual::{read_ce_csv, solve_batch, write_ce_csv, CeProblem, CeSolution, CeStatus};
use fcca::data::load_csv;
use fcca::discretize::{binarize, metrics, BinDataset};
use fcca::models::{load_model, save_model, SavedModel};
use fcca::pipeline::{
    apply_scaler, default_q_grid, fit_target, gtre_baseline, load_dataset, run_fcca, select_m, sweep_q, RunConfig,
    TargetKind,
};
use fcca::surrogate::{train_cart_bin, train_optimal, CartParams};
use fcca::thresholds::{extract_thresholds, heatmap, read_bag_json, select_quantile, write_bag_json};
use fcca::{FccaError, Result};

#[derive(Parser)]
#[command(name = "fcca", version, about = "Counterfactual thresholds, binarization and optimal surrogate trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the target model on the whole dataset and save it.
    FitTarget(Common),
    /// Solve counterfactuals for the query set of a saved model.
    Counterfactuals {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Extract thresholds from a counterfactual CSV.
    Thresholds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        counterfactuals: PathBuf,
    },
    /// Binarize a dataset with the Q-filtered thresholds.
    Discretize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
    },
    /// Train a surrogate tree on a binarized CSV.
    TrainTree {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        binarized: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Optimal)]
        method: Method,
    },
    /// Full cross-validated pipeline.
    Run(Common),
    /// Pipeline over a Q grid (default 0, 0.1, ..., 0.9).
    SweepQ(Common),
    /// Reference-ensemble threshold baseline.
    Gtre {
        #[command(flatten)]
        common: Common,
        /// Enable the lowest-gain pruning loop.
        #[arg(long)]
        prune: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Optimal,
    Cart,
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Label column name; defaults to the last column.
    #[arg(long)]
    label: Option<String>,
    /// One Q or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long = "lambda-reg")]
    lambda_reg: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Run a single fold.
    #[arg(long)]
    fold: Option<usize>,
    /// Cross-validation pool size; the remaining rows form an external test set.
    #[arg(long)]
    cap: Option<usize>,
}

impl Common {
    /// Config file first, flags on top.
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(p) = &self.config {
            c.apply_file(p)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { c.$f = v; })* };
        }
        over!(p0, p1, lambda0, lambda1, lambda2, depth, folds, seed, q);
        if let Some(d) = &self.dataset {
            c.dataset = d.clone();
        }
        if let Some(l) = &self.label {
            c.label_column = Some(l.clone());
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if let Some(t) = &self.target {
            c.target = t.parse::<TargetKind>()?;
        }
        if self.lambda_reg.is_some() {
            c.lambda_reg = self.lambda_reg;
        }
        if self.fold.is_some() {
            c.fold = self.fold;
        }
        if self.cap.is_some() {
            c.cap = self.cap;
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("fcca-out"));
    std::fs::create_dir_all(&dir).map_err(|e| FccaError::io(&dir, e))?;
    Ok(dir)
}

fn scaled_for(cfg: &RunConfig, saved: &SavedModel) -> Result<fcca::data::Dataset> {
    let raw = load_csv(&cfg.dataset, cfg.label_column.as_deref())?;
    let scaler = saved
        .scaler
        .as_ref()
        .ok_or_else(|| FccaError::Model("saved model has no scaler".into()))?;
    apply_scaler(&raw, scaler, &saved.feature_names)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FccaError::io(path, e))
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::FitTarget(common) => {
            let cfg = common.config()?;
            let ds = load_dataset(&cfg)?;
            let model = fit_target(&ds, &cfg)?;
            let dir = out_dir(&cfg)?;
            let path = dir.join("model.json");
            save_model(
                &path,
                &SavedModel {
                    model: model.clone(),
                    scaler: ds.scaler.clone(),
                    feature_names: ds.feature_names.clone(),
                    eps: Some(ds.eps.clone()),
                },
            )?;
            println!(
                "{} model, training accuracy {:.4}, saved to {}",
                model.kind_name(),
                model.accuracy(&ds.rows, &ds.labels),
                path.display()
            );
        }
        Command::Counterfactuals { common, model } => {
            let cfg = common.config()?;
            let saved = load_model(&model)?;
            let ds = scaled_for(&cfg, &saved)?;
            let eps = saved.eps.clone().unwrap_or_else(|| ds.eps.clone());
            let m = select_m(&ds, &saved.model, cfg.p0, cfg.p1)?;
            let problems = m
                .iter()
                .map(|&i| {
                    Ok(CeProblem::new(&saved.model, ds.rows[i].clone(), eps.clone())?
                        .with_costs(cfg.lambda0, cfg.lambda1, cfg.lambda2)
                        .with_margin(cfg.margin))
                })
                .collect::<Result<Vec<_>>>()?;
            let sols: Vec<CeSolution> = solve_batch(&saved.model, &problems)
                .into_iter()
                .collect::<Result<_>>()?;
            let rows: Vec<(usize, &CeSolution)> = m.iter().copied().zip(&sols).collect();
            let path = out_dir(&cfg)?.join("counterfactuals.csv");
            write_ce_csv(&path, &rows, &saved.feature_names, saved.scaler.as_ref())?;
            let ok = sols.iter().filter(|s| s.is_optimal()).count();
            println!("{} queried, {ok} optimal, written to {}", m.len(), path.display());
        }
        Command::Thresholds {
            common,
            model,
            counterfactuals,
        } => {
            let cfg = common.config()?;
            let saved = load_model(&model)?;
            let ds = scaled_for(&cfg, &saved)?;
            let eps = saved.eps.clone().unwrap_or_else(|| ds.eps.clone());
            let ces = read_ce_csv(&counterfactuals, ds.n_features())?;
            let mut couples = Vec::new();
            for (i, status, x) in &ces {
                if *status != CeStatus::Optimal {
                    continue;
                }
                let x0 = ds
                    .rows
                    .get(*i)
                    .ok_or_else(|| FccaError::Data(format!("counterfactual row {i} outside the dataset")))?;
                couples.push((x0.as_slice(), x.as_slice()));
            }
            let bag = extract_thresholds(&couples, &eps);
            let dir = out_dir(&cfg)?;
            write_bag_json(dir.join("thresholds.json"), &bag, &ds.feature_names, ds.scaler.as_ref())?;
            if !bag.is_empty() {
                write(
                    &dir.join("heatmap.csv"),
                    &heatmap(&bag, &cfg.heatmap_levels)?.to_csv(&ds.feature_names),
                )?;
            }
            println!(
                "{} distinct thresholds from {} couples ({} discarded), written to {}",
                bag.n_distinct(),
                couples.len(),
                bag.discarded,
                dir.display()
            );
        }
        Command::Discretize {
            common,
            model,
            thresholds,
        } => {
            let cfg = common.config()?;
            let saved = load_model(&model)?;
            let ds = scaled_for(&cfg, &saved)?;
            let bag = read_bag_json(&thresholds, &ds.feature_names)?;
            let q = single_q(&cfg)?;
            let sel = select_quantile(&bag, q)?;
            let bds = binarize(&ds, &sel)?;
            let path = out_dir(&cfg)?.join(format!("binarized_q{q}.csv"));
            bds.write_csv(&path)?;
            println!("{}", serde_json::to_string_pretty(&metrics(&bds))?);
            println!("written to {}", path.display());
        }
        Command::TrainTree {
            common,
            binarized,
            method,
        } => {
            let cfg = common.config()?;
            let bds = BinDataset::read_csv(&binarized)?;
            let lambda = cfg.lambda_reg.unwrap_or(10.0 / bds.n_rows().max(1) as f64);
            let tree = match method {
                Method::Optimal => train_optimal(&bds, cfg.depth, lambda)?,
                Method::Cart => train_cart_bin(
                    &bds,
                    &CartParams {
                        max_depth: cfg.depth,
                        min_leaf: 1,
                        lambda_reg: lambda,
                    },
                )?,
            };
            let dir = out_dir(&cfg)?;
            write(&dir.join("tree.json"), &serde_json::to_string_pretty(&tree.to_json())?)?;
            write(&dir.join("tree.txt"), &tree.to_text())?;
            let e = tree.evaluate_bin(&bds);
            print!("{}", tree.to_text());
            println!(
                "training accuracy {:.4}, {} leaves, {} features, objective {:.6}",
                e.accuracy, e.n_leaves, e.n_features_used, tree.objective
            );
        }
        Command::Run(common) => {
            let mut cfg = common.config()?;
            cfg.out = Some(out_dir(&cfg)?);
            let out = run_fcca(&cfg)?;
            print_summary(&out.report);
        }
        Command::SweepQ(common) => {
            let mut cfg = common.config()?;
            if common.q.is_none() && common.config.is_none() {
                cfg.q = default_q_grid();
            }
            cfg.out = Some(out_dir(&cfg)?);
            let (_, rows) = sweep_q(&cfg)?;
            println!("q,eta,delta,train_accuracy,test_accuracy");
            for r in rows {
                println!("{},{:.4},{:.4},{:.4},{:.4}", r.q, r.eta, r.delta, r.train_accuracy, r.test_accuracy);
            }
        }
        Command::Gtre { common, prune } => {
            let mut cfg = common.config()?;
            cfg.gtre_prune |= prune;
            cfg.out = Some(out_dir(&cfg)?);
            let out = gtre_baseline(&cfg)?;
            print_summary(&out.report);
            for f in &out.report.folds {
                if let Some(g) = &f.gtre {
                    println!(
                        "fold {}: {} -> {} thresholds, threshold overlap {:.3}, heatmap overlap {:.3}",
                        f.fold, g.initial_thresholds, g.kept_thresholds, g.threshold_jaccard, g.heatmap_jaccard
                    );
                }
            }
        }
    }
    Ok(())
}

fn single_q(cfg: &RunConfig) -> Result<f64> {
    match cfg.q.as_slice() {
        [q] => Ok(*q),
        _ => Err(FccaError::Config("this command takes a single --q".into())),
    }
}

fn print_summary(r: &fcca::pipeline::RunReport) {
    let a = &r.aggregate;
    println!(
        "{} on {} ({} folds): target test accuracy {:.4} +- {:.4}",
        r.mode,
        r.dataset,
        r.folds.len(),
        a.target_test.mean,
        a.target_test.std
    );
    for q in &a.per_q {
        println!(
            "  q={}: eta {:.4} delta {:.4} columns {:.1} | optimal tree train {:.4} test {:.4} | cart test {:.4}",
            q.q,
            q.eta.mean,
            q.delta.mean,
            q.n_columns.mean,
            q.optimal_train.mean,
            q.optimal_test.mean,
            q.cart_test.mean
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
