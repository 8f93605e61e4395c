//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use fcca::counterfactual::{brute_force_oracle, solve, CeProblem, CeSolution};
use fcca::data::{compute_feature_eps, load_csv, make_folds, scale_minmax, synthetic, Dataset};
use fcca::discretize::{cell_majority_accuracy, BinColumn, BinDataset};
use fcca::models::{
    train_gb, Ensemble, EnsembleKind, GbParams, LinearModel, Node, RfParams, TargetModel, Tree,
};
use fcca::pipeline::{default_q_grid, fit_target, run_dataset, select_m, Mode, RunConfig, RunReport, TargetKind};
use fcca::surrogate::{objective, train_optimal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ionosphere_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ionosphere.csv")
}

fn ionosphere() -> Dataset {
    scale_minmax(&load_csv(ionosphere_path(), None).expect("ionosphere loads")).expect("scales")
}

fn blobs() -> Dataset {
    scale_minmax(&synthetic::gaussian_blobs(240, 4, 1.5, 3)).unwrap()
}

fn rules() -> Dataset {
    scale_minmax(&synthetic::axis_rules(240, 5, 0.05, 4)).unwrap()
}

fn datasets() -> Vec<(&'static str, Dataset)> {
    vec![("ionosphere", ionosphere()), ("axis_rules", rules()), ("gaussian_blobs", blobs())]
}

fn small_rf() -> RfParams {
    RfParams {
        n_trees: 10,
        max_depth: 3,
        ..RfParams::default()
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- criterion 1

fn check_solution(model: &TargetModel, prob: &CeProblem, s: &CeSolution) -> Result<(), String> {
    let p = model.predict(&s.x_ce).map_err(|e| e.to_string())?;
    ensure(p.label == prob.y_ce, || format!("label {} != target {}", p.label, prob.y_ce))?;
    let dir = if prob.y_ce == 1 { 1.0 } else { -1.0 };
    ensure(dir * p.raw >= prob.margin, || format!("margin slack {} < {}", dir * p.raw, prob.margin))?;
    for j in 0..s.x_ce.len() {
        ensure(prob.lower[j] <= s.x_ce[j] && s.x_ce[j] <= prob.upper[j], || format!("feature {j} leaves the box"))?;
    }
    let cost: f64 = (0..s.x_ce.len())
        .map(|j| {
            let d = (s.x_ce[j] - prob.x0[j]).abs();
            if d == 0.0 {
                0.0
            } else {
                prob.lambda0 + prob.lambda1 * d + prob.lambda2 * d * d
            }
        })
        .sum();
    ensure((cost - s.cost).abs() <= 1e-12, || format!("reported cost {} != {}", s.cost, cost))
}

fn ce_validity() -> Outcome {
    let mut checked = 0usize;
    let mut infeasible = 0usize;
    for (name, ds) in datasets() {
        for kind in [TargetKind::Gb, TargetKind::Rf, TargetKind::Linear] {
            for seed in [0u64, 1] {
                let cfg = RunConfig {
                    target: kind,
                    rf: small_rf(),
                    seed,
                    ..RunConfig::default()
                };
                let plan = make_folds(&ds, 3, None, seed).map_err(|e| e.to_string())?;
                for fold in 0..3 {
                    let mut train = ds.subset(&plan.train_indices(fold));
                    train.eps = compute_feature_eps(&train.rows, train.n_features());
                    let model = fit_target(&train, &cfg).map_err(|e| e.to_string())?;
                    let m_set = select_m(&train, &model, cfg.p0, cfg.p1).map_err(|e| e.to_string())?;
                    for &i in &m_set {
                        let prob = CeProblem::new(&model, train.rows[i].clone(), train.eps.clone())
                            .map_err(|e| e.to_string())?
                            .with_costs(cfg.lambda0, cfg.lambda1, cfg.lambda2);
                        let s = solve(&model, &prob).map_err(|e| e.to_string())?;
                        if !s.is_optimal() {
                            infeasible += 1;
                            continue;
                        }
                        check_solution(&model, &prob, &s)
                            .map_err(|e| format!("{name} {kind:?} seed {seed} fold {fold} row {i}: {e}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} optimal counterfactuals valid ({infeasible} infeasible)"))
}

// ---------------------------------------------------------------- criterion 2

fn random_stump(rng: &mut ChaCha8Rng, m: usize) -> Tree {
    let t = (rng.gen_range(5..95) as f64) / 100.0;
    Tree {
        nodes: vec![
            Node::Split {
                feature: rng.gen_range(0..m),
                threshold: t,
                left: 1,
                right: 2,
                gain: 1.0,
            },
            Node::Leaf {
                value: rng.gen_range(-2.0..2.0),
            },
            Node::Leaf {
                value: rng.gen_range(-2.0..2.0),
            },
        ],
    }
}

fn random_depth2(rng: &mut ChaCha8Rng, m: usize) -> Tree {
    let split = |rng: &mut ChaCha8Rng, left, right| Node::Split {
        feature: rng.gen_range(0..m),
        threshold: rng.gen_range(5..95) as f64 / 100.0,
        left,
        right,
        gain: 1.0,
    };
    let root = split(rng, 1, 4);
    let l = split(rng, 2, 3);
    let r = split(rng, 5, 6);
    let leaf = |rng: &mut ChaCha8Rng| Node::Leaf { value: rng.gen::<f64>() };
    Tree {
        nodes: vec![root, l, leaf(rng), leaf(rng), r, leaf(rng), leaf(rng)],
    }
}

fn random_problem(rng: &mut ChaCha8Rng, model: &TargetModel, m: usize) -> CeProblem {
    let x0: Vec<f64> = (0..m).map(|_| rng.gen_range(0..=1000) as f64 / 1000.0).collect();
    let eps = (0..m).map(|_| rng.gen_range(0.002..0.05)).collect();
    let mut p = CeProblem::new(model, x0.clone(), eps)
        .unwrap()
        .with_costs(rng.gen_range(0.0..0.3), rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0));
    if rng.gen_bool(0.3) {
        let lo = x0.iter().map(|&v| v * rng.gen::<f64>()).collect();
        let hi = x0.iter().map(|&v| v + (1.0 - v) * rng.gen::<f64>()).collect();
        p = p.with_box(lo, hi);
    }
    if rng.gen_bool(0.3) {
        p = p.with_immutable((0..m).map(|_| rng.gen_bool(0.3)).collect());
    }
    p
}

/// Exhaustive search over the routing cells of every feature. Inside a cell
/// the model is constant and the cost is minimized by the admissible point
/// nearest `x0_j`, which must clear the cell's splits by `eps_j`.
fn cell_oracle(model: &Ensemble, prob: &CeProblem) -> Option<f64> {
    let m = prob.x0.len();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let x0 = prob.x0[j];
        let mut axis = vec![x0];
        if !prob.immutable[j] {
            let mut s: Vec<f64> = model
                .trees
                .iter()
                .flat_map(|t| t.nodes.iter())
                .filter_map(|n| match *n {
                    Node::Split { feature, threshold, .. } if feature == j => Some(threshold),
                    _ => None,
                })
                .collect();
            s.sort_by(f64::total_cmp);
            s.dedup();
            let e = prob.eps[j];
            for k in 0..=s.len() {
                let lo = if k == 0 { f64::NEG_INFINITY } else { s[k - 1] + e };
                let hi = if k == s.len() { f64::INFINITY } else { s[k] - e };
                let (lo, hi) = (lo.max(prob.lower[j]), hi.min(prob.upper[j]));
                if lo - 1e-12 <= hi {
                    axis.push(x0.clamp(lo, hi.max(lo)));
                }
            }
        }
        axes.push(axis);
    }
    let dir = if prob.y_ce == 1 { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    let mut idx = vec![0usize; m];
    loop {
        let x: Vec<f64> = idx.iter().enumerate().map(|(j, &k)| axes[j][k]).collect();
        if dir * model.raw(&x) >= prob.margin {
            let c = prob.cost_of(&x);
            if best.map_or(true, |b| c < b) {
                best = Some(c);
            }
        }
        let mut j = 0;
        while j < m {
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            return best;
        }
    }
}

fn ce_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut n = 0;
    let mut feasible = 0;
    for case in 0..240 {
        let m = rng.gen_range(1..=3);
        let ens = if case % 3 == 2 {
            let trees = (0..rng.gen_range(1..=3)).map(|_| random_depth2(&mut rng, m)).collect();
            Ensemble {
                kind: EnsembleKind::Rf,
                trees,
                learning_rate: 1.0,
                init_raw: 0.0,
                n_features: m,
            }
        } else {
            let trees = (0..rng.gen_range(1..=10)).map(|_| random_stump(&mut rng, m)).collect();
            Ensemble {
                kind: EnsembleKind::Gb,
                trees,
                learning_rate: rng.gen_range(0.1..1.0),
                init_raw: rng.gen_range(-1.0..1.0),
                n_features: m,
            }
        };
        let model = TargetModel::Ensemble(ens.clone());
        let prob = random_problem(&mut rng, &model, m);
        let got = solve(&model, &prob).map_err(|e| e.to_string())?;
        let oracle = brute_force_oracle(&model, &prob, 0).map_err(|e| e.to_string())?;
        let cells = cell_oracle(&ens, &prob);
        ensure(got.status == oracle.status, || format!("case {case}: status {:?} vs oracle {:?}", got.status, oracle.status))?;
        ensure(got.is_optimal() == cells.is_some(), || format!("case {case}: status disagrees with cell search"))?;
        if got.is_optimal() {
            check_solution(&model, &prob, &got).map_err(|e| format!("case {case}: {e}"))?;
            let c = cells.unwrap();
            ensure((got.cost - oracle.cost).abs() <= 1e-9 && (got.cost - c).abs() <= 1e-9, || {
                format!("case {case}: cost {} vs oracle {} vs cells {c}", got.cost, oracle.cost)
            })?;
            feasible += 1;
        }
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{n} instances ({feasible} feasible) match both oracles in {secs:.2} s"))
}

// ---------------------------------------------------------------- criterion 3

/// Random `(w, b, x0)` with boxes and immutables. Under the default weights
/// (no quadratic term) the grid oracle with axis completion is exact, so the
/// solver must match it from both sides. With a quadratic term the optimum
/// can move several features by off-grid amounts and the oracle is only an
/// upper bound.
fn linear_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut feasible = 0;
    let mut quad = 0;
    let mut case = 0;
    while feasible < 100 || quad < 50 {
        case += 1;
        ensure(case < 5000, || "too few feasible instances".into())?;
        let quadratic = case % 2 == 0;
        let m = rng.gen_range(1..=2);
        let lin = LinearModel {
            w: (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            b: rng.gen_range(-1.0..1.0),
        };
        let model = TargetModel::Linear(lin);
        let mut prob = random_problem(&mut rng, &model, m);
        if !quadratic {
            prob = prob.with_costs(0.1, 1.0, 0.0);
        }
        let got = solve(&model, &prob).map_err(|e| e.to_string())?;
        let oracle = brute_force_oracle(&model, &prob, 1000).map_err(|e| e.to_string())?;
        ensure(got.status == oracle.status, || format!("case {case}: status {:?} vs oracle {:?}", got.status, oracle.status))?;
        if got.is_optimal() {
            check_solution(&model, &prob, &got).map_err(|e| format!("case {case}: {e}"))?;
            let floor = if quadratic { f64::NEG_INFINITY } else { oracle.cost - 1e-9 };
            ensure(got.cost <= oracle.cost + 2e-3 && got.cost >= floor, || {
                format!("case {case}: cost {} vs oracle {}", got.cost, oracle.cost)
            })?;
            if quadratic {
                quad += 1;
            } else {
                worst = worst.max((got.cost - oracle.cost).abs());
                feasible += 1;
            }
        }
    }
    Ok(format!(
        "{case} instances; {feasible} feasible default-weight ones within {worst:.2e} of the oracle, {quad} quadratic-weight ones at most 2e-3 above it"
    ))
}

// ---------------------------------------------------------------- criterion 4

fn gb_accuracy() -> Outcome {
    let ds = ionosphere();
    let plan = make_folds(&ds, 5, None, 0).map_err(|e| e.to_string())?;
    let mut accs = Vec::new();
    for k in 0..5 {
        let train = ds.subset(&plan.train_indices(k));
        let test = ds.subset(&plan.test_indices(k));
        let gb = train_gb(&train, &GbParams::default()).map_err(|e| e.to_string())?;
        let correct = test
            .rows
            .iter()
            .zip(&test.labels)
            .filter(|(x, &y)| u8::from(gb.raw(x) >= 0.0) == y)
            .count();
        accs.push(100.0 * correct as f64 / test.n_rows() as f64);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    ensure((88.46..=94.46).contains(&mean), || format!("mean accuracy {mean:.2}% outside [88.46, 94.46]"))?;
    Ok(format!("5-fold accuracy {mean:.2}%"))
}

// ------------------------------------------------------------ shared Q sweeps

struct Sweep {
    name: &'static str,
    report: RunReport,
    /// Per fold and Q: the binarized training set written by the run.
    train_bins: Vec<Vec<BinDataset>>,
}

fn sweeps() -> Vec<Sweep> {
    datasets()
        .into_iter()
        .map(|(name, ds)| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = RunConfig {
                q: default_q_grid(),
                folds: 3,
                out: Some(dir.path().to_path_buf()),
                ..RunConfig::default()
            };
            let report = run_dataset(&ds, &cfg, Mode::Fcca).expect("sweep runs").report;
            let train_bins = report
                .folds
                .iter()
                .map(|f| {
                    f.per_q
                        .iter()
                        .map(|q| {
                            let p = dir.path().join(format!("fold_{}", f.fold)).join(format!("q_{}", q.q)).join("train.csv");
                            BinDataset::read_csv(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
                        })
                        .collect()
                })
                .collect();
            Sweep { name, report, train_bins }
        })
        .collect()
}

// ---------------------------------------------------------------- criterion 5

fn monotone(sweeps: &[Sweep]) -> Outcome {
    let mut series = 0;
    for s in sweeps {
        for f in &s.report.folds {
            for w in f.per_q.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                ensure(a.q < b.q, || "Q grid not ascending".into())?;
                ensure(b.result.eta >= a.result.eta, || {
                    format!("{} fold {}: eta {} at Q={} drops to {} at Q={}", s.name, f.fold, a.result.eta, a.q, b.result.eta, b.q)
                })?;
                ensure(b.result.delta >= a.result.delta, || {
                    format!("{} fold {}: delta {} at Q={} drops to {} at Q={}", s.name, f.fold, a.result.delta, a.q, b.result.delta, b.q)
                })?;
            }
            ensure(f.per_q.len() == 10, || "expected 10 Q values".into())?;
            series += 1;
        }
    }
    Ok(format!("eta and delta non-decreasing on {series} fold series over Q = 0..0.9"))
}

// ---------------------------------------------------------------- criterion 6

/// Share of rows matching their pattern's majority label, counted directly.
fn majority_share(bds: &BinDataset) -> f64 {
    let mut counts: BTreeMap<Vec<u8>, [usize; 2]> = BTreeMap::new();
    for (r, &y) in bds.rows.iter().zip(&bds.labels) {
        counts.entry(r.clone()).or_default()[y as usize] += 1;
    }
    counts.values().map(|c| c[0].max(c[1])).sum::<usize>() as f64 / bds.rows.len() as f64
}

fn ceiling(sweeps: &[Sweep]) -> Outcome {
    let mut trees = 0;
    for s in sweeps {
        for (f, bins) in s.report.folds.iter().zip(&s.train_bins) {
            for (q, bds) in f.per_q.iter().zip(bins) {
                let r = &q.result;
                let ceil = 1.0 - r.delta;
                let ctx = || format!("{} fold {} Q={}", s.name, f.fold, q.q);
                ensure(r.ceiling_ok, || format!("{}: ceiling flag false", ctx()))?;
                for (label, t) in [("cart", &r.cart), ("optimal", &r.optimal)] {
                    ensure(t.train_accuracy <= ceil + 1e-12, || {
                        format!("{}: {label} train accuracy {} above 1 - delta = {ceil}", ctx(), t.train_accuracy)
                    })?;
                    trees += 1;
                }
                let direct = majority_share(bds);
                ensure((direct - ceil).abs() <= 1e-12, || format!("{}: cell majority {direct} != 1 - delta {ceil}", ctx()))?;
                let lib = cell_majority_accuracy(bds);
                ensure((lib - ceil).abs() <= 1e-12, || format!("{}: library cell majority {lib} != {ceil}", ctx()))?;
            }
        }
    }
    Ok(format!("{trees} surrogates under 1 - delta; cell-majority classifier attains it exactly"))
}

// ---------------------------------------------------------------- criterion 7

/// Best objective over every tree of depth at most `depth` on the rows in
/// `rows`, enumerated without pruning. Leaves take their better label.
fn enumerate(bds: &BinDataset, rows: &[usize], depth: usize, lambda: f64, n: usize) -> f64 {
    let ones = rows.iter().filter(|&&i| bds.labels[i] == 1).count();
    let leaf = ones.min(rows.len() - ones) as f64 / n as f64 + lambda;
    if depth == 0 {
        return leaf;
    }
    let mut best = leaf;
    for c in 0..bds.n_columns() {
        let (r, l): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| bds.rows[i][c] == 1);
        let v = enumerate(bds, &l, depth - 1, lambda, n) + enumerate(bds, &r, depth - 1, lambda, n);
        best = best.min(v);
    }
    best
}

fn optimal_certificate(sweeps: &[Sweep]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let c = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=64);
        let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..c).map(|_| u8::from(rng.gen_bool(0.5))).collect()).collect();
        let labels: Vec<u8> = rows
            .iter()
            .map(|r| {
                let y = (r[0] == 1) ^ (c > 1 && r[c - 1] == 1 && rng.gen_bool(0.7));
                u8::from(y ^ rng.gen_bool(0.15))
            })
            .collect();
        let bds = BinDataset {
            rows,
            labels,
            columns: (0..c)
                .map(|k| BinColumn {
                    feature: k,
                    name: format!("c{k}"),
                    threshold: 0.5,
                })
                .collect(),
            dropped: Vec::new(),
        };
        let depth = rng.gen_range(0..=2);
        let lambda = [0.0, 0.005, 0.02, 0.1][rng.gen_range(0..4)];
        let tree = train_optimal(&bds, depth, lambda).map_err(|e| e.to_string())?;
        let all: Vec<usize> = (0..n).collect();
        let expect = enumerate(&bds, &all, depth, lambda, n);
        ensure((tree.objective - expect).abs() <= 1e-12, || {
            format!("case {case}: objective {} vs enumeration {expect}", tree.objective)
        })?;
        let errors = bds.rows.iter().zip(&bds.labels).filter(|(r, &y)| tree.predict_bits(r) != y).count();
        let recomputed = objective(errors, n, tree.n_leaves(), lambda);
        ensure((recomputed - expect).abs() <= 1e-12, || format!("case {case}: tree scores {recomputed}, not {expect}"))?;
        ensure(tree.depth() <= depth, || format!("case {case}: depth {} > {depth}", tree.depth()))?;
    }
    let mut runs = 0;
    for s in sweeps {
        for f in &s.report.folds {
            for q in &f.per_q {
                let r = &q.result;
                ensure(r.dominance_ok && r.optimal.objective <= r.cart.objective + 1e-12, || {
                    format!("{} fold {} Q={}: optimal {} above CART {}", s.name, f.fold, q.q, r.optimal.objective, r.cart.objective)
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!("100 random instances match enumeration; optimal <= CART on {runs} pipeline runs"))
}

// ---------------------------------------------------------------- criterion 8

fn ionosphere_cfg() -> RunConfig {
    RunConfig {
        dataset: ionosphere_path(),
        ..RunConfig::default()
    }
}

fn desk_scale() -> Outcome {
    let ds = ionosphere();
    let start = Instant::now();
    run_dataset(&ds, &RunConfig { fold: Some(0), ..ionosphere_cfg() }, Mode::Fcca).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let report = run_dataset(&ds, &ionosphere_cfg(), Mode::Fcca).map_err(|e| e.to_string())?.report;
    let target = 100.0 * report.aggregate.target_test.mean;
    let tree = 100.0 * report.aggregate.per_q[0].optimal_test.mean;
    let gap = target - tree;
    let detail = format!("fold 0 in {secs:.2} s; Q=0 optimal tree {tree:.2}% vs target {target:.2}% (gap {gap:.2} pp)");
    ensure(secs <= 60.0, || format!("{detail}: too slow"))?;
    ensure(gap <= 5.0, || {
        // Fold assignment moves the gap a lot on 351 rows; show other seeds for context.
        let others: Vec<String> = (1..4)
            .map(|seed| {
                let r = run_dataset(&ds, &RunConfig { seed, ..ionosphere_cfg() }, Mode::Fcca).expect("run succeeds").report;
                let g = 100.0 * (r.aggregate.target_test.mean - r.aggregate.per_q[0].optimal_test.mean);
                format!("seed {seed}: {g:.2}")
            })
            .collect();
        format!("{detail}: gap above 5 pp ({})", others.join(", "))
    })?;
    Ok(detail)
}

// ---------------------------------------------------------------- criterion 9

fn determinism() -> Outcome {
    let ds = ionosphere();
    let cfg = RunConfig {
        q: vec![0.0, 0.5, 0.8],
        ..ionosphere_cfg()
    };
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: Some(dir.path().to_path_buf()),
            ..cfg.clone()
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_dataset(&ds, &cfg, Mode::Fcca)).expect("run succeeds");
        std::fs::read(dir.path().join("report.json")).unwrap()
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    ensure(a == b && b == c, || "report.json differs between runs".into())?;
    Ok(format!("three runs (1 and 4 threads) wrote identical {}-byte report.json", a.len()))
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut run = |id: u8, name: &'static str, f: &dyn Fn() -> Outcome| {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, text) = match &out {
            Ok(s) => ("PASS", s),
            Err(s) => ("FAIL", s),
        };
        println!("{tag} criterion {id} ({name}): {text}");
        results.push((id, name, out));
    };
    run(1, "counterfactual validity", &ce_validity);
    run(2, "ensemble oracle equivalence", &ce_oracle);
    run(3, "linear oracle equivalence", &linear_oracle);
    run(4, "target accuracy", &gb_accuracy);
    let sw = catch_unwind(sweeps).map_err(|_| "Q sweep failed".to_string());
    let sw = &sw;
    let with_sweeps = |f: fn(&[Sweep]) -> Outcome| move || sw.as_ref().map_err(Clone::clone).and_then(|s| f(s));
    run(5, "eta/delta monotonicity", &with_sweeps(monotone));
    run(6, "consistency ceiling", &with_sweeps(ceiling));
    run(7, "optimal tree certificate", &with_sweeps(optimal_certificate));
    run(8, "desk-scale run", &desk_scale);
    run(9, "determinism", &determinism);
    let failed: Vec<u8> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
