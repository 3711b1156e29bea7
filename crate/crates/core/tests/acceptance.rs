//! Acceptance criteria, run in order inside one test so timings are not
//! disturbed by concurrently running tests. Prints one line per criterion.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use subpheno::cluster::{kmeans, silhouette, DistanceMatrix, KMeansConfig, MatrixView};
use subpheno::domain::{ClusterAssignment, FeatureMatrix, Method, Metric};
use subpheno::embed::joint_probabilities;
use subpheno::learn::{auroc, logistic_objective, train_gbdt, GbdtConfig, Node};
use subpheno::pipeline::{
    discover_subgroups, ingest_cohort, prepare_features, run_full_pipeline, ReportBundle, RunConfig, BUNDLE_FILES,
};
use subpheno::preprocess::standardize;
use subpheno::rng::rng;
use subpheno::stats::{adjusted_rand_index, align_labels, median, rank_test_exact, rank_test_normal};
use subpheno::synth::{read_truth, write_cohort, SynthSpec, ADMISSIONS_FILE, GROUND_TRUTH_FILE, MEASUREMENTS_FILE};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run_config(data: &Path, out: &Path, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::desk();
    cfg.admissions = data.join(ADMISSIONS_FILE);
    cfg.measurements = data.join(MEASUREMENTS_FILE);
    cfg.output_dir = out.to_path_buf();
    cfg.seed = Some(seed);
    cfg.embedding.enabled = false;
    cfg.write_plots = false;
    cfg
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

/// Planted subgroup of every case row, in feature-matrix order.
fn planted_labels(bundle_cases: &[subpheno::domain::AdmissionRecord], data: &Path) -> Vec<usize> {
    let truth = read_truth(&data.join(GROUND_TRUTH_FILE)).unwrap();
    let by_id: BTreeMap<&str, usize> = truth.iter().map(|t| (t.admission_id.as_str(), t.planted_subgroup)).collect();
    bundle_cases.iter().map(|a| by_id[a.admission_id.as_str()]).collect()
}

fn criterion_1_and_3(work: &Path) -> (Outcome, Outcome, Outcome, ReportBundle) {
    let spec = SynthSpec::desk();
    let data = work.join("desk");
    write_cohort(&spec, &data).unwrap();
    let cfg = run_config(&data, &work.join("desk_out"), 11);

    let (elapsed, k, ari) = single_threaded(|| {
        let start = Instant::now();
        let (cohort, global, _) = ingest_cohort(&cfg).unwrap();
        let features = prepare_features(&cohort, &global).unwrap();
        let d = discover_subgroups(&features.case_physio_z(), &cfg.clustering, &cfg.embedding, 11).unwrap();
        let elapsed = start.elapsed();
        let truth = planted_labels(&features.cases, &data);
        (elapsed, d.k, adjusted_rand_index(&truth, &d.kmeans.labels).unwrap())
    });
    let c1 = outcome(
        k == 4 && ari >= 0.9 && elapsed < Duration::from_secs(60),
        format!(
            "separation {}σ, {} cases: k={k}, ARI {ari:.4}, {:.1} s single-threaded",
            spec.separation,
            spec.n_cases,
            elapsed.as_secs_f64()
        ),
    );

    let bundle = run_full_pipeline(&cfg).unwrap();
    let kappa = bundle.discovery.kappa;
    let c2a = outcome(kappa >= 0.75 && !bundle.discovery.unstable, format!("planted cohort kappa {kappa:.4}"));
    let v = &bundle.validation;
    let c3 = outcome(
        v.accuracy >= 0.95 && v.macro_f >= 0.95,
        format!("accuracy {:.4}, macro-F {:.4} on {} held-out cases", v.accuracy, v.macro_f, v.n_test),
    );
    (c1, c2a, c3, bundle)
}

fn criterion_2_structureless(work: &Path) -> Outcome {
    let spec = SynthSpec {
        cluster_centers: Some(vec![vec![0.0; subpheno::domain::N_BASE]; 4]),
        delirium_signal: Vec::new(),
        ..SynthSpec::desk()
    };
    let data = work.join("flat");
    write_cohort(&spec, &data).unwrap();
    let bundle = run_full_pipeline(&run_config(&data, &work.join("flat_out"), 5)).unwrap();
    let m = &bundle.manifest;
    let warned = m.warnings.iter().any(|w| w.contains("unstable"));
    let flagged = m.summary.unstable_clustering && warned;

    let mut r = rng(99);
    let values: Vec<f64> = (0..2000 * 57).map(|_| StandardNormal.sample(&mut r)).collect();
    let x = FeatureMatrix::new(
        (0..2000).map(|i| format!("r{i}")).collect(),
        (0..57).map(|j| format!("f{j}")).collect(),
        values,
    )
    .unwrap();
    let cfg = RunConfig::desk();
    let mut emb = cfg.embedding.clone();
    emb.enabled = false;
    let gauss = discover_subgroups(&x, &cfg.clustering, &emb, 5).unwrap();
    outcome(
        m.summary.kappa < 0.5 && flagged && gauss.kappa < 0.5 && gauss.unstable,
        format!(
            "structureless cohort kappa {:.4} (flagged: {flagged}), isotropic Gaussian kappa {:.4} (flagged: {})",
            m.summary.kappa, gauss.kappa, gauss.unstable
        ),
    )
}

fn brute_silhouette(v: &[f64], d: usize, labels: &[usize], k: usize) -> Vec<f64> {
    let n = labels.len();
    let dist = |i: usize, j: usize| {
        (0..d)
            .map(|c| (v[i * d + c] - v[j * d + c]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    (0..n)
        .map(|i| {
            let mut sums = vec![0.0; k];
            let mut counts = vec![0usize; k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dist(i, j);
                    counts[labels[j]] += 1;
                }
            }
            let own = labels[i];
            if counts[own] == 0 {
                return 0.0;
            }
            let a = sums[own] / counts[own] as f64;
            let b = (0..k)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn assignment(labels: Vec<usize>, k: usize) -> ClusterAssignment {
    ClusterAssignment {
        labels,
        k,
        method: Method::Kmeans,
        metric: Metric::Euclidean,
        objective: 0.0,
    }
}

fn criterion_4() -> Vec<(&'static str, Outcome)> {
    let mut out = Vec::new();
    let mut r = rng(4);

    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 10 + trial * 10;
        let k = 2 + trial % 5;
        let v: Vec<f64> = (0..n * 4).map(|_| r.random::<f64>()).collect();
        let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect();
        let fast = silhouette(MatrixView::new(&v, 4).unwrap(), &assignment(labels.clone(), k), Metric::Euclidean).unwrap();
        for (a, b) in fast.widths.iter().zip(brute_silhouette(&v, 4, &labels, k)) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(("4a silhouette", outcome(worst <= 1e-12, format!("n ≤ 200, max |Δ| {worst:.2e}"))));

    let mut mismatches = 0;
    let mut cases = 0;
    for k in 1..=6 {
        let perms = permutations(k);
        for _ in 0..50 {
            let n = r.random_range(k..60);
            let a: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
            let b: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
            let score = |p: &[usize]| a.iter().zip(&b).filter(|(x, y)| p[**y] == **x).count();
            let best = perms.iter().map(|p| score(p)).max().unwrap();
            let got = align_labels(&assignment(a.clone(), k), &assignment(b.clone(), k)).unwrap();
            cases += 1;
            if score(&got) != best {
                mismatches += 1;
            }
        }
    }
    out.push((
        "4b align_labels",
        outcome(mismatches == 0, format!("k ≤ 6, {cases} cases, {mismatches} below the exhaustive optimum")),
    ));

    let mut worst = 0.0f64;
    for n in (20..=500).step_by(40) {
        let y: Vec<usize> = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
        let s: Vec<f64> = (0..n).map(|_| (r.random_range(0..50) as f64) / 10.0).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in (0..n).filter(|&i| y[i] == 1) {
            for j in (0..n).filter(|&j| y[j] == 0) {
                pairs += 1.0;
                wins += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        worst = worst.max((auroc(&y, &s).unwrap() - wins / pairs).abs());
    }
    out.push(("4c AUROC", outcome(worst <= 1e-12, format!("n ≤ 500, max |Δ| {worst:.2e}"))));

    // every tie-free configuration is a choice of which pooled ranks belong to x
    let mut by_split = Vec::new();
    for n1 in 1..=11usize {
        let n2 = 12 - n1;
        let mut worst = 0.0f64;
        for mask in 0u32..(1 << 12) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = {
                let (mut x, mut y) = (Vec::new(), Vec::new());
                for v in 0..12 {
                    if mask >> v & 1 == 1 {
                        x.push(v as f64);
                    } else {
                        y.push(v as f64);
                    }
                }
                (x, y)
            };
            let d = (rank_test_exact(&x, &y).unwrap() - rank_test_normal(&x, &y).unwrap()).abs();
            worst = worst.max(d);
        }
        by_split.push((n1, n2, worst));
    }
    let balanced = by_split
        .iter()
        .filter(|(a, b, _)| (*a).min(*b) >= 4)
        .map(|s| s.2)
        .fold(0.0, f64::max);
    let mut table = String::new();
    for (a, b, w) in &by_split {
        if a <= b {
            let _ = write!(table, " {a}/{b}:{w:.3}");
        }
    }
    out.push((
        "4d rank_test exact vs normal",
        outcome(
            balanced <= 0.02,
            format!("|x|+|y| = 12, max |Δp| {balanced:.4} for min(|x|,|y|) ≥ 4; per split{table}"),
        ),
    ));

    let score = |g: f64, h: f64, l2: f64| g * g / (h + l2);
    let mut worst = 0.0f64;
    let mut missed = 0;
    let mut datasets = 0;
    while datasets < 500 {
        let v: Vec<f64> = (0..12).map(|_| (r.random_range(0..8) as f64) * 0.5).collect();
        let y: Vec<usize> = (0..6).map(|_| r.random_range(0..2)).collect();
        if y.iter().all(|&c| c == y[0]) {
            continue;
        }
        datasets += 1;
        let cfg = GbdtConfig {
            n_rounds: 1,
            max_depth: 1,
            ..Default::default()
        };
        let m = train_gbdt(MatrixView::new(&v, 2).unwrap(), &y, 2, &cfg).unwrap();
        let p = 1.0 / (1.0 + (-m.base_score[0]).exp());
        let g: Vec<f64> = y.iter().map(|&c| p - c as f64).collect();
        let h = p * (1.0 - p);
        let (gt, ht) = (g.iter().sum::<f64>(), 6.0 * h);
        let mut best = 0.0f64;
        for f in 0..2 {
            let mut vals: Vec<f64> = (0..6).map(|i| v[i * 2 + f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let left: Vec<usize> = (0..6).filter(|&i| v[i * 2 + f] < thr).collect();
                let gl: f64 = left.iter().map(|&i| g[i]).sum();
                let hl = h * left.len() as f64;
                let gain = 0.5 * (score(gl, hl, cfg.l2_leaf) + score(gt - gl, ht - hl, cfg.l2_leaf) - score(gt, ht, cfg.l2_leaf));
                best = best.max(gain);
            }
        }
        match &m.trees[0][0].nodes[0] {
            Node::Split { gain, .. } => worst = worst.max((gain - best).abs()),
            Node::Leaf { .. } => {
                if best > 1e-12 {
                    missed += 1;
                }
            }
        }
    }
    out.push((
        "4e GBDT depth-1 split",
        outcome(
            worst <= 1e-12 && missed == 0,
            format!("{datasets} six-point datasets, max |Δgain| {worst:.2e}, {missed} missed splits"),
        ),
    ));
    out
}

fn criterion_5() -> Vec<(&'static str, Outcome)> {
    let mut out = Vec::new();
    let mut r = rng(5);

    let mut violations = 0;
    for seed in 0..100u64 {
        let v: Vec<f64> = (0..300 * 3)
            .map(|i| Distribution::<f64>::sample(&StandardNormal, &mut r) * 0.5 + ((i / 3) % 4) as f64 * 1.5)
            .collect::<Vec<f64>>();
        let cfg = KMeansConfig {
            restarts: 1,
            max_iter: 300,
        };
        let (m, _) = kmeans(MatrixView::new(&v, 3).unwrap(), 2 + (seed as usize % 5), Metric::Euclidean, seed, &cfg).unwrap();
        violations += m.inertia_trace.windows(2).filter(|w| w[1] > w[0]).count();
    }
    out.push(("5a Lloyd inertia", outcome(violations == 0, format!("100 runs, {violations} increases"))));

    let mut violations = 0;
    for classes in [2usize, 3, 5] {
        let v: Vec<f64> = (0..400 * 4).map(|_| r.random::<f64>()).collect();
        let y: Vec<usize> = (0..400)
            .map(|i| (((v[i * 4] + 0.5 * v[i * 4 + 1] + 0.3 * r.random::<f64>()) / 1.8 * classes as f64) as usize).min(classes - 1))
            .collect();
        let m = train_gbdt(MatrixView::new(&v, 4).unwrap(), &y, classes, &GbdtConfig { n_rounds: 80, ..Default::default() }).unwrap();
        violations += m.loss_trace.windows(2).filter(|w| w[1] > w[0]).count();
    }
    out.push(("5b GBDT training loss", outcome(violations == 0, format!("2/3/5 classes, {violations} increases"))));

    let (n, d) = (80, 6);
    let v: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    let y: Vec<usize> = (0..n).map(|i| usize::from(v[i * d] + 0.5 * v[i * d + 1] > 0.0)).collect();
    let x = MatrixView::new(&v, d).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        let b: f64 = StandardNormal.sample(&mut r);
        let l2 = 0.1;
        let (_, grad) = logistic_objective(x, &y, &w, b, l2);
        let eps = 1e-6;
        for p in 0..=d {
            let shifted = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if p < d {
                    w2[p] += delta;
                } else {
                    b2 += delta;
                }
                logistic_objective(x, &y, &w2, b2, l2).0
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            worst = worst.max((fd - grad[p]).abs() / fd.abs().max(grad[p].abs()).max(1e-8));
        }
    }
    out.push(("5c logistic gradient", outcome(worst <= 1e-5, format!("max relative error {worst:.2e}"))));

    let v: Vec<f64> = (0..200 * 5).map(|_| StandardNormal.sample(&mut r)).collect();
    let dm = DistanceMatrix::compute(MatrixView::new(&v, 5).unwrap(), Metric::Euclidean);
    let target = 30.0;
    let p = joint_probabilities(&dm, target).unwrap();
    let mut asym = 0.0f64;
    for i in 0..200 {
        for j in 0..200 {
            asym = asym.max((p.get(i, j) - p.get(j, i)).abs());
        }
    }
    let mass = (p.total() - 1.0).abs();
    let perp = p
        .calibrations
        .iter()
        .map(|c| (c.perplexity - target).abs())
        .fold(0.0, f64::max);
    out.push((
        "5d t-SNE affinities",
        outcome(
            asym == 0.0 && mass <= 1e-9 && perp <= 1e-3,
            format!("asymmetry {asym:.1e}, |mass − 1| {mass:.1e}, max perplexity error {perp:.1e}"),
        ),
    ));

    let (n, d) = (500, 8);
    let v: Vec<f64> = (0..n * d)
        .map(|i| Distribution::<f64>::sample(&StandardNormal, &mut r) * (1.0 + (i % d) as f64 * 30.0) + (i % d) as f64 * 1e3)
        .collect();
    let m = FeatureMatrix::new(
        (0..n).map(|i| format!("r{i}")).collect(),
        (0..d).map(|j| format!("f{j}")).collect(),
        v,
    )
    .unwrap();
    let (z, _) = standardize(&m).unwrap();
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for j in 0..d {
        let c = z.column(j);
        let mu = c.iter().sum::<f64>() / n as f64;
        let var = c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n as f64;
        mean_err = mean_err.max(mu.abs());
        var_err = var_err.max((var - 1.0).abs());
    }
    out.push((
        "5e standardization",
        outcome(
            mean_err <= 1e-9 && var_err <= 1e-9,
            format!("max |mean| {mean_err:.1e}, max |var − 1| {var_err:.1e}"),
        ),
    ));
    out
}

/// 1-based position of `feature` when features are ordered by descending mean rank.
fn position(mean_rank: &[f64], feature: usize) -> usize {
    1 + mean_rank.iter().filter(|&&m| m > mean_rank[feature]).count()
}

fn criterion_6(work: &Path) -> Outcome {
    let mut hits = 0;
    let mut lines = Vec::new();
    for seed in 1..=10u64 {
        let spec = SynthSpec {
            seed,
            ..SynthSpec::desk()
        };
        let data = work.join(format!("signal_{seed}"));
        write_cohort(&spec, &data).unwrap();
        let bundle = run_full_pipeline(&run_config(&data, &work.join(format!("signal_{seed}_out")), seed)).unwrap();
        let signal = &spec.delirium_signal[0];
        let truth = planted_labels(&bundle.features.cases, &data);
        // the discovered subgroup holding most cases of the planted subgroup
        let mut votes = vec![0usize; bundle.discovery.k];
        for (t, &l) in truth.iter().zip(&bundle.discovery.kmeans.labels) {
            if *t == signal.subgroup {
                votes[l] += 1;
            }
        }
        let host = (0..votes.len()).max_by_key(|&c| (votes[c], std::cmp::Reverse(c))).unwrap();
        let column = bundle.models.feature_ids.iter().position(|f| *f == signal.feature).unwrap();
        let mut own = None;
        let mut outside = 0;
        for s in &bundle.models.scopes {
            let pos = position(&bundle.models.scope(&s.scope).unwrap().importance.mean_rank, column);
            if s.subgroup == Some(host) {
                own = Some(pos);
            } else if pos > 10 {
                outside += 1;
            }
        }
        let ok = own.is_some_and(|p| p <= 3) && outside >= 2;
        hits += usize::from(ok);
        lines.push(format!("{seed}:{}/{outside}", own.map_or("-".into(), |p| p.to_string())));
        std::fs::remove_dir_all(&data).ok();
    }
    outcome(
        hits >= 8,
        format!("{hits}/10 seeds (seed:own position/scopes outside top 10) {}", lines.join(" ")),
    )
}

fn read_artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    BUNDLE_FILES
        .iter()
        .filter(|f| f.ends_with(".csv"))
        .map(|f| (f.to_string(), std::fs::read(dir.join(f)).unwrap()))
        .collect()
}

fn highlight_rule_holds(bundle: &ReportBundle) -> bool {
    let rows = &bundle.characterization.heterogeneity;
    let s = median(&rows.iter().map(|r| r.std_of_means).collect::<Vec<_>>());
    let p = median(&rows.iter().map(|r| r.avg_neglog10_p).collect::<Vec<_>>());
    rows.iter()
        .all(|r| r.highlighted == (r.std_of_means > s && r.avg_neglog10_p > p))
}

fn criterion_7(work: &Path, first: &ReportBundle) -> Outcome {
    let spec = SynthSpec {
        seed: 77,
        n_noncases: 5000,
        ..SynthSpec::desk()
    };
    let data = work.join("det");
    write_cohort(&spec, &data).unwrap();
    let mut cfg = run_config(&data, &work.join("det_a"), 3);
    cfg.embedding.enabled = true;
    cfg.embedding.subsample = Some(300);
    cfg.embedding.tsne.iterations = 300;
    let a = run_full_pipeline(&cfg).unwrap();
    cfg.output_dir = work.join("det_b");
    let b = run_full_pipeline(&cfg).unwrap();
    let (fa, fb) = (read_artifacts(&work.join("det_a")), read_artifacts(&work.join("det_b")));
    let differing: Vec<&String> = fa.keys().filter(|k| fa[*k] != fb[*k]).collect();

    let s = &a.manifest.summary;
    let clean_ingest = s.dropped_measurements == 0 && s.n_admissions_read > 0 && s.n_measurements_read > 0;
    let rule = [first, &a, &b].iter().all(|x| highlight_rule_holds(x));
    outcome(
        differing.is_empty() && clean_ingest && rule,
        format!(
            "{} CSV artifacts, differing: {differing:?}; ingest read {} admissions and {} measurements with {} dropped; both-medians rule holds: {rule}",
            fa.len(),
            s.n_admissions_read,
            s.n_measurements_read,
            s.dropped_measurements
        ),
    )
}

fn criterion_8(work: &Path) -> Outcome {
    let spec = SynthSpec::paper_scale();
    let data = work.join("full");
    let start = Instant::now();
    write_cohort(&spec, &data).unwrap();
    let generated = start.elapsed();
    let mut cfg = RunConfig::paper_scale();
    cfg.admissions = data.join(ADMISSIONS_FILE);
    cfg.measurements = data.join(MEASUREMENTS_FILE);
    cfg.output_dir = work.join("full_out");
    cfg.seed = Some(8);
    let start = Instant::now();
    let bundle = run_full_pipeline(&cfg).unwrap();
    let elapsed = start.elapsed();
    let s = &bundle.manifest.summary;
    let subsampled = cfg.embedding.enabled && cfg.embedding.subsample.is_some_and(|m| m < s.n_cases);
    outcome(
        s.n_cases == 10066 && s.n_noncases == 114324 && subsampled && elapsed < Duration::from_secs(30 * 60),
        format!(
            "{} cases + {} non-cases on {} thread(s): pipeline {:.0} s (cohort generation {:.0} s), t-SNE on {} of {} cases",
            s.n_cases,
            s.n_noncases,
            rayon::current_num_threads(),
            elapsed.as_secs_f64(),
            generated.as_secs_f64(),
            cfg.embedding.subsample.unwrap_or(0),
            s.n_cases
        ),
    )
}

#[test]
fn acceptance() {
    let work = tempfile::tempdir().unwrap();
    let mut results: Vec<(String, Outcome)> = Vec::new();

    let (c1, c2a, c3, desk) = criterion_1_and_3(work.path());
    results.push(("1 subgroup recovery".into(), c1));
    let c2b = criterion_2_structureless(work.path());
    results.push((
        "2 cross-method stability".into(),
        outcome(c2a.pass && c2b.pass, format!("{}; {}", c2a.detail, c2b.detail)),
    ));
    results.push(("3 feature-set validation".into(), c3));
    for (name, o) in criterion_4() {
        results.push((name.into(), o));
    }
    for (name, o) in criterion_5() {
        results.push((name.into(), o));
    }
    results.push(("6 subgroup-specific signal".into(), criterion_6(work.path())));
    results.push(("7 determinism and round-trip".into(), criterion_7(work.path(), &desk)));
    drop(desk);
    results.push(("8 full-scale run".into(), criterion_8(work.path())));

    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<&String> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
