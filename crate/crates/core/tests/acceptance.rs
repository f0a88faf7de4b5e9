//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each plus a summary. With `ACCEPTANCE_STRICT` set, any
//! failure makes the process exit non-zero.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use feeder_nilm::eval::{
    confusion, metrics, run_experiment, window_length_sweep_models, ConfusionCounts, ExperimentConfig,
};
use feeder_nilm::features::{
    count_peaks, featurize_series, FeatureConfig, FeatureMatrix, FeatureMode, OnlineExtractor, PeakThreshold,
    RollingStats,
};
use feeder_nilm::par::Execution;
use feeder_nilm::series::{ChargingLabelSeries, LoadSeries};
use feeder_nilm::synth::{generate_benchmark, FeederSynthConfig};
use feeder_nilm::trees::{train_gbdt, ForestParams, GbdtParams, TrainParams, TreeNode};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- helpers

/// Feeder-like load: base demand, exact zeros, constant plateaus and
/// rectangular charging blocks.
fn random_load(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(len);
    while v.len() < len {
        match rng.random_range(0..10) {
            0 => v.extend(std::iter::repeat_n(0.0, rng.random_range(1..30))),
            1 => {
                let c = rng.random_range(0.1..4.0);
                v.extend(std::iter::repeat_n(c, rng.random_range(1..500)));
            }
            2 => {
                let ev = rng.random_range(3.3..7.2);
                for _ in 0..rng.random_range(20..300) {
                    v.push(ev + rng.random_range(0.2..3.0));
                }
            }
            _ => {
                for _ in 0..rng.random_range(1..200) {
                    v.push(if rng.random_bool(0.03) { 0.0 } else { rng.random_range(0.0..5.0) });
                }
            }
        }
    }
    v.truncate(len);
    v
}

/// Naive window statistics: corrected two-pass mean and variance, median by
/// selection. A window of identical values has that value as its mean and
/// variance exactly zero.
fn naive_stats(w: &[f64]) -> [f64; 6] {
    let n = w.len() as f64;
    let (mean, var) = if w.iter().all(|&x| x == w[0]) {
        (w[0], 0.0)
    } else {
        let m = w.iter().sum::<f64>() / n;
        let d: f64 = w.iter().map(|x| x - m).sum::<f64>() / n;
        let sq = w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        (m + d, sq - d * d)
    };
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = w.to_vec();
    let k = s.len() / 2;
    let median = if s.len() % 2 == 1 {
        *s.select_nth_unstable_by(k, f64::total_cmp).1
    } else {
        let (lo, hi, _) = s.select_nth_unstable_by(k, f64::total_cmp);
        let hi = *hi;
        let lo = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    };
    [mean, var.sqrt(), var, min, max, median]
}

/// Direct peak count: relative rises above theta, rises from zero count.
fn naive_peaks(w: &[f64], theta: f64) -> u32 {
    let mut count = 0;
    for i in 1..w.len() {
        let (a, b) = (w[i - 1], w[i]);
        let peak = if a <= 1e-9 { b > 1e-9 } else { (b - a) / a > theta };
        count += u32::from(peak);
    }
    count
}

fn naive_online_row(v: &[f64], t: usize, n: usize, short: usize, theta: f64) -> Vec<f64> {
    let long = &v[t.saturating_sub(n)..=t];
    let shortw = &v[t.saturating_sub(short)..=t];
    let mut row = naive_stats(long).to_vec();
    row.extend(naive_stats(shortw));
    row.push(naive_peaks(long, theta) as f64);
    row
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if b == 0.0 {
        a == 0.0
    } else {
        (a - b).abs() <= tol * b.abs()
    }
}

fn benchmark_feeders() -> Vec<feeder_nilm::series::FeederRecordSet> {
    generate_benchmark(&FeederSynthConfig::default()).expect("default benchmark").feeders
}

// ---------------------------------------------------------------- criteria

const C1_SERIES: usize = 100;
const C1_LEN: usize = 10_000;
const C1_REL_TOL: f64 = 1e-9;
const C1_BUDGET: Duration = Duration::from_secs(30);

fn c1_streaming_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let lengths = [(360, 90), (1, 1), (2, 5), (30, 90), (90, 30), (720, 90), (1000, 360)];
    let mut stream_time = Duration::ZERO;
    let mut mismatches = 0usize;
    let mut first = String::new();
    let start = Instant::now();
    for s in 0..C1_SERIES {
        let (n, short) = lengths[s % lengths.len()];
        let theta = [1.0, 0.5, 2.0][s % 3];
        let cfg = FeatureConfig {
            window: n,
            short_window: short,
            threshold: PeakThreshold::new(theta).unwrap(),
            ..FeatureConfig::default()
        };
        let v = random_load(&mut rng, C1_LEN);
        let t0 = Instant::now();
        let mut ex = OnlineExtractor::new(cfg).unwrap();
        let rows: Vec<[f64; 13]> = v.iter().map(|&x| ex.push(x).unwrap()).collect();
        stream_time += t0.elapsed();
        let batch = featurize_series(&LoadSeries::from_values(v.clone()).unwrap(), FeatureMode::Online, &cfg).unwrap();
        for (t, row) in rows.iter().enumerate() {
            let oracle = naive_online_row(&v, t, n, short, theta);
            let ok = row.iter().zip(&oracle).enumerate().all(|(c, (&a, &b))| match c % 6 {
                _ if c == 12 => a == b,
                0..=2 => rel_close(a, b, C1_REL_TOL),
                _ => a == b,
            }) && batch.row(t) == row.as_slice();
            if !ok {
                mismatches += 1;
                if first.is_empty() {
                    first = format!("series {s} t {t}: stream {row:?} oracle {oracle:?}");
                }
            }
        }
    }
    let total = start.elapsed();
    verdict(
        mismatches == 0 && stream_time < C1_BUDGET,
        format!(
            "{} rows, {mismatches} mismatches (min/max/median/peaks exact, mean/std/var rel <= {C1_REL_TOL:e}, batch bit-equal); \
             streaming {:.2}s (< {}s), total with oracle {:.1}s{}",
            C1_SERIES * C1_LEN,
            stream_time.as_secs_f64(),
            C1_BUDGET.as_secs(),
            total.as_secs_f64(),
            if first.is_empty() { String::new() } else { format!("; first: {first}") }
        ),
    )
}

fn c2_peak_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut bad = 0;
    let mut zero_pred = 0;
    for _ in 0..1000 {
        let len = rng.random_range(1..400);
        let theta = [1.0, 0.25, 0.5, 2.0, 3.7][rng.random_range(0..5)];
        let lead = rng.random_range(0..50);
        let v = random_load(&mut rng, len + lead);
        let w = &v[lead..];
        let th = PeakThreshold::new(theta).unwrap();
        let want = naive_peaks(w, theta);
        zero_pred += w.windows(2).filter(|p| p[0] <= 1e-9).count();

        // built by pushes only
        let mut direct = RollingStats::new(th);
        for (i, &x) in w.iter().enumerate() {
            direct.push(i, x, (i > 0).then(|| w[i - 1]));
        }
        // reached by sliding across a longer prefix
        let mut slid = RollingStats::new(th);
        for (i, &x) in v.iter().enumerate() {
            slid.push(i, x, (i > 0).then(|| v[i - 1]));
            if i >= len {
                let old = i - len;
                slid.evict(old, v[old], Some(v[old + 1]));
            }
        }
        if count_peaks(w, th).unwrap() != want || direct.peaks() != want || slid.peaks() != want {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("1000 windows, {zero_pred} zero-predecessor steps, {bad} mismatches (exact)"))
}

const C3_F1_TOL_PP: f64 = 0.01;

fn c3_metrics() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut bad = 0;
    for i in 0..1000 {
        let pick = |rng: &mut ChaCha8Rng| if rng.random_bool(0.15) { 0 } else { rng.random_range(0..400u64) };
        let c = if i == 0 {
            ConfusionCounts::default()
        } else {
            ConfusionCounts { tp: pick(&mut rng), fp: pick(&mut rng), fn_: pick(&mut rng), tn: pick(&mut rng) }
        };
        let mut pairs: Vec<(u8, u8)> = [(c.tp, (1, 1)), (c.fp, (0, 1)), (c.fn_, (1, 0)), (c.tn, (0, 0))]
            .iter()
            .flat_map(|&(k, p)| std::iter::repeat_n(p, k as usize))
            .collect();
        for j in (1..pairs.len()).rev() {
            pairs.swap(j, rng.random_range(0..=j));
        }
        let truth = ChargingLabelSeries::new(pairs.iter().map(|p| p.0).collect()).unwrap();
        let pred = ChargingLabelSeries::new(pairs.iter().map(|p| p.1).collect()).unwrap();
        let got = metrics(confusion(&truth, &pred).unwrap());

        // brute-force tally
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for &(t, p) in &pairs {
            match (t, p) {
                (1, 1) => tp += 1,
                (0, 1) => fp += 1,
                (1, 0) => fn_ += 1,
                _ => tn += 1,
            }
        }
        let div = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        let p = div(tp, tp + fp);
        let r = div(tp, tp + fn_);
        let f1 = p.zip(r).map(|(p, r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        let acc = div(tp + tn, tp + fp + fn_ + tn);
        let counts_ok = (got.counts.tp, got.counts.fp, got.counts.fn_, got.counts.tn) == (tp, fp, fn_, tn);
        let bits = |x: Option<f64>| x.map(f64::to_bits);
        let exact = counts_ok
            && bits(got.precision) == bits(p)
            && bits(got.recall) == bits(r)
            && bits(got.f1) == bits(f1)
            && bits(got.accuracy) == bits(acc);

        // exact rational F1 = 2tp / (2tp + fp + fn)
        let rational_ok = match got.f1 {
            Some(f) if tp + fp > 0 && tp + fn_ > 0 => {
                let den = BigInt::from(2 * tp + fp + fn_);
                let q = if den.is_zero() { 0.0 } else { BigRational::new(BigInt::from(2 * tp), den).to_f64().unwrap() };
                (f - q).abs() <= 1e-12 * q.abs().max(1e-300)
            }
            Some(_) => false,
            None => tp + fp == 0 || tp + fn_ == 0,
        };
        if !(exact && rational_ok) {
            bad += 1;
        }
    }
    let (p, r) = (0.9896, 0.9880);
    let f1_pp = 100.0 * feeder_nilm::eval::f1_score(p, r);
    let table_ok = (f1_pp - 98.88).abs() <= C3_F1_TOL_PP;
    verdict(
        bad == 0 && table_ok,
        format!(
            "1000 tallies, {bad} mismatches (bit-exact vs brute force, F1 within 1e-12 of rational); \
             P 98.96% R 98.80% -> F1 {f1_pp:.4}% (98.88 +/- {C3_F1_TOL_PP} pp)"
        ),
    )
}

const C4_GBDT_OFFLINE_F1: f64 = 0.95;
const C4_GBDT_ONLINE_F1: f64 = 0.85;
const C4_BUDGET: Duration = Duration::from_secs(600);

fn c4_end_to_end() -> Verdict {
    let start = Instant::now();
    let feeders = benchmark_feeders();
    let run = |mode, model| {
        let cfg = ExperimentConfig::new(mode, model);
        run_experiment(&feeders, &cfg, Execution::default()).expect("experiment").report
    };
    let gbdt = TrainParams::GradientBoosted(GbdtParams::default());
    let rf = TrainParams::RandomForest(ForestParams::default());
    let off = run(FeatureMode::Offline, gbdt.clone());
    let on = run(FeatureMode::Online, gbdt);
    let rf_on = run(FeatureMode::Online, rf);
    let elapsed = start.elapsed();
    let f = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let pass = f(off.f1) >= C4_GBDT_OFFLINE_F1
        && f(on.f1) >= C4_GBDT_ONLINE_F1
        && f(rf_on.recall) < f(on.recall)
        && elapsed < C4_BUDGET;
    verdict(
        pass,
        format!(
            "GBDT offline F1 {:.4} (>= {C4_GBDT_OFFLINE_F1}), GBDT online F1 {:.4} (>= {C4_GBDT_ONLINE_F1}), \
             online recall RF {:.4} < GBDT {:.4}; RF online F1 {:.4}; {:.0}s (< {}s)",
            f(off.f1),
            f(on.f1),
            f(rf_on.recall),
            f(on.recall),
            f(rf_on.f1),
            elapsed.as_secs_f64(),
            C4_BUDGET.as_secs()
        ),
    )
}

const C5_LENGTHS: [usize; 5] = [30, 60, 120, 240, 360];
const C5_SLACK: f64 = 0.01;

fn c5_window_trend() -> Verdict {
    let start = Instant::now();
    let feeders = benchmark_feeders();
    let models =
        [TrainParams::GradientBoosted(GbdtParams::default()), TrainParams::RandomForest(ForestParams::default())];
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [FeatureMode::Offline, FeatureMode::Online] {
        let cfg = ExperimentConfig::new(mode, models[0].clone());
        let reports =
            window_length_sweep_models(&feeders, &C5_LENGTHS, &cfg, &models, Execution::default()).expect("sweep");
        for rep in reports {
            let f1: Vec<f64> = rep.rows.iter().map(|r| r.report.f1.unwrap_or(f64::NAN)).collect();
            let ok = f1[4] >= f1[0] - C5_SLACK;
            pass &= ok;
            let name = feeder_nilm::eval::model_name(rep.model);
            let list: Vec<String> = f1.iter().map(|x| format!("{x:.4}")).collect();
            parts.push(format!("{mode} {name} [{}]{}", list.join(" "), if ok { "" } else { " VIOLATED" }));
        }
    }
    verdict(
        pass,
        format!(
            "F1 at {C5_LENGTHS:?}, need F1(360) >= F1(30) - {C5_SLACK}: {}; {:.0}s",
            parts.join("; "),
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Feature index and the left/right row sets of a split.
type OracleSplit = (usize, Vec<usize>, Vec<usize>);

/// Exact best split over `idx` given per-row gradients. Returns the
/// partition of the best candidate, `Ok(None)` for no positive-gain split,
/// or `Err(())` when the top two distinct partitions are within 1e-9.
fn oracle_split(
    rows: &[Vec<f64>],
    idx: &[usize],
    g: &[BigRational],
    h: &BigRational,
    lambda: &BigRational,
) -> Result<Option<OracleSplit>, ()> {
    let score = |set: &[usize]| {
        let gs: BigRational = set.iter().map(|&i| g[i].clone()).sum();
        &gs * &gs / (h * BigRational::from_integer(BigInt::from(set.len())) + lambda)
    };
    let parent = score(idx);
    let mut cands: Vec<(BigRational, usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for (f, _) in rows[0].iter().enumerate() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= w[0]);
            let gain = score(&l) + score(&r) - &parent;
            cands.push((gain, f, l, r));
        }
    }
    cands.sort_by(|a, b| b.0.cmp(&a.0));
    let Some(best) = cands.first() else { return Ok(None) };
    let eps = BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000));
    let best_abs = if best.0 < BigRational::zero() { -best.0.clone() } else { best.0.clone() };
    if best_abs < eps {
        return Err(());
    }
    if best.0 < BigRational::zero() {
        return Ok(None);
    }
    if cands[1..].iter().any(|c| c.2 != best.2 && &best.0 - &c.0 < eps) {
        return Err(());
    }
    Ok(Some((best.1, best.2.clone(), best.3.clone())))
}

fn c6_gbdt_oracle() -> Verdict {
    // loss monotonicity on a spread of fixtures
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut fixtures = 0;
    let mut non_monotone = 0;
    for k in 0..12 {
        let n = [40, 200, 800][k % 3];
        let d = 1 + k % 4;
        let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = FeatureMatrix::new(None, (0..d).map(|j| format!("x{j}")).collect(), data).unwrap();
        let noise = [0.0, 0.1, 0.4][k % 3];
        let y = ChargingLabelSeries::from_bools(
            x.rows().map(|r| r[0] + rng.random_range(-noise..=noise) > 0.5 + 0.1 * (k as f64 % 3.0)),
        );
        let p = GbdtParams {
            n_rounds: 40,
            max_depth: 1 + k % 6,
            learning_rate: [0.1, 0.3, 1.0][k % 3],
            positive_class_weight: 1.0 + (k % 4) as f64,
            ..Default::default()
        };
        let out = train_gbdt(&x, &y, &p).unwrap();
        fixtures += 1;
        if !out.loss_trace.windows(2).all(|w| w[1] <= w[0]) || out.loss_trace.len() != p.n_rounds + 1 {
            non_monotone += 1;
        }
    }

    // depth-2 split choice against exact rational search
    let lambda = BigRational::from_integer(BigInt::from(1));
    let (mut checked, mut skipped, mut bad) = (0, 0, 0);
    let mut first = String::new();
    for _ in 0..600 {
        let n = rng.random_range(3..=8);
        let d = rng.random_range(1..=3);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.random_range(0..6) as f64 * 0.5).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let pos = y.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == n {
            continue;
        }
        let p0 = BigRational::new(BigInt::from(pos), BigInt::from(n));
        let one = BigRational::from_integer(BigInt::from(1));
        let g: Vec<BigRational> = y.iter().map(|&v| &p0 - BigRational::from_integer(BigInt::from(v))).collect();
        let h = &p0 * (&one - &p0);
        let all: Vec<usize> = (0..n).collect();

        let x = FeatureMatrix::new(None, (0..d).map(|j| format!("x{j}")).collect(), rows.concat()).unwrap();
        let labels = ChargingLabelSeries::new(y.clone()).unwrap();
        let params = GbdtParams { n_rounds: 1, max_depth: 2, min_child_weight: 0.0, ..Default::default() };
        let model = train_gbdt(&x, &labels, &params).unwrap().model;
        let nodes = model.trees[0].nodes();

        // (node index, rows) pairs to compare, root first
        let mut queue = vec![(0usize, all, 0usize)];
        let mut ok = true;
        let mut ambiguous = false;
        while let Some((node, idx, depth)) = queue.pop() {
            let want = if depth >= params.max_depth { Ok(None) } else { oracle_split(&rows, &idx, &g, &h, &lambda) };
            match (&nodes[node], want) {
                (_, Err(())) => ambiguous = true,
                (TreeNode::Leaf { .. }, Ok(None)) => {}
                (TreeNode::Split { feature, threshold, left, right }, Ok(Some((f, l, r)))) => {
                    let got_l: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][*feature] < *threshold).collect();
                    if *feature != f || got_l != l {
                        ok = false;
                    }
                    queue.push((*left, l, depth + 1));
                    queue.push((*right, r, depth + 1));
                }
                _ => ok = false,
            }
            if ambiguous || !ok {
                break;
            }
        }
        if ambiguous {
            skipped += 1;
        } else if ok {
            checked += 1;
        } else {
            bad += 1;
            if first.is_empty() {
                first = format!("; first disagreement rows {rows:?} labels {y:?}");
            }
        }
    }
    verdict(
        non_monotone == 0 && bad == 0 && checked >= 200,
        format!(
            "loss non-increasing on {}/{fixtures} fixtures; depth-2 splits vs exact rational search: \
             {checked} agree (need >= 200), {bad} disagree, {skipped} near-tie skipped (gap < 1e-9){first}",
            fixtures - non_monotone
        ),
    )
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_feeder-nilm")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let data = p("data");
    cli(&["synth", "--feeders", "7", "--households", "2", "--days", "2", "--seed", "3", "--out", &data])?;
    for i in 0..3 {
        let input = format!("{data}/feeder_0{i}.csv");
        cli(&[
            "featurize",
            "--input",
            &input,
            "--mode",
            "online",
            "--window",
            "120",
            "--out",
            &p(&format!("f{i}.csv")),
        ])?;
    }
    for model in ["gbdt", "rf"] {
        let m = p(&format!("{model}.json"));
        cli(&[
            "train",
            "--features",
            &p("f0.csv"),
            "--features",
            &p("f1.csv"),
            "--model",
            model,
            "--trees",
            "15",
            "--seed",
            "5",
            "--out",
            &m,
        ])?;
        let pred = p(&format!("{model}_pred.csv"));
        cli(&["detect", "--model", &m, "--features", &p("f2.csv"), "--out", &pred])?;
        cli(&["evaluate", "--pred", &pred, "--truth", &p("f2.csv"), "--out", &p(&format!("{model}_report.txt"))])?;
    }
    cli(&[
        "experiment",
        "--data",
        &data,
        "--mode",
        "offline",
        "--model",
        "gbdt",
        "--trees",
        "15",
        "--window",
        "60",
        "--out",
        &p("exp"),
    ])?;
    Ok(())
}

fn list_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c7_determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if let Err(e) = pipeline(a.path()).and_then(|_| pipeline(b.path())) {
        return verdict(false, format!("pipeline failed: {e}"));
    }
    let fa = list_files(a.path());
    let fb = list_files(b.path());
    if fa != fb {
        return verdict(false, "runs produced different file sets");
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| fs::read(a.path().join(f)).unwrap() != fs::read(b.path().join(f)).unwrap())
        .map(|f| f.display().to_string())
        .collect();
    verdict(
        differing.is_empty(),
        format!(
            "two CLI runs of synth -> featurize -> train -> detect -> evaluate (+ experiment): {} files, {} differ{}",
            fa.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    )
}

const C8_SAMPLES: usize = 2_000_000;
const C8_MIN_RATE: f64 = 100_000.0;

fn c8_throughput() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let v = random_load(&mut rng, C8_SAMPLES);
    let cfg = FeatureConfig::with_window(360);
    let mut ex = OnlineExtractor::new(cfg).unwrap();
    let mut sink = 0.0;
    let start = Instant::now();
    for &x in &v {
        sink += ex.push(x).unwrap()[12];
    }
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    let rate = C8_SAMPLES as f64 / secs;
    // minute data arrives at 1/60 samples per second
    let headroom = (rate * 60.0).log10();
    verdict(
        rate >= C8_MIN_RATE,
        format!(
            "window 360/90, {C8_SAMPLES} pushes in {secs:.2}s = {rate:.0} samples/s (>= {C8_MIN_RATE:.0}), \
             {headroom:.1} orders of magnitude over minute data, retained {} samples",
            ex.retained()
        ),
    )
}

fn main() {
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    type Criterion = (&'static str, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("C1", "streaming/batch equivalence", c1_streaming_equivalence),
        ("C2", "peak-counter oracle", c2_peak_oracle),
        ("C3", "metric arithmetic", c3_metrics),
        ("C6", "GBDT loss and split oracle", c6_gbdt_oracle),
        ("C7", "pipeline determinism", c7_determinism),
        ("C8", "streaming throughput", c8_throughput),
        ("C4", "end-to-end synthetic benchmark", c4_end_to_end),
        ("C5", "window-length trend", c5_window_trend),
    ];
    let mut ran = 0;
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if only.as_deref().is_some_and(|o| o != id) {
            continue;
        }
        let v = run();
        println!("{} {id} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        ran += 1;
        if !v.pass {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {}/{ran} passed{}",
        ran - failed.len(),
        if failed.is_empty() { String::new() } else { format!(", failing: {}", failed.join(" ")) }
    );
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
