//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use mvcapa::chisq;
use mvcapa::penalty::{self, PenaltyFunction};
use mvcapa::savings::{penalised_saving, PrefixSums};
use mvcapa::simbench::{
    calibrate_scale, critical_scale, generate, generate_planted, match_and_score, partial_auc,
    pool_roc, replicate_seed, roc_curve, roc_replicates, runtime_sweep, RocReplicate, RuntimeKind,
    ScenarioSpec, TrueWindow, DEFAULT_TOLERANCE,
};
use mvcapa::{detect, standardize, DetectorConfig, Regime, SeriesMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{anomalies_of, exhaustive, naive_lagged, subset_max, Search};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn standardized(x: &SeriesMatrix) -> SeriesMatrix {
    standardize(x).expect("gaussian data has positive spread").0
}

fn random_penalty(rng: &mut ChaCha8Rng, p: usize, gamma: f64) -> PenaltyFunction {
    let beta_prime = rng.gen_range(1.0..10.0);
    let pen = if rng.gen_bool(0.25) {
        let alpha = rng.gen_range(0.0..6.0);
        let beta = rng.gen_range(0.2..4.0);
        PenaltyFunction::from_alpha_beta(alpha, vec![beta; p], beta_prime, Regime::R2)
    } else {
        let mut acc = rng.gen_range(0.5..8.0);
        let mut cum = Vec::with_capacity(p);
        for _ in 0..p {
            cum.push(acc);
            acc += rng.gen_range(0.1..6.0);
        }
        PenaltyFunction::from_cumulative(cum, beta_prime, Regime::Composite)
    };
    pen.expect("valid penalty").with_gamma(gamma)
}

fn exactness() -> Outcome {
    let start = Instant::now();
    let (mut value_fail, mut partition_fail, mut detail_fail, mut ties) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for case in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE ^ case);
        let n = rng.gen_range(2..=12);
        let p = rng.gen_range(1..=3);
        let w = rng.gen_range(0..=1);
        let points = rng.gen_bool(0.5);
        let l = if points {
            rng.gen_range(2..=3)
        } else {
            rng.gen_range(1..=3)
        };
        let max_len = rng.gen_bool(0.5).then(|| rng.gen_range(l..=n.max(l)));
        let mut values: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let shift = rng.gen_range(-3.0..3.0);
        for row in a.min(b)..=a.max(b) {
            values[row * p + rng.gen_range(0..p)] += shift;
        }
        let x = SeriesMatrix::from_row_major(n, p, values).unwrap();
        let gamma = if w > 0 { rng.gen_range(0.1..3.0) } else { 0.0 };
        let pen = random_penalty(&mut rng, p, gamma);
        let mut cfg = DetectorConfig::default_for(n, p);
        cfg.min_len = l;
        cfg.max_len = max_len;
        cfg.max_lag = w;
        cfg.enable_point_anomalies = points;
        cfg.gamma = Some(gamma);

        let r = detect(&x, &pen, &cfg).unwrap();
        let search = Search {
            min_len: l,
            max_len,
            max_lag: w,
            points,
        };
        let ex = exhaustive(&x, &pen, search, 1e-9);
        let err = (r.objective - ex.best).abs();
        worst = worst.max(err);
        if err > 1e-9 * ex.best.abs().max(1.0) {
            value_fail += 1;
            continue;
        }
        if ex.distinct_optima > 1 {
            ties += 1;
        }
        let (windows, pts) = anomalies_of(&ex.preferred);
        let got_windows: Vec<_> = r.collective.iter().map(|c| (c.start, c.end)).collect();
        let got_points: Vec<_> = r.points.iter().map(|p| p.time).collect();
        if windows != got_windows || pts != got_points {
            partition_fail += 1;
            continue;
        }
        for c in &r.collective {
            let lagged: Vec<_> = (0..p)
                .map(|i| naive_lagged(&x, i, c.start, c.end, w, l, gamma))
                .collect();
            let savings: Vec<f64> = lagged.iter().map(|s| s.0).collect();
            let (_, set) = subset_max(&savings, &pen);
            let lags_ok = set.iter().enumerate().all(|(j, &i)| {
                c.start_lags.get(j) == Some(&lagged[i].1) && c.end_lags.get(j) == Some(&lagged[i].2)
            });
            if set != c.components || !lags_ok {
                detail_fail += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        value_fail + partition_fail + detail_fail == 0 && elapsed < Duration::from_secs(60),
        format!(
            "500 cases, objective mismatches {value_fail}, partition mismatches {partition_fail}, \
             component/lag mismatches {detail_fail}, cases with tied optima {ties}, \
             max |error| {worst:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn pruning_safety() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let (mut pruned, mut seen) = (0usize, 0.0f64);
    for seed in 0..100u64 {
        let setting = (seed % 4 + 1) as u8;
        let mut spec = ScenarioSpec::setting(setting, 300, 5, seed)
            .unwrap()
            .with_points(2);
        spec.anomaly_rate = 0.01;
        if setting == 4 {
            spec.max_true_lag = 5;
        }
        let (raw, _) = generate(&spec).unwrap();
        let x = standardized(&raw);
        let mut cfg = DetectorConfig::default_for(300, 5);
        if setting == 4 {
            cfg.max_lag = 5;
            cfg.regime = Regime::R2Lag;
        }
        let pen = penalty::build(&cfg, 5).unwrap();
        let fast = detect(&x, &pen, &cfg).unwrap();
        cfg.pruning = false;
        let full = detect(&x, &pen, &cfg).unwrap();
        if !fast.same_anomalies(&full) {
            mismatches += 1;
        }
        pruned += fast.diagnostics.pruned;
        seen += fast.diagnostics.mean_candidates() / full.diagnostics.mean_candidates();
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!(
            "100 seeds, {mismatches} differing results, {pruned} candidates pruned, \
             mean candidate ratio {:.3}, {:.1}s",
            seen / 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

fn subset_optimality() -> Outcome {
    let mut mismatches = 0;
    let mut real_worst = 0.0f64;
    for case in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5B5E7 ^ case);
        let p = rng.gen_range(1..=10);
        // Quarter-integer savings and penalties keep every sum exact.
        let savings: Vec<f64> = (0..p).map(|_| rng.gen_range(0..64) as f64 / 4.0).collect();
        let pen = if rng.gen_bool(0.3) {
            let alpha = rng.gen_range(0..24) as f64 / 4.0;
            let beta = rng.gen_range(1..24) as f64 / 4.0;
            PenaltyFunction::from_alpha_beta(alpha, vec![beta; p], 1.0, Regime::R2)
        } else {
            let mut acc = rng.gen_range(1..24) as f64 / 4.0;
            let mut cum = Vec::with_capacity(p);
            for _ in 0..p {
                cum.push(acc);
                acc += rng.gen_range(0..24) as f64 / 4.0;
            }
            PenaltyFunction::from_cumulative(cum, 1.0, Regime::Composite)
        }
        .unwrap();
        let got = penalised_saving(&savings, &pen);
        let (value, set) = subset_max(&savings, &pen);
        if got.value != value || got.components != set || got.k != set.len() {
            mismatches += 1;
        }
        // General reals, checked to rounding.
        let savings: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..20.0)).collect();
        let got = penalised_saving(&savings, &pen);
        let (value, _) = subset_max(&savings, &pen);
        real_worst = real_worst.max((got.value - value).abs());
    }
    outcome(
        mismatches == 0 && real_worst <= 1e-12,
        format!(
            "10000 exact cases with {mismatches} mismatches; real-valued max |error| {real_worst:.1e}"
        ),
    )
}

fn null_fp_control() -> Outcome {
    let (n, p, reps) = (500, 20, 500u64);
    let cfg = DetectorConfig::default_for(n, p);
    let pen = penalty::build(&cfg, p).unwrap();
    let (mut hits, mut disagreements) = (0, 0);
    for r in 0..reps {
        let (raw, _) = generate(&ScenarioSpec::null(n, p, replicate_seed(0xF0, r))).unwrap();
        let x = standardized(&raw);
        let found = !detect(&x, &pen, &cfg).unwrap().is_empty();
        if found {
            hits += 1;
        }
        if found != (critical_scale(&x, &cfg).unwrap() > 1.0) {
            disagreements += 1;
        }
    }
    let rate = hits as f64 / reps as f64;
    let mut detail = format!(
        "raw composite penalty: {hits}/{reps} null series with detections (rate {rate:.4}, bar 0.05); \
         critical-scale disagreements {disagreements}"
    );
    let mut pass = rate <= 0.05 && disagreements == 0;
    if rate > 0.05 {
        match calibrate_scale(n, p, 0.05, 500, &cfg, 0xCA1) {
            Ok(c) => {
                detail += &format!(
                    "; calibrated scale {:.4} achieves {:.3}",
                    c.scale, c.achieved
                );
                pass = disagreements == 0;
            }
            Err(e) => detail += &format!("; calibration failed: {e}"),
        }
    }
    outcome(pass, detail)
}

fn simulation_config(n: usize, p: usize) -> DetectorConfig {
    let mut cfg = DetectorConfig::default_for(n, p);
    cfg.max_len = Some(100);
    cfg
}

fn power() -> Outcome {
    let (n, p) = (1000, 10);
    let cfg = simulation_config(n, p);
    let cal = match calibrate_scale(n, p, 0.05, 500, &cfg, 0xB0B) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("calibration failed: {e}")),
    };
    let spec = ScenarioSpec::setting(1, n, p, 0x5E7).unwrap();
    let pts = roc_curve(&spec, &cfg, &[cal.scale, 1.0], 200).unwrap();
    let at_cal = &pts[0];
    outcome(
        at_cal.tpr >= 0.9,
        format!(
            "calibrated scale {:.4} (null rate {:.3}); detection rate {:.3} ({}/{} windows, \
             {:.3} false positives per series); at scale 1: {:.3}",
            cal.scale, cal.achieved, at_cal.tpr, at_cal.tp, at_cal.truth, at_cal.fpr, pts[1].tpr
        ),
    )
}

fn consistency() -> Outcome {
    let (n, p) = (2000, 10);
    let mut cfg = DetectorConfig::default_for(n, p);
    cfg.regime = Regime::Theorem1;
    let pen = penalty::build(&cfg, p).unwrap();
    let mut good = 0;
    let mut worst_error = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(0xC0, seed));
        let windows: Vec<TrueWindow> = [300, 900, 1500]
            .iter()
            .map(|&start| {
                let mut components = sample(&mut rng, p, 3).into_vec();
                components.sort_unstable();
                TrueWindow {
                    start,
                    end: start + 50,
                    components,
                    start_lags: vec![0; 3],
                    end_lags: vec![0; 3],
                    means: vec![3.0; 3],
                }
            })
            .collect();
        let (raw, truth) = generate_planted(n, p, &windows, rng.gen()).unwrap();
        let r = detect(&standardized(&raw), &pen, &cfg).unwrap();
        let score = match_and_score(&truth, &r, DEFAULT_TOLERANCE);
        if r.collective.len() == 3 && score.tp == 3 {
            good += 1;
        }
        for c in &r.collective {
            if let Some(t) = truth
                .windows
                .iter()
                .min_by_key(|t| t.start.abs_diff(c.start))
            {
                worst_error = worst_error.max(t.start.abs_diff(c.start).max(t.end.abs_diff(c.end)));
            }
        }
    }
    let rate = good as f64 / 200.0;
    outcome(
        rate >= 0.9,
        format!(
            "{good}/200 runs with exactly 3 windows all within 20 (rate {rate:.3}); \
             largest endpoint error {worst_error}"
        ),
    )
}

fn auc_of(scales: &[f64], reps: &[RocReplicate], cap: f64) -> f64 {
    let pts: Vec<(f64, f64)> = pool_roc(scales, reps)
        .iter()
        .map(|p| (p.fpr, p.tpr))
        .collect();
    partial_auc(&pts, cap)
}

fn lag_benefit() -> Outcome {
    let start = Instant::now();
    let (n, p, reps) = (2000, 10, 200);
    let spec = ScenarioSpec::setting(4, n, p, 0x1A6).unwrap();
    let scales: Vec<f64> = (0..25).map(|j| 0.1 * 1.25f64.powi(j)).collect();
    let run = |w: usize| {
        let mut cfg = simulation_config(n, p);
        if w > 0 {
            cfg.max_lag = w;
            cfg.regime = Regime::R2Lag;
        }
        roc_replicates(&spec, &cfg, &scales, reps).unwrap()
    };
    let (r0, r10, r20) = (run(0), run(10), run(20));
    let cap = 1.0;
    let (a0, a10, a20) = (
        auc_of(&scales, &r0, cap),
        auc_of(&scales, &r10, cap),
        auc_of(&scales, &r20, cap),
    );
    // Paired bootstrap over replicates.
    let mut rng = ChaCha8Rng::seed_from_u64(0xB007);
    let mut diffs = Vec::with_capacity(1000);
    let mut over = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let idx: Vec<usize> = (0..reps).map(|_| rng.gen_range(0..reps)).collect();
        let pick = |r: &[RocReplicate]| idx.iter().map(|&i| r[i].clone()).collect::<Vec<_>>();
        let b0 = auc_of(&scales, &pick(&r0), cap);
        diffs.push(auc_of(&scales, &pick(&r10), cap) - b0);
        over.push(auc_of(&scales, &pick(&r20), cap) - b0);
    }
    diffs.sort_by(f64::total_cmp);
    over.sort_by(f64::total_cmp);
    let lower = diffs[49];
    outcome(
        a10 > a0 && lower > 0.0 && a20 < a10 && a20 > a0,
        format!(
            "partial AUC (FP per series <= {cap}): w=0 {a0:.4}, w=10 {a10:.4}, w=20 {a20:.4}; \
             bootstrap 5% bound on AUC(w=10) - AUC(w=0): {lower:.4}; \
             90% interval of AUC(w=20) - AUC(w=0): [{:.4}, {:.4}]; {:.0}s",
            over[49],
            over[949],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn null_saving_distribution() -> Outcome {
    let reps = 10_000u64;
    let mut savings: Vec<f64> = (0..reps)
        .map(|r| {
            let (x, _) = generate(&ScenarioSpec::null(40, 1, replicate_seed(0x8, r))).unwrap();
            mvcapa::savings::component_saving(&PrefixSums::new(&x), 0, 7, 32).unwrap()
        })
        .collect();
    savings.sort_by(f64::total_cmp);
    let nf = reps as f64;
    let mut ks = 0.0f64;
    for (i, &s) in savings.iter().enumerate() {
        let cdf = 1.0 - chisq::survival(s);
        ks = ks
            .max((cdf - i as f64 / nf).abs())
            .max(((i + 1) as f64 / nf - cdf).abs());
    }
    let critical = 1.6276 / nf.sqrt();
    outcome(
        ks < critical,
        format!("KS statistic {ks:.5} against 1% critical value {critical:.5} over {reps} savings"),
    )
}

fn runtime_slopes() -> Outcome {
    let sweeps = [
        (
            RuntimeKind::Null,
            (9..=13).map(|e| 1usize << e).collect::<Vec<_>>(),
            1.6,
            2.4,
        ),
        (
            RuntimeKind::Regular,
            (9..=13).map(|e| 1usize << e).collect(),
            0.7,
            1.5,
        ),
        (
            RuntimeKind::LargeP,
            (4..=10).map(|e| 1usize << e).collect(),
            0.7,
            1.3,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, sizes, lo, hi) in sweeps {
        let start = Instant::now();
        let t = runtime_sweep(kind, &sizes, 0x9).unwrap();
        let elapsed = start.elapsed();
        let ok = (lo..=hi).contains(&t.slope) && elapsed < Duration::from_secs(600);
        pass &= ok;
        parts.push(format!(
            "{kind:?} slope {:.3} in [{lo}, {hi}] {} ({:.1}s)",
            t.slope,
            if ok { "ok" } else { "NOT MET" },
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn penalty_curves() -> Outcome {
    let mut composite_exact = true;
    for p in [1, 2, 5, 10, 50, 100, 500] {
        for psi in [1.0, 5.0, 2.0 * 1e4f64.ln(), 40.0] {
            let c = penalty::composite(p, psi, 0.05).unwrap();
            let r1 = penalty::regime1(p, psi).unwrap();
            let r2 = penalty::regime2(p, psi, 0.05).unwrap();
            let r3 = penalty::regime3(p, psi).unwrap();
            for k in 1..=p {
                if c.at(k) != r1.at(k).min(r2.at(k)).min(r3.at(k)) {
                    composite_exact = false;
                }
            }
        }
    }
    let mut worst_rt = 0.0f64;
    for j in 1..=1000 {
        let q = j as f64 / 1000.0;
        let a = chisq::quantile(q).unwrap();
        worst_rt = worst_rt.max((chisq::survival(a) - q).abs());
    }
    for p in [10, 100, 500] {
        for m in 1..=p {
            let q = m as f64 / p as f64;
            let a = chisq::quantile(q).unwrap();
            worst_rt = worst_rt.max((chisq::survival(a) - q).abs());
        }
    }
    let (p, psi) = (500, 2.0 * 1e4f64.ln());
    let r1 = penalty::regime1(p, psi).unwrap();
    let r2 = penalty::regime2(p, psi, 0.05).unwrap();
    let r3 = penalty::regime3(p, psi).unwrap();
    let cheapest = |k: usize| {
        let v = [r1.at(k), r2.at(k), r3.at(k)];
        (0..3).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap() + 1
    };
    let small_k = (1..=5).all(|k| cheapest(k) == 2);
    let large_k = cheapest(p) == 1;
    let r2_end = (1..=p).rev().find(|&k| cheapest(k) == 2).unwrap_or(0);
    let r1_start = (1..=p).find(|&k| cheapest(k) == 1).unwrap_or(0);
    outcome(
        composite_exact && worst_rt <= 1e-9 && small_k && large_k,
        format!(
            "composite is the exact minimum: {composite_exact}; quantile round-trip max error \
             {worst_rt:.1e}; p=500: regime 2 cheapest up to k={r2_end}, regime 1 cheapest from \
             k={r1_start}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exactness against exhaustive search", exactness),
        ("pruning safety", pruning_safety),
        ("subset optimality of top-k", subset_optimality),
        ("null false-positive control", null_fp_control),
        ("power in the single-component setting", power),
        ("consistency with three strong windows", consistency),
        ("lag benefit", lag_benefit),
        ("null saving distribution", null_saving_distribution),
        ("runtime slopes", runtime_slopes),
        ("penalty curves", penalty_curves),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let o = run();
        println!(
            "criterion {id:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria met");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
