use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{self, SavingsTable};
use crate::error::{Error, Result};
use crate::model::{standardize, DetectorConfig, SeriesMatrix};
use crate::penalty::{self, PenaltyFunction};

use super::metrics::{match_and_score, Score, DEFAULT_TOLERANCE};
use super::{generate, ScenarioSpec};

/// Seed of replicate `r` under base seed `base`: one SplitMix64 step from
/// `base + r * 0x9E3779B97F4A7C15` (wrapping).
pub fn replicate_seed(base: u64, r: u64) -> u64 {
    let mut z = base.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker pool for replicate loops, capped by `MVCAPA_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MVCAPA_THREADS") {
        let threads: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("MVCAPA_THREADS must be a count, got {v:?}")))?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Robustly standardize a generated series, as the command line does.
fn prepare(x: &SeriesMatrix) -> Result<SeriesMatrix> {
    Ok(standardize(x)?.0)
}

/// One point of a ROC sweep, pooled over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub scale: f64,
    /// True positives over true windows.
    pub tpr: f64,
    /// False-positive windows per series.
    pub fpr: f64,
    pub tp: usize,
    pub fp: usize,
    pub truth: usize,
    pub reps: usize,
}

/// Scores of one ROC replicate, one per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReplicate {
    pub scores: Vec<Score>,
    pub truth_windows: usize,
}

/// Detect on `reps` independent series drawn from `spec` at every penalty
/// scale in `scales` and keep the per-replicate matching scores.
///
/// Replicate `r` uses seed `replicate_seed(spec.seed, r)`. The penalty comes
/// from `cfg` with its scale replaced by each entry of `scales`. With a bounded
/// `cfg.max_len`, window savings are computed once per replicate.
pub fn roc_replicates(
    spec: &ScenarioSpec,
    cfg: &DetectorConfig,
    scales: &[f64],
    reps: usize,
) -> Result<Vec<RocReplicate>> {
    if reps == 0 {
        return Err(Error::Config("ROC needs at least one replicate".into()));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Config("penalty scales must be positive".into()));
    }
    spec.validate()?;
    let mut unit = cfg.clone();
    unit.penalty_scale = 1.0;
    unit.validate()?;
    let base = penalty::build(&unit, spec.p)?;
    let pool = thread_pool()?;
    pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| replicate_scores(spec, &unit, &base, scales, r))
            .collect()
    })
}

/// Pool replicate scores into one ROC point per scale.
pub fn pool_roc(scales: &[f64], replicates: &[RocReplicate]) -> Vec<RocPoint> {
    let reps = replicates.len();
    scales
        .iter()
        .enumerate()
        .map(|(j, &scale)| {
            let (mut tp, mut fp, mut truth) = (0, 0, 0);
            for rep in replicates {
                tp += rep.scores[j].tp;
                fp += rep.scores[j].fp;
                truth += rep.truth_windows;
            }
            RocPoint {
                scale,
                tpr: if truth > 0 {
                    tp as f64 / truth as f64
                } else {
                    0.0
                },
                fpr: if reps > 0 {
                    fp as f64 / reps as f64
                } else {
                    0.0
                },
                tp,
                fp,
                truth,
                reps,
            }
        })
        .collect()
}

/// Pooled ROC points over `reps` replicates; see [`roc_replicates`].
pub fn roc_curve(
    spec: &ScenarioSpec,
    cfg: &DetectorConfig,
    scales: &[f64],
    reps: usize,
) -> Result<Vec<RocPoint>> {
    Ok(pool_roc(scales, &roc_replicates(spec, cfg, scales, reps)?))
}

fn replicate_scores(
    spec: &ScenarioSpec,
    cfg: &DetectorConfig,
    base: &PenaltyFunction,
    scales: &[f64],
    r: u64,
) -> Result<RocReplicate> {
    let (raw, truth) = generate(&spec.with_seed(replicate_seed(spec.seed, r)))?;
    let x = prepare(&raw)?;
    let table = match cfg.max_len {
        Some(_) => Some(SavingsTable::new(&x, cfg, base.gamma())?),
        None => None,
    };
    let scores = scales
        .iter()
        .map(|&c| {
            let pen = base.scaled(c);
            let mut run_cfg = cfg.clone();
            run_cfg.penalty_scale = c;
            let result = match &table {
                Some(t) => t.detect(&x, &pen, &run_cfg)?,
                None => detector::detect(&x, &pen, &run_cfg)?,
            };
            Ok(match_and_score(&truth, &result, DEFAULT_TOLERANCE))
        })
        .collect::<Result<_>>()?;
    Ok(RocReplicate {
        scores,
        truth_windows: truth.windows.len(),
    })
}

/// Smallest scale above which detection on a replicate is empty; see
/// [`detector::critical_scale`].
pub fn critical_scale(x: &SeriesMatrix, cfg: &DetectorConfig) -> Result<f64> {
    let mut unit = cfg.clone();
    unit.penalty_scale = 1.0;
    let base = penalty::build(&unit, x.p())?;
    detector::critical_scale(x, &base, &unit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub scale: f64,
    /// Fraction of the calibration replicates with any detection at `scale`.
    pub achieved: f64,
    pub reps: usize,
    pub iterations: usize,
}

const CALIBRATION_STEPS: usize = 60;
const CALIBRATION_SLACK: f64 = 0.02;

/// Penalty scale at which the fraction of anomaly-free `n x p` replicates
/// with any collective or point detection is at most, and within 0.02 of,
/// `target`.
///
/// Each replicate's critical scale is computed once; the detection rate at
/// scale `c` is then the fraction of critical scales above `c`, and bisection
/// on `c` runs on those values. Replicate `r` uses `replicate_seed(seed, r)`.
pub fn calibrate_scale(
    n: usize,
    p: usize,
    target: f64,
    reps: usize,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Calibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!(
            "target rate must lie in (0, 1), got {target}"
        )));
    }
    if reps == 0 {
        return Err(Error::Config(
            "calibration needs at least one replicate".into(),
        ));
    }
    cfg.validate()?;
    let pool = thread_pool()?;
    let crit: Vec<f64> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let (raw, _) = generate(&ScenarioSpec::null(n, p, replicate_seed(seed, r)))?;
                critical_scale(&prepare(&raw)?, cfg)
            })
            .collect::<Result<_>>()
    })?;
    let rate = |c: f64| crit.iter().filter(|&&v| v > c).count() as f64 / reps as f64;

    let mut iterations = 0;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while rate(hi) > target {
        hi *= 2.0;
        iterations += 1;
        if iterations >= CALIBRATION_STEPS {
            return Err(Error::Calibration("no scale is conservative enough".into()));
        }
    }
    while rate(lo) <= target {
        lo /= 2.0;
        iterations += 1;
        if iterations >= CALIBRATION_STEPS {
            // Even tiny scales stay below target; the smallest tried is returned.
            break;
        }
    }
    while iterations < CALIBRATION_STEPS && hi / lo > 1.0 + 1e-9 {
        let mid = (lo * hi).sqrt();
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let achieved = rate(hi);
    if (achieved - target).abs() > CALIBRATION_SLACK {
        return Err(Error::Calibration(format!(
            "closest achievable rate is {achieved:.4} at scale {hi:.6}, target {target}"
        )));
    }
    Ok(Calibration {
        scale: hi,
        achieved,
        reps,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityRegime {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub rho: f64,
    pub regime: DensityRegime,
}

/// Detection boundary for a proportion exponent `xi`: for `xi > 1/2` (sparse)
/// `rho = xi - 1/2` up to `3/4` and `(1 - sqrt(1 - xi))^2` above; otherwise
/// (dense) `rho = 1/2 - xi`.
pub fn detection_boundary(xi: f64) -> Result<Boundary> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(xi));
    }
    Ok(if xi > 0.5 {
        let rho = if xi > 0.75 {
            (1.0 - (1.0 - xi).sqrt()).powi(2)
        } else {
            xi - 0.5
        };
        Boundary {
            rho,
            regime: DensityRegime::Sparse,
        }
    } else {
        Boundary {
            rho: 0.5 - xi,
            regime: DensityRegime::Dense,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeKind {
    /// Anomaly-free, p = 10, sizes are n.
    Null,
    /// Strong anomalies roughly every 100 steps, p = 10, sizes are n.
    Regular,
    /// Anomaly-free, n = 100, sizes are p.
    LargeP,
}

impl std::str::FromStr for RuntimeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Self::Null),
            "regular" | "regular-anomalies" => Ok(Self::Regular),
            "large-p" => Ok(Self::LargeP),
            other => Err(Error::Config(format!("unknown runtime kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeTable {
    pub kind: RuntimeKind,
    /// `(size, median seconds)`.
    pub rows: Vec<(usize, f64)>,
    /// Theil-Sen slope of `log2 seconds` against `log2 size`.
    pub slope: f64,
}

const RUNTIME_REPEATS: usize = 3;

fn runtime_scenario(kind: RuntimeKind, size: usize, seed: u64) -> ScenarioSpec {
    match kind {
        RuntimeKind::Null => ScenarioSpec::null(size, 10, seed),
        RuntimeKind::LargeP => ScenarioSpec::null(100, size, seed),
        RuntimeKind::Regular => ScenarioSpec {
            // Geometric gaps of mean 80 plus windows of mean length 20.
            anomaly_rate: 1.0 / 81.0,
            sigma_anom: 2.0 * 10f64.ln(),
            k_affected: super::Affected::Count(2),
            ..ScenarioSpec::null(size, 10, seed)
        },
    }
}

/// Median-of-three wall time of the default detector (composite penalty,
/// point anomalies on, no maximum length) per size, with a robust slope.
pub fn runtime_sweep(kind: RuntimeKind, sizes: &[usize], seed: u64) -> Result<RuntimeTable> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("sizes must be sorted".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Config("sizes must be positive".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let (x, _) = generate(&runtime_scenario(kind, size, seed))?;
        let cfg = DetectorConfig::default_for(x.n(), x.p());
        let pen = penalty::build(&cfg, x.p())?;
        let mut times = Vec::with_capacity(RUNTIME_REPEATS);
        for _ in 0..RUNTIME_REPEATS {
            let start = Instant::now();
            let r = detector::detect(&x, &pen, &cfg)?;
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(r);
        }
        times.sort_by(f64::total_cmp);
        rows.push((size, times[RUNTIME_REPEATS / 2]));
    }
    let logs: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(s, t)| ((s as f64).log2(), t.max(1e-9).log2()))
        .collect();
    Ok(RuntimeTable {
        kind,
        slope: theil_sen(&logs),
        rows,
    })
}

/// Median of pairwise slopes.
fn theil_sen(points: &[(f64, f64)]) -> f64 {
    let mut slopes = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if b.0 != a.0 {
                slopes.push((b.1 - a.1) / (b.0 - a.0));
            }
        }
    }
    if slopes.is_empty() {
        return f64::NAN;
    }
    slopes.sort_by(f64::total_cmp);
    let k = slopes.len();
    if k % 2 == 1 {
        slopes[k / 2]
    } else {
        (slopes[k / 2 - 1] + slopes[k / 2]) / 2.0
    }
}
