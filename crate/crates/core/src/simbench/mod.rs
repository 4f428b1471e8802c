//! Synthetic scenarios, scoring rules and Monte-Carlo experiments.

mod experiments;
mod metrics;

pub use experiments::{
    calibrate_scale, critical_scale, detection_boundary, pool_roc, replicate_seed, roc_curve,
    roc_replicates, runtime_sweep, thread_pool, Boundary, Calibration, DensityRegime, RocPoint,
    RocReplicate, RuntimeKind, RuntimeTable,
};
pub use metrics::{match_and_score, partial_auc, Score, DEFAULT_TOLERANCE};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SeriesMatrix;

/// How many components a collective anomaly affects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Affected {
    Count(usize),
    All,
}

impl Affected {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            Affected::Count(k) => k,
            Affected::All => p,
        }
    }
}

/// Parameters of a synthetic series: i.i.d. N(0, 1) noise plus collective
/// anomalies whose starts arrive geometrically and whose lengths are Poisson.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    /// Per-step probability of a window starting; 0 gives pure noise.
    pub anomaly_rate: f64,
    pub mean_length: f64,
    pub k_affected: Affected,
    /// Standard deviation of the anomalous means.
    pub sigma_anom: f64,
    pub max_true_lag: usize,
    pub point_count: usize,
    pub point_variance: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// One of the four standard settings with rate 0.001 and mean length 20:
    ///
    /// 1. one component, `sigma = 2 ln p`;
    /// 2. every component, `sigma = p^(-1/4)`;
    /// 3. `round(0.6 sqrt p)` components (2 for p = 10, 6 for p = 100),
    ///    `sigma = ln p`;
    /// 4. setting 3 with lags up to 10.
    pub fn setting(setting: u8, n: usize, p: usize, seed: u64) -> Result<Self> {
        let pf = p as f64;
        let (k, sigma, lag) = match setting {
            1 => (Affected::Count(1), 2.0 * pf.ln(), 0),
            2 => (Affected::All, pf.powf(-0.25), 0),
            3 | 4 => {
                let k = ((0.6 * pf.sqrt()).round() as usize).clamp(1, p.max(1));
                (
                    Affected::Count(k),
                    pf.ln(),
                    if setting == 4 { 10 } else { 0 },
                )
            }
            other => return Err(Error::Scenario(format!("unknown setting {other}"))),
        };
        Ok(Self {
            n,
            p,
            anomaly_rate: 0.001,
            mean_length: 20.0,
            k_affected: k,
            sigma_anom: sigma,
            max_true_lag: lag,
            point_count: 0,
            point_variance: 8.0 * pf.ln(),
            seed,
        })
    }

    /// Pure noise.
    pub fn null(n: usize, p: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            anomaly_rate: 0.0,
            mean_length: 20.0,
            k_affected: Affected::Count(1),
            sigma_anom: 0.0,
            max_true_lag: 0,
            point_count: 0,
            point_variance: 8.0 * (p.max(1) as f64).ln(),
            seed,
        }
    }

    /// Add `count` point anomalies with variance `8 ln p`.
    pub fn with_points(mut self, count: usize) -> Self {
        self.point_count = count;
        self.point_variance = 8.0 * (self.p.max(1) as f64).ln();
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Scenario("n and p must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.anomaly_rate) {
            return Err(Error::Scenario(format!(
                "anomaly rate must lie in [0, 1), got {}",
                self.anomaly_rate
            )));
        }
        if self.anomaly_rate > 0.0 {
            if !(self.mean_length.is_finite() && self.mean_length > 0.0) {
                return Err(Error::Scenario("mean length must be positive".into()));
            }
            let k = self.k_affected.resolve(self.p);
            if k == 0 || k > self.p {
                return Err(Error::Scenario(format!(
                    "cannot affect {k} of {} components",
                    self.p
                )));
            }
            if !(self.sigma_anom.is_finite() && self.sigma_anom >= 0.0) {
                return Err(Error::Scenario("sigma must be nonnegative".into()));
            }
        }
        if self.point_count > 0 && !(self.point_variance.is_finite() && self.point_variance > 0.0) {
            return Err(Error::Scenario("point variance must be positive".into()));
        }
        Ok(())
    }
}

/// A planted window `(start, end]`; component `components[j]` is shifted by
/// `means[j]` over `(start + start_lags[j], end - end_lags[j]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueWindow {
    pub start: usize,
    pub end: usize,
    pub components: Vec<usize>,
    pub start_lags: Vec<usize>,
    pub end_lags: Vec<usize>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePoint {
    pub time: usize,
    pub components: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub windows: Vec<TrueWindow>,
    pub points: Vec<TruePoint>,
}

const MIN_WINDOW: usize = 2;

/// Draw a series and its ground truth; deterministic given `spec.seed`.
///
/// Window starts follow geometric gaps after the previous window's end, so
/// windows never overlap. Lengths are Poisson, redrawn below 2. Lag pairs are
/// redrawn until `d + f` is below the window length. Point anomalies land on
/// distinct times outside every window and shift one random component.
pub fn generate(spec: &ScenarioSpec) -> Result<(SeriesMatrix, GroundTruth)> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values: Vec<f64> = (0..n * p)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut truth = GroundTruth::default();

    if spec.anomaly_rate > 0.0 {
        let gaps = Geometric::new(spec.anomaly_rate)
            .map_err(|e| Error::Scenario(format!("bad geometric rate: {e}")))?;
        let lengths = Poisson::new(spec.mean_length)
            .map_err(|e| Error::Scenario(format!("bad mean length: {e}")))?;
        let means = Normal::new(0.0, spec.sigma_anom)
            .map_err(|e| Error::Scenario(format!("bad sigma: {e}")))?;
        let k = spec.k_affected.resolve(p);
        let w = spec.max_true_lag;
        let mut pos = 0usize;
        loop {
            let gap = gaps.sample(&mut rng);
            let len = loop {
                let l = lengths.sample(&mut rng) as usize;
                if l >= MIN_WINDOW {
                    break l;
                }
            };
            let Some(start) = usize::try_from(gap).ok().and_then(|g| pos.checked_add(g)) else {
                break;
            };
            let end = start.saturating_add(len);
            if end > n {
                break;
            }
            let mut components = sample(&mut rng, p, k).into_vec();
            components.sort_unstable();
            let mut window = TrueWindow {
                start,
                end,
                components: Vec::with_capacity(k),
                start_lags: Vec::with_capacity(k),
                end_lags: Vec::with_capacity(k),
                means: Vec::with_capacity(k),
            };
            for i in components {
                let (d, f) = loop {
                    let d = rng.gen_range(0..=w);
                    let f = rng.gen_range(0..=w);
                    if d + f < len {
                        break (d, f);
                    }
                };
                let mu: f64 = means.sample(&mut rng);
                for row in start + d..end - f {
                    values[row * p + i] += mu;
                }
                window.components.push(i);
                window.start_lags.push(d);
                window.end_lags.push(f);
                window.means.push(mu);
            }
            truth.windows.push(window);
            pos = end;
        }
    }

    if spec.point_count > 0 {
        let free: Vec<usize> = (1..=n)
            .filter(|&t| !truth.windows.iter().any(|w| w.start < t && t <= w.end))
            .collect();
        if free.len() < spec.point_count {
            return Err(Error::Scenario(format!(
                "only {} times are free for {} point anomalies",
                free.len(),
                spec.point_count
            )));
        }
        let spread = Normal::new(0.0, spec.point_variance.sqrt())
            .map_err(|e| Error::Scenario(format!("bad point variance: {e}")))?;
        let mut picks: Vec<usize> = sample(&mut rng, free.len(), spec.point_count)
            .into_iter()
            .map(|j| free[j])
            .collect();
        picks.sort_unstable();
        for t in picks {
            let i = rng.gen_range(0..p);
            let shift: f64 = spread.sample(&mut rng);
            values[(t - 1) * p + i] += shift;
            truth.points.push(TruePoint {
                time: t,
                components: vec![i],
            });
        }
    }

    Ok((SeriesMatrix::from_row_major(n, p, values)?, truth))
}

/// Noise plus the given fixed windows, for controlled experiments.
pub fn generate_planted(
    n: usize,
    p: usize,
    windows: &[TrueWindow],
    seed: u64,
) -> Result<(SeriesMatrix, GroundTruth)> {
    let mut sorted = windows.to_vec();
    sorted.sort_by_key(|w| w.start);
    for pair in sorted.windows(2) {
        if pair[0].end > pair[1].start {
            return Err(Error::Scenario("planted windows overlap".into()));
        }
    }
    for w in &sorted {
        let k = w.components.len();
        if w.end > n || w.end < w.start + MIN_WINDOW {
            return Err(Error::Scenario(format!(
                "window ({}, {}] does not fit",
                w.start, w.end
            )));
        }
        if w.start_lags.len() != k || w.end_lags.len() != k || w.means.len() != k {
            return Err(Error::Scenario(
                "window fields have different lengths".into(),
            ));
        }
        if w.components.iter().any(|&i| i >= p) {
            return Err(Error::Scenario("window names a missing component".into()));
        }
        if w.start_lags
            .iter()
            .zip(&w.end_lags)
            .any(|(d, f)| d + f >= w.end - w.start)
        {
            return Err(Error::Scenario(
                "lags leave no anomalous observation".into(),
            ));
        }
    }
    let (noise, _) = generate(&ScenarioSpec::null(n, p, seed))?;
    let mut values = noise.values().to_vec();
    for w in &sorted {
        for j in 0..w.components.len() {
            for row in w.start + w.start_lags[j]..w.end - w.end_lags[j] {
                values[row * p + w.components[j]] += w.means[j];
            }
        }
    }
    let truth = GroundTruth {
        windows: sorted,
        points: Vec::new(),
    };
    Ok((SeriesMatrix::from_row_major(n, p, values)?, truth))
}

/// The two-window illustration: `n = 500`, `p = 5`, windows `(150, 200]` on
/// components 0, 1, 2 and `(350, 400]` on components 2, 3, all shifted by 2.
/// With `lagged`, components start and stop at staggered times.
pub fn illustration_windows(lagged: bool) -> Vec<TrueWindow> {
    let lags = |v: &[usize]| if lagged { v.to_vec() } else { vec![0; v.len()] };
    vec![
        TrueWindow {
            start: 150,
            end: 200,
            components: vec![0, 1, 2],
            start_lags: lags(&[0, 4, 8]),
            end_lags: lags(&[6, 0, 3]),
            means: vec![2.0; 3],
        },
        TrueWindow {
            start: 350,
            end: 400,
            components: vec![2, 3],
            start_lags: lags(&[5, 0]),
            end_lags: lags(&[0, 7]),
            means: vec![2.0; 2],
        },
    ]
}
