//! Domain types shared by the savings, penalty and detector modules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consistency constant for the MAD under Gaussian data.
pub const MAD_SCALE: f64 = 1.4826;

/// An `n x p` matrix of finite observations, rows indexed by time.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl SeriesMatrix {
    /// Build from row-major values.
    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidSeries(format!(
                "need at least one row and one column, got {n} x {p}"
            )));
        }
        if values.len() != n * p {
            return Err(Error::InvalidSeries(format!(
                "expected {} values for {n} x {p}, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidSeries(format!(
                "row {bad} has {} columns, expected {p}",
                rows[bad].len()
            )));
        }
        Self::from_row_major(rows.len(), p, rows.concat())
    }

    /// Build from a list of columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidSeries("columns differ in length".into()));
        }
        let mut values = Vec::with_capacity(n * p);
        for t in 0..n {
            values.extend(columns.iter().map(|c| c[t]));
        }
        Self::from_row_major(n, p, values)
    }

    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        Self::from_row_major(n, p, vec![0.0; n * p])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Entry at 0-based `row` and `component`.
    #[inline]
    pub fn get(&self, row: usize, component: usize) -> f64 {
        self.values[row * self.p + component]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, component: usize, value: f64) {
        self.values[row * self.p + component] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.p..(row + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn column(&self, component: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.get(t, component)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-component typical location and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustBaseline {
    pub mu0: Vec<f64>,
    pub sigma0: Vec<f64>,
}

impl RobustBaseline {
    pub fn new(mu0: Vec<f64>, sigma0: Vec<f64>) -> Result<Self> {
        if mu0.len() != sigma0.len() {
            return Err(Error::Config(format!(
                "baseline has {} locations but {} scales",
                mu0.len(),
                sigma0.len()
            )));
        }
        if let Some(i) = sigma0.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config(format!(
                "scale of component {i} must be positive, got {}",
                sigma0[i]
            )));
        }
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("baseline locations must be finite".into()));
        }
        Ok(Self { mu0, sigma0 })
    }

    /// The known baseline of standard normal noise.
    pub fn standard(p: usize) -> Self {
        Self {
            mu0: vec![0.0; p],
            sigma0: vec![1.0; p],
        }
    }

    /// Map `x` to `(x - mu0) / sigma0` componentwise.
    pub fn apply(&self, x: &SeriesMatrix) -> Result<SeriesMatrix> {
        if self.mu0.len() != x.p() {
            return Err(Error::Config(format!(
                "baseline covers {} components, series has {}",
                self.mu0.len(),
                x.p()
            )));
        }
        let mut out = x.clone();
        for t in 0..x.n() {
            for i in 0..x.p() {
                out.set(t, i, (x.get(t, i) - self.mu0[i]) / self.sigma0[i]);
            }
        }
        Ok(out)
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Estimate each component's median and MAD-based scale, and return the
/// standardized matrix together with the baseline.
///
/// On very short series the scale is only a rough estimate; a two-point column
/// `[-1, 1]` yields `sigma0 = 1.4826`, not 1.
pub fn standardize(x: &SeriesMatrix) -> Result<(SeriesMatrix, RobustBaseline)> {
    if x.n() < 2 {
        return Err(Error::InvalidSeries(
            "at least two observations are needed to estimate a baseline".into(),
        ));
    }
    let mut mu0 = Vec::with_capacity(x.p());
    let mut sigma0 = Vec::with_capacity(x.p());
    for i in 0..x.p() {
        let mut col = x.column(i);
        let med = median(&mut col);
        let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&mut dev);
        if mad <= 0.0 {
            return Err(Error::DegenerateScale { component: i });
        }
        mu0.push(med);
        sigma0.push(MAD_SCALE * mad);
    }
    let baseline = RobustBaseline { mu0, sigma0 };
    let z = baseline.apply(x)?;
    Ok((z, baseline))
}

/// Penalty regime used to build the cumulative penalty curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    #[serde(rename = "1")]
    R1,
    #[serde(rename = "2")]
    R2,
    #[serde(rename = "3")]
    R3,
    Composite,
    #[serde(rename = "2lag")]
    R2Lag,
    Theorem1,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::R1 => "1",
            Regime::R2 => "2",
            Regime::R3 => "3",
            Regime::Composite => "composite",
            Regime::R2Lag => "2lag",
            Regime::Theorem1 => "theorem1",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "r1" => Ok(Regime::R1),
            "2" | "r2" => Ok(Regime::R2),
            "3" | "r3" => Ok(Regime::R3),
            "composite" => Ok(Regime::Composite),
            "2lag" | "2'" | "r2lag" => Ok(Regime::R2Lag),
            "theorem1" => Ok(Regime::Theorem1),
            other => Err(Error::Config(format!("unknown penalty regime {other:?}"))),
        }
    }
}

/// Settings for one detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum collective anomaly length `l`.
    pub min_len: usize,
    /// Maximum collective anomaly length `M`; `None` is unbounded.
    pub max_len: Option<usize>,
    /// Maximum per-component lag `w`.
    pub max_lag: usize,
    /// Exponent of the false-positive probability bound.
    pub psi: f64,
    pub epsilon: f64,
    /// Multiplies alpha, every beta and the point penalty.
    pub penalty_scale: f64,
    pub enable_point_anomalies: bool,
    pub regime: Regime,
    /// Explicit lag penalty; overrides the regime-derived value.
    pub gamma: Option<f64>,
    /// Constant of the consistency-theorem penalty.
    pub theorem1_c: f64,
    /// Discard provably suboptimal start candidates.
    pub pruning: bool,
}

impl DetectorConfig {
    /// Defaults for an `n x p` series: `l = 2`, unbounded `M`, no lags, point
    /// anomalies on, composite regime and `psi = 2 ln n + 2 ln p`.
    pub fn default_for(n: usize, p: usize) -> Self {
        Self {
            min_len: 2,
            max_len: None,
            max_lag: 0,
            psi: default_psi(n, p),
            epsilon: 0.05,
            penalty_scale: 1.0,
            enable_point_anomalies: true,
            regime: Regime::Composite,
            gamma: None,
            theorem1_c: 2.0,
            pruning: true,
        }
    }

    /// Check the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 1 {
            return Err(Error::Config("minimum length must be at least 1".into()));
        }
        if let Some(m) = self.max_len {
            if m < self.min_len {
                return Err(Error::Config(format!(
                    "maximum length {m} is below the minimum length {}",
                    self.min_len
                )));
            }
        }
        if !(self.psi.is_finite() && self.psi >= 0.0) {
            return Err(Error::Config(format!(
                "psi must be nonnegative, got {}",
                self.psi
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.penalty_scale.is_finite() && self.penalty_scale > 0.0) {
            return Err(Error::Config(format!(
                "penalty scale must be positive, got {}",
                self.penalty_scale
            )));
        }
        if !(self.theorem1_c.is_finite() && self.theorem1_c > 0.0) {
            return Err(Error::Config("theorem-1 constant must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if g.is_nan() || g < 0.0 {
                return Err(Error::Config(format!("gamma must be nonnegative, got {g}")));
            }
        }
        if self.max_lag > 0 && self.regime != Regime::R2Lag && self.gamma.is_none() {
            return Err(Error::Config(
                "lags require regime 2lag or an explicit gamma".into(),
            ));
        }
        if self.enable_point_anomalies && self.min_len < 2 {
            return Err(Error::Config(
                "point anomalies need a minimum collective length of at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// `2 ln n + 2 ln p`.
pub fn default_psi(n: usize, p: usize) -> f64 {
    2.0 * (n.max(1) as f64).ln() + 2.0 * (p.max(1) as f64).ln()
}

/// A detected window `(start, end]` on the components in `components`.
///
/// Component `components[j]` is anomalous over
/// `(start + start_lags[j], end - end_lags[j]]` with mean `means[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveAnomaly {
    pub start: usize,
    pub end: usize,
    pub components: Vec<usize>,
    pub start_lags: Vec<usize>,
    pub end_lags: Vec<usize>,
    pub means: Vec<f64>,
    /// Penalised saving of the window.
    pub saving: f64,
}

impl CollectiveAnomaly {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Whether 1-based time `t` lies in `(start, end]`.
    pub fn contains(&self, t: usize) -> bool {
        self.start < t && t <= self.end
    }
}

/// A single-time outlier; `hits` holds `(component, squared residual)` for
/// every component whose squared residual exceeded the point penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAnomaly {
    pub time: usize,
    pub hits: Vec<(usize, f64)>,
    pub saving: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Number of start candidates examined at each step `m = 1..=n`.
    pub candidates: Vec<usize>,
    /// Number of candidates discarded by pruning.
    pub pruned: usize,
}

impl Diagnostics {
    pub fn mean_candidates(&self) -> f64 {
        if self.candidates.is_empty() {
            0.0
        } else {
            self.candidates.iter().sum::<usize>() as f64 / self.candidates.len() as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub collective: Vec<CollectiveAnomaly>,
    pub points: Vec<PointAnomaly>,
    /// Optimal penalised saving `C(n)`.
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

impl DetectionResult {
    pub fn is_empty(&self) -> bool {
        self.collective.is_empty() && self.points.is_empty()
    }

    /// Same anomalies and objective, ignoring diagnostics.
    pub fn same_anomalies(&self, other: &Self) -> bool {
        self.collective == other.collective
            && self.points == other.points
            && self.objective == other.objective
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Overlap { first: usize, second: usize },
    PointInsideWindow { time: usize, window: usize },
    TooShort { window: usize },
    OutOfBounds { window: usize },
    EmptyComponents { window: usize },
    UnsortedComponents { window: usize },
    FieldLength { window: usize },
    LagOutOfRange { window: usize, component: usize },
    LaggedTooShort { window: usize, component: usize },
    PointOutOfBounds { time: usize },
    PointsUnordered { time: usize },
    PointBelowThreshold { time: usize },
    NegativeObjective(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { first, second } => {
                write!(
                    f,
                    "overlap: windows {first} and {second} intersect or are unordered"
                )
            }
            Violation::PointInsideWindow { time, window } => {
                write!(f, "point inside window: t={time} lies in window {window}")
            }
            Violation::TooShort { window } => write!(f, "window {window} is shorter than l"),
            Violation::OutOfBounds { window } => write!(f, "window {window} exceeds (0, n]"),
            Violation::EmptyComponents { window } => {
                write!(f, "window {window} has no affected components")
            }
            Violation::UnsortedComponents { window } => {
                write!(f, "window {window} components are not strictly increasing")
            }
            Violation::FieldLength { window } => {
                write!(
                    f,
                    "window {window} lag or mean vectors do not match its components"
                )
            }
            Violation::LagOutOfRange { window, component } => {
                write!(f, "window {window} component {component} lag exceeds w")
            }
            Violation::LaggedTooShort { window, component } => {
                write!(
                    f,
                    "window {window} component {component} lagged span is shorter than l"
                )
            }
            Violation::PointOutOfBounds { time } => write!(f, "point t={time} outside [1, n]"),
            Violation::PointsUnordered { time } => {
                write!(f, "point t={time} is out of order or duplicated")
            }
            Violation::PointBelowThreshold { time } => {
                write!(f, "point t={time} has no positive exceedance")
            }
            Violation::NegativeObjective(v) => write!(f, "negative objective {v}"),
        }
    }
}

/// Check every structural invariant of a detection result.
pub fn validate_result(
    r: &DetectionResult,
    cfg: &DetectorConfig,
    n: usize,
) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    for (k, w) in r.collective.iter().enumerate() {
        if w.end > n || w.start >= w.end {
            out.push(Violation::OutOfBounds { window: k });
        }
        if w.end < w.start + cfg.min_len {
            out.push(Violation::TooShort { window: k });
        }
        if w.components.is_empty() {
            out.push(Violation::EmptyComponents { window: k });
        }
        if w.components.windows(2).any(|c| c[0] >= c[1]) {
            out.push(Violation::UnsortedComponents { window: k });
        }
        let j = w.components.len();
        if w.start_lags.len() != j || w.end_lags.len() != j || w.means.len() != j {
            out.push(Violation::FieldLength { window: k });
        } else {
            for (idx, &c) in w.components.iter().enumerate() {
                let (d, f) = (w.start_lags[idx], w.end_lags[idx]);
                if d > cfg.max_lag || f > cfg.max_lag {
                    out.push(Violation::LagOutOfRange {
                        window: k,
                        component: c,
                    });
                }
                if w.end < f || w.end - f < w.start + d + cfg.min_len {
                    out.push(Violation::LaggedTooShort {
                        window: k,
                        component: c,
                    });
                }
            }
        }
        if k > 0 && r.collective[k - 1].end > w.start {
            out.push(Violation::Overlap {
                first: k - 1,
                second: k,
            });
        }
    }
    for (idx, pt) in r.points.iter().enumerate() {
        if pt.time == 0 || pt.time > n {
            out.push(Violation::PointOutOfBounds { time: pt.time });
        }
        if idx > 0 && r.points[idx - 1].time >= pt.time {
            out.push(Violation::PointsUnordered { time: pt.time });
        }
        if pt.hits.is_empty() {
            out.push(Violation::PointBelowThreshold { time: pt.time });
        }
        if let Some(k) = r.collective.iter().position(|w| w.contains(pt.time)) {
            out.push(Violation::PointInsideWindow {
                time: pt.time,
                window: k,
            });
        }
    }
    if r.objective < 0.0 || r.objective.is_nan() {
        out.push(Violation::NegativeObjective(r.objective));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
