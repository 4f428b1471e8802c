//! Detection of collective and point anomalies in multivariate sequences.
//!
//! A collective anomaly is an epidemic change in mean that affects a subset of
//! the components over a window `(s, e]`, optionally with per-component lags at
//! either end. Point anomalies are single observations outside every window.
//! Anomalies are found by exactly maximising a penalised saving over all
//! admissible segmentations with a pruned dynamic programme.
//!
//! Time indices are 1-based throughout: observation `t` is row `t - 1` of a
//! [`SeriesMatrix`], and a window `(s, e]` covers observations `s + 1..=e`.
//! Component indices are 0-based column indices.

pub mod chisq;
pub mod detector;
pub mod error;
pub mod model;
pub mod penalty;
pub mod savings;
pub mod simbench;

pub use detector::{detect, detect_collective, detect_full, detect_lagged, greedy_cbs};
pub use error::{Error, Result};
pub use model::{
    standardize, validate_result, CollectiveAnomaly, DetectionResult, DetectorConfig, Diagnostics,
    PointAnomaly, Regime, RobustBaseline, SeriesMatrix, Violation,
};
pub use penalty::PenaltyFunction;
pub use savings::{LagSavingCache, PrefixSums};
