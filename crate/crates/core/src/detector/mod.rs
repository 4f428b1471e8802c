//! Exact maximisation of the penalised saving over segmentations, plus a
//! greedy binary-segmentation baseline.
//!
//! All detectors expect standardized data (typical mean 0, variance 1) and use
//! the penalty exactly as given; scale it with [`penalty::build`] or
//! [`PenaltyFunction::scaled`] beforehand.
//!
//! [`penalty::build`]: crate::penalty::build

mod engine;
mod greedy;
mod table;

pub use greedy::greedy_cbs;
pub use table::{critical_scale, SavingsTable};

use crate::error::{Error, Result};
use crate::model::{
    CollectiveAnomaly, DetectionResult, DetectorConfig, PointAnomaly, SeriesMatrix,
};
use crate::penalty::PenaltyFunction;
use crate::savings::{lagged_unchecked, penalised_saving, point_saving, PrefixSums};

use engine::{Choice, DirectScorer, DpOptions, DpOutcome, LaggedScorer};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Mode {
    pub max_lag: usize,
    pub min_len: usize,
}

pub(crate) fn check_inputs(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<()> {
    cfg.validate()?;
    if penalty.p() != x.p() {
        return Err(Error::Config(format!(
            "penalty is defined for {} components, series has {}",
            penalty.p(),
            x.p()
        )));
    }
    if cfg.enable_point_anomalies && penalty.beta_prime() <= 0.0 {
        return Err(Error::Config(
            "point anomalies need a positive point penalty; increase psi".into(),
        ));
    }
    Ok(())
}

fn options(cfg: &DetectorConfig) -> DpOptions {
    DpOptions {
        min_len: cfg.min_len.max(1),
        max_len: cfg.max_len,
        max_lag: cfg.max_lag,
        points: cfg.enable_point_anomalies,
        pruning: cfg.pruning,
    }
}

fn run(x: &SeriesMatrix, penalty: &PenaltyFunction, cfg: &DetectorConfig) -> DetectionResult {
    let ps = PrefixSums::new(x);
    let opts = options(cfg);
    let outcome = if cfg.max_lag > 0 {
        let mut scorer = LaggedScorer::new(&ps, penalty, cfg.max_lag, opts.min_len);
        engine::solve(x, &mut scorer, penalty, &opts)
    } else {
        let mut scorer = DirectScorer::new(&ps, penalty);
        engine::solve(x, &mut scorer, penalty, &opts)
    };
    let mode = Mode {
        max_lag: cfg.max_lag,
        min_len: opts.min_len,
    };
    reconstruct(x, &ps, penalty, mode, outcome)
}

/// Collective anomalies only, without lags.
pub fn detect_collective(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    check_inputs(x, penalty, cfg)?;
    if cfg.max_lag != 0 || cfg.enable_point_anomalies {
        return Err(Error::Config(
            "collective-only detection needs max_lag = 0 and point anomalies off".into(),
        ));
    }
    Ok(run(x, penalty, cfg))
}

/// Joint collective and point anomalies, without lags.
pub fn detect_full(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    check_inputs(x, penalty, cfg)?;
    if cfg.max_lag != 0 || !cfg.enable_point_anomalies {
        return Err(Error::Config(
            "joint detection needs max_lag = 0 and point anomalies on".into(),
        ));
    }
    Ok(run(x, penalty, cfg))
}

/// Collective anomalies with per-component lags up to `cfg.max_lag`, plus
/// point anomalies when enabled. With `max_lag = 0` this is identical to
/// [`detect_full`] / [`detect_collective`].
pub fn detect_lagged(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    check_inputs(x, penalty, cfg)?;
    Ok(run(x, penalty, cfg))
}

/// Pick the detector matching `cfg`.
pub fn detect(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    if cfg.max_lag > 0 {
        detect_lagged(x, penalty, cfg)
    } else if cfg.enable_point_anomalies {
        detect_full(x, penalty, cfg)
    } else {
        detect_collective(x, penalty, cfg)
    }
}

/// Describe window `(t, m]`: the chosen components, their lags and fitted
/// means, and the penalised saving.
pub(crate) fn window_detail(
    ps: &PrefixSums,
    penalty: &PenaltyFunction,
    mode: Mode,
    t: usize,
    m: usize,
) -> CollectiveAnomaly {
    let lagged: Vec<_> = (0..ps.p())
        .map(|i| lagged_unchecked(ps, i, t, m, mode.max_lag, mode.min_len, penalty.gamma()))
        .collect();
    let values: Vec<f64> = lagged.iter().map(|s| s.value).collect();
    let chosen = penalised_saving(&values, penalty);
    let mut out = CollectiveAnomaly {
        start: t,
        end: m,
        components: chosen.components.clone(),
        start_lags: Vec::with_capacity(chosen.k),
        end_lags: Vec::with_capacity(chosen.k),
        means: Vec::with_capacity(chosen.k),
        saving: chosen.value,
    };
    for &i in &chosen.components {
        let (d, f) = (lagged[i].start_lag, lagged[i].end_lag);
        out.start_lags.push(d);
        out.end_lags.push(f);
        out.means.push(ps.mean(i, t + d, m - f));
    }
    out
}

pub(crate) fn reconstruct(
    x: &SeriesMatrix,
    ps: &PrefixSums,
    penalty: &PenaltyFunction,
    mode: Mode,
    outcome: DpOutcome,
) -> DetectionResult {
    let DpOutcome {
        cost,
        choice,
        diagnostics,
    } = outcome;
    let mut collective = Vec::new();
    let mut points = Vec::new();
    let mut m = x.n();
    while m > 0 {
        match choice[m] {
            Choice::Null => m -= 1,
            Choice::Point => {
                let s = point_saving(x.row(m - 1), penalty.beta_prime());
                points.push(PointAnomaly {
                    time: m,
                    hits: s.hits,
                    saving: s.value,
                });
                m -= 1;
            }
            Choice::Window(t) => {
                collective.push(window_detail(ps, penalty, mode, t, m));
                m = t;
            }
        }
    }
    collective.reverse();
    points.reverse();
    DetectionResult {
        collective,
        points,
        objective: cost[x.n()],
        diagnostics,
    }
}
