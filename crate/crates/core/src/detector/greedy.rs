use crate::error::{Error, Result};
use crate::model::{DetectionResult, DetectorConfig, Diagnostics, SeriesMatrix};
use crate::penalty::PenaltyFunction;
use crate::savings::PrefixSums;

use super::engine::{DirectScorer, Scorer};
use super::{check_inputs, window_detail, Mode};

/// Circular-binary-segmentation style baseline: find the best single window
/// in the unsegmented stretch, keep it if its penalised saving is positive,
/// and recurse on both sides.
///
/// Approximates the exact optimum from below. Among equal best windows the
/// earliest start, then the earliest end, is kept.
pub fn greedy_cbs(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    check_inputs(x, penalty, cfg)?;
    if cfg.max_lag != 0 || cfg.enable_point_anomalies {
        return Err(Error::Config(
            "greedy segmentation needs max_lag = 0 and point anomalies off".into(),
        ));
    }
    let ps = PrefixSums::new(x);
    let mut scorer = DirectScorer::new(&ps, penalty);
    let l = cfg.min_len.max(1);
    let mode = Mode {
        max_lag: 0,
        min_len: l,
    };
    let mut stack = vec![(0usize, x.n())];
    let mut found = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let mut best: Option<(f64, usize, usize)> = None;
        for s in lo..hi {
            let far = cfg.max_len.map_or(hi, |cap| hi.min(s + cap));
            for e in s + l..=far {
                let v = scorer.score(s, e);
                if best.is_none_or(|(b, _, _)| v > b) {
                    best = Some((v, s, e));
                }
            }
        }
        if let Some((v, s, e)) = best {
            if v > 0.0 {
                found.push(window_detail(&ps, penalty, mode, s, e));
                stack.push((lo, s));
                stack.push((e, hi));
            }
        }
    }
    found.sort_by_key(|w| w.start);
    let objective = found.iter().map(|w| w.saving).sum();
    Ok(DetectionResult {
        collective: found,
        points: Vec::new(),
        objective,
        diagnostics: Diagnostics::default(),
    })
}
