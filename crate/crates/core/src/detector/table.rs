//! Precomputed window savings for repeated runs on the same data.
//!
//! Component savings (lagged or not) do not depend on the penalty scale, so
//! sweeps over the scale can sort them once per window and reuse the sorted
//! prefix sums. Memory is `n * M * p`, so a bounded maximum length is needed.

use crate::error::{Error, Result};
use crate::model::{DetectionResult, DetectorConfig, SeriesMatrix};
use crate::penalty::PenaltyFunction;
use crate::savings::{LagSavingCache, PrefixSums};

use super::engine::{self, DpOptions, Scorer};
use super::{check_inputs, reconstruct, Mode};

/// Sorted prefix sums of the component savings of every admissible window.
#[derive(Debug, Clone)]
pub struct SavingsTable {
    n: usize,
    p: usize,
    min_len: usize,
    max_len: usize,
    max_lag: usize,
    gamma: f64,
    // offsets[m] indexes the first window ending at m; windows (t, m] for
    // t = lo(m)..=m - l are consecutive, each holding p prefix sums.
    offsets: Vec<usize>,
    prefix: Vec<f64>,
    ps: PrefixSums,
}

impl SavingsTable {
    /// Build the table for standardized `x` under `cfg`'s window constraints
    /// and lag penalty `gamma`.
    pub fn new(x: &SeriesMatrix, cfg: &DetectorConfig, gamma: f64) -> Result<Self> {
        let max_len = cfg.max_len.ok_or_else(|| {
            Error::Config("a savings table needs a bounded maximum length".into())
        })?;
        let (n, p) = (x.n(), x.p());
        let l = cfg.min_len.max(1);
        let w = cfg.max_lag;
        let ps = PrefixSums::new(x);
        let mut offsets = vec![0usize; n + 2];
        let mut prefix = Vec::new();
        let mut last = 0;
        sweep_windows(&ps, l, Some(max_len), w, gamma, |t, m, row| {
            while last < m {
                last += 1;
                offsets[last] = prefix.len() / p;
            }
            debug_assert_eq!(
                offsets[m] + (t - m.saturating_sub(max_len)),
                prefix.len() / p
            );
            prefix.extend_from_slice(row);
        });
        while last <= n {
            last += 1;
            offsets[last] = prefix.len() / p;
        }
        Ok(Self {
            n,
            p,
            min_len: l,
            max_len,
            max_lag: w,
            gamma,
            offsets,
            prefix,
            ps,
        })
    }

    fn prefix_for(&self, t: usize, m: usize) -> &[f64] {
        let lo = m.saturating_sub(self.max_len);
        let k = self.offsets[m] + (t - lo);
        &self.prefix[k * self.p..(k + 1) * self.p]
    }

    fn check_compatible(&self, cfg: &DetectorConfig, penalty: &PenaltyFunction) -> Result<()> {
        if cfg.max_len != Some(self.max_len)
            || cfg.min_len.max(1) != self.min_len
            || cfg.max_lag != self.max_lag
            || penalty.gamma() != self.gamma
        {
            return Err(Error::Config(
                "configuration differs from the one the savings table was built for".into(),
            ));
        }
        Ok(())
    }

    /// Run the detector for `cfg` and `penalty` using the stored savings.
    pub fn detect(
        &self,
        x: &SeriesMatrix,
        penalty: &PenaltyFunction,
        cfg: &DetectorConfig,
    ) -> Result<DetectionResult> {
        check_inputs(x, penalty, cfg)?;
        self.check_compatible(cfg, penalty)?;
        if x.n() != self.n || x.p() != self.p {
            return Err(Error::Config(
                "series does not match the savings table".into(),
            ));
        }
        let opts = DpOptions {
            min_len: self.min_len,
            max_len: Some(self.max_len),
            max_lag: self.max_lag,
            points: cfg.enable_point_anomalies,
            pruning: cfg.pruning,
        };
        let mut scorer = TableScorer {
            table: self,
            penalty,
        };
        let outcome = engine::solve(x, &mut scorer, penalty, &opts);
        let mode = Mode {
            max_lag: self.max_lag,
            min_len: self.min_len,
        };
        Ok(reconstruct(x, &self.ps, penalty, mode, outcome))
    }

    /// Smallest penalty scale at which the detector returns nothing; see
    /// [`critical_scale`].
    pub fn critical_scale(
        &self,
        x: &SeriesMatrix,
        penalty: &PenaltyFunction,
        points: bool,
    ) -> Result<f64> {
        check_critical(penalty, points)?;
        let mut worst: f64 = 0.0;
        for row in self.prefix.chunks_exact(self.p) {
            worst = worst.max(row_ratio(row, penalty));
        }
        Ok(worst.max(point_ratio(x, penalty, points)))
    }
}

/// Smallest penalty scale `c` such that `penalty.scaled(c')` yields an empty
/// detection under `cfg` for every `c' >= c`; the run is non-empty for every
/// smaller scale.
///
/// A run is empty exactly when no admissible window has a positive penalised
/// saving and no observation has a positive point saving, so the scale is the
/// largest ratio `top_k(t, m) / P(k)` (and `x^2 / beta'` when point anomalies
/// are on). Every `P(k)` (and `beta'`) must be positive. `cfg.penalty_scale`
/// is ignored.
pub fn critical_scale(
    x: &SeriesMatrix,
    penalty: &PenaltyFunction,
    cfg: &DetectorConfig,
) -> Result<f64> {
    cfg.validate()?;
    if penalty.p() != x.p() {
        return Err(Error::Config("penalty and series widths differ".into()));
    }
    check_critical(penalty, cfg.enable_point_anomalies)?;
    let ps = PrefixSums::new(x);
    let mut worst: f64 = 0.0;
    sweep_windows(
        &ps,
        cfg.min_len.max(1),
        cfg.max_len,
        cfg.max_lag,
        penalty.gamma(),
        |_, _, row| worst = worst.max(row_ratio(row, penalty)),
    );
    Ok(worst.max(point_ratio(x, penalty, cfg.enable_point_anomalies)))
}

fn check_critical(penalty: &PenaltyFunction, points: bool) -> Result<()> {
    if penalty.cumulative().iter().any(|&c| c <= 0.0) {
        return Err(Error::Config(
            "critical scale needs a positive penalty curve".into(),
        ));
    }
    if points && penalty.beta_prime() <= 0.0 {
        return Err(Error::Config(
            "critical scale needs a positive point penalty".into(),
        ));
    }
    Ok(())
}

fn row_ratio(row: &[f64], penalty: &PenaltyFunction) -> f64 {
    row.iter()
        .zip(penalty.cumulative())
        .fold(0.0f64, |acc, (s, c)| acc.max(s / c))
}

fn point_ratio(x: &SeriesMatrix, penalty: &PenaltyFunction, points: bool) -> f64 {
    if !points {
        return 0.0;
    }
    let top = x.values().iter().fold(0.0f64, |acc, v| acc.max(v * v));
    top / penalty.beta_prime()
}

/// Visit every admissible window `(t, m]` in order of `m`, then `t`, with the
/// running sums of its component savings sorted in decreasing order.
pub(crate) fn sweep_windows<F: FnMut(usize, usize, &[f64])>(
    ps: &PrefixSums,
    min_len: usize,
    max_len: Option<usize>,
    max_lag: usize,
    gamma: f64,
    mut visit: F,
) {
    let (n, p) = (ps.n(), ps.p());
    let mut cache = LagSavingCache::new(p, max_lag, min_len, gamma);
    let mut buf = vec![0.0; p];
    for m in min_len..=n {
        let lo = max_len.map_or(0, |cap| m.saturating_sub(cap));
        if max_lag > 0 {
            cache.advance(ps, m, lo);
        }
        for t in lo..=m - min_len {
            for (i, s) in buf.iter_mut().enumerate() {
                *s = if max_lag > 0 {
                    cache.lagged(i, t, m).expect("covered").value
                } else {
                    ps.saving(i, t, m)
                };
            }
            buf.sort_unstable_by(|a, b| b.total_cmp(a));
            let mut acc = 0.0;
            for s in buf.iter_mut() {
                acc += *s;
                *s = acc;
            }
            visit(t, m, &buf);
        }
    }
}

struct TableScorer<'a> {
    table: &'a SavingsTable,
    penalty: &'a PenaltyFunction,
}

impl Scorer for TableScorer<'_> {
    fn advance(&mut self, _m: usize, _lowest: usize) {}

    fn score(&mut self, t: usize, m: usize) -> f64 {
        let prefix = self.table.prefix_for(t, m);
        let mut best = f64::NEG_INFINITY;
        for (s, c) in prefix.iter().zip(self.penalty.cumulative()) {
            let v = s - c;
            if v > best {
                best = v;
            }
        }
        best
    }
}
