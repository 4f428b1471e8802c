//! The penalised-saving dynamic programme and its pruning rule.

use crate::model::{Diagnostics, SeriesMatrix};
use crate::penalty::PenaltyFunction;
use crate::savings::{point_value, LagSavingCache, PenalisedScratch, PrefixSums};

/// Scores candidate windows `(t, m]` with their penalised saving.
pub(crate) trait Scorer {
    /// Called once per step `m`, before any `score(_, m)`, with the lowest
    /// live start candidate.
    fn advance(&mut self, m: usize, lowest: usize);
    fn score(&mut self, t: usize, m: usize) -> f64;
}

pub(crate) struct DirectScorer<'a> {
    ps: &'a PrefixSums,
    penalty: &'a PenaltyFunction,
    buf: Vec<f64>,
    scratch: PenalisedScratch,
}

impl<'a> DirectScorer<'a> {
    pub(crate) fn new(ps: &'a PrefixSums, penalty: &'a PenaltyFunction) -> Self {
        Self {
            ps,
            penalty,
            buf: vec![0.0; ps.p()],
            scratch: PenalisedScratch::default(),
        }
    }
}

impl Scorer for DirectScorer<'_> {
    fn advance(&mut self, _m: usize, _lowest: usize) {}

    fn score(&mut self, t: usize, m: usize) -> f64 {
        for (i, s) in self.buf.iter_mut().enumerate() {
            *s = self.ps.saving(i, t, m);
        }
        self.scratch.evaluate(&self.buf, self.penalty).0
    }
}

pub(crate) struct LaggedScorer<'a> {
    ps: &'a PrefixSums,
    penalty: &'a PenaltyFunction,
    cache: LagSavingCache,
    buf: Vec<f64>,
    scratch: PenalisedScratch,
}

impl<'a> LaggedScorer<'a> {
    pub(crate) fn new(
        ps: &'a PrefixSums,
        penalty: &'a PenaltyFunction,
        max_lag: usize,
        min_len: usize,
    ) -> Self {
        Self {
            ps,
            penalty,
            cache: LagSavingCache::new(ps.p(), max_lag, min_len, penalty.gamma()),
            buf: vec![0.0; ps.p()],
            scratch: PenalisedScratch::default(),
        }
    }
}

impl Scorer for LaggedScorer<'_> {
    fn advance(&mut self, m: usize, lowest: usize) {
        self.cache.advance(self.ps, m, lowest);
    }

    fn score(&mut self, t: usize, m: usize) -> f64 {
        for (i, s) in self.buf.iter_mut().enumerate() {
            *s = self
                .cache
                .lagged(i, t, m)
                .expect("candidate window is covered by the lag cache")
                .value;
        }
        self.scratch.evaluate(&self.buf, self.penalty).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Choice {
    Null,
    Point,
    Window(usize),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DpOptions {
    pub min_len: usize,
    pub max_len: Option<usize>,
    pub max_lag: usize,
    pub points: bool,
    pub pruning: bool,
}

pub(crate) struct DpOutcome {
    pub cost: Vec<f64>,
    pub choice: Vec<Choice>,
    pub diagnostics: Diagnostics,
}

const LIVE: usize = usize::MAX;

/// Maximise the total penalised saving over segmentations of `x`.
///
/// `C(m) = max(C(m-1), C(m-1) + S'(x_m), max_t C(t) + S(t, m))` over live
/// candidates `t` with `l <= m - t <= M`. Ties keep `C(m-1)`, then the point
/// branch, and among windows the latest start.
///
/// A candidate `t` with `C(m) - B > C(t) + S(t, m)` can never be the optimal
/// start again from step `m + l + w` on, where `B` is the largest value of the
/// penalty curve plus `p * gamma` when lags are allowed. The check is only made
/// once `m - t >= l + w`.
pub(crate) fn solve<S: Scorer>(
    x: &SeriesMatrix,
    scorer: &mut S,
    penalty: &PenaltyFunction,
    opts: &DpOptions,
) -> DpOutcome {
    let n = x.n();
    let l = opts.min_len.max(1);
    let w = opts.max_lag;
    let bound = if w > 0 {
        penalty.max_cumulative() + x.p() as f64 * penalty.gamma()
    } else {
        penalty.max_cumulative()
    };
    let mut cost = vec![0.0; n + 1];
    let mut choice = vec![Choice::Null; n + 1];
    let mut diagnostics = Diagnostics {
        candidates: Vec::with_capacity(n),
        pruned: 0,
    };
    // (start, step from which it is dropped)
    let mut cands: Vec<(usize, usize)> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();

    for m in 1..=n {
        if m >= l {
            cands.push((m - l, LIVE));
        }
        let lower = opts.max_len.map_or(0, |cap| m.saturating_sub(cap));
        cands.retain(|&(t, drop_at)| drop_at > m && t >= lower);
        diagnostics.candidates.push(cands.len());
        scorer.advance(m, cands.first().map_or(m, |c| c.0));

        let mut best = cost[m - 1];
        let mut pick = Choice::Null;
        if opts.points {
            let v = point_value(x.row(m - 1), penalty.beta_prime());
            if v > 0.0 && cost[m - 1] + v > best {
                best = cost[m - 1] + v;
                pick = Choice::Point;
            }
        }

        scores.clear();
        let mut win = (f64::NEG_INFINITY, 0);
        for &(t, _) in &cands {
            let s = scorer.score(t, m);
            scores.push(s);
            let v = cost[t] + s;
            if v >= win.0 {
                win = (v, t);
            }
        }
        if win.0 > best {
            best = win.0;
            pick = Choice::Window(win.1);
        }
        cost[m] = best;
        choice[m] = pick;

        if opts.pruning {
            let threshold = best - bound;
            for (c, &s) in cands.iter_mut().zip(&scores) {
                if c.1 == LIVE && m - c.0 >= l + w && threshold > cost[c.0] + s {
                    c.1 = m + l + w;
                    diagnostics.pruned += 1;
                }
            }
        }
    }

    DpOutcome {
        cost,
        choice,
        diagnostics,
    }
}
