//! Segment savings for a Gaussian change in mean on standardized data.
//!
//! The saving of component `i` over `(s, e]` is `(e - s) * mean^2`, the drop
//! in twice the negative log-likelihood from fitting the segment mean instead
//! of the typical mean 0. All queries are O(1) after O(np) prefix sums.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::SeriesMatrix;
use crate::penalty::PenaltyFunction;

/// Column-wise cumulative sums of `x` and `x^2`, each `(n + 1) x p` with a
/// zero first row.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    n: usize,
    p: usize,
    // component-major: cum1[i * (n + 1) + t]
    cum1: Vec<f64>,
    cum2: Vec<f64>,
}

impl PrefixSums {
    pub fn new(x: &SeriesMatrix) -> Self {
        let (n, p) = (x.n(), x.p());
        let mut cum1 = vec![0.0; p * (n + 1)];
        let mut cum2 = vec![0.0; p * (n + 1)];
        for i in 0..p {
            let base = i * (n + 1);
            let (mut s1, mut s2) = (0.0, 0.0);
            for t in 0..n {
                let v = x.get(t, i);
                s1 += v;
                s2 += v * v;
                cum1[base + t + 1] = s1;
                cum2[base + t + 1] = s2;
            }
        }
        Self { n, p, cum1, cum2 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Sum of `x^(i)` over `(s, e]`.
    #[inline]
    pub fn sum(&self, i: usize, s: usize, e: usize) -> f64 {
        let base = i * (self.n + 1);
        self.cum1[base + e] - self.cum1[base + s]
    }

    /// Sum of squares of `x^(i)` over `(s, e]`.
    #[inline]
    pub fn sum_sq(&self, i: usize, s: usize, e: usize) -> f64 {
        let base = i * (self.n + 1);
        self.cum2[base + e] - self.cum2[base + s]
    }

    pub fn mean(&self, i: usize, s: usize, e: usize) -> f64 {
        self.sum(i, s, e) / (e - s) as f64
    }

    /// Unchecked saving; callers guarantee `s < e <= n` and `i < p`.
    #[inline]
    pub(crate) fn saving(&self, i: usize, s: usize, e: usize) -> f64 {
        let total = self.sum(i, s, e);
        total * total / (e - s) as f64
    }

    fn check(&self, i: usize, s: usize, e: usize) -> Result<()> {
        if i >= self.p {
            return Err(Error::Index(format!("component {i} with p = {}", self.p)));
        }
        if !(s < e && e <= self.n) {
            return Err(Error::Index(format!(
                "window ({s}, {e}] is not inside (0, {}]",
                self.n
            )));
        }
        Ok(())
    }
}

/// `(e - s) * (mean of x^(i) over (s, e])^2`.
pub fn component_saving(ps: &PrefixSums, i: usize, s: usize, e: usize) -> Result<f64> {
    ps.check(i, s, e)?;
    Ok(ps.saving(i, s, e))
}

/// Best saving of component `i` over lagged sub-windows of `(s, e]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedSaving {
    /// Saving net of the lag penalty.
    pub value: f64,
    pub start_lag: usize,
    pub end_lag: usize,
}

/// Maximise `saving(s + d, e - f) - gamma * [d > 0 or f > 0]` over
/// `0 <= d, f <= w` with `e - s - d - f >= l`. Ties go to the smallest `d`,
/// then the smallest `f`.
pub fn lagged_component_saving(
    ps: &PrefixSums,
    i: usize,
    s: usize,
    e: usize,
    w: usize,
    l: usize,
    gamma: f64,
) -> Result<LaggedSaving> {
    ps.check(i, s, e)?;
    if e - s < l.max(1) {
        return Err(Error::InfeasibleWindow {
            start: s,
            end: e,
            min_len: l,
        });
    }
    Ok(lagged_unchecked(ps, i, s, e, w, l.max(1), gamma))
}

pub(crate) fn lagged_unchecked(
    ps: &PrefixSums,
    i: usize,
    s: usize,
    e: usize,
    w: usize,
    l: usize,
    gamma: f64,
) -> LaggedSaving {
    let mut best = LaggedSaving {
        value: ps.saving(i, s, e),
        start_lag: 0,
        end_lag: 0,
    };
    let len = e - s;
    for d in 0..=w.min(len - l) {
        for f in 0..=w.min(len - l - d) {
            if d == 0 && f == 0 {
                continue;
            }
            let v = ps.saving(i, s + d, e - f) - gamma;
            if v > best.value {
                best = LaggedSaving {
                    value: v,
                    start_lag: d,
                    end_lag: f,
                };
            }
        }
    }
    best
}

/// Outcome of maximising the penalised saving over subset sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalisedSaving {
    /// `max_k (sum of the k largest savings - P(k))`; may be negative.
    pub value: f64,
    pub k: usize,
    /// The chosen components in increasing index order.
    pub components: Vec<usize>,
}

/// Reusable buffers for [`penalised_saving`] inside hot loops.
#[derive(Debug, Default, Clone)]
pub struct PenalisedScratch {
    order: Vec<usize>,
}

impl PenalisedScratch {
    /// Value and size of the penalised saving; the chosen components are
    /// `self.top(k)`.
    pub fn evaluate(&mut self, savings: &[f64], penalty: &PenaltyFunction) -> (f64, usize) {
        debug_assert_eq!(savings.len(), penalty.p());
        if let Some(beta) = penalty.uniform_beta() {
            return self.evaluate_uniform(savings, beta, penalty.alpha());
        }
        self.sort(savings);
        let mut acc = 0.0;
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, (&i, &pk)) in self.order.iter().zip(penalty.cumulative()).enumerate() {
            acc += savings[i];
            let v = acc - pk;
            if v > best.0 {
                best = (v, k + 1);
            }
        }
        best
    }

    // Equal betas: every component whose saving exceeds beta joins; if none
    // does, the single largest saving is taken.
    fn evaluate_uniform(&mut self, savings: &[f64], beta: f64, alpha: f64) -> (f64, usize) {
        self.order.clear();
        let mut acc = 0.0;
        for (i, &s) in savings.iter().enumerate() {
            if s > beta {
                acc += s - beta;
                self.order.push(i);
            }
        }
        if self.order.is_empty() {
            let (mut arg, mut top) = (0, savings[0]);
            for (i, &s) in savings.iter().enumerate().skip(1) {
                if s > top {
                    arg = i;
                    top = s;
                }
            }
            self.order.push(arg);
            return (top - beta - alpha, 1);
        }
        (acc - alpha, self.order.len())
    }

    fn sort(&mut self, savings: &[f64]) {
        self.order.clear();
        self.order.extend(0..savings.len());
        self.order
            .sort_unstable_by(|&a, &b| savings[b].total_cmp(&savings[a]).then(a.cmp(&b)));
    }

    /// Components selected by the last `evaluate` returning size `k`, sorted.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut j = self.order[..k].to_vec();
        j.sort_unstable();
        j
    }
}

/// Penalised saving of a window from its component savings: the savings are
/// sorted in decreasing order (ties by lower index) and the best `k` is the
/// smallest maximiser of `sum of top k - P(k)`. Sorting is skipped when all
/// betas are equal.
pub fn penalised_saving(savings: &[f64], penalty: &PenaltyFunction) -> PenalisedSaving {
    let mut scratch = PenalisedScratch::default();
    let (value, k) = scratch.evaluate(savings, penalty);
    PenalisedSaving {
        value,
        k,
        components: scratch.top(k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSaving {
    pub value: f64,
    /// `(component, squared residual)` for every exceedance of `beta'`.
    pub hits: Vec<(usize, f64)>,
}

/// `sum_i max(x_i^2 - beta', 0)` for a standardized observation.
pub fn point_saving(x: &[f64], beta_prime: f64) -> PointSaving {
    let mut value = 0.0;
    let mut hits = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        let sq = v * v;
        if sq > beta_prime {
            value += sq - beta_prime;
            hits.push((i, sq));
        }
    }
    PointSaving { value, hits }
}

#[inline]
pub(crate) fn point_value(x: &[f64], beta_prime: f64) -> f64 {
    x.iter()
        .map(|v| v * v - beta_prime)
        .filter(|&d| d > 0.0)
        .sum()
}

#[derive(Debug, Clone)]
struct LagRow {
    end: usize,
    lo: usize,
    width: usize,
    // raw[i * width + (a - lo)] = saving(a, end), a in [lo, end - l]
    raw: Vec<f64>,
    // best over d in 1..=w of raw[t + d], t in [lo, end - l - 1]
    pos: Vec<f64>,
    pos_lag: Vec<u32>,
}

impl LagRow {
    fn empty() -> Self {
        Self {
            end: 0,
            lo: 0,
            width: 0,
            raw: Vec::new(),
            pos: Vec::new(),
            pos_lag: Vec::new(),
        }
    }
}

/// Rolling store of raw savings `saving(a, b)` for the last `w + 1` end points
/// `b`, used to evaluate lagged savings in O(w) per component and start.
///
/// For each row the cache also keeps, per start `t`, the best raw saving over
/// start lags `d = 1..=w`, so a lagged query only scans the `w + 1` end lags.
#[derive(Debug, Clone)]
pub struct LagSavingCache {
    p: usize,
    max_lag: usize,
    min_len: usize,
    gamma: f64,
    rows: VecDeque<LagRow>,
    spare: Vec<LagRow>,
}

impl LagSavingCache {
    pub fn new(p: usize, max_lag: usize, min_len: usize, gamma: f64) -> Self {
        Self {
            p,
            max_lag,
            min_len: min_len.max(1),
            gamma,
            rows: VecDeque::with_capacity(max_lag + 1),
            spare: Vec::new(),
        }
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// Add the row for end point `end`, covering starts `a` in
    /// `[lowest, end - l]`, and drop rows older than `end - w`.
    pub fn advance(&mut self, ps: &PrefixSums, end: usize, lowest: usize) {
        while self
            .rows
            .front()
            .is_some_and(|r| r.end + self.max_lag < end)
        {
            let r = self.rows.pop_front().expect("non-empty");
            self.spare.push(r);
        }
        let mut row = self.spare.pop().unwrap_or_else(LagRow::empty);
        row.end = end;
        row.lo = lowest;
        row.width = if end >= self.min_len && end - self.min_len >= lowest {
            end - self.min_len - lowest + 1
        } else {
            0
        };
        let (p, width, w) = (self.p, row.width, self.max_lag);
        row.raw.clear();
        row.raw.reserve(p * width);
        for i in 0..p {
            row.raw
                .extend((lowest..lowest + width).map(|a| ps.saving(i, a, end)));
        }
        let pos_width = width.saturating_sub(1);
        row.pos.clear();
        row.pos_lag.clear();
        if w > 0 {
            row.pos.reserve(p * pos_width);
            row.pos_lag.reserve(p * pos_width);
            for i in 0..p {
                let raw = &row.raw[i * width..(i + 1) * width];
                for t in 0..pos_width {
                    let last = (t + w).min(width - 1);
                    let (mut best, mut lag) = (raw[t + 1], 1u32);
                    for (a, &v) in raw.iter().enumerate().take(last + 1).skip(t + 2) {
                        if v > best {
                            best = v;
                            lag = (a - t) as u32;
                        }
                    }
                    row.pos.push(best);
                    row.pos_lag.push(lag);
                }
            }
        }
        self.rows.push_back(row);
    }

    fn row(&self, end: usize) -> Option<&LagRow> {
        let last = self.rows.back()?;
        let back = last.end.checked_sub(end)?;
        let idx = self.rows.len().checked_sub(back + 1)?;
        let r = &self.rows[idx];
        (r.end == end).then_some(r)
    }

    /// Cached `saving(a, b)` if row `b` is held and covers `a`.
    pub fn raw(&self, i: usize, a: usize, b: usize) -> Option<f64> {
        let r = self.row(b)?;
        (a >= r.lo && a < r.lo + r.width).then(|| r.raw[i * r.width + a - r.lo])
    }

    /// Lagged saving of component `i` over `(t, m]`; `m` must be the most
    /// recent end point passed to [`advance`](Self::advance).
    pub fn lagged(&self, i: usize, t: usize, m: usize) -> Option<LaggedSaving> {
        let mut best: Option<LaggedSaving> = None;
        let mut consider = |value: f64, d: usize, f: usize| {
            let better = match best {
                None => true,
                Some(b) => {
                    value > b.value || (value == b.value && (d, f) < (b.start_lag, b.end_lag))
                }
            };
            if better {
                best = Some(LaggedSaving {
                    value,
                    start_lag: d,
                    end_lag: f,
                });
            }
        };
        for f in 0..=self.max_lag {
            let Some(b) = m.checked_sub(f) else { break };
            if b < t + self.min_len {
                break;
            }
            let Some(r) = self.row(b) else { break };
            if t < r.lo || t >= r.lo + r.width {
                continue;
            }
            let at = t - r.lo;
            let raw = r.raw[i * r.width + at];
            consider(if f == 0 { raw } else { raw - self.gamma }, 0, f);
            let pos_width = r.width - 1;
            if self.max_lag > 0 && at < pos_width {
                let k = i * pos_width + at;
                consider(r.pos[k] - self.gamma, r.pos_lag[k] as usize, f);
            }
        }
        best
    }
}
