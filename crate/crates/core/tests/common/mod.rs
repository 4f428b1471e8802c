//! Slow reference implementations used as oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use mvcapa::{PenaltyFunction, SeriesMatrix};

/// `len * mean^2` over rows `a..b` by direct summation.
pub fn naive_saving(x: &SeriesMatrix, i: usize, a: usize, b: usize) -> f64 {
    let len = (b - a) as f64;
    let mean = (a..b).map(|r| x.get(r, i)).sum::<f64>() / len;
    len * mean * mean
}

/// Best lagged saving of component `i` on `(t, m]` by enumerating every
/// `(d, f)`; ties keep the lexicographically smallest pair.
pub fn naive_lagged(
    x: &SeriesMatrix,
    i: usize,
    t: usize,
    m: usize,
    w: usize,
    l: usize,
    gamma: f64,
) -> (f64, usize, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for d in 0..=w {
        for f in 0..=w {
            if m - t < d + f + l {
                continue;
            }
            let mut v = naive_saving(x, i, t + d, m - f);
            if d > 0 || f > 0 {
                v -= gamma;
            }
            if v > best.0 {
                best = (v, d, f);
            }
        }
    }
    best
}

/// Maximum of `sum_J s - P(|J|)` over non-empty subsets; ties keep the
/// smallest `|J|`, then the lexicographically smallest index set.
pub fn subset_max(savings: &[f64], penalty: &PenaltyFunction) -> (f64, Vec<usize>) {
    let p = savings.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 1u32..(1 << p) {
        let set: Vec<usize> = (0..p).filter(|i| mask >> i & 1 == 1).collect();
        let v = set.iter().map(|&i| savings[i]).sum::<f64>() - penalty.at(set.len());
        let better = match &best {
            None => true,
            Some((bv, bs)) => v > *bv || (v == *bv && (set.len(), &set) < (bs.len(), bs)),
        };
        if better {
            best = Some((v, set));
        }
    }
    best.expect("p >= 1")
}

pub fn point_value(row: &[f64], beta_prime: f64) -> f64 {
    row.iter().map(|v| (v * v - beta_prime).max(0.0)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Null,
    Point,
    Window(usize),
}

/// Settings of the exhaustive search.
#[derive(Debug, Clone, Copy)]
pub struct Search {
    pub min_len: usize,
    pub max_len: Option<usize>,
    pub max_lag: usize,
    pub points: bool,
}

/// Every window value, by brute force.
pub fn window_values(x: &SeriesMatrix, pen: &PenaltyFunction, s: Search) -> Vec<Vec<f64>> {
    let n = x.n();
    let mut table = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
    for m in 1..=n {
        for t in 0..m {
            let len = m - t;
            if len < s.min_len || s.max_len.is_some_and(|cap| len > cap) {
                continue;
            }
            let savings: Vec<f64> = (0..x.p())
                .map(|i| naive_lagged(x, i, t, m, s.max_lag, s.min_len, pen.gamma()).0)
                .collect();
            table[t][m] = subset_max(&savings, pen).0;
        }
    }
    table
}

/// Result of the exhaustive search over segmentations.
#[derive(Debug, Clone)]
pub struct Exhaustive {
    pub best: f64,
    /// Decisions from the last observation backwards of the preferred optimum.
    pub preferred: Vec<(usize, Step)>,
    /// Optima within the tolerance that describe different anomalies.
    pub distinct_optima: usize,
}

/// Enumerate every segmentation of `x` into typical observations, point
/// anomalies and admissible windows.
///
/// Decisions are enumerated from the end in the order typical, point, then
/// windows from the shortest; the first segmentation within `tol` of the
/// optimum is the preferred one.
pub fn exhaustive(x: &SeriesMatrix, pen: &PenaltyFunction, s: Search, tol: f64) -> Exhaustive {
    let table = window_values(x, pen, s);
    let points: Vec<f64> = x.rows().map(|r| point_value(r, pen.beta_prime())).collect();
    let mut best = f64::NEG_INFINITY;
    let mut path = Vec::new();
    walk(x.n(), 0.0, &table, &points, s, &mut path, &mut |v, _| {
        if v > best {
            best = v;
        }
    });
    let mut preferred: Option<Vec<(usize, Step)>> = None;
    let mut optima: Vec<Vec<(usize, Step)>> = Vec::new();
    walk(x.n(), 0.0, &table, &points, s, &mut path, &mut |v, p| {
        if v >= best - tol {
            if preferred.is_none() {
                preferred = Some(p.to_vec());
            }
            let anomalies: Vec<_> = p
                .iter()
                .copied()
                .filter(|(_, st)| *st != Step::Null)
                .collect();
            if !optima.contains(&anomalies) {
                optima.push(anomalies);
            }
        }
    });
    Exhaustive {
        best,
        preferred: preferred.expect("at least one segmentation"),
        distinct_optima: optima.len(),
    }
}

fn walk<F: FnMut(f64, &[(usize, Step)])>(
    m: usize,
    acc: f64,
    table: &[Vec<f64>],
    points: &[f64],
    s: Search,
    path: &mut Vec<(usize, Step)>,
    visit: &mut F,
) {
    if m == 0 {
        visit(acc, path);
        return;
    }
    path.push((m, Step::Null));
    walk(m - 1, acc, table, points, s, path, visit);
    path.pop();
    if s.points {
        path.push((m, Step::Point));
        walk(m - 1, acc + points[m - 1], table, points, s, path, visit);
        path.pop();
    }
    for t in (0..m).rev() {
        let v = table[t][m];
        if v == f64::NEG_INFINITY {
            continue;
        }
        path.push((m, Step::Window(t)));
        walk(t, acc + v, table, points, s, path, visit);
        path.pop();
    }
}

/// Windows `(start, end)` and point times described by a decision list.
pub fn anomalies_of(steps: &[(usize, Step)]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut windows = Vec::new();
    let mut points = Vec::new();
    for &(m, st) in steps.iter().rev() {
        match st {
            Step::Null => {}
            Step::Point => points.push(m),
            Step::Window(t) => windows.push((t, m)),
        }
    }
    (windows, points)
}
