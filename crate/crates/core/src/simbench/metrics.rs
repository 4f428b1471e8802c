use serde::{Deserialize, Serialize};

use crate::model::DetectionResult;

use super::GroundTruth;

/// Endpoint tolerance of the matching rule.
pub const DEFAULT_TOLERANCE: usize = 20;

/// Outcome of matching one detection against its ground truth.
///
/// Windows and points are scored separately; detected windows of length one
/// count as point detections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Mean absolute endpoint distance over true positives.
    pub mean_abs_distance: Option<f64>,
    pub point_tp: usize,
    pub point_fp: usize,
    pub point_fn: usize,
}

impl Score {
    pub fn precision(&self) -> Option<f64> {
        let found = self.tp + self.fp;
        (found > 0).then(|| self.tp as f64 / found as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let truth = self.tp + self.fn_;
        (truth > 0).then(|| self.tp as f64 / truth as f64)
    }
}

/// Greedy one-to-one assignment of `found` to `truth`: admissible pairs are
/// taken in order of increasing distance, ties by found index then truth index.
fn assign(found: &[(usize, usize)], truth: &[(usize, usize)], tol: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, &(fs, fe)) in found.iter().enumerate() {
        for (j, &(ts, te)) in truth.iter().enumerate() {
            let (ds, de) = (fs.abs_diff(ts), fe.abs_diff(te));
            if ds <= tol && de <= tol {
                pairs.push((ds + de, i, j));
            }
        }
    }
    pairs.sort_unstable();
    let mut used_f = vec![false; found.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_f[i] && !used_t[j] {
            used_f[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// A detected window is a true positive when both its start and its end lie
/// within `tol` of an unmatched true window's. Point detections match true
/// points at the same time.
pub fn match_and_score(truth: &GroundTruth, result: &DetectionResult, tol: usize) -> Score {
    let mut found = Vec::new();
    let mut found_points: Vec<usize> = result.points.iter().map(|p| p.time).collect();
    for w in &result.collective {
        if w.end - w.start == 1 {
            found_points.push(w.end);
        } else {
            found.push((w.start, w.end));
        }
    }
    let true_windows: Vec<_> = truth.windows.iter().map(|w| (w.start, w.end)).collect();
    let matched = assign(&found, &true_windows, tol);
    let mean_abs_distance = (!matched.is_empty()).then(|| {
        let total: usize = matched
            .iter()
            .map(|&(i, j)| {
                found[i].0.abs_diff(true_windows[j].0) + found[i].1.abs_diff(true_windows[j].1)
            })
            .sum();
        total as f64 / (2 * matched.len()) as f64
    });

    let as_pairs = |ts: &[usize]| ts.iter().map(|&t| (t, t)).collect::<Vec<_>>();
    let true_points: Vec<usize> = truth.points.iter().map(|p| p.time).collect();
    let point_hits = assign(&as_pairs(&found_points), &as_pairs(&true_points), 0).len();

    Score {
        tp: matched.len(),
        fp: found.len() - matched.len(),
        fn_: true_windows.len() - matched.len(),
        mean_abs_distance,
        point_tp: point_hits,
        point_fp: found_points.len() - point_hits,
        point_fn: true_points.len() - point_hits,
    }
}

/// Normalised area under a ROC curve of `(false positives per series, TPR)`
/// points, restricted to false-positive rates in `[0, cap]`.
///
/// The curve starts at the origin, takes the running maximum TPR in order of
/// increasing FPR, interpolates linearly and stays flat beyond its last point.
pub fn partial_auc(points: &[(f64, f64)], cap: f64) -> f64 {
    assert!(cap > 0.0, "cap must be positive");
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(f, t)| f.is_finite() && t.is_finite())
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut curve: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (f, t) in pts {
        let top = curve.last().map_or(0.0, |c| c.1).max(t);
        curve.push((f.max(0.0), top));
    }
    let mut area = 0.0;
    for pair in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if x0 >= cap {
            break;
        }
        if x1 > cap {
            let y = y0 + (y1 - y0) * (cap - x0) / (x1 - x0);
            area += (cap - x0) * (y0 + y) / 2.0;
            return area / cap;
        }
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    let (xl, yl) = *curve.last().expect("origin");
    if xl < cap {
        area += (cap - xl) * yl;
    }
    area / cap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CollectiveAnomaly, PointAnomaly};
    use crate::simbench::{TruePoint, TrueWindow};

    fn window(start: usize, end: usize) -> TrueWindow {
        TrueWindow {
            start,
            end,
            components: vec![0],
            start_lags: vec![0],
            end_lags: vec![0],
            means: vec![1.0],
        }
    }

    fn found(start: usize, end: usize) -> CollectiveAnomaly {
        CollectiveAnomaly {
            start,
            end,
            components: vec![0],
            start_lags: vec![0],
            end_lags: vec![0],
            means: vec![1.0],
            saving: 1.0,
        }
    }

    fn result(windows: Vec<CollectiveAnomaly>) -> DetectionResult {
        DetectionResult {
            collective: windows,
            ..Default::default()
        }
    }

    #[test]
    fn perfect_recovery() {
        let truth = GroundTruth {
            windows: vec![window(100, 130), window(400, 420)],
            points: vec![],
        };
        let s = match_and_score(&truth, &result(vec![found(100, 130), found(400, 420)]), 20);
        assert_eq!((s.tp, s.fp, s.fn_), (2, 0, 0));
        assert_eq!(s.mean_abs_distance, Some(0.0));
    }

    #[test]
    fn tolerance_boundary() {
        let truth = GroundTruth {
            windows: vec![window(100, 130)],
            points: vec![],
        };
        let s = match_and_score(&truth, &result(vec![found(80, 150)]), 20);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        assert_eq!(s.mean_abs_distance, Some(20.0));
        let s = match_and_score(&truth, &result(vec![found(79, 150)]), 20);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
    }

    #[test]
    fn one_to_one_by_distance() {
        let truth = GroundTruth {
            windows: vec![window(100, 130)],
            points: vec![],
        };
        let s = match_and_score(&truth, &result(vec![found(95, 130), found(100, 131)]), 20);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 1, 0));
        assert_eq!(s.mean_abs_distance, Some(0.5));
    }

    #[test]
    fn unit_windows_are_points() {
        let truth = GroundTruth {
            windows: vec![],
            points: vec![TruePoint {
                time: 7,
                components: vec![0],
            }],
        };
        let mut r = result(vec![found(6, 7)]);
        r.points.push(PointAnomaly {
            time: 9,
            hits: vec![(0, 3.0)],
            saving: 3.0,
        });
        let s = match_and_score(&truth, &r, 20);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 0, 0));
        assert_eq!((s.point_tp, s.point_fp, s.point_fn), (1, 1, 0));
    }

    #[test]
    fn auc_of_simple_curves() {
        assert_eq!(partial_auc(&[(0.0, 1.0)], 1.0), 1.0);
        assert!((partial_auc(&[(1.0, 1.0)], 1.0) - 0.5).abs() < 1e-12);
        assert!((partial_auc(&[(2.0, 1.0)], 1.0) - 0.25).abs() < 1e-12);
        assert_eq!(partial_auc(&[], 1.0), 0.0);
    }
}
