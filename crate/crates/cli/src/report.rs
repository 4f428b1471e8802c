use mvcapa::{CollectiveAnomaly, DetectionResult, DetectorConfig, PointAnomaly, RobustBaseline};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

/// Output of `mvcapa detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub schema_version: String,
    pub n: usize,
    pub p: usize,
    pub config: DetectorConfig,
    /// Location and scale used to standardize the input.
    pub baseline: RobustBaseline,
    pub collective: Vec<CollectiveAnomaly>,
    pub points: Vec<PointAnomaly>,
    pub objective: f64,
}

impl AnomalyReport {
    pub fn new(
        n: usize,
        p: usize,
        config: DetectorConfig,
        baseline: RobustBaseline,
        result: DetectionResult,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            n,
            p,
            config,
            baseline,
            collective: result.collective,
            points: result.points,
            objective: result.objective,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let result = DetectionResult {
            collective: vec![CollectiveAnomaly {
                start: 3,
                end: 9,
                components: vec![0, 2],
                start_lags: vec![0, 1],
                end_lags: vec![2, 0],
                means: vec![1.25, -0.1],
                saving: 12.5,
            }],
            points: vec![PointAnomaly {
                time: 12,
                hits: vec![(1, 30.0)],
                saving: 18.2,
            }],
            objective: 30.7,
            diagnostics: Default::default(),
        };
        let report = AnomalyReport::new(
            20,
            3,
            DetectorConfig::default_for(20, 3),
            RobustBaseline::standard(3),
            result,
        );
        let text = serde_json::to_string_pretty(&report).unwrap();
        assert!(text.contains("\"schema_version\": \"1\""));
        let back: AnomalyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
