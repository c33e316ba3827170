//! Post-assistance: label inspection and post-processing suggestions.
//!
//! Inspection turns a submitted mask into per-metric quality scores
//! `γ_j ∈ [0, 1]`, combines them by weighted mean and flags the mask when the
//! result is at or below the warning threshold `γ₀`. Post-processing proposes
//! a morphologically cleaned mask that is only stored after explicit
//! acceptance.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::{self, Connectivity, Mask};
use crate::pre_assist::StepError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InspectionMetric {
    /// Deviation of the eight-connected segment count from `target`.
    SegmentCount { target: u32 },
    /// Deviation of the hole count from `target`.
    HoleCount { target: u32 },
    Custom { name: String },
}

impl InspectionMetric {
    pub fn name(&self) -> &str {
        match self {
            InspectionMetric::SegmentCount { .. } => "segment_count",
            InspectionMetric::HoleCount { .. } => "hole_count",
            InspectionMetric::Custom { name } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionMetricSpec {
    #[serde(flatten)]
    pub metric: InspectionMetric,
    pub weight: f64,
}

/// Project-specific quality metric registered under `custom` metric specs.
pub trait CustomMetric: Send + Sync {
    fn name(&self) -> &str;

    /// Quality score in `[0, 1]`.
    fn score(&self, mask: &Mask) -> f64;
}

#[derive(Debug, Error, PartialEq)]
pub enum InspectionError {
    #[error("all inspection weights are zero")]
    AllWeightsZero,
    #[error("weight {weight} of metric {metric} is negative or not finite")]
    InvalidWeight { metric: String, weight: f64 },
    #[error("warning threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("segment-count target must be at least 1")]
    InvalidSegmentTarget,
    #[error("custom metric {0} is not registered")]
    UnknownCustomMetric(String),
    #[error("custom metric {name} returned {score}, outside [0, 1]")]
    CustomScoreOutOfRange { name: String, score: f64 },
}

fn deviation_score(observed: usize, target: u32) -> f64 {
    1.0 / (1.0 + observed.abs_diff(target as usize) as f64)
}

/// `1 / (1 + |segments(m) - target|)` with eight-connected segments.
pub fn metric_segment_count(m: &Mask, target: u32) -> f64 {
    deviation_score(imgcore::connected_components(m, Connectivity::Eight).1 as usize, target)
}

/// `1 / (1 + |holes(m) - target|)`.
pub fn metric_hole_count(m: &Mask, target: u32) -> f64 {
    deviation_score(imgcore::count_holes(m), target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub name: String,
    pub gamma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub per_metric: Vec<MetricScore>,
    #[serde(rename = "final")]
    pub final_score: f64,
    #[serde(rename = "gamma0")]
    pub threshold: f64,
    pub warning: bool,
}

/// Weighted inspection over a fixed metric list.
#[derive(Clone, Default)]
pub struct Inspector {
    metrics: Vec<InspectionMetricSpec>,
    gamma0: f64,
    custom: BTreeMap<String, Arc<dyn CustomMetric>>,
}

impl fmt::Debug for Inspector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Inspector")
            .field("metrics", &self.metrics)
            .field("gamma0", &self.gamma0)
            .field("custom", &self.custom.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Inspector {
    pub fn new(metrics: Vec<InspectionMetricSpec>, gamma0: f64) -> Result<Self, InspectionError> {
        let inspector = Self {
            metrics,
            gamma0,
            custom: BTreeMap::new(),
        };
        inspector.validate()?;
        Ok(inspector)
    }

    pub fn register(&mut self, metric: Arc<dyn CustomMetric>) {
        self.custom.insert(metric.name().to_string(), metric);
    }

    pub fn metrics(&self) -> &[InspectionMetricSpec] {
        &self.metrics
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    fn validate(&self) -> Result<(), InspectionError> {
        if !(0.0..=1.0).contains(&self.gamma0) {
            return Err(InspectionError::InvalidThreshold(self.gamma0));
        }
        for spec in &self.metrics {
            if !(spec.weight.is_finite() && spec.weight >= 0.0) {
                return Err(InspectionError::InvalidWeight {
                    metric: spec.metric.name().to_string(),
                    weight: spec.weight,
                });
            }
            if spec.metric == (InspectionMetric::SegmentCount { target: 0 }) {
                return Err(InspectionError::InvalidSegmentTarget);
            }
        }
        if self.metrics.iter().map(|s| s.weight).sum::<f64>() <= 0.0 {
            return Err(InspectionError::AllWeightsZero);
        }
        Ok(())
    }

    /// `γ(y) = Σ w_j γ_j(y) / Σ w_j`; warns when `γ(y) <= γ₀`.
    pub fn inspect(&self, m: &Mask) -> Result<InspectionReport, InspectionError> {
        self.validate()?;
        let mut per_metric = Vec::with_capacity(self.metrics.len());
        for spec in &self.metrics {
            let gamma = match &spec.metric {
                InspectionMetric::SegmentCount { target } => metric_segment_count(m, *target),
                InspectionMetric::HoleCount { target } => metric_hole_count(m, *target),
                InspectionMetric::Custom { name } => {
                    let metric = self
                        .custom
                        .get(name)
                        .ok_or_else(|| InspectionError::UnknownCustomMetric(name.clone()))?;
                    let score = metric.score(m);
                    if !(0.0..=1.0).contains(&score) {
                        return Err(InspectionError::CustomScoreOutOfRange {
                            name: name.clone(),
                            score,
                        });
                    }
                    score
                }
            };
            per_metric.push(MetricScore {
                name: spec.metric.name().to_string(),
                gamma,
                weight: spec.weight,
            });
        }
        let total: f64 = per_metric.iter().map(|s| s.weight).sum();
        let weighted: f64 = per_metric.iter().map(|s| s.weight * s.gamma).sum();
        let final_score = (weighted / total).clamp(0.0, 1.0);
        Ok(InspectionReport {
            per_metric,
            final_score,
            threshold: self.gamma0,
            warning: final_score <= self.gamma0,
        })
    }
}

/// One-shot inspection with the built-in metrics only.
pub fn inspect(m: &Mask, metrics: &[InspectionMetricSpec], gamma0: f64) -> Result<InspectionReport, InspectionError> {
    Inspector::new(metrics.to_vec(), gamma0)?.inspect(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PostprocessStep {
    Close { radius: u32 },
    Open { radius: u32 },
    FillHoles,
    RemoveSmall { min_area: usize },
}

impl fmt::Display for PostprocessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostprocessStep::Close { radius } => write!(f, "close({radius})"),
            PostprocessStep::Open { radius } => write!(f, "open({radius})"),
            PostprocessStep::FillHoles => f.write_str("fill_holes"),
            PostprocessStep::RemoveSmall { min_area } => write!(f, "remove_small({min_area})"),
        }
    }
}

impl PostprocessStep {
    fn apply(&self, m: &Mask) -> imgcore::Result<Mask> {
        match *self {
            PostprocessStep::Close { radius } => imgcore::morph_close(m, radius),
            PostprocessStep::Open { radius } => imgcore::morph_open(m, radius),
            PostprocessStep::FillHoles => Ok(imgcore::fill_holes(m)),
            PostprocessStep::RemoveSmall { min_area } => Ok(imgcore::remove_small_segments(m, min_area)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessSpec {
    #[serde(default)]
    pub steps: Vec<PostprocessStep>,
}

impl Default for PostprocessSpec {
    /// Closing with radius 1, then removal of segments under 16 pixels.
    fn default() -> Self {
        Self {
            steps: vec![
                PostprocessStep::Close { radius: 1 },
                PostprocessStep::RemoveSmall { min_area: 16 },
            ],
        }
    }
}

impl PostprocessSpec {
    pub fn validate(&self) -> Result<(), StepError> {
        for (index, step) in self.steps.iter().enumerate() {
            if let PostprocessStep::Close { radius: 0 } | PostprocessStep::Open { radius: 0 } = step {
                return Err(StepError {
                    index,
                    step: step.to_string(),
                    source: imgcore::ImgError::InvalidRadius(0),
                });
            }
        }
        Ok(())
    }

    pub fn apply(&self, m: &Mask) -> Result<Mask, StepError> {
        let mut current = m.clone();
        for (index, step) in self.steps.iter().enumerate() {
            current = step.apply(&current).map_err(|source| StepError {
                index,
                step: step.to_string(),
                source,
            })?;
        }
        Ok(current)
    }
}

/// Advisory post-processing result shown beside the submitted mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessSuggestion {
    pub before: Mask,
    pub after: Mask,
    pub changed_pixels: usize,
    pub dsc_before_after: f64,
}

pub fn suggest_postprocess(m: &Mask, spec: &PostprocessSpec) -> Result<PostprocessSuggestion, StepError> {
    let after = spec.apply(m)?;
    let changed_pixels = m.xor_count(&after).expect("same shape");
    let dsc_before_after = imgcore::dice(m, &after).expect("same shape");
    Ok(PostprocessSuggestion {
        before: m.clone(),
        after,
        changed_pixels,
        dsc_before_after,
    })
}
