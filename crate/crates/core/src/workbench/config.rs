//! Project configuration file (TOML).
//!
//! ```toml
//! dataset_dir = "images"
//! labels_dir = "labels"
//! pool_order = "lexicographic"          # or { manifest = "order.txt" }
//!
//! enable_selector = true
//! enable_preprocess = true
//! enable_prelabel = true
//! enable_inspection = true
//! enable_postprocess = true
//!
//! [selector]
//! seed = 7
//! sequence_threshold = 1.0
//! tie_break = "lowest_id"               # or "seeded_random"
//! strategies = [{ kind = "sequence_aware", weight = 1.0 }]
//!
//! [preprocess]
//! steps = [{ op = "normalize", p_low = 1.0, p_high = 99.0 }]
//!
//! [prelabel]
//! kind = "otsu"                         # none | otsu | previous_label | external_masks
//!
//! [inspection]
//! gamma0 = 0.7
//! metrics = [{ kind = "segment_count", target = 1, weight = 1.0 }]
//!
//! [postprocess]
//! steps = [{ op = "close", radius = 1 }, { op = "remove_small", min_area = 16 }]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::WorkbenchError;
use crate::post_assist::{InspectionMetric, InspectionMetricSpec, Inspector, PostprocessSpec};
use crate::pre_assist::{PrelabelSpec, PreprocessSpec};
use crate::selector::{QueryStrategyId, SelectorConfig, StrategyWeight, TieBreak};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub dataset_dir: PathBuf,
    pub labels_dir: PathBuf,
    #[serde(default)]
    pub pool_order: PoolOrder,
    /// Permits submitting labels for samples that already have one.
    #[serde(default)]
    pub allow_relabel: bool,

    #[serde(default = "yes")]
    pub enable_selector: bool,
    #[serde(default = "yes")]
    pub enable_preprocess: bool,
    #[serde(default = "yes")]
    pub enable_prelabel: bool,
    #[serde(default = "yes")]
    pub enable_inspection: bool,
    #[serde(default = "yes")]
    pub enable_postprocess: bool,

    #[serde(default)]
    pub selector: SelectorSection,
    #[serde(default)]
    pub preprocess: PreprocessSpec,
    #[serde(default)]
    pub prelabel: PrelabelSection,
    #[serde(default)]
    pub inspection: InspectionSection,
    #[serde(default)]
    pub postprocess: PostprocessSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolOrder {
    #[default]
    Lexicographic,
    /// Text file listing sample file names (or stems), one per line.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Sequential,
    Random,
    CherryPick,
    SequenceAware,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub kind: StrategyKind,
    /// Registered name, `custom` strategies only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl StrategyEntry {
    pub fn new(kind: StrategyKind, weight: f64) -> Self {
        Self { kind, name: None, weight }
    }

    fn strategy_id(&self) -> Result<QueryStrategyId, WorkbenchError> {
        Ok(match self.kind {
            StrategyKind::Sequential => QueryStrategyId::Sequential,
            StrategyKind::Random => QueryStrategyId::Random,
            StrategyKind::CherryPick => QueryStrategyId::CherryPick,
            StrategyKind::SequenceAware => QueryStrategyId::SequenceAware,
            StrategyKind::Custom => QueryStrategyId::Custom(
                self.name
                    .clone()
                    .ok_or_else(|| WorkbenchError::InvalidConfig("custom strategy needs a `name`".into()))?,
            ),
        })
    }
}

pub const DEFAULT_SEQUENCE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorSection {
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyEntry>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub sequence_threshold: f64,
    #[serde(default)]
    pub tie_break: TieBreak,
}

fn default_strategies() -> Vec<StrategyEntry> {
    vec![StrategyEntry::new(StrategyKind::Sequential, 1.0)]
}

fn default_threshold() -> f64 {
    DEFAULT_SEQUENCE_THRESHOLD
}

impl Default for SelectorSection {
    fn default() -> Self {
        Self {
            strategies: default_strategies(),
            seed: 0,
            sequence_threshold: DEFAULT_SEQUENCE_THRESHOLD,
            tie_break: TieBreak::LowestId,
        }
    }
}

impl SelectorSection {
    pub fn selector_config(&self) -> Result<SelectorConfig, WorkbenchError> {
        let entries = self
            .strategies
            .iter()
            .map(|e| {
                Ok(StrategyWeight {
                    strategy: e.strategy_id()?,
                    weight: e.weight,
                })
            })
            .collect::<Result<Vec<_>, WorkbenchError>>()?;
        let cfg = SelectorConfig {
            entries,
            tie_break: self.tie_break,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrelabelKind {
    #[default]
    None,
    Otsu,
    PreviousLabel,
    #[serde(alias = "external")]
    ExternalMasks,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrelabelSection {
    #[serde(default)]
    pub kind: PrelabelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_dir: Option<PathBuf>,
}

impl PrelabelSection {
    pub fn spec(&self) -> Result<PrelabelSpec, WorkbenchError> {
        Ok(match self.kind {
            PrelabelKind::None => PrelabelSpec::None,
            PrelabelKind::Otsu => PrelabelSpec::Otsu,
            PrelabelKind::PreviousLabel => PrelabelSpec::PreviousLabel,
            PrelabelKind::ExternalMasks => PrelabelSpec::ExternalMasks {
                dir: self.external_dir.clone().ok_or_else(|| {
                    WorkbenchError::InvalidConfig("prelabel kind external_masks needs `external_dir`".into())
                })?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InspectionSection {
    #[serde(default = "default_metrics")]
    pub metrics: Vec<InspectionMetricSpec>,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
}

fn default_metrics() -> Vec<InspectionMetricSpec> {
    vec![
        InspectionMetricSpec {
            metric: InspectionMetric::SegmentCount { target: 1 },
            weight: 1.0,
        },
        InspectionMetricSpec {
            metric: InspectionMetric::HoleCount { target: 0 },
            weight: 1.0,
        },
    ]
}

fn default_gamma0() -> f64 {
    0.5
}

impl Default for InspectionSection {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
            gamma0: default_gamma0(),
        }
    }
}

impl ProjectConfig {
    /// Minimal configuration with every assistance module enabled at its
    /// defaults.
    pub fn new(dataset_dir: impl Into<PathBuf>, labels_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset_dir: dataset_dir.into(),
            labels_dir: labels_dir.into(),
            pool_order: PoolOrder::Lexicographic,
            allow_relabel: false,
            enable_selector: true,
            enable_preprocess: true,
            enable_prelabel: true,
            enable_inspection: true,
            enable_postprocess: true,
            selector: SelectorSection::default(),
            preprocess: PreprocessSpec::default(),
            prelabel: PrelabelSection::default(),
            inspection: InspectionSection::default(),
            postprocess: PostprocessSpec::default(),
        }
    }

    /// Every assistance module switched off: sequential order, raw images, no
    /// pre-labels, no inspection, no post-processing.
    pub fn naive(dataset_dir: impl Into<PathBuf>, labels_dir: impl Into<PathBuf>) -> Self {
        Self {
            enable_selector: false,
            enable_preprocess: false,
            enable_prelabel: false,
            enable_inspection: false,
            enable_postprocess: false,
            ..Self::new(dataset_dir, labels_dir)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, WorkbenchError> {
        toml::from_str(text).map_err(|e| WorkbenchError::ConfigParse {
            path: None,
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reads and parses `path`, resolving relative paths against its parent.
    pub fn load(path: &Path) -> Result<Self, WorkbenchError> {
        let text = fs::read_to_string(path).map_err(|e| WorkbenchError::ConfigParse {
            path: Some(path.to_path_buf()),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            WorkbenchError::ConfigParse { message, .. } => WorkbenchError::ConfigParse {
                path: Some(path.to_path_buf()),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.dataset_dir);
        resolve(&mut self.labels_dir);
        if let PoolOrder::Manifest(p) = &mut self.pool_order {
            resolve(p);
        }
        if let Some(p) = &mut self.prelabel.external_dir {
            resolve(p);
        }
    }

    /// Checks numeric parameters against the module preconditions.
    pub fn validate(&self) -> Result<(), WorkbenchError> {
        self.selector.selector_config()?;
        let theta = self.selector.sequence_threshold;
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(WorkbenchError::InvalidConfig(format!(
                "selector.sequence_threshold must be finite and >= 0, got {theta}"
            )));
        }
        self.preprocess
            .validate()
            .map_err(|e| WorkbenchError::InvalidConfig(format!("preprocess: {e}")))?;
        self.postprocess
            .validate()
            .map_err(|e| WorkbenchError::InvalidConfig(format!("postprocess: {e}")))?;
        Inspector::new(self.inspection.metrics.clone(), self.inspection.gamma0)
            .map_err(|e| WorkbenchError::InvalidConfig(format!("inspection: {e}")))?;
        self.prelabel.spec()?;
        Ok(())
    }
}
