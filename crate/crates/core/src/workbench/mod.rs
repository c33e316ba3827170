//! Project lifecycle: configuration, sample pool, session state, the
//! select → prepare → submit → accept loop and training-job export.

mod config;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    InspectionSection, PoolOrder, PrelabelKind, PrelabelSection, ProjectConfig, SelectorSection, StrategyEntry,
    StrategyKind, DEFAULT_SEQUENCE_THRESHOLD,
};
pub use store::{label_file_name, LabeledRecord, SESSION_FILE};

use crate::imageio::{self, IoError};
use crate::imgcore::{self, BitDepth, Image, ImgError, Mask};
use crate::post_assist::{
    self, CustomMetric, InspectionError, InspectionReport, Inspector, PostprocessSuggestion,
};
use crate::pre_assist::{self, PrelabelContext, PrelabelError, PrelabelSpec, StepError};
use crate::selector::{
    self, CherryFlag, CherryPicks, QueryStrategy, QueryStrategyId, SampleId, SelectionContext, SelectorConfig,
    SelectorError, SequenceClustering, StrategyScores,
};

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("cannot parse config{}: {message}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    ConfigParse { path: Option<PathBuf>, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("directory {0} does not exist")]
    MissingDirectory(PathBuf),
    #[error("file {0} does not exist")]
    MissingFile(PathBuf),
    #[error("unsupported images:{}", list_files(.0))]
    UnsupportedImageFormat(Vec<(PathBuf, String)>),
    #[error("no samples found in {0}")]
    EmptyPool(PathBuf),
    #[error("sample {0} appears more than once in the pool")]
    DuplicateSample(SampleId),
    #[error("unknown sample {0}")]
    UnknownSample(SampleId),
    #[error("mask for {sample} is {found_width}x{found_height}, sample is {width}x{height}")]
    DimensionMismatch {
        sample: SampleId,
        width: u32,
        height: u32,
        found_width: u32,
        found_height: u32,
    },
    #[error("sample {0} is already labeled and relabeling is disabled")]
    AlreadyLabeled(SampleId),
    #[error("no pending submission for sample {0}")]
    NoPendingSubmission(SampleId),
    #[error("no post-processing suggestion for sample {0}")]
    NoSuggestion(SampleId),
    #[error("no unlabeled samples remain")]
    NoUnlabeledSamples,
    #[error("labeled set is empty")]
    EmptyLabeledSet,
    #[error("strategy {0} is configured but not registered")]
    UnregisteredStrategy(String),
    #[error("storage failure: {0}")]
    Storage(#[from] IoError),
    #[error(transparent)]
    Selector(SelectorError),
    #[error(transparent)]
    Prelabel(PrelabelError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Inspection(#[from] InspectionError),
    #[error(transparent)]
    Image(#[from] ImgError),
}

fn list_files(files: &[(PathBuf, String)]) -> String {
    files
        .iter()
        .map(|(p, why)| format!("\n  {}: {why}", p.display()))
        .collect()
}

impl WorkbenchError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            WorkbenchError::ConfigParse { .. } => "config_parse",
            WorkbenchError::InvalidConfig(_) => "invalid_config",
            WorkbenchError::MissingDirectory(_) => "missing_directory",
            WorkbenchError::MissingFile(_) => "missing_file",
            WorkbenchError::UnsupportedImageFormat(_) => "unsupported_image_format",
            WorkbenchError::EmptyPool(_) => "empty_pool",
            WorkbenchError::DuplicateSample(_) => "duplicate_sample",
            WorkbenchError::UnknownSample(_) => "unknown_sample",
            WorkbenchError::DimensionMismatch { .. } => "dimension_mismatch",
            WorkbenchError::AlreadyLabeled(_) => "already_labeled",
            WorkbenchError::NoPendingSubmission(_) => "no_pending_submission",
            WorkbenchError::NoSuggestion(_) => "no_suggestion",
            WorkbenchError::NoUnlabeledSamples => "no_unlabeled_samples",
            WorkbenchError::EmptyLabeledSet => "empty_labeled_set",
            WorkbenchError::UnregisteredStrategy(_) => "unregistered_strategy",
            WorkbenchError::Storage(_) => "storage_failure",
            WorkbenchError::Selector(_) => "selector_error",
            WorkbenchError::Prelabel(_) => "prelabel_error",
            WorkbenchError::Step(_) => "processing_error",
            WorkbenchError::Inspection(_) => "inspection_error",
            WorkbenchError::Image(_) => "image_error",
        }
    }
}

impl From<SelectorError> for WorkbenchError {
    fn from(e: SelectorError) -> Self {
        match e {
            SelectorError::NoUnlabeledSamples => WorkbenchError::NoUnlabeledSamples,
            SelectorError::UnknownSample(id) => WorkbenchError::UnknownSample(id),
            other => WorkbenchError::Selector(other),
        }
    }
}

impl From<PrelabelError> for WorkbenchError {
    fn from(e: PrelabelError) -> Self {
        match e {
            PrelabelError::UnknownSample(id) => WorkbenchError::UnknownSample(id),
            PrelabelError::EmptyLabeledSet => WorkbenchError::EmptyLabeledSet,
            other => WorkbenchError::Prelabel(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, WorkbenchError>;

/// One pool entry as found on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleInfo {
    pub id: SampleId,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub depth: BitDepth,
}

impl SampleInfo {
    pub fn file_name(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.id.to_string())
    }
}

/// Observable session state: the ordered pool, the labeled subset with its
/// records, cherry-pick flags and the selection round (equal to the labeled
/// count).
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub pool: Vec<SampleId>,
    pub labeled: BTreeMap<SampleId, LabeledRecord>,
    pub cherry_picks: CherryPicks,
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    #[serde(rename = "N")]
    pub total: usize,
    #[serde(rename = "M")]
    pub labeled: usize,
    pub warnings_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub id: SampleId,
    pub score: f64,
}

/// Payload handed to the annotator for the selected sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NextSample {
    pub id: SampleId,
    pub score: f64,
    /// Pre-processed image when pre-processing is enabled, else the raw one.
    pub image: Image,
    pub prelabel: Option<Mask>,
}

/// Result of a submission; nothing is stored until it is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub report: Option<InspectionReport>,
    pub suggestion: Option<PostprocessSuggestion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingSubmission {
    pub mask: Mask,
    pub submission: Submission,
}

/// Outcome of replaying selections without an annotator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub selected: Vec<Selection>,
    pub requested: usize,
    /// The budget exceeded the pool size and was cut to it.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportPair {
    pub sample_id: SampleId,
    pub image: String,
    pub mask: String,
    pub gamma: Option<f64>,
    pub warning: Option<bool>,
    pub accepted_postprocess: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportManifest {
    pub version: u32,
    pub count: usize,
    pub pairs: Vec<ExportPair>,
    pub config: ProjectConfig,
}

pub const EXPORT_MANIFEST: &str = "manifest.json";

pub struct Project {
    config: ProjectConfig,
    samples: Vec<SampleInfo>,
    pool: Vec<SampleId>,
    index: BTreeMap<SampleId, usize>,
    selector: SelectorConfig,
    prelabel: PrelabelSpec,
    inspector: Inspector,
    labeled: BTreeMap<SampleId, LabeledRecord>,
    cherry_picks: CherryPicks,
    pending: BTreeMap<SampleId, PendingSubmission>,
    strategies: BTreeMap<String, Arc<dyn QueryStrategy>>,
    clustering: OnceLock<SequenceClustering>,
}

impl fmt::Debug for Project {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Project")
            .field("dataset_dir", &self.config.dataset_dir)
            .field("pool", &self.pool.len())
            .field("labeled", &self.labeled.len())
            .finish_non_exhaustive()
    }
}

impl Project {
    /// Loads the config file at `path` and opens the project it describes.
    pub fn load(path: &Path) -> Result<Self> {
        Self::open(ProjectConfig::load(path)?)
    }

    /// Opens a project from an in-memory config. Relative paths are taken
    /// relative to the working directory.
    pub fn open(config: ProjectConfig) -> Result<Self> {
        config.validate()?;
        if !config.dataset_dir.is_dir() {
            return Err(WorkbenchError::MissingDirectory(config.dataset_dir.clone()));
        }
        if config.enable_prelabel {
            if let Some(dir) = &config.prelabel.external_dir {
                if config.prelabel.kind == PrelabelKind::ExternalMasks && !dir.is_dir() {
                    return Err(WorkbenchError::MissingDirectory(dir.clone()));
                }
            }
        }
        let samples = scan_pool(&config)?;
        fs::create_dir_all(&config.labels_dir).map_err(|source| IoError::Io {
            path: config.labels_dir.clone(),
            source,
        })?;

        let selector = if config.enable_selector {
            config.selector.selector_config()?
        } else {
            SelectorConfig::sequential()
        };
        let prelabel = config.prelabel.spec()?;
        if config.enable_prelabel
            && prelabel == PrelabelSpec::PreviousLabel
            && selector.entries.iter().any(|e| e.strategy != QueryStrategyId::Sequential && e.weight > 0.0)
        {
            warn!("previous_label pre-labels assume sequential labeling; the configured selector may skip frames");
        }
        let inspector = Inspector::new(config.inspection.metrics.clone(), config.inspection.gamma0)?;

        let pool: Vec<SampleId> = samples.iter().map(|s| s.id.clone()).collect();
        let index = pool.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut project = Self {
            config,
            samples,
            pool,
            index,
            selector,
            prelabel,
            inspector,
            labeled: BTreeMap::new(),
            cherry_picks: CherryPicks::default(),
            pending: BTreeMap::new(),
            strategies: BTreeMap::new(),
            clustering: OnceLock::new(),
        };
        project.restore_session()?;
        info!(
            "opened project: {} samples, {} labeled",
            project.pool.len(),
            project.labeled.len()
        );
        Ok(project)
    }

    fn restore_session(&mut self) -> Result<()> {
        let labels_dir = self.config.labels_dir.clone();
        let session = store::read_session(&labels_dir)?;
        let mut stored: BTreeMap<SampleId, LabeledRecord> = session
            .records
            .into_iter()
            .map(|r| (r.sample_id.clone(), r.into_record(&labels_dir)))
            .collect();
        for info in &self.samples {
            let path = labels_dir.join(label_file_name(&info.id));
            if !path.is_file() {
                continue;
            }
            let mask = match imageio::load_mask(&path) {
                Ok(m) => m,
                Err(e) => {
                    warn!("ignoring unreadable label {}: {e}", path.display());
                    continue;
                }
            };
            if (mask.width(), mask.height()) != (info.width, info.height) {
                warn!(
                    "ignoring label {}: {}x{} does not match sample {}x{}",
                    path.display(),
                    mask.width(),
                    mask.height(),
                    info.width,
                    info.height
                );
                continue;
            }
            let record = stored.remove(&info.id).unwrap_or_else(|| LabeledRecord {
                sample_id: info.id.clone(),
                mask_path: path.clone(),
                gamma: None,
                warning: None,
                accepted_postprocess: false,
                timestamp_ms: file_mtime_ms(&path),
            });
            self.labeled.insert(info.id.clone(), record);
        }
        for id in stored.keys() {
            warn!("session record for {id} has no usable label file; dropped");
        }
        for (id, flag) in session.cherry_picks.flags() {
            if let Err(e) = self.cherry_picks.set(&self.pool, id, *flag) {
                warn!("dropping cherry-pick for {id}: {e}");
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    /// Pool entries in pool order.
    pub fn samples(&self) -> &[SampleInfo] {
        &self.samples
    }

    pub fn sample(&self, id: &SampleId) -> Result<&SampleInfo> {
        self.index
            .get(id)
            .map(|&i| &self.samples[i])
            .ok_or_else(|| WorkbenchError::UnknownSample(id.clone()))
    }

    pub fn pool(&self) -> &[SampleId] {
        &self.pool
    }

    pub fn labeled(&self) -> &BTreeMap<SampleId, LabeledRecord> {
        &self.labeled
    }

    pub fn labeled_ids(&self) -> BTreeSet<SampleId> {
        self.labeled.keys().cloned().collect()
    }

    pub fn is_labeled(&self, id: &SampleId) -> bool {
        self.labeled.contains_key(id)
    }

    pub fn cherry_picks(&self) -> &CherryPicks {
        &self.cherry_picks
    }

    /// Selector actually in effect (sequential only when the selector is
    /// disabled).
    pub fn selector_config(&self) -> &SelectorConfig {
        &self.selector
    }

    pub fn inspector(&self) -> &Inspector {
        &self.inspector
    }

    pub fn round(&self) -> u64 {
        self.labeled.len() as u64
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            pool: self.pool.clone(),
            labeled: self.labeled.clone(),
            cherry_picks: self.cherry_picks.clone(),
            round: self.round(),
        }
    }

    pub fn progress(&self) -> Progress {
        Progress {
            total: self.pool.len(),
            labeled: self.labeled.len(),
            warnings_count: self.labeled.values().filter(|r| r.warning == Some(true)).count(),
        }
    }

    pub fn register_strategy(&mut self, strategy: Arc<dyn QueryStrategy>) {
        self.strategies.insert(strategy.name().to_string(), strategy);
    }

    pub fn register_metric(&mut self, metric: Arc<dyn CustomMetric>) {
        self.inspector.register(metric);
    }

    /// Clustering of the pool in order, computed on first use from raw
    /// image features.
    pub fn clustering(&self) -> Result<&SequenceClustering> {
        if let Some(c) = self.clustering.get() {
            return Ok(c);
        }
        let mut features = Vec::with_capacity(self.pool.len());
        for id in &self.pool {
            features.push((id.clone(), imgcore::gray_features(&self.raw_image(id)?)));
        }
        let clustering = selector::cluster_sequence(&features, self.config.selector.sequence_threshold)?;
        info!("sequence clustering: {} clusters", clustering.cluster_count);
        let _ = self.clustering.set(clustering);
        Ok(self.clustering.get().expect("just set"))
    }

    fn strategy_scores(
        &self,
        strategy: &QueryStrategyId,
        ctx: &SelectionContext<'_>,
        cherry_picks: &CherryPicks,
    ) -> Result<StrategyScores> {
        Ok(match strategy {
            QueryStrategyId::Sequential => selector::sequential_scores(ctx.pool, ctx.labeled),
            QueryStrategyId::Random => selector::random_scores(ctx.pool, ctx.seed, ctx.round),
            QueryStrategyId::CherryPick => cherry_picks.scores(ctx.pool),
            QueryStrategyId::SequenceAware => selector::sequence_aware_scores(self.clustering()?, ctx.labeled),
            QueryStrategyId::Custom(name) => {
                let s = self
                    .strategies
                    .get(name)
                    .ok_or_else(|| WorkbenchError::UnregisteredStrategy(name.clone()))?;
                StrategyScores::new(strategy.clone(), s.scores(ctx))?
            }
        })
    }

    /// Aggregated scores `S(x)` of every pool sample under `cfg`.
    pub fn scores_with(
        &self,
        cfg: &SelectorConfig,
        labeled: &BTreeSet<SampleId>,
        round: u64,
        cherry_picks: &CherryPicks,
    ) -> Result<selector::ScoreMap> {
        let ctx = SelectionContext {
            pool: &self.pool,
            labeled,
            round,
            seed: cfg.seed,
        };
        let per_strategy = cfg
            .entries
            .iter()
            .map(|e| self.strategy_scores(&e.strategy, &ctx, cherry_picks))
            .collect::<Result<Vec<_>>>()?;
        Ok(selector::aggregate_scores(&per_strategy, cfg)?)
    }

    fn select_with(
        &self,
        cfg: &SelectorConfig,
        labeled: &BTreeSet<SampleId>,
        round: u64,
        cherry_picks: &CherryPicks,
    ) -> Result<Selection> {
        if labeled.len() >= self.pool.len() {
            return Err(WorkbenchError::NoUnlabeledSamples);
        }
        let scores = self.scores_with(cfg, labeled, round, cherry_picks)?;
        let (id, score) = selector::next_sample(&scores, labeled, cfg.tie_break, cfg.seed, round)?;
        Ok(Selection { id, score })
    }

    /// Current aggregated scores of the session.
    pub fn scores(&self) -> Result<selector::ScoreMap> {
        self.scores_with(&self.selector, &self.labeled_ids(), self.round(), &self.cherry_picks)
    }

    /// The sample the selector proposes next. Repeated calls return the same
    /// sample until a label is accepted or cherry-picks change.
    pub fn select_next(&self) -> Result<Selection> {
        self.select_with(&self.selector, &self.labeled_ids(), self.round(), &self.cherry_picks)
    }

    /// Selection plus its prepared payload.
    pub fn next(&self) -> Result<NextSample> {
        let Selection { id, score } = self.select_next()?;
        let image = self.display_image(&id)?;
        let prelabel = self.prelabel_for(&id)?;
        Ok(NextSample {
            id,
            score,
            image,
            prelabel,
        })
    }

    /// The sample exactly as ingested.
    pub fn raw_image(&self, id: &SampleId) -> Result<Image> {
        let info = self.sample(id)?;
        let img = imageio::load_image(&info.path)?;
        if (img.width(), img.height()) != (info.width, info.height) {
            return Err(IoError::Decode {
                path: info.path.clone(),
                message: "image changed on disk since the project was opened".into(),
            }
            .into());
        }
        Ok(img)
    }

    /// Pre-processed image when pre-processing is enabled, else the raw one.
    pub fn display_image(&self, id: &SampleId) -> Result<Image> {
        let raw = self.raw_image(id)?;
        if self.config.enable_preprocess {
            Ok(pre_assist::preprocess(&raw, &self.config.preprocess)?)
        } else {
            Ok(raw)
        }
    }

    /// Pre-label guess for `id`; `None` when pre-labeling is disabled or the
    /// configured function has nothing to offer.
    pub fn prelabel_for(&self, id: &SampleId) -> Result<Option<Mask>> {
        self.sample(id)?;
        if !self.config.enable_prelabel {
            return Ok(None);
        }
        Ok(pre_assist::prelabel(id, &self.prelabel, self)?)
    }

    /// Stored label of `id`, if any.
    pub fn stored_label(&self, id: &SampleId) -> Result<Option<Mask>> {
        self.sample(id)?;
        match self.labeled.get(id) {
            Some(record) => Ok(Some(imageio::load_mask(&record.mask_path)?)),
            None => Ok(None),
        }
    }

    pub fn pending(&self, id: &SampleId) -> Option<&PendingSubmission> {
        self.pending.get(id)
    }

    /// Inspects `mask` and computes the post-processing suggestion, keeping
    /// both as the pending submission of `id`. A later submission for the
    /// same sample replaces the earlier one.
    pub fn submit_label(&mut self, id: &SampleId, mask: Mask) -> Result<Submission> {
        let info = self.sample(id)?;
        if (mask.width(), mask.height()) != (info.width, info.height) {
            return Err(WorkbenchError::DimensionMismatch {
                sample: id.clone(),
                width: info.width,
                height: info.height,
                found_width: mask.width(),
                found_height: mask.height(),
            });
        }
        if self.labeled.contains_key(id) && !self.config.allow_relabel {
            return Err(WorkbenchError::AlreadyLabeled(id.clone()));
        }
        let report = if self.config.enable_inspection {
            Some(self.inspector.inspect(&mask)?)
        } else {
            None
        };
        let suggestion = if self.config.enable_postprocess {
            Some(post_assist::suggest_postprocess(&mask, &self.config.postprocess)?)
        } else {
            None
        };
        let submission = Submission { report, suggestion };
        self.pending.insert(
            id.clone(),
            PendingSubmission {
                mask,
                submission: submission.clone(),
            },
        );
        Ok(submission)
    }

    /// Stores the pending submission of `id` (or its post-processed form) and
    /// records it in the session file. On failure the submission stays
    /// pending.
    pub fn accept_label(&mut self, id: &SampleId, use_postprocessed: bool) -> Result<LabeledRecord> {
        self.sample(id)?;
        let pending = self
            .pending
            .get(id)
            .ok_or_else(|| WorkbenchError::NoPendingSubmission(id.clone()))?;
        let (mask, report) = if use_postprocessed {
            let suggestion = pending
                .submission
                .suggestion
                .as_ref()
                .ok_or_else(|| WorkbenchError::NoSuggestion(id.clone()))?;
            let report = if self.config.enable_inspection {
                Some(self.inspector.inspect(&suggestion.after)?)
            } else {
                None
            };
            (&suggestion.after, report)
        } else {
            (&pending.mask, pending.submission.report.clone())
        };

        let mask_path = self.config.labels_dir.join(label_file_name(id));
        imageio::save_mask(&mask_path, mask)?;
        let record = LabeledRecord {
            sample_id: id.clone(),
            mask_path,
            gamma: report.as_ref().map(|r| r.final_score),
            warning: report.as_ref().map(|r| r.warning),
            accepted_postprocess: use_postprocessed,
            timestamp_ms: store::now_ms(),
        };
        let mut labeled = self.labeled.clone();
        labeled.insert(id.clone(), record.clone());
        store::write_session(&self.config.labels_dir, &labeled, &self.cherry_picks)?;
        self.labeled = labeled;
        self.pending.remove(id);
        Ok(record)
    }

    /// Sets the cherry-pick flag of `id` and persists it.
    pub fn cherry_pick(&mut self, id: &SampleId, flag: CherryFlag) -> Result<()> {
        self.sample(id)?;
        let mut picks = self.cherry_picks.clone();
        picks.set(&self.pool, id, flag)?;
        store::write_session(&self.config.labels_dir, &self.labeled, &picks)?;
        self.cherry_picks = picks;
        Ok(())
    }

    /// Replays `budget` selections under `cfg` from an empty labeled set
    /// and no cherry-picks, marking each pick labeled. The session is not
    /// touched.
    pub fn simulate_sampling(&self, cfg: &SelectorConfig, budget: usize) -> Result<SimulationOutcome> {
        cfg.validate()?;
        let steps = budget.min(self.pool.len());
        let picks = CherryPicks::default();
        let mut labeled = BTreeSet::new();
        let mut selected = Vec::with_capacity(steps);
        for round in 0..steps as u64 {
            let sel = self.select_with(cfg, &labeled, round, &picks)?;
            labeled.insert(sel.id.clone());
            selected.push(sel);
        }
        Ok(SimulationOutcome {
            selected,
            requested: budget,
            capped: budget > self.pool.len(),
        })
    }

    /// Copies every labeled (image, mask) pair into `out/images` and
    /// `out/masks` and writes `out/manifest.json`. The manifest depends only
    /// on the session content, so re-exporting an unchanged session yields
    /// identical bytes.
    pub fn export_bundle(&self, out: &Path) -> Result<ExportManifest> {
        if self.labeled.is_empty() {
            return Err(WorkbenchError::EmptyLabeledSet);
        }
        let images = out.join("images");
        let masks = out.join("masks");
        for dir in [&images, &masks] {
            fs::create_dir_all(dir).map_err(|source| IoError::Io {
                path: dir.clone(),
                source,
            })?;
        }
        let mut pairs = Vec::with_capacity(self.labeled.len());
        for info in self.samples.iter().filter(|s| self.labeled.contains_key(&s.id)) {
            let record = &self.labeled[&info.id];
            let image_name = info.file_name();
            let mask_name = label_file_name(&info.id);
            copy_file(&info.path, &images.join(&image_name))?;
            copy_file(&record.mask_path, &masks.join(&mask_name))?;
            pairs.push(ExportPair {
                sample_id: info.id.clone(),
                image: format!("images/{image_name}"),
                mask: format!("masks/{mask_name}"),
                gamma: record.gamma,
                warning: record.warning,
                accepted_postprocess: record.accepted_postprocess,
            });
        }
        let manifest = ExportManifest {
            version: 1,
            count: pairs.len(),
            pairs,
            config: self.config.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        imageio::write_atomic(&out.join(EXPORT_MANIFEST), text.as_bytes())?;
        Ok(manifest)
    }
}

impl PrelabelContext for Project {
    fn pool(&self) -> &[SampleId] {
        &self.pool
    }

    fn image(&self, id: &SampleId) -> std::result::Result<Image, PrelabelError> {
        self.raw_image(id).map_err(|e| match e {
            WorkbenchError::UnknownSample(id) => PrelabelError::UnknownSample(id),
            WorkbenchError::Storage(io) => PrelabelError::Io(io),
            other => PrelabelError::Io(IoError::Encode(other.to_string())),
        })
    }

    fn label(&self, id: &SampleId) -> std::result::Result<Option<Mask>, PrelabelError> {
        match self.labeled.get(id) {
            Some(record) => Ok(Some(imageio::load_mask(&record.mask_path)?)),
            None => Ok(None),
        }
    }

    fn dimensions(&self, id: &SampleId) -> std::result::Result<(u32, u32), PrelabelError> {
        let info = self
            .sample(id)
            .map_err(|_| PrelabelError::UnknownSample(id.clone()))?;
        Ok((info.width, info.height))
    }
}

/// Share of `groups` (for example ground-truth scenes) hit by `selected`:
/// `(covered, total)`. Samples without a group are ignored.
pub fn group_coverage(selected: &[SampleId], groups: &BTreeMap<SampleId, String>) -> (usize, usize) {
    let total: BTreeSet<&String> = groups.values().collect();
    let covered: BTreeSet<&String> = selected.iter().filter_map(|id| groups.get(id)).collect();
    (covered.len(), total.len())
}

/// Coverage of the sequence clusters by `selected`.
pub fn cluster_coverage(selected: &[SampleId], clustering: &SequenceClustering) -> (usize, usize) {
    let covered: BTreeSet<usize> = selected
        .iter()
        .filter_map(|id| clustering.assignment.get(id).copied())
        .collect();
    (covered.len(), clustering.cluster_count)
}

fn copy_file(from: &Path, to: &Path) -> Result<()> {
    let bytes = fs::read(from).map_err(|source| IoError::Io {
        path: from.to_path_buf(),
        source,
    })?;
    imageio::write_atomic(to, &bytes)?;
    Ok(())
}

fn file_mtime_ms(path: &Path) -> u64 {
    fs::metadata(path)
        .and_then(|m| m.modified())
        .ok()
        .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn sample_id_of(path: &Path) -> Option<SampleId> {
    path.file_stem().and_then(|s| s.to_str()).map(SampleId::new)
}

/// Enumerates the dataset directory in the configured order, reading only
/// image headers.
fn scan_pool(config: &ProjectConfig) -> Result<Vec<SampleInfo>> {
    let dir = &config.dataset_dir;
    let entries = fs::read_dir(dir).map_err(|source| IoError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IoError::Io {
            path: dir.clone(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && imageio::is_sample_file(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut by_id: BTreeMap<SampleId, PathBuf> = BTreeMap::new();
    for path in &files {
        let id = sample_id_of(path).ok_or_else(|| {
            WorkbenchError::InvalidConfig(format!("file name {} is not valid UTF-8", path.display()))
        })?;
        if by_id.insert(id.clone(), path.clone()).is_some() {
            return Err(WorkbenchError::DuplicateSample(id));
        }
    }

    let ordered: Vec<PathBuf> = match &config.pool_order {
        PoolOrder::Lexicographic => files,
        PoolOrder::Manifest(manifest) => {
            if !manifest.is_file() {
                return Err(WorkbenchError::MissingFile(manifest.clone()));
            }
            let text = fs::read_to_string(manifest).map_err(|source| IoError::Io {
                path: manifest.clone(),
                source,
            })?;
            let mut seen = BTreeSet::new();
            let mut ordered = Vec::new();
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let id = sample_id_of(Path::new(line)).unwrap_or_else(|| SampleId::new(line));
                let path = by_id.get(&id).ok_or_else(|| {
                    WorkbenchError::InvalidConfig(format!(
                        "pool manifest {} lists {line}, which is not in {}",
                        manifest.display(),
                        dir.display()
                    ))
                })?;
                if !seen.insert(id.clone()) {
                    return Err(WorkbenchError::DuplicateSample(id));
                }
                ordered.push(path.clone());
            }
            ordered
        }
    };

    let mut samples = Vec::with_capacity(ordered.len());
    let mut unsupported = Vec::new();
    for path in ordered {
        match imageio::probe_image(&path) {
            Ok((width, height, channels, depth)) => samples.push(SampleInfo {
                id: sample_id_of(&path).expect("checked above"),
                path,
                width,
                height,
                channels,
                depth,
            }),
            Err(e @ (IoError::UnsupportedFormat { .. } | IoError::Decode { .. })) => {
                unsupported.push((path, e.to_string()))
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !unsupported.is_empty() {
        return Err(WorkbenchError::UnsupportedImageFormat(unsupported));
    }
    if samples.is_empty() {
        return Err(WorkbenchError::EmptyPool(dir.clone()));
    }
    Ok(samples)
}
