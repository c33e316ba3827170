//! Pre-assistance: the display image `h(x)` and the initial guess `l(x)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imageio::{self, IoError};
use crate::imgcore::{self, Image, ImgError, Mask};
use crate::selector::SampleId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PreprocessStep {
    Grayscale,
    Normalize { p_low: f64, p_high: f64 },
    MedianDenoise { radius: u32 },
}

impl fmt::Display for PreprocessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessStep::Grayscale => f.write_str("grayscale"),
            PreprocessStep::Normalize { p_low, p_high } => write!(f, "normalize({p_low}, {p_high})"),
            PreprocessStep::MedianDenoise { radius } => write!(f, "median_denoise({radius})"),
        }
    }
}

impl PreprocessStep {
    fn apply(&self, img: &Image) -> imgcore::Result<Image> {
        match *self {
            PreprocessStep::Grayscale => imgcore::to_grayscale(img),
            PreprocessStep::Normalize { p_low, p_high } => imgcore::normalize_intensity(img, p_low, p_high),
            PreprocessStep::MedianDenoise { radius } => imgcore::denoise_median(img, radius),
        }
    }
}

/// Ordered preprocessing pipeline; the same spec applies to every sample of a
/// project. An empty pipeline is the identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    #[serde(default)]
    pub steps: Vec<PreprocessStep>,
}

#[derive(Debug, Error, PartialEq)]
#[error("preprocess step {index} ({step}) failed: {source}")]
pub struct StepError {
    pub index: usize,
    pub step: String,
    #[source]
    pub source: ImgError,
}

impl PreprocessSpec {
    /// Checks parameter preconditions that do not depend on the image.
    pub fn validate(&self) -> Result<(), StepError> {
        for (index, step) in self.steps.iter().enumerate() {
            let problem = match *step {
                PreprocessStep::Normalize { p_low, p_high } if !(p_low >= 0.0 && p_low < p_high && p_high <= 100.0) => {
                    Some(ImgError::InvalidPercentiles {
                        low: p_low,
                        high: p_high,
                    })
                }
                PreprocessStep::MedianDenoise { radius } if radius < 1 => Some(ImgError::InvalidRadius(radius)),
                _ => None,
            };
            if let Some(source) = problem {
                return Err(StepError {
                    index,
                    step: step.to_string(),
                    source,
                });
            }
        }
        Ok(())
    }
}

pub fn preprocess(x: &Image, spec: &PreprocessSpec) -> Result<Image, StepError> {
    let mut current = x.clone();
    for (index, step) in spec.steps.iter().enumerate() {
        current = step.apply(&current).map_err(|source| StepError {
            index,
            step: step.to_string(),
            source,
        })?;
    }
    Ok(current)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrelabelSpec {
    #[default]
    None,
    Otsu,
    PreviousLabel,
    /// Masks produced by an external process (for example a trained network)
    /// and dropped into `dir` as `<sample_stem>.png`.
    ExternalMasks { dir: PathBuf },
}

impl PrelabelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PrelabelSpec::None => "none",
            PrelabelSpec::Otsu => "otsu",
            PrelabelSpec::PreviousLabel => "previous_label",
            PrelabelSpec::ExternalMasks { .. } => "external_masks",
        }
    }
}

#[derive(Debug, Error)]
pub enum PrelabelError {
    #[error("unknown sample {0}")]
    UnknownSample(SampleId),
    #[error("pre-label mask for {sample} is {found_width}x{found_height}, sample is {width}x{height}")]
    MaskShapeMismatch {
        sample: SampleId,
        width: u32,
        height: u32,
        found_width: u32,
        found_height: u32,
    },
    #[error("labeled set is empty")]
    EmptyLabeledSet,
    #[error("pre-label function produced no mask for any labeled sample")]
    NoPrelabelsProduced,
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Image(#[from] ImgError),
}

/// What a pre-label function may look at: the dataset order, raw samples and
/// stored labels.
pub trait PrelabelContext {
    fn pool(&self) -> &[SampleId];

    fn image(&self, id: &SampleId) -> Result<Image, PrelabelError>;

    fn label(&self, id: &SampleId) -> Result<Option<Mask>, PrelabelError>;

    fn dimensions(&self, id: &SampleId) -> Result<(u32, u32), PrelabelError> {
        let img = self.image(id)?;
        Ok((img.width(), img.height()))
    }
}

/// Wraps a context so that stored labels come from a fixed map, e.g. a
/// ground-truth set being evaluated.
pub struct WithLabels<'a, C: ?Sized> {
    pub inner: &'a C,
    pub labels: &'a BTreeMap<SampleId, Mask>,
}

impl<C: PrelabelContext + ?Sized> PrelabelContext for WithLabels<'_, C> {
    fn pool(&self) -> &[SampleId] {
        self.inner.pool()
    }

    fn image(&self, id: &SampleId) -> Result<Image, PrelabelError> {
        self.inner.image(id)
    }

    fn label(&self, id: &SampleId) -> Result<Option<Mask>, PrelabelError> {
        Ok(self.labels.get(id).cloned())
    }

    fn dimensions(&self, id: &SampleId) -> Result<(u32, u32), PrelabelError> {
        self.inner.dimensions(id)
    }
}

/// Initial guess `l(x)` for `id`, or `None` when the function has nothing to
/// offer. Otsu failures on flat images never block annotation; they are
/// logged and yield `None`.
pub fn prelabel(id: &SampleId, spec: &PrelabelSpec, ctx: &(impl PrelabelContext + ?Sized)) -> Result<Option<Mask>, PrelabelError> {
    let position = ctx
        .pool()
        .iter()
        .position(|p| p == id)
        .ok_or_else(|| PrelabelError::UnknownSample(id.clone()))?;

    match spec {
        PrelabelSpec::None => Ok(None),
        PrelabelSpec::Otsu => {
            let gray = ctx.image(id)?.to_gray();
            match imgcore::otsu_threshold(&gray) {
                Ok(t) => Ok(Some(imgcore::apply_threshold(&gray, t)?)),
                Err(ImgError::DegenerateHistogram) => {
                    warn!("no Otsu pre-label for {id}: image holds a single intensity");
                    Ok(None)
                }
                Err(e) => Err(e.into()),
            }
        }
        PrelabelSpec::PreviousLabel => {
            for prev in ctx.pool()[..position].iter().rev() {
                if let Some(mask) = ctx.label(prev)? {
                    let (w, h) = ctx.dimensions(id)?;
                    if (mask.width(), mask.height()) != (w, h) {
                        warn!("previous label {prev} does not match the shape of {id}; no pre-label");
                        return Ok(None);
                    }
                    return Ok(Some(mask));
                }
            }
            Ok(None)
        }
        PrelabelSpec::ExternalMasks { dir } => {
            let path = dir.join(format!("{id}.png"));
            if !path.is_file() {
                return Ok(None);
            }
            let mask = imageio::load_mask(&path)?;
            let (w, h) = ctx.dimensions(id)?;
            if (mask.width(), mask.height()) != (w, h) {
                return Err(PrelabelError::MaskShapeMismatch {
                    sample: id.clone(),
                    width: w,
                    height: h,
                    found_width: mask.width(),
                    found_height: mask.height(),
                });
            }
            Ok(Some(mask))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrelabelEvaluation {
    pub per_sample: BTreeMap<SampleId, f64>,
    pub mean: f64,
    /// Labeled samples for which the function produced no mask.
    pub skipped: Vec<SampleId>,
}

/// Mean DSC between each labeled mask and the pre-label produced for it.
///
/// For `previous_label` the predecessors' masks are taken from `labeled`.
pub fn evaluate_prelabel(
    spec: &PrelabelSpec,
    labeled: &BTreeMap<SampleId, Mask>,
    ctx: &(impl PrelabelContext + ?Sized),
) -> Result<PrelabelEvaluation, PrelabelError> {
    if labeled.is_empty() {
        return Err(PrelabelError::EmptyLabeledSet);
    }
    let ctx = WithLabels { inner: ctx, labels: labeled };
    let mut per_sample = BTreeMap::new();
    let mut skipped = Vec::new();
    for (id, truth) in labeled {
        match prelabel(id, spec, &ctx)? {
            Some(guess) => {
                per_sample.insert(id.clone(), imgcore::dice(truth, &guess)?);
            }
            None => skipped.push(id.clone()),
        }
    }
    if per_sample.is_empty() {
        return Err(PrelabelError::NoPrelabelsProduced);
    }
    let mean = per_sample.values().sum::<f64>() / per_sample.len() as f64;
    Ok(PrelabelEvaluation {
        per_sample,
        mean,
        skipped,
    })
}
