//! Sample selection: query strategies score every pool sample in `[0, 1]`,
//! scores are combined by a weighted mean and the best unlabeled sample wins.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::imgcore::FeatureVector;

/// Identifier of a pool sample: the file stem of its image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(String);

impl SampleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryStrategyId {
    Sequential,
    Random,
    CherryPick,
    SequenceAware,
    Custom(String),
}

impl fmt::Display for QueryStrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryStrategyId::Sequential => f.write_str("sequential"),
            QueryStrategyId::Random => f.write_str("random"),
            QueryStrategyId::CherryPick => f.write_str("cherry_pick"),
            QueryStrategyId::SequenceAware => f.write_str("sequence_aware"),
            QueryStrategyId::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

pub type ScoreMap = BTreeMap<SampleId, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SelectorError {
    #[error("all strategy weights are zero")]
    AllWeightsZero,
    #[error("weight {weight} of strategy {strategy} is negative or not finite")]
    InvalidWeight { strategy: QueryStrategyId, weight: f64 },
    #[error("strategy {0} is configured more than once")]
    DuplicateStrategy(QueryStrategyId),
    #[error("no scores supplied for configured strategy {0}")]
    MissingScores(QueryStrategyId),
    #[error("scores supplied for unconfigured strategy {0}")]
    UnconfiguredStrategy(QueryStrategyId),
    #[error("scores of strategy {0} cover a different sample set")]
    ScoreCoverageMismatch(QueryStrategyId),
    #[error("score {score} of sample {sample} from strategy {strategy} is outside [0, 1]")]
    ScoreOutOfRange {
        strategy: QueryStrategyId,
        sample: SampleId,
        score: f64,
    },
    #[error("no unlabeled samples remain")]
    NoUnlabeledSamples,
    #[error("unknown sample {0}")]
    UnknownSample(SampleId),
    #[error("sample pool is empty")]
    EmptyPool,
    #[error("sequence threshold {0} must be finite and non-negative")]
    InvalidThreshold(f64),
}

pub type Result<T> = std::result::Result<T, SelectorError>;

/// Scores `s_j(x)` of one strategy over the sample pool.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyScores {
    pub strategy: QueryStrategyId,
    pub scores: ScoreMap,
}

impl StrategyScores {
    /// Checks the `[0, 1]` range contract.
    pub fn new(strategy: QueryStrategyId, scores: ScoreMap) -> Result<Self> {
        if let Some((sample, &score)) = scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(SelectorError::ScoreOutOfRange {
                strategy,
                sample: sample.clone(),
                score,
            });
        }
        Ok(Self { strategy, scores })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestId,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyWeight {
    pub strategy: QueryStrategyId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub entries: Vec<StrategyWeight>,
    pub tie_break: TieBreak,
    pub seed: u64,
}

impl SelectorConfig {
    /// Plain sequential sampling, the unassisted baseline.
    pub fn sequential() -> Self {
        Self::single(QueryStrategyId::Sequential)
    }

    pub fn single(strategy: QueryStrategyId) -> Self {
        Self {
            entries: vec![StrategyWeight { strategy, weight: 1.0 }],
            tie_break: TieBreak::LowestId,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !(entry.weight.is_finite() && entry.weight >= 0.0) {
                return Err(SelectorError::InvalidWeight {
                    strategy: entry.strategy.clone(),
                    weight: entry.weight,
                });
            }
            if !seen.insert(&entry.strategy) {
                return Err(SelectorError::DuplicateStrategy(entry.strategy.clone()));
            }
        }
        if self.total_weight() <= 0.0 {
            return Err(SelectorError::AllWeightsZero);
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn weight_of(&self, strategy: &QueryStrategyId) -> Option<f64> {
        self.entries.iter().find(|e| &e.strategy == strategy).map(|e| e.weight)
    }
}

/// Final score `s(x) = Σ w_j s_j(x) / Σ w_j`.
pub fn aggregate_scores(per_strategy: &[StrategyScores], cfg: &SelectorConfig) -> Result<ScoreMap> {
    cfg.validate()?;
    for scores in per_strategy {
        if cfg.weight_of(&scores.strategy).is_none() {
            return Err(SelectorError::UnconfiguredStrategy(scores.strategy.clone()));
        }
    }

    let mut matched = Vec::with_capacity(cfg.entries.len());
    for entry in &cfg.entries {
        let scores = per_strategy
            .iter()
            .find(|s| s.strategy == entry.strategy)
            .ok_or_else(|| SelectorError::MissingScores(entry.strategy.clone()))?;
        if let Some((sample, &score)) = scores.scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(SelectorError::ScoreOutOfRange {
                strategy: entry.strategy.clone(),
                sample: sample.clone(),
                score,
            });
        }
        matched.push((entry.weight, scores));
    }

    let reference = &matched[0].1.scores;
    for (_, scores) in &matched[1..] {
        if !scores.scores.keys().eq(reference.keys()) {
            return Err(SelectorError::ScoreCoverageMismatch(scores.strategy.clone()));
        }
    }

    let total = cfg.total_weight();
    Ok(reference
        .keys()
        .map(|id| {
            let weighted: f64 = matched.iter().map(|(w, s)| w * s.scores[id]).sum();
            (id.clone(), (weighted / total).clamp(0.0, 1.0))
        })
        .collect())
}

/// Deterministic uniform value in `[0, 1)` keyed by `(seed, round, tag)`.
pub(crate) fn keyed_unit(seed: u64, round: u64, tag: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(round.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// Argmax of `scores` over samples not in `labeled`.
///
/// Ties go to the lowest id, or under [`TieBreak::SeededRandom`] to a
/// candidate drawn deterministically from `(seed, round)`.
pub fn next_sample(
    scores: &ScoreMap,
    labeled: &BTreeSet<SampleId>,
    tie_break: TieBreak,
    seed: u64,
    round: u64,
) -> Result<(SampleId, f64)> {
    let mut best = f64::NEG_INFINITY;
    let mut candidates: Vec<&SampleId> = Vec::new();
    for (id, &score) in scores.iter().filter(|(id, _)| !labeled.contains(*id)) {
        if score > best {
            best = score;
            candidates.clear();
            candidates.push(id);
        } else if score == best {
            candidates.push(id);
        }
    }
    let pick = match (candidates.len(), tie_break) {
        (0, _) => return Err(SelectorError::NoUnlabeledSamples),
        (1, _) | (_, TieBreak::LowestId) => 0,
        (n, TieBreak::SeededRandom) => {
            ((keyed_unit(seed, round, "tie-break") * n as f64) as usize).min(n - 1)
        }
    };
    Ok((candidates[pick].clone(), best))
}

/// Ordered sequential sampling: the first unlabeled sample in pool order
/// scores 1, everything else 0.
pub fn sequential_scores(pool: &[SampleId], labeled: &BTreeSet<SampleId>) -> StrategyScores {
    let next = pool.iter().find(|id| !labeled.contains(*id));
    let scores = pool
        .iter()
        .map(|id| (id.clone(), if Some(id) == next { 1.0 } else { 0.0 }))
        .collect();
    StrategyScores {
        strategy: QueryStrategyId::Sequential,
        scores,
    }
}

/// Uniform scores drawn independently per `(seed, round, sample)`.
pub fn random_scores(pool: &[SampleId], seed: u64, round: u64) -> StrategyScores {
    let scores = pool
        .iter()
        .map(|id| (id.clone(), keyed_unit(seed, round, id.as_str())))
        .collect();
    StrategyScores {
        strategy: QueryStrategyId::Random,
        scores,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CherryFlag {
    Relevant,
    Irrelevant,
    Clear,
}

/// Score given to samples the annotator has not flagged.
pub const CHERRY_NEUTRAL: f64 = 0.5;

/// Manual relevance flags set by the annotator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CherryPicks(BTreeMap<SampleId, CherryFlag>);

impl CherryPicks {
    pub fn set(&mut self, pool: &[SampleId], id: &SampleId, flag: CherryFlag) -> Result<()> {
        if !pool.contains(id) {
            return Err(SelectorError::UnknownSample(id.clone()));
        }
        match flag {
            CherryFlag::Clear => {
                self.0.remove(id);
            }
            flag => {
                self.0.insert(id.clone(), flag);
            }
        }
        Ok(())
    }

    pub fn flag(&self, id: &SampleId) -> CherryFlag {
        self.0.get(id).copied().unwrap_or(CherryFlag::Clear)
    }

    pub fn flags(&self) -> &BTreeMap<SampleId, CherryFlag> {
        &self.0
    }

    pub fn scores(&self, pool: &[SampleId]) -> StrategyScores {
        let scores = pool
            .iter()
            .map(|id| {
                let s = match self.flag(id) {
                    CherryFlag::Relevant => 1.0,
                    CherryFlag::Irrelevant => 0.0,
                    CherryFlag::Clear => CHERRY_NEUTRAL,
                };
                (id.clone(), s)
            })
            .collect();
        StrategyScores {
            strategy: QueryStrategyId::CherryPick,
            scores,
        }
    }
}

/// Partition of a frame-ordered pool into runs of similar frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClustering {
    pub threshold: f64,
    pub assignment: BTreeMap<SampleId, usize>,
    pub cluster_count: usize,
}

/// Splits the ordered samples into a new cluster wherever the feature
/// distance to the previous sample exceeds `threshold`.
pub fn cluster_sequence(samples: &[(SampleId, FeatureVector)], threshold: f64) -> Result<SequenceClustering> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(SelectorError::InvalidThreshold(threshold));
    }
    let Some((first_id, _)) = samples.first() else {
        return Err(SelectorError::EmptyPool);
    };
    let mut assignment = BTreeMap::new();
    assignment.insert(first_id.clone(), 0);
    let mut cluster = 0;
    for pair in samples.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.1.distance(&prev.1) > threshold {
            cluster += 1;
        }
        assignment.insert(cur.0.clone(), cluster);
    }
    Ok(SequenceClustering {
        threshold,
        assignment,
        cluster_count: cluster + 1,
    })
}

/// `s(x) = 1 / (1 + L_c(x))` with `L_c(x)` the labeled count of x's cluster.
pub fn sequence_aware_scores(clustering: &SequenceClustering, labeled: &BTreeSet<SampleId>) -> StrategyScores {
    let mut per_cluster = vec![0usize; clustering.cluster_count];
    for id in labeled {
        if let Some(&c) = clustering.assignment.get(id) {
            per_cluster[c] += 1;
        }
    }
    let scores = clustering
        .assignment
        .iter()
        .map(|(id, &c)| (id.clone(), 1.0 / (1.0 + per_cluster[c] as f64)))
        .collect();
    StrategyScores {
        strategy: QueryStrategyId::SequenceAware,
        scores,
    }
}

/// Read-only view of the session handed to strategies.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub pool: &'a [SampleId],
    pub labeled: &'a BTreeSet<SampleId>,
    pub round: u64,
    pub seed: u64,
}

/// Extension point for project-specific strategies (model uncertainty and
/// the like). Registered under `QueryStrategyId::Custom(name)`.
pub trait QueryStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Must cover every pool sample with values in `[0, 1]`.
    fn scores(&self, ctx: &SelectionContext<'_>) -> ScoreMap;
}
