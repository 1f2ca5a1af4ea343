//! Two-level learning-to-rank quality model.
//!
//! Level 1 trains one linear pairwise ranker per feature kind (HoG,
//! Gabor, Gist, LBP, and an external-embedding slot). The level-1 score
//! tuples are pushed through an explicit degree-5 polynomial monomial
//! map, and a level-2 linear ranker is trained on the mapped vectors
//! using the same pairs. The level-2 output is normalized against
//! percentile anchors recorded at training time, rounded, and clamped
//! into an integer score on \[0, 100\]; scores partition a dataset into
//! low (< 30), middle (30..59) and high (>= 60) quality bands.
//!
//! The pairwise objective is (lambda/2)|w|^2 + mean(hinge) minimized by
//! deterministic full-batch averaged subgradient descent; everything in
//! this module is reproducible bit for bit from (inputs, seed).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureStore};
use crate::rng::SplitMix64;

/// Ordinal constraint: `higher` should outrank `lower`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPair {
    pub higher: String,
    pub lower: String,
}

impl RankPair {
    pub fn new(higher: impl Into<String>, lower: impl Into<String>) -> Result<Self> {
        let (higher, lower) = (higher.into(), lower.into());
        if higher == lower {
            return Err(Error::validation(format!("rank pair of `{higher}` with itself")));
        }
        Ok(RankPair { higher, lower })
    }
}

/// Linear scoring function over one feature kind.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRanker {
    pub feature_kind: FeatureKind,
    pub weights: Vec<f64>,
}

impl LinearRanker {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::validation(format!(
                "ranker dim {} vs feature dim {}",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum())
    }
}

/// Hinge + L2 objective on precomputed pair difference vectors.
pub fn ranksvm_objective(w: &[f64], diffs: &[Vec<f64>], lambda: f64) -> f64 {
    let reg: f64 = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = diffs
        .iter()
        .map(|d| (1.0 - w.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).max(0.0))
        .sum::<f64>();
    reg + hinge / diffs.len() as f64
}

/// Full-batch averaged subgradient descent with 1/(lambda*t) steps.
/// Returns the tail average of the iterates (second half), which drops
/// the large early steps of the 1/(lambda*t) schedule.
fn ranksvm_optimize(diffs: &[Vec<f64>], dim: usize, lambda: f64, iters: usize) -> Result<Vec<f64>> {
    if diffs.is_empty() {
        return Err(Error::validation("ranksvm training with no pairs"));
    }
    if !(lambda > 0.0) {
        return Err(Error::validation(format!("ranksvm lambda must be positive: {lambda}")));
    }
    if iters == 0 {
        return Err(Error::validation("ranksvm needs at least one iteration"));
    }
    let inv_pairs = 1.0 / diffs.len() as f64;
    let tail_start = iters / 2 + 1;
    let mut w = vec![0.0; dim];
    let mut w_sum = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for t in 1..=iters {
        grad.fill(0.0);
        for d in diffs {
            let margin: f64 = w.iter().zip(d).map(|(a, b)| a * b).sum();
            if margin < 1.0 {
                for (g, v) in grad.iter_mut().zip(d) {
                    *g -= v * inv_pairs;
                }
            }
        }
        let eta = 1.0 / (lambda * t as f64);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= eta * (lambda * *wi + gi);
        }
        if t >= tail_start {
            for (si, wi) in w_sum.iter_mut().zip(&w) {
                *si += *wi;
            }
        }
    }
    let denom = (iters - tail_start + 1) as f64;
    Ok(w_sum.iter().map(|s| s / denom).collect())
}

/// Train a pairwise ranker on one feature store.
pub fn train_ranksvm(
    pairs: &[RankPair],
    store: &FeatureStore,
    reg_lambda: f64,
    iters: usize,
) -> Result<LinearRanker> {
    if pairs.is_empty() {
        return Err(Error::validation("ranksvm training with no pairs"));
    }
    let dim = store
        .dim()
        .ok_or_else(|| Error::validation("ranksvm training on an empty feature store"))?;
    let mut diffs = Vec::with_capacity(pairs.len());
    for p in pairs {
        let hi = store.require(&p.higher)?;
        let lo = store.require(&p.lower)?;
        diffs.push(hi.values.iter().zip(&lo.values).map(|(a, b)| a - b).collect());
    }
    let weights = ranksvm_optimize(&diffs, dim, reg_lambda, iters)?;
    Ok(LinearRanker { feature_kind: store.kind(), weights })
}

// -------------------------------------------------------- polynomial map

/// Exponent tuples for all monomials of `nvars` variables with total
/// degree 0..=5, in graded lexicographic order (degree blocks ascending,
/// lexicographic descending on the first variable within a block).
fn monomial_exponents(nvars: usize) -> Vec<Vec<u8>> {
    fn fill(remaining: u8, idx: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if idx + 1 == current.len() {
            current[idx] = remaining;
            out.push(current.clone());
            return;
        }
        for a in (0..=remaining).rev() {
            current[idx] = a;
            fill(remaining - a, idx + 1, current, out);
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0u8; nvars];
    for degree in 0..=5u8 {
        fill(degree, 0, &mut current, &mut out);
    }
    out
}

/// Explicit degree-5 monomial expansion of the level-1 score tuple,
/// constant term included. For 5 inputs the output dimension is
/// C(10,5) = 252; for the 4-ranker fallback it is C(9,4) = 126.
pub fn poly5_map(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::validation("poly5_map of an empty tuple"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("poly5_map of non-finite input"));
    }
    let exps = monomial_exponents(scores.len());
    let mut out = Vec::with_capacity(exps.len());
    for e in &exps {
        let mut v = 1.0;
        for (x, &a) in scores.iter().zip(e) {
            for _ in 0..a {
                v *= x;
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Output dimension of [`poly5_map`] for an input tuple length.
pub fn poly5_dim(nvars: usize) -> usize {
    monomial_exponents(nvars).len()
}

// ------------------------------------------------------------ the model

/// How to fill the CNN/external level-1 slot when no embeddings are
/// supplied at training time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalSlot {
    /// Train with the four built-in rankers and a 4-variable map.
    FourRankerWhenMissing,
    /// Duplicate the gist store into the external slot.
    DuplicateGist,
    /// Refuse to train without external embeddings.
    Required,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub reg_lambda: f64,
    pub iters: usize,
    /// Cross-class pairs are capped by seeded subsampling beyond this.
    pub pair_cap: usize,
    pub seed: u64,
    pub external_slot: ExternalSlot,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            reg_lambda: 1e-4,
            iters: 300,
            pair_cap: 50_000,
            seed: 7,
            external_slot: ExternalSlot::FourRankerWhenMissing,
        }
    }
}

/// The trained two-level model: level-1 rankers in a fixed kind order,
/// per-ranker standardization of the level-1 outputs (keeps the
/// degree-5 monomials well conditioned), level-2 weights over the
/// mapped space, and the score-normalization anchors (1st/99th
/// percentile of the level-2 training outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct QualityModel {
    pub level1: Vec<LinearRanker>,
    /// (offset, scale) per ranker: standardized = (score - offset) * scale.
    pub level1_norm: Vec<(f64, f64)>,
    pub level2_weights: Vec<f64>,
    pub score_min: f64,
    pub score_max: f64,
    pub seed: u64,
}

/// Integer quality score on \[0, 100\].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QualityScore(u8);

impl QualityScore {
    pub fn new(value: u8) -> Result<Self> {
        if value > 100 {
            return Err(Error::validation(format!("quality score {value} above 100")));
        }
        Ok(QualityScore(value))
    }

    pub fn value(&self) -> u8 {
        self.0
    }
}

/// Quality bands of the score partition rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum QualityBand {
    Low,
    Middle,
    High,
}

impl QualityBand {
    pub fn name(&self) -> &'static str {
        match self {
            QualityBand::Low => "low",
            QualityBand::Middle => "middle",
            QualityBand::High => "high",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(QualityBand::Low),
            "middle" => Ok(QualityBand::Middle),
            "high" => Ok(QualityBand::High),
            other => Err(Error::validation(format!("unknown quality band `{other}`"))),
        }
    }
}

impl std::fmt::Display for QualityBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Score-to-band rule: low below 30, middle from 30 up to but not
/// including 60, high from 60.
pub fn band(score: QualityScore) -> QualityBand {
    match score.value() {
        0..=29 => QualityBand::Low,
        30..=59 => QualityBand::Middle,
        _ => QualityBand::High,
    }
}

/// A lossless split of scored records into the three bands, each in
/// ascending record-id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    pub low: Vec<String>,
    pub middle: Vec<String>,
    pub high: Vec<String>,
}

pub fn partition(scores: &BTreeMap<String, QualityScore>) -> Partition {
    let mut p = Partition::default();
    for (id, &s) in scores {
        match band(s) {
            QualityBand::Low => p.low.push(id.clone()),
            QualityBand::Middle => p.middle.push(id.clone()),
            QualityBand::High => p.high.push(id.clone()),
        }
    }
    p
}

/// All cross-class ordered pairs induced by ordinal labels (higher label
/// outranks lower), in deterministic order, subsampled by seeded shuffle
/// beyond `cap`.
pub fn pairs_from_labels(
    labels: &[(String, u32)],
    cap: usize,
    seed: u64,
) -> Result<Vec<RankPair>> {
    let classes: BTreeSet<u32> = labels.iter().map(|(_, c)| *c).collect();
    if classes.len() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 ordinal classes, got {}",
            classes.len()
        )));
    }
    let mut pairs = Vec::new();
    for (hi_id, hi_class) in labels {
        for (lo_id, lo_class) in labels {
            if hi_class > lo_class {
                pairs.push(RankPair { higher: hi_id.clone(), lower: lo_id.clone() });
            }
        }
    }
    if pairs.len() > cap {
        let mut rng = SplitMix64::derive(seed, 0xA11);
        rng.shuffle(&mut pairs);
        pairs.truncate(cap);
    }
    Ok(pairs)
}

/// Level-1 kinds in training order; the external slot comes last.
const LEVEL1_ORDER: [FeatureKind; 5] = [
    FeatureKind::Hog,
    FeatureKind::Gabor,
    FeatureKind::Gist,
    FeatureKind::Lbp,
    FeatureKind::External,
];

/// Train the full two-level model from ordinal labels and per-kind
/// feature stores.
pub fn train_quality_model(
    labels: &[(String, u32)],
    stores: &BTreeMap<FeatureKind, FeatureStore>,
    opts: &TrainOptions,
) -> Result<QualityModel> {
    let pairs = pairs_from_labels(labels, opts.pair_cap, opts.seed)?;

    let mut level1 = Vec::new();
    for kind in LEVEL1_ORDER {
        match stores.get(&kind) {
            Some(store) => {
                level1.push(train_ranksvm(&pairs, store, opts.reg_lambda, opts.iters)?)
            }
            None if kind == FeatureKind::External => match opts.external_slot {
                ExternalSlot::FourRankerWhenMissing => continue,
                ExternalSlot::DuplicateGist => {
                    // the slot keeps reading gist features at predict time
                    let gist = stores.get(&FeatureKind::Gist).ok_or_else(|| {
                        Error::validation("gist store required to duplicate into external slot")
                    })?;
                    level1.push(train_ranksvm(&pairs, gist, opts.reg_lambda, opts.iters)?);
                }
                ExternalSlot::Required => {
                    return Err(Error::validation(
                        "external embeddings required but not provided",
                    ))
                }
            },
            None => {
                return Err(Error::validation(format!("missing {kind} feature store")));
            }
        }
    }

    // level-1 score tuples for every labeled record
    let mut tuples: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (id, _) in labels {
        tuples.insert(id, level1_scores(&level1, stores, id)?);
    }
    // standardize each ranker's output over the training records so
    // the degree-5 monomials stay well conditioned
    let n = labels.len() as f64;
    let mut level1_norm = Vec::with_capacity(level1.len());
    for k in 0..level1.len() {
        let mean: f64 = tuples.values().map(|t| t[k]).sum::<f64>() / n;
        let var: f64 = tuples.values().map(|t| (t[k] - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 1e-24 { 1.0 / var.sqrt() } else { 1.0 };
        level1_norm.push((mean, scale));
    }
    let mut mapped: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (id, tuple) in &tuples {
        let std: Vec<f64> = tuple
            .iter()
            .zip(&level1_norm)
            .map(|(s, (off, sc))| (s - off) * sc)
            .collect();
        mapped.insert(id, poly5_map(&std)?);
    }
    let dim = poly5_dim(level1.len());
    let mut diffs = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let hi = &mapped[p.higher.as_str()];
        let lo = &mapped[p.lower.as_str()];
        diffs.push(hi.iter().zip(lo).map(|(a, b)| a - b).collect());
    }
    let level2_weights = ranksvm_optimize(&diffs, dim, opts.reg_lambda, opts.iters)?;

    let mut raw: Vec<f64> = mapped
        .values()
        .map(|m| level2_weights.iter().zip(m).map(|(w, v)| w * v).sum())
        .collect();
    raw.sort_by(|a, b| a.partial_cmp(b).expect("non-finite level-2 output"));
    let score_min = percentile(&raw, 0.01);
    let score_max = percentile(&raw, 0.99);
    if !(score_max > score_min) {
        return Err(Error::numeric(format!(
            "degenerate score range [{score_min}, {score_max}]"
        )));
    }

    Ok(QualityModel { level1, level1_norm, level2_weights, score_min, score_max, seed: opts.seed })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn level1_scores(
    level1: &[LinearRanker],
    stores: &BTreeMap<FeatureKind, FeatureStore>,
    record_id: &str,
) -> Result<Vec<f64>> {
    level1
        .iter()
        .map(|r| {
            let store = stores.get(&r.feature_kind).ok_or_else(|| {
                Error::validation(format!("missing {} feature store", r.feature_kind))
            })?;
            r.score(&store.require(record_id)?.values)
        })
        .collect()
}

/// Raw (unnormalized) level-2 output for one record.
pub fn predict_raw(
    model: &QualityModel,
    stores: &BTreeMap<FeatureKind, FeatureStore>,
    record_id: &str,
) -> Result<f64> {
    let tuple = level1_scores(&model.level1, stores, record_id)?;
    if model.level1_norm.len() != tuple.len() {
        return Err(Error::validation("model standardization does not match ranker count"));
    }
    let std: Vec<f64> = tuple
        .iter()
        .zip(&model.level1_norm)
        .map(|(s, (off, sc))| (s - off) * sc)
        .collect();
    let mapped = poly5_map(&std)?;
    if mapped.len() != model.level2_weights.len() {
        return Err(Error::validation(format!(
            "mapped dim {} vs level-2 dim {}",
            mapped.len(),
            model.level2_weights.len()
        )));
    }
    Ok(model.level2_weights.iter().zip(&mapped).map(|(w, v)| w * v).sum())
}

/// Normalize a raw level-2 output against the model anchors and round
/// half away from zero onto \[0, 100\].
pub fn score_from_raw(model: &QualityModel, raw: f64) -> QualityScore {
    let unit = ((raw - model.score_min) / (model.score_max - model.score_min)).clamp(0.0, 1.0);
    QualityScore((unit * 100.0).round() as u8)
}

pub fn predict_quality(
    model: &QualityModel,
    stores: &BTreeMap<FeatureKind, FeatureStore>,
    record_id: &str,
) -> Result<QualityScore> {
    Ok(score_from_raw(model, predict_raw(model, stores, record_id)?))
}

// -------------------------------------------------------- serialization

const MODEL_MAGIC: &str = "faceq quality model v1";

/// Versioned plain-text model format. Floats are written in Rust's
/// shortest round-trip decimal form, so save -> load is bit-identical.
pub fn save_model(model: &QualityModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "seed {}", model.seed);
    let _ = writeln!(out, "anchors {} {}", model.score_min, model.score_max);
    let _ = writeln!(out, "level1 {}", model.level1.len());
    for (r, (off, sc)) in model.level1.iter().zip(&model.level1_norm) {
        let _ = writeln!(out, "ranker {} {}", r.feature_kind, r.weights.len());
        write_weights(&mut out, &r.weights);
        let _ = writeln!(out, "norm {off} {sc}");
    }
    let _ = writeln!(out, "level2 {}", model.level2_weights.len());
    write_weights(&mut out, &model.level2_weights);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_weights(out: &mut String, w: &[f64]) {
    for (i, v) in w.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn load_model(path: &Path) -> Result<QualityModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let bad = |msg: &str| Error::validation(format!("{}: {msg}", path.display()));
    if lines.next() != Some(MODEL_MAGIC) {
        return Err(bad("not a faceq quality model file"));
    }
    let seed_line = lines.next().ok_or_else(|| bad("missing seed"))?;
    let seed: u64 = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad seed line"))?;
    let anchors = lines.next().ok_or_else(|| bad("missing anchors"))?;
    let mut anchor_parts = anchors
        .strip_prefix("anchors ")
        .ok_or_else(|| bad("bad anchors line"))?
        .split(' ');
    let score_min: f64 = anchor_parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad score_min"))?;
    let score_max: f64 = anchor_parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad score_max"))?;
    let count_line = lines.next().ok_or_else(|| bad("missing level1 count"))?;
    let count: usize = count_line
        .strip_prefix("level1 ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad level1 count"))?;
    let mut level1 = Vec::with_capacity(count);
    let mut level1_norm = Vec::with_capacity(count);
    for _ in 0..count {
        let header = lines.next().ok_or_else(|| bad("missing ranker header"))?;
        let mut parts = header
            .strip_prefix("ranker ")
            .ok_or_else(|| bad("bad ranker header"))?
            .split(' ');
        let kind = FeatureKind::parse(parts.next().unwrap_or_default())?;
        let dim: usize =
            parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad ranker dim"))?;
        let weights = parse_weights(lines.next().ok_or_else(|| bad("missing weights"))?, dim)
            .map_err(|e| e.in_stage("model"))?;
        level1.push(LinearRanker { feature_kind: kind, weights });
        let norm_line = lines.next().ok_or_else(|| bad("missing norm line"))?;
        let norm = parse_weights(
            norm_line.strip_prefix("norm ").ok_or_else(|| bad("bad norm line"))?,
            2,
        )
        .map_err(|e| e.in_stage("model"))?;
        level1_norm.push((norm[0], norm[1]));
    }
    let l2_line = lines.next().ok_or_else(|| bad("missing level2 header"))?;
    let l2_dim: usize = l2_line
        .strip_prefix("level2 ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad level2 header"))?;
    let level2_weights =
        parse_weights(lines.next().ok_or_else(|| bad("missing level2 weights"))?, l2_dim)
            .map_err(|e| e.in_stage("model"))?;
    Ok(QualityModel { level1, level1_norm, level2_weights, score_min, score_max, seed })
}

fn parse_weights(line: &str, dim: usize) -> Result<Vec<f64>> {
    let w: Vec<f64> = line
        .split(' ')
        .map(|t| t.parse::<f64>().map_err(|_| Error::validation(format!("bad weight `{t}`"))))
        .collect::<Result<_>>()?;
    if w.len() != dim {
        return Err(Error::validation(format!("expected {dim} weights, found {}", w.len())));
    }
    Ok(w)
}
