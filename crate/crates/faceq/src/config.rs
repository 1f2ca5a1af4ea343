//! Experiment configuration: plain-text key=value sections, one section
//! per pipeline stage, plus the preset catalog (a1-a4, b1-b4, c1-c4).
//!
//! A stable FNV-1a digest of the normalized text (comments stripped,
//! sections and keys sorted) stamps every output file for provenance.
//! Angle values accept a `d` suffix for degrees and are converted to
//! radians at parse time; bare numbers are radians.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::enhance::{DeblurParams, Scope, Stage, WeberParams};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, GaborBankParams};
use crate::fiqa::QualityBand;
use crate::geometry::PoseThresholds;
use crate::measures::MeasureKind;
use crate::synthcorpus::{CorpusSpec, Degradation, ImageVariant};

/// Parsed section/key/value view of a config file plus its normalized
/// text form.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    normalized: String,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                let name = line
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| {
                        Error::validation(format!("line {}: bad section header `{line}`", lineno + 1))
                    })?
                    .trim()
                    .to_ascii_lowercase();
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let section = current.clone().ok_or_else(|| {
                Error::validation(format!("line {}: key outside any [section]", lineno + 1))
            })?;
            sections
                .get_mut(&section)
                .unwrap()
                .insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
        }
        let mut normalized = String::new();
        for (name, entries) in &sections {
            let _ = writeln!(normalized, "[{name}]");
            for (k, v) in entries {
                if !v.is_empty() {
                    let _ = writeln!(normalized, "{k} = {v}");
                }
            }
        }
        Ok(ConfigFile { sections, normalized })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ConfigFile::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|s| s.as_str())
            .filter(|s| !s.is_empty())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    /// FNV-1a 64-bit digest of the normalized text, hex encoded.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.normalized.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Where the low/middle/high partition comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSource {
    /// Model when configured, otherwise manifest split hints.
    Auto,
    SplitHint,
    Model(PathBuf),
}

/// A threshold that is either fixed in the config or derived from the
/// high-quality set at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSource {
    Fixed(f64),
    MeanOfHigh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoseThresholdSource {
    Fixed(PoseThresholds),
    /// Per-angle mean of absolute pose values over the high set.
    MeanAbsOfHigh,
}

/// Selection rule before threshold resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionSpec {
    All,
    Below(MeasureKind, ThresholdSource),
    Above(MeasureKind, ThresholdSource),
    Pose(PoseThresholdSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub operator: OperatorSpec,
    pub selection: SelectionSpec,
    pub scope: Scope,
    pub stage: Stage,
    /// Which quality sets the plan runs over.
    pub apply_to: Vec<QualityBand>,
    /// Optional pose rule marking records as externally frontalized for
    /// the set1/set2 decomposition.
    pub frontalize: Option<PoseThresholdSource>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec {
    Weberface(WeberParams),
    Deblur(DeblurParams),
    External,
}

/// Fully parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub feature: FeatureKind,
    pub k: usize,
    pub seed: u64,
    pub partition_source: PartitionSource,
    pub gabor: GaborBankParams,
    pub embeddings: Option<PathBuf>,
    pub enhance: Option<EnhanceConfig>,
    pub gallery: QualityBand,
    pub probes: Vec<QualityBand>,
    pub include_missing_probes: bool,
    pub subject_subsample: Option<usize>,
    pub hash: String,
    pub normalized_text: String,
}

pub const PRESET_NAMES: [&str; 12] =
    ["a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "c1", "c2", "c3", "c4"];

/// Built-in preset text by name.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "a1" => Some(include_str!("../presets/a1.cfg")),
        "a2" => Some(include_str!("../presets/a2.cfg")),
        "a3" => Some(include_str!("../presets/a3.cfg")),
        "a4" => Some(include_str!("../presets/a4.cfg")),
        "b1" => Some(include_str!("../presets/b1.cfg")),
        "b2" => Some(include_str!("../presets/b2.cfg")),
        "b3" => Some(include_str!("../presets/b3.cfg")),
        "b4" => Some(include_str!("../presets/b4.cfg")),
        "c1" => Some(include_str!("../presets/c1.cfg")),
        "c2" => Some(include_str!("../presets/c2.cfg")),
        "c3" => Some(include_str!("../presets/c3.cfg")),
        "c4" => Some(include_str!("../presets/c4.cfg")),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Load by preset name or file path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(text) = preset_text(name_or_path) {
            let file = ConfigFile::parse(text)?;
            return ExperimentConfig::from_file(&file);
        }
        let file = ConfigFile::load(Path::new(name_or_path))?;
        ExperimentConfig::from_file(&file)
    }

    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let get = |s: &str, k: &str| file.get(s, k);
        let name = get("experiment", "name").unwrap_or("custom").to_string();
        let feature = FeatureKind::parse(get("experiment", "feature").unwrap_or("gabor"))?;
        let k: usize = parse_num(get("experiment", "k").unwrap_or("50"), "experiment.k")?;
        if k == 0 {
            return Err(Error::validation("experiment.k must be at least 1"));
        }
        let seed: u64 = parse_num(get("experiment", "seed").unwrap_or("0"), "experiment.seed")?;

        let partition_source = match get("partition", "source").unwrap_or("auto") {
            "auto" => match get("partition", "model") {
                Some(m) => PartitionSource::Model(PathBuf::from(m)),
                None => PartitionSource::Auto,
            },
            "split_hint" => PartitionSource::SplitHint,
            "model" => {
                let m = get("partition", "model").ok_or_else(|| {
                    Error::validation("partition.source=model needs partition.model=<path>")
                })?;
                PartitionSource::Model(PathBuf::from(m))
            }
            other => {
                return Err(Error::validation(format!("unknown partition.source `{other}`")))
            }
        };

        let gabor = GaborBankParams {
            scales: parse_num(get("features", "gabor_scales").unwrap_or("5"), "features.gabor_scales")?,
            orientations: parse_num(
                get("features", "gabor_orientations").unwrap_or("8"),
                "features.gabor_orientations",
            )?,
            downsample: parse_num(
                get("features", "gabor_downsample").unwrap_or("4"),
                "features.gabor_downsample",
            )?,
        };
        gabor.validate()?;
        let embeddings = get("features", "embeddings").map(PathBuf::from);

        let enhance = if file.has_section("enhance") {
            Some(parse_enhance(file)?)
        } else {
            None
        };

        let gallery = QualityBand::parse(get("eval", "gallery").unwrap_or("high"))?;
        let probes: Vec<QualityBand> = get("eval", "probes")
            .unwrap_or("low,middle")
            .split(',')
            .map(|s| QualityBand::parse(s.trim()))
            .collect::<Result<_>>()?;
        if probes.is_empty() {
            return Err(Error::validation("eval.probes must name at least one set"));
        }
        let include_missing_probes = match get("eval", "include_missing_probes").unwrap_or("false")
        {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::validation(format!(
                    "eval.include_missing_probes must be true/false, got `{other}`"
                )))
            }
        };
        let subject_subsample = match get("eval", "subject_subsample") {
            Some(v) => Some(parse_num(v, "eval.subject_subsample")?),
            None => None,
        };

        Ok(ExperimentConfig {
            name,
            feature,
            k,
            seed,
            partition_source,
            gabor,
            embeddings,
            enhance,
            gallery,
            probes,
            include_missing_probes,
            subject_subsample,
            hash: file.hash(),
            normalized_text: file.normalized().to_string(),
        })
    }
}

fn parse_enhance(file: &ConfigFile) -> Result<EnhanceConfig> {
    let get = |k: &str| file.get("enhance", k);
    let operator = match get("operator").unwrap_or_default() {
        "weberface" => OperatorSpec::Weberface(WeberParams {
            alpha: parse_num(get("weber_alpha").unwrap_or("2"), "enhance.weber_alpha")?,
            sigma: parse_num(get("weber_sigma").unwrap_or("1"), "enhance.weber_sigma")?,
        }),
        "deblur" => OperatorSpec::Deblur(DeblurParams {
            psf_sigma: parse_num(get("deblur_psf_sigma").unwrap_or("1"), "enhance.deblur_psf_sigma")?,
            noise_to_signal: parse_num(get("deblur_nsr").unwrap_or("0.001"), "enhance.deblur_nsr")?,
        }),
        "external" => OperatorSpec::External,
        other => {
            return Err(Error::validation(format!(
                "enhance.operator must be weberface/deblur/external, got `{other}`"
            )))
        }
    };
    let selection = match get("selection").unwrap_or("all") {
        "all" => SelectionSpec::All,
        "pose" => SelectionSpec::Pose(parse_pose_thresholds(
            get("pose_thresholds")
                .ok_or_else(|| Error::validation("selection=pose needs enhance.pose_thresholds"))?,
        )?),
        rule => {
            let (dir, measure) = rule.split_once(':').ok_or_else(|| {
                Error::validation(format!(
                    "enhance.selection must be all/pose/below:<measure>/above:<measure>, got `{rule}`"
                ))
            })?;
            let kind = MeasureKind::parse(measure)?;
            let threshold = match get("threshold").unwrap_or("mean_of_high") {
                "mean_of_high" => ThresholdSource::MeanOfHigh,
                num => ThresholdSource::Fixed(parse_num(num, "enhance.threshold")?),
            };
            match dir {
                "below" => SelectionSpec::Below(kind, threshold),
                "above" => SelectionSpec::Above(kind, threshold),
                other => {
                    return Err(Error::validation(format!(
                        "enhance.selection direction must be below/above, got `{other}`"
                    )))
                }
            }
        }
    };
    let scope = match get("scope").unwrap_or("selected_plus_remaining") {
        "selected_only" => Scope::SelectedOnly,
        "selected_plus_remaining" => Scope::SelectedPlusRemaining,
        other => return Err(Error::validation(format!("unknown enhance.scope `{other}`"))),
    };
    let stage = match get("stage").unwrap_or("after_crop") {
        "before_crop" => Stage::BeforeCrop,
        "after_crop" => Stage::AfterCrop,
        other => return Err(Error::validation(format!("unknown enhance.stage `{other}`"))),
    };
    let apply_to: Vec<QualityBand> = get("apply_to")
        .unwrap_or("middle,low")
        .split(',')
        .map(|s| QualityBand::parse(s.trim()))
        .collect::<Result<_>>()?;
    let frontalize = match get("frontalize_thresholds") {
        Some(v) => Some(parse_pose_thresholds(v)?),
        None => None,
    };
    Ok(EnhanceConfig { operator, selection, scope, stage, apply_to, frontalize })
}

/// `45d` is degrees, a bare number is radians.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(deg) = s.strip_suffix('d') {
        let v: f64 = deg
            .parse()
            .map_err(|_| Error::validation(format!("bad angle `{s}`")))?;
        Ok(v.to_radians())
    } else {
        s.parse().map_err(|_| Error::validation(format!("bad angle `{s}`")))
    }
}

fn parse_pose_thresholds(s: &str) -> Result<PoseThresholdSource> {
    if s.trim() == "mean_abs_of_high" {
        return Ok(PoseThresholdSource::MeanAbsOfHigh);
    }
    let parts: Vec<&str> = s.split(',').map(|p| p.trim()).collect();
    if parts.len() != 3 {
        return Err(Error::validation(format!(
            "pose thresholds need roll,pitch,yaw (or mean_abs_of_high), got `{s}`"
        )));
    }
    Ok(PoseThresholdSource::Fixed(PoseThresholds::new(
        parse_angle(parts[0])?,
        parse_angle(parts[1])?,
        parse_angle(parts[2])?,
    )?))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::validation(format!("bad value for {what}: `{s}`")))
}

// ------------------------------------------------------------- corpus

/// Parse a `[corpus]` section into a generator spec. Variant keys are
/// `variant0`, `variant1`, ...; each value is a space-separated op list
/// (`blur:1.5`, `ramp:0.5`, `noise:0.02`, `pose:30d:0:0`) plus an
/// optional `hint=high|middle|low` tag.
pub fn corpus_from_config(file: &ConfigFile) -> Result<CorpusSpec> {
    if !file.has_section("corpus") {
        return Err(Error::validation("config has no [corpus] section"));
    }
    let subjects = parse_num(file.get("corpus", "subjects").unwrap_or("10"), "corpus.subjects")?;
    let images_per_subject = parse_num(
        file.get("corpus", "images_per_subject").unwrap_or("1"),
        "corpus.images_per_subject",
    )?;
    let seed = parse_num(file.get("corpus", "seed").unwrap_or("0"), "corpus.seed")?;
    let mut variants = Vec::new();
    for idx in 0..images_per_subject {
        match file.get("corpus", &format!("variant{idx}")) {
            Some(text) => variants.push(parse_variant(text)?),
            None => break,
        }
    }
    let spec = CorpusSpec { subjects, images_per_subject, seed, variants };
    spec.validate()?;
    Ok(spec)
}

fn parse_variant(text: &str) -> Result<ImageVariant> {
    let mut variant = ImageVariant::default();
    for token in text.split_whitespace() {
        if token == "none" {
            continue;
        }
        if let Some(hint) = token.strip_prefix("hint=") {
            QualityBand::parse(hint)?;
            variant.split_hint = Some(hint.to_string());
            continue;
        }
        let mut parts = token.split(':');
        let op = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let one = |what: &str| -> Result<f64> {
            args.first()
                .ok_or_else(|| Error::validation(format!("{what} needs an argument in `{token}`")))
                .and_then(|a| parse_num(a, what))
        };
        let d = match op {
            "blur" => Degradation::Blur { sigma: one("blur")? },
            "ramp" => Degradation::IlluminationRamp { strength: one("ramp")? },
            "noise" => Degradation::Noise { sigma: one("noise")? },
            "pose" => {
                if args.len() != 3 {
                    return Err(Error::validation(format!(
                        "pose needs roll:pitch:yaw in `{token}`"
                    )));
                }
                Degradation::PoseTag {
                    roll: parse_angle(args[0])?,
                    pitch: parse_angle(args[1])?,
                    yaw: parse_angle(args[2])?,
                }
            }
            other => return Err(Error::validation(format!("unknown degradation `{other}`"))),
        };
        variant.degradations.push(d);
    }
    Ok(variant)
}
