//! Dataset manifest: one CSV row per image, carrying identity, landmark,
//! pose and optional enhancement/embedding references.
//!
//! Format: UTF-8 CSV with a required header row. Landmarks are packed
//! into a single field as semicolon-delimited `x:y` pairs (6 or 68 of
//! them); pose occupies three plain columns in radians. Lines starting
//! with `#` are comments. Fields must not contain commas, so the files
//! stay greppable with ordinary text tools.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{LandmarkSet, PoseAngles};
use crate::raster;

pub const MANIFEST_HEADER: &str =
    "record_id,image_path,subject_id,landmarks,roll,pitch,yaw,enhanced_path,embedding_ref,split_hint";

/// One dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub record_id: String,
    pub image_path: PathBuf,
    pub subject_id: String,
    pub landmarks: Option<LandmarkSet>,
    pub pose: Option<PoseAngles>,
    pub enhanced_path: Option<PathBuf>,
    pub embedding_ref: Option<String>,
    pub split_hint: Option<String>,
}

impl ManifestRecord {
    pub fn new(record_id: impl Into<String>, image_path: impl Into<PathBuf>, subject_id: impl Into<String>) -> Self {
        ManifestRecord {
            record_id: record_id.into(),
            image_path: image_path.into(),
            subject_id: subject_id.into(),
            landmarks: None,
            pose: None,
            enhanced_path: None,
            embedding_ref: None,
            split_hint: None,
        }
    }
}

/// Read a manifest; relative image/enhanced paths resolve against the
/// manifest's own directory, so corpora and bundles are relocatable.
/// Resolved paths are absolutized, so records stay valid when written
/// into derived manifests that live elsewhere.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = parse_manifest(&text, path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| -> Result<PathBuf> {
        let joined = if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        std::path::absolute(&joined).map_err(|e| Error::io(&joined, e))
    };
    for r in &mut records {
        r.image_path = resolve(&r.image_path)?;
        if let Some(p) = &r.enhanced_path {
            r.enhanced_path = Some(resolve(p)?);
        }
    }
    Ok(records)
}

fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::validation(format!("{}: empty manifest", path.display())))?;
    if header.trim() != MANIFEST_HEADER {
        return Err(Error::validation(format!(
            "{}: unexpected manifest header (want `{MANIFEST_HEADER}`)",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::validation(format!(
                "{}:{}: expected 10 fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let at = |i: usize| fields[i].trim();
        if at(0).is_empty() || at(1).is_empty() || at(2).is_empty() {
            return Err(Error::validation(format!(
                "{}:{}: record_id, image_path and subject_id are required",
                path.display(),
                lineno + 1
            )));
        }
        let landmarks = if at(3).is_empty() { None } else { Some(parse_landmarks(at(3))?) };
        let pose = match (at(4).is_empty(), at(5).is_empty(), at(6).is_empty()) {
            (true, true, true) => None,
            (false, false, false) => {
                let p = |i: usize| -> Result<f64> {
                    at(i).parse().map_err(|_| {
                        Error::validation(format!(
                            "{}:{}: bad pose value `{}`",
                            path.display(),
                            lineno + 1,
                            at(i)
                        ))
                    })
                };
                Some(PoseAngles::new(p(4)?, p(5)?, p(6)?)?)
            }
            _ => {
                return Err(Error::validation(format!(
                    "{}:{}: pose needs all of roll,pitch,yaw or none",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        let opt = |i: usize| if at(i).is_empty() { None } else { Some(at(i).to_string()) };
        records.push(ManifestRecord {
            record_id: at(0).to_string(),
            image_path: PathBuf::from(at(1)),
            subject_id: at(2).to_string(),
            landmarks,
            pose,
            enhanced_path: opt(7).map(PathBuf::from),
            embedding_ref: opt(8),
            split_hint: opt(9),
        });
    }
    Ok(records)
}

pub fn parse_landmarks(field: &str) -> Result<LandmarkSet> {
    let mut points = Vec::new();
    for pair in field.split(';') {
        let (x, y) = pair
            .split_once(':')
            .ok_or_else(|| Error::validation(format!("bad landmark pair `{pair}`")))?;
        let px: f64 = x
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("bad landmark x `{x}`")))?;
        let py: f64 = y
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("bad landmark y `{y}`")))?;
        points.push((px, py));
    }
    LandmarkSet::new(points)
}

pub fn format_landmarks(lm: &LandmarkSet) -> String {
    let mut s = String::new();
    for (i, (x, y)) in lm.points().iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{x}:{y}");
    }
    s
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for r in records {
        for field in [
            r.record_id.as_str(),
            r.image_path.to_str().unwrap_or_default(),
            r.subject_id.as_str(),
        ] {
            if field.contains(',') || field.contains('\n') {
                return Err(Error::validation(format!(
                    "manifest field `{field}` contains a delimiter"
                )));
            }
        }
        let lm = r.landmarks.as_ref().map(format_landmarks).unwrap_or_default();
        let (roll, pitch, yaw) = match r.pose {
            Some(p) => (p.roll.to_string(), p.pitch.to_string(), p.yaw.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.record_id,
            r.image_path.display(),
            r.subject_id,
            lm,
            roll,
            pitch,
            yaw,
            r.enhanced_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            r.embedding_ref.clone().unwrap_or_default(),
            r.split_hint.clone().unwrap_or_default(),
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Full ingestion validation: unique record ids, resolvable image paths,
/// and landmarks inside the image bounds.
pub fn validate_manifest(records: &[ManifestRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.record_id.as_str()) {
            return Err(Error::validation(format!("duplicate record_id `{}`", r.record_id)));
        }
    }
    for r in records {
        let img = raster::load_image(&r.image_path)?;
        if let Some(lm) = &r.landmarks {
            if !lm.within_bounds(img.width(), img.height()) {
                return Err(Error::validation(format!(
                    "record {}: landmarks outside the {}x{} image",
                    r.record_id,
                    img.width(),
                    img.height()
                )));
            }
        }
    }
    Ok(())
}
