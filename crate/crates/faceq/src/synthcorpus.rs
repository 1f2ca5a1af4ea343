//! Deterministic synthetic face-like corpus generator.
//!
//! Each subject gets a band-limited noise base (a low-frequency random
//! field, seeded per subject) with a fixed geometric landmark template
//! stamped in, so measures, alignment and matchers all exercise the
//! same math as on real crops without any dataset download. Image
//! variants apply configurable degradations: Gaussian blur,
//! multiplicative illumination ramps (mean-one, exactly the corruption
//! class photometric normalization is meant to cancel), additive noise,
//! and pose tags (metadata only).
//!
//! Identical spec + seed produces a byte-identical corpus.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{canonical_template, PoseAngles, CROP_SIZE};
use crate::manifest::{write_manifest, ManifestRecord};
use crate::raster::{self, GrayImage};
use crate::rng::SplitMix64;

/// Intensity range of the base pattern before degradations.
const BASE_LO: f64 = 0.15;
const BASE_HI: f64 = 0.70;
/// Coarse-grid side of the band-limited noise field. Smaller values
/// give smoother, more confusable subjects.
const BASE_GRID: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Degradation {
    Blur { sigma: f64 },
    /// Multiplicative ramp 1 + strength*(x/(w-1) - 0.5): mean gain one,
    /// brighter on the right, darker on the left.
    IlluminationRamp { strength: f64 },
    Noise { sigma: f64 },
    /// Metadata only: stamps Euler angles into the manifest row.
    PoseTag { roll: f64, pitch: f64, yaw: f64 },
}

impl Degradation {
    fn describe(&self) -> String {
        match self {
            Degradation::Blur { sigma } => format!("blur:{sigma}"),
            Degradation::IlluminationRamp { strength } => format!("ramp:{strength}"),
            Degradation::Noise { sigma } => format!("noise:{sigma}"),
            Degradation::PoseTag { roll, pitch, yaw } => format!("pose:{roll}:{pitch}:{yaw}"),
        }
    }
}

/// One image recipe: the ops applied to the subject base, plus an
/// optional low/middle/high tag for the harness.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageVariant {
    pub degradations: Vec<Degradation>,
    pub split_hint: Option<String>,
}

impl ImageVariant {
    pub fn clean(hint: &str) -> Self {
        ImageVariant { degradations: Vec::new(), split_hint: Some(hint.to_string()) }
    }

    pub fn with(ops: Vec<Degradation>, hint: &str) -> Self {
        ImageVariant { degradations: ops, split_hint: Some(hint.to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub subjects: usize,
    pub images_per_subject: usize,
    pub seed: u64,
    /// Variant j shapes image j of every subject; images beyond the list
    /// stay clean and untagged.
    pub variants: Vec<ImageVariant>,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(Error::validation("corpus needs at least 2 subjects"));
        }
        if self.images_per_subject < 1 {
            return Err(Error::validation("corpus needs at least 1 image per subject"));
        }
        Ok(())
    }
}

/// Seeded base pattern for one subject: upsampled low-frequency noise
/// with the canonical landmark blobs stamped in.
pub fn subject_base(seed: u64, subject: usize) -> GrayImage {
    let mut rng = SplitMix64::derive(seed, subject as u64);
    let mut coarse = vec![0.0; BASE_GRID * BASE_GRID];
    for v in &mut coarse {
        *v = rng.next_f64();
    }
    let n = CROP_SIZE;
    let mut data = vec![0.0; n * n];
    let scale = (BASE_GRID - 1) as f64 / (n - 1) as f64;
    for y in 0..n {
        for x in 0..n {
            let fx = x as f64 * scale;
            let fy = y as f64 * scale;
            let x0 = fx.floor() as usize;
            let y0 = fy.floor() as usize;
            let x1 = (x0 + 1).min(BASE_GRID - 1);
            let y1 = (y0 + 1).min(BASE_GRID - 1);
            let (dx, dy) = (fx - x0 as f64, fy - y0 as f64);
            let top = coarse[y0 * BASE_GRID + x0] * (1.0 - dx) + coarse[y0 * BASE_GRID + x1] * dx;
            let bot = coarse[y1 * BASE_GRID + x0] * (1.0 - dx) + coarse[y1 * BASE_GRID + x1] * dx;
            data[y * n + x] = BASE_LO + (BASE_HI - BASE_LO) * (top * (1.0 - dy) + bot * dy);
        }
    }
    // landmark blobs: dark spots at the canonical eye/mouth positions
    for &(lx, ly) in canonical_template().points() {
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - lx).powi(2) + (y as f64 - ly).powi(2);
                data[y * n + x] -= 0.12 * (-d2 / (2.0 * 2.5 * 2.5)).exp();
            }
        }
    }
    for v in &mut data {
        *v = v.clamp(0.0, 1.0);
    }
    GrayImage::from_vec(n, n, data).expect("base pattern construction")
}

fn apply_degradations(
    base: &GrayImage,
    ops: &[Degradation],
    rng: &mut SplitMix64,
) -> Result<(GrayImage, Option<PoseAngles>)> {
    let mut img = base.clone();
    let mut pose = None;
    for op in ops {
        match *op {
            Degradation::Blur { sigma } => {
                if sigma > 0.0 {
                    let k = raster::gaussian_kernel_auto(sigma)?;
                    img = raster::convolve2d(&img, &k);
                }
            }
            Degradation::IlluminationRamp { strength } => {
                let w = img.width();
                let data: Vec<f64> = img
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let x = (i % w) as f64 / (w - 1) as f64;
                        (v * (1.0 + strength * (x - 0.5))).clamp(0.0, 1.0)
                    })
                    .collect();
                img = GrayImage::from_vec(img.width(), img.height(), data)?;
            }
            Degradation::Noise { sigma } => {
                let data: Vec<f64> = img
                    .data()
                    .iter()
                    .map(|v| (v + sigma * rng.next_gaussian()).clamp(0.0, 1.0))
                    .collect();
                img = GrayImage::from_vec(img.width(), img.height(), data)?;
            }
            Degradation::PoseTag { roll, pitch, yaw } => {
                pose = Some(PoseAngles::new(roll, pitch, yaw)?);
            }
        }
    }
    Ok((img, pose))
}

/// Generate the corpus under `out_dir`: PGM images in `images/`, the
/// manifest in `manifest.csv`, and the ground-truth degradation table in
/// `truth.csv`. Returns the manifest records.
pub fn generate(spec: &CorpusSpec, out_dir: &Path) -> Result<Vec<ManifestRecord>> {
    spec.validate()?;
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;

    let landmarks = canonical_template();
    let mut records = Vec::new();
    let mut truth = String::from("record_id,variant,ops,split_hint\n");
    for subject in 0..spec.subjects {
        let base = subject_base(spec.seed, subject);
        let subject_id = format!("s{subject:03}");
        for image in 0..spec.images_per_subject {
            let variant = spec.variants.get(image);
            let ops = variant.map(|v| v.degradations.as_slice()).unwrap_or(&[]);
            // per-image stream: noise draws never depend on sibling images
            let mut rng =
                SplitMix64::derive(spec.seed, ((subject as u64) << 16) | (image as u64 + 1));
            let (img, pose) = apply_degradations(&base, ops, &mut rng)?;
            let record_id = format!("{subject_id}_i{image:02}");
            let path = image_dir.join(format!("{record_id}.pgm"));
            raster::save_image(&img, &path)?;
            let mut record = ManifestRecord::new(&record_id, &path, &subject_id);
            record.landmarks = Some(landmarks.clone());
            record.pose = Some(pose.unwrap_or(PoseAngles { roll: 0.0, pitch: 0.0, yaw: 0.0 }));
            record.split_hint = variant.and_then(|v| v.split_hint.clone());
            records.push(record);
            let ops_text =
                ops.iter().map(|o| o.describe()).collect::<Vec<_>>().join(";");
            let _ = writeln!(
                truth,
                "{record_id},{image},{ops_text},{}",
                variant.and_then(|v| v.split_hint.as_deref()).unwrap_or_default()
            );
        }
    }
    // the stored manifest uses corpus-relative image paths so the whole
    // directory can be moved; read_manifest resolves them back
    let relative: Vec<ManifestRecord> = records
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.image_path = PathBuf::from("images").join(format!("{}.pgm", r.record_id));
            c
        })
        .collect();
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &relative)?;
    let truth_path = out_dir.join("truth.csv");
    std::fs::write(&truth_path, truth).map_err(|e| Error::io(&truth_path, e))?;
    Ok(records)
}
