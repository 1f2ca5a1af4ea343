//! Enhancement operators and threshold-selection plans.
//!
//! Two built-in operators: Weber-face photometric normalization and a
//! baseline frequency-domain Wiener deconvolution. A third, `External`,
//! consumes pre-enhanced images named by the manifest's enhanced_path
//! column, which is the plugin boundary for frontalization and
//! exemplar-based deblurring pipelines that run outside this crate.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{pose_exceeds, PoseThresholds};
use crate::manifest::ManifestRecord;
use crate::measures::{MeasureKind, MeasureTable};
use crate::raster::{self, dft2, dft2_real, idft2, GrayImage, RealMap};

/// Floor for the Weber denominator: half an 8-bit quantization step, so
/// zero-intensity pixels never divide by zero.
pub const WEBER_EPSILON: f64 = 1.0 / 510.0;

/// Weber-face parameters. `sigma` is the pre-smoothing Gaussian width;
/// setting it to exactly 0 disables smoothing (test mode for
/// hand-computed values). The neighborhood is the full 3x3 grid with
/// unit steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeberParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl Default for WeberParams {
    fn default() -> Self {
        WeberParams { alpha: 2.0, sigma: 1.0 }
    }
}

impl WeberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::validation(format!("weber alpha must be positive: {}", self.alpha)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::validation(format!("weber sigma must be >= 0: {}", self.sigma)));
        }
        Ok(())
    }
}

/// Weber-face response map:
/// W(x,y) = arctan(alpha * sum_{i,j in {-1,0,1}} (I(x,y) - I(x-i, y-j)) / max(I(x,y), eps))
/// computed on the Gaussian-smoothed image, replicate borders. Output
/// values lie strictly inside (-pi/2, pi/2).
pub fn weberface(img: &GrayImage, p: &WeberParams) -> Result<RealMap> {
    p.validate()?;
    let smoothed: RealMap = if p.sigma > 0.0 {
        let k = raster::gaussian_kernel_auto(p.sigma)?;
        raster::convolve2d_raw(img, &k)
    } else {
        img.to_map()
    };
    let (w, h) = (smoothed.width(), smoothed.height());
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = smoothed.get(x as usize, y as usize);
            let denom = center.max(WEBER_EPSILON);
            let mut diff_sum = 0.0;
            for j in -1..=1isize {
                for i in -1..=1isize {
                    diff_sum += center - smoothed.get_replicate(x - i, y - j);
                }
            }
            out[(y as usize) * w + x as usize] = (p.alpha * diff_sum / denom).atan();
        }
    }
    Ok(RealMap::new(w, h, out))
}

/// Display-normalized Weber-face: the response mapped affinely from
/// (-pi/2, pi/2) onto \[0,1\]. The map is fixed (not per-image min/max) so
/// it preserves the operator's illumination invariance.
pub fn weberface_image(img: &GrayImage, p: &WeberParams) -> Result<GrayImage> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    Ok(weberface(img, p)?.normalize_to_image(-half_pi, half_pi))
}

/// Baseline deblurring parameters: Gaussian point-spread width and the
/// constant noise-to-signal regularizer of the Wiener filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeblurParams {
    pub psf_sigma: f64,
    pub noise_to_signal: f64,
}

impl Default for DeblurParams {
    fn default() -> Self {
        DeblurParams { psf_sigma: 1.0, noise_to_signal: 1e-3 }
    }
}

impl DeblurParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.psf_sigma > 0.0) {
            return Err(Error::validation(format!(
                "deblur psf_sigma must be positive: {}",
                self.psf_sigma
            )));
        }
        if !(self.noise_to_signal >= 0.0) {
            return Err(Error::validation(format!(
                "deblur noise_to_signal must be >= 0: {}",
                self.noise_to_signal
            )));
        }
        Ok(())
    }
}

/// Frequency-domain Wiener deconvolution with a circular Gaussian PSF.
///
/// The filter is gain-normalized so the DC response is exactly 1
/// (constant images are fixed points up to roundoff); output is clamped
/// back into \[0,1\]. Deterministic.
pub fn wiener_deblur(img: &GrayImage, p: &DeblurParams) -> Result<GrayImage> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    // PSF on the circular grid, centered at the origin with wraparound
    let mut psf = vec![0.0; w * h];
    let inv = 1.0 / (2.0 * p.psf_sigma * p.psf_sigma);
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let dx = if x <= w / 2 { x as f64 } else { x as f64 - w as f64 };
            let dy = if y <= h / 2 { y as f64 } else { y as f64 - h as f64 };
            let v = (-(dx * dx + dy * dy) * inv).exp();
            psf[y * w + x] = v;
            sum += v;
        }
    }
    for v in &mut psf {
        *v /= sum;
    }
    let psf_spec = dft2_real(&RealMap::new(w, h, psf));
    let mut spec = dft2(img);
    let nsr = p.noise_to_signal;
    let gain = 1.0 + nsr;
    for (f, hh) in spec.data_mut().iter_mut().zip(psf_spec.data()) {
        let denom = hh.norm_sqr() + nsr;
        *f = (*f * hh.conj()).scale(gain / denom);
    }
    Ok(idft2(&spec).clamp_to_image())
}

/// Which records a plan enhances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    All,
    /// Strictly below the threshold (blurrier images score lower on the
    /// focus measures, hence below-threshold selection for deblurring).
    MeasureBelow(MeasureKind, f64),
    /// Strictly above the threshold.
    MeasureAbove(MeasureKind, f64),
    PoseExceeds(PoseThresholds),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    Weberface(WeberParams),
    Deblur(DeblurParams),
    /// Substitute pre-enhanced images from the manifest's enhanced_path.
    External,
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Weberface(_) => "weberface",
            Operator::Deblur(_) => "deblur",
            Operator::External => "external",
        }
    }
}

/// Which records flow on to feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    SelectedOnly,
    SelectedPlusRemaining,
}

/// Whether the operator runs on the original image or on the aligned crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    BeforeCrop,
    AfterCrop,
}

/// Experiment preset: selection rule, operator, scope and stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancementPlan {
    pub operator: Operator,
    pub selection: Selection,
    pub scope: Scope,
    pub stage: Stage,
}

impl EnhancementPlan {
    pub fn validate(&self) -> Result<()> {
        match self.selection {
            Selection::MeasureBelow(_, t) | Selection::MeasureAbove(_, t)
                if !t.is_finite() => {
                    return Err(Error::validation(format!("non-finite selection threshold {t}")));
                }
            _ => {}
        }
        match self.operator {
            Operator::Weberface(p) => p.validate(),
            Operator::Deblur(p) => p.validate(),
            Operator::External => Ok(()),
        }
    }
}

/// Result of applying a plan to a record batch: the selected/remaining
/// partition, the set1/set2/set3 decomposition (set1 = enhanced and
/// previously flagged for frontalization, set2 = enhanced only,
/// set3 = untouched), the enhanced images, and the records that flow to
/// feature extraction under the plan's scope.
#[derive(Debug, Clone)]
pub struct EnhancedSet {
    pub selected: Vec<String>,
    pub remaining: Vec<String>,
    pub set1: Vec<String>,
    pub set2: Vec<String>,
    pub set3: Vec<String>,
    pub outputs: BTreeMap<String, GrayImage>,
    pub feature_records: Vec<String>,
}

/// Deterministic selection + enhancement of a record batch.
///
/// `frontalized` carries the record ids flagged by a prior
/// pose-threshold selection pass, when one ran; it only affects the
/// set1/set2 split, never the selection itself.
pub fn apply_plan(
    records: &[ManifestRecord],
    plan: &EnhancementPlan,
    measures: &MeasureTable,
    frontalized: Option<&BTreeSet<String>>,
) -> Result<EnhancedSet> {
    plan.validate()?;
    let mut selected = Vec::new();
    let mut remaining = Vec::new();
    for r in records {
        if is_selected(r, &plan.selection, measures)? {
            selected.push(r.record_id.clone());
        } else {
            remaining.push(r.record_id.clone());
        }
    }

    let mut set1 = Vec::new();
    let mut set2 = Vec::new();
    for id in &selected {
        if frontalized.map(|f| f.contains(id)).unwrap_or(false) {
            set1.push(id.clone());
        } else {
            set2.push(id.clone());
        }
    }
    let set3 = remaining.clone();

    let by_id: BTreeMap<&str, &ManifestRecord> =
        records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let mut outputs = BTreeMap::new();
    for id in &selected {
        let record = by_id[id.as_str()];
        let enhanced = match &plan.operator {
            Operator::Weberface(p) => {
                let img = raster::load_image(&record.image_path)?;
                weberface_image(&img, p)?
            }
            Operator::Deblur(p) => {
                let img = raster::load_image(&record.image_path)?;
                wiener_deblur(&img, p)?
            }
            Operator::External => {
                let path = record.enhanced_path.as_ref().ok_or_else(|| {
                    Error::validation(format!(
                        "record {id} selected for external enhancement but has no enhanced_path"
                    ))
                })?;
                raster::load_image(path)?
            }
        };
        outputs.insert(id.clone(), enhanced);
    }

    let feature_records = match plan.scope {
        Scope::SelectedOnly => selected.clone(),
        Scope::SelectedPlusRemaining => {
            // original input order, not selected-then-remaining
            records.iter().map(|r| r.record_id.clone()).collect()
        }
    };

    Ok(EnhancedSet { selected, remaining, set1, set2, set3, outputs, feature_records })
}

fn is_selected(
    record: &ManifestRecord,
    selection: &Selection,
    measures: &MeasureTable,
) -> Result<bool> {
    match selection {
        Selection::All => Ok(true),
        Selection::MeasureBelow(kind, t) => Ok(measure_of(record, *kind, measures)? < *t),
        Selection::MeasureAbove(kind, t) => Ok(measure_of(record, *kind, measures)? > *t),
        Selection::PoseExceeds(thresholds) => {
            let pose = record.pose.ok_or_else(|| {
                Error::validation(format!("record {} has no pose angles", record.record_id))
            })?;
            Ok(pose_exceeds(&pose, thresholds))
        }
    }
}

fn measure_of(record: &ManifestRecord, kind: MeasureKind, measures: &MeasureTable) -> Result<f64> {
    measures
        .get(&record.record_id)
        .map(|row| row.get(kind))
        .ok_or_else(|| Error::validation(format!("missing measure for record {}", record.record_id)))
}
