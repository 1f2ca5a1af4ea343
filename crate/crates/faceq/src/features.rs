//! Face feature extraction and cosine-similarity matching.
//!
//! Gabor magnitudes are the primary recognition feature; LBP, HoG and
//! Gist feed the quality model's level-1 rankers, and external
//! embeddings (one CSV row per record) stand in for CNN features so
//! precomputed deep descriptors run through the same evaluation harness.
//!
//! Every extractor parameter is a fixed constant in this module so runs
//! are reproducible; none of them are fitted.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::raster::{dft2, dft2_complex, idft2_complex, Complex, GrayImage, RealMap};

/// L2 norms at or below this are treated as degenerate (all-zero) vectors.
const ZERO_NORM_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureKind {
    Gabor,
    Lbp,
    Hog,
    Gist,
    External,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Hog,
        FeatureKind::Gabor,
        FeatureKind::Gist,
        FeatureKind::Lbp,
        FeatureKind::External,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Gabor => "gabor",
            FeatureKind::Lbp => "lbp",
            FeatureKind::Hog => "hog",
            FeatureKind::Gist => "gist",
            FeatureKind::External => "external",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gabor" => Ok(FeatureKind::Gabor),
            "lbp" => Ok(FeatureKind::Lbp),
            "hog" => Ok(FeatureKind::Hog),
            "gist" => Ok(FeatureKind::Gist),
            "external" => Ok(FeatureKind::External),
            other => Err(Error::validation(format!("unknown feature kind `{other}`"))),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed real feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(kind: FeatureKind, values: Vec<f64>) -> Self {
        FeatureVector { kind, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// All-zero vectors mark degenerate inputs (e.g. constant images
    /// under DC-free filters).
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Scale to unit L2 norm; degenerate vectors collapse to exact zeros.
    pub fn into_l2_normalized(mut self) -> Self {
        let n = self.norm();
        if n <= ZERO_NORM_EPS {
            self.values.iter_mut().for_each(|v| *v = 0.0);
        } else {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }
}

/// Cosine similarity dot(a,b)/(|a||b|); requires matching kind and dim
/// and non-degenerate vectors. Symmetric, and 1 for identical direction.
pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::validation(format!(
            "feature kind mismatch: {} vs {}",
            a.kind, b.kind
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::validation(format!("feature dim mismatch: {} vs {}", a.dim(), b.dim())));
    }
    let na = a.norm();
    let nb = b.norm();
    if na <= ZERO_NORM_EPS || nb <= ZERO_NORM_EPS {
        return Err(Error::numeric("cosine similarity of a zero vector"));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

// ------------------------------------------------------------------ Gabor

/// Gabor bank geometry: wavelengths double every two scales starting at
/// 4 px, orientations span half a turn, magnitude maps are block-mean
/// downsampled by `downsample`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaborBankParams {
    pub scales: usize,
    pub orientations: usize,
    pub downsample: usize,
}

impl Default for GaborBankParams {
    fn default() -> Self {
        GaborBankParams { scales: 5, orientations: 8, downsample: 4 }
    }
}

impl GaborBankParams {
    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 || self.orientations == 0 || self.downsample == 0 {
            return Err(Error::validation("gabor bank parameters must be at least 1"));
        }
        Ok(())
    }
}

/// Precomputed complex Gabor filters in the frequency domain, built once
/// per image size and shared read-only across threads.
pub struct GaborBank {
    params: GaborBankParams,
    width: usize,
    height: usize,
    filter_specs: Vec<crate::raster::Spectrum>,
}

impl GaborBank {
    pub fn new(params: GaborBankParams, width: usize, height: usize) -> Result<Self> {
        params.validate()?;
        if !width.is_multiple_of(params.downsample) || !height.is_multiple_of(params.downsample) {
            return Err(Error::validation(format!(
                "downsample {} must divide image size {width}x{height}",
                params.downsample
            )));
        }
        let mut filter_specs = Vec::with_capacity(params.scales * params.orientations);
        for s in 0..params.scales {
            let wavelength = 4.0 * 2f64.powf(s as f64 / 2.0);
            let sigma = 0.56 * wavelength;
            for o in 0..params.orientations {
                let theta = o as f64 * std::f64::consts::PI / params.orientations as f64;
                filter_specs.push(build_filter(width, height, wavelength, sigma, theta));
            }
        }
        Ok(GaborBank { params, width, height, filter_specs })
    }

    pub fn params(&self) -> &GaborBankParams {
        &self.params
    }

    pub fn filter_count(&self) -> usize {
        self.filter_specs.len()
    }

    /// Spatial taps of one filter (inverse transform of its spectrum);
    /// exposed for DC-response checks.
    pub fn spatial_taps(&self, index: usize) -> Vec<Complex> {
        idft2_complex(&self.filter_specs[index]).data().to_vec()
    }

    /// Magnitude response map per filter, scale-major then orientation.
    pub fn responses(&self, img: &GrayImage) -> Result<Vec<RealMap>> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::validation(format!(
                "gabor bank built for {}x{}, image is {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        let img_spec = dft2(img);
        let mut maps = Vec::with_capacity(self.filter_specs.len());
        for filt in &self.filter_specs {
            let mut prod = filt.clone();
            for (p, f) in prod.data_mut().iter_mut().zip(img_spec.data()) {
                *p = *p * *f;
            }
            let resp = idft2_complex(&prod);
            let mag: Vec<f64> = resp.data().iter().map(|c| c.abs()).collect();
            maps.push(RealMap::new(self.width, self.height, mag));
        }
        Ok(maps)
    }

    /// Downsampled magnitude responses concatenated and L2-normalized.
    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector> {
        let maps = self.responses(img)?;
        let f = self.params.downsample;
        let (ow, oh) = (self.width / f, self.height / f);
        let mut values = Vec::with_capacity(maps.len() * ow * oh);
        for m in &maps {
            for by in 0..oh {
                for bx in 0..ow {
                    let mut sum = 0.0;
                    for y in 0..f {
                        for x in 0..f {
                            sum += m.get(bx * f + x, by * f + y);
                        }
                    }
                    values.push(sum / (f * f) as f64);
                }
            }
        }
        Ok(FeatureVector::new(FeatureKind::Gabor, values).into_l2_normalized())
    }

    /// Gist descriptor: per-filter mean energies over a fixed 4x4 grid.
    pub fn extract_gist(&self, img: &GrayImage) -> Result<FeatureVector> {
        if !self.width.is_multiple_of(4) || !self.height.is_multiple_of(4) {
            return Err(Error::validation("gist needs dimensions divisible by 4"));
        }
        let maps = self.responses(img)?;
        let (cw, ch) = (self.width / 4, self.height / 4);
        let mut values = Vec::with_capacity(maps.len() * 16);
        for m in &maps {
            for gy in 0..4 {
                for gx in 0..4 {
                    let mut sum = 0.0;
                    for y in 0..ch {
                        for x in 0..cw {
                            sum += m.get(gx * cw + x, gy * ch + y);
                        }
                    }
                    values.push(sum / (cw * ch) as f64);
                }
            }
        }
        Ok(FeatureVector::new(FeatureKind::Gist, values).into_l2_normalized())
    }
}

/// Complex Gabor filter on the circular grid (signed offsets with
/// wraparound), isotropic Gaussian envelope, mean-subtracted so the DC
/// response is zero, then transformed to the frequency domain.
fn build_filter(
    width: usize,
    height: usize,
    wavelength: f64,
    sigma: f64,
    theta: f64,
) -> crate::raster::Spectrum {
    let mut taps = vec![Complex::ZERO; width * height];
    let (ct, st) = (theta.cos(), theta.sin());
    let inv = 1.0 / (2.0 * sigma * sigma);
    let omega = 2.0 * std::f64::consts::PI / wavelength;
    for y in 0..height {
        let dy = if y <= height / 2 { y as f64 } else { y as f64 - height as f64 };
        for x in 0..width {
            let dx = if x <= width / 2 { x as f64 } else { x as f64 - width as f64 };
            let along = dx * ct + dy * st;
            let env = (-(dx * dx + dy * dy) * inv).exp();
            let phase = omega * along;
            taps[y * width + x] = Complex::new(env * phase.cos(), env * phase.sin());
        }
    }
    let n = (width * height) as f64;
    let mean_re: f64 = taps.iter().map(|c| c.re).sum::<f64>() / n;
    let mean_im: f64 = taps.iter().map(|c| c.im).sum::<f64>() / n;
    for c in &mut taps {
        c.re -= mean_re;
        c.im -= mean_im;
    }
    dft2_complex(width, height, taps)
}

/// Gabor features with a one-off bank; build a [`GaborBank`] directly
/// when extracting from many images.
pub fn extract_gabor(img: &GrayImage, params: &GaborBankParams) -> Result<FeatureVector> {
    GaborBank::new(*params, img.width(), img.height())?.extract(img)
}

/// Gist features at the default bank geometry.
pub fn extract_gist(img: &GrayImage) -> Result<FeatureVector> {
    GaborBank::new(GaborBankParams::default(), img.width(), img.height())?.extract_gist(img)
}

// -------------------------------------------------------------------- LBP

/// Cell side for LBP histograms.
pub const LBP_CELL: usize = 16;
/// Uniform (8,1) patterns: 58 uniform codes plus one catch-all bin.
pub const LBP_BINS: usize = 59;

fn lbp_uniform_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let transitions = |b: u8| (b ^ b.rotate_right(1)).count_ones();
        let mut table = [58u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, 58);
        table
    })
}

/// 8-neighbor offsets, clockwise from north.
const LBP_NEIGHBORS: [(isize, isize); 8] =
    [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn lbp_code(img: &GrayImage, x: isize, y: isize) -> u8 {
    let center = img.get_replicate(x, y);
    let mut code = 0u8;
    for (bit, (dx, dy)) in LBP_NEIGHBORS.iter().enumerate() {
        if img.get_replicate(x + dx, y + dy) >= center {
            code |= 1 << bit;
        }
    }
    code
}

/// Raw per-cell uniform-LBP histograms (counts, unnormalized).
fn lbp_cell_histograms(img: &GrayImage, cell: usize) -> Result<Vec<[f64; LBP_BINS]>> {
    if !img.width().is_multiple_of(cell) || !img.height().is_multiple_of(cell) {
        return Err(Error::validation(format!(
            "LBP cell {cell} must divide image size {}x{}",
            img.width(),
            img.height()
        )));
    }
    let table = lbp_uniform_table();
    let (cx, cy) = (img.width() / cell, img.height() / cell);
    let mut hists = vec![[0.0; LBP_BINS]; cx * cy];
    for y in 0..img.height() {
        for x in 0..img.width() {
            let code = lbp_code(img, x as isize, y as isize);
            let bin = table[code as usize] as usize;
            hists[(y / cell) * cx + x / cell][bin] += 1.0;
        }
    }
    Ok(hists)
}

/// Uniform (8,1) LBP over 16x16 cells: per-cell L1 normalization, then a
/// global L2 normalization of the concatenated histograms.
pub fn extract_lbp(img: &GrayImage) -> Result<FeatureVector> {
    let hists = lbp_cell_histograms(img, LBP_CELL)?;
    let mut values = Vec::with_capacity(hists.len() * LBP_BINS);
    for h in &hists {
        let total: f64 = h.iter().sum();
        for &v in h {
            values.push(if total > 0.0 { v / total } else { 0.0 });
        }
    }
    Ok(FeatureVector::new(FeatureKind::Lbp, values).into_l2_normalized())
}

// -------------------------------------------------------------------- HoG

/// Cell side for HoG.
pub const HOG_CELL: usize = 8;
/// Unsigned orientation bins over \[0, pi).
pub const HOG_BINS: usize = 9;
/// Cells per block side; blocks slide with stride one cell.
pub const HOG_BLOCK: usize = 2;

/// HoG with central-difference gradients, magnitude-weighted hard
/// binning into 9 unsigned orientation bins, 8x8 cells and L2-normalized
/// 2x2 blocks at stride 1.
pub fn extract_hog(img: &GrayImage) -> Result<FeatureVector> {
    if !img.width().is_multiple_of(HOG_CELL) || !img.height().is_multiple_of(HOG_CELL) {
        return Err(Error::validation(format!(
            "HoG cell {HOG_CELL} must divide image size {}x{}",
            img.width(),
            img.height()
        )));
    }
    let (cx, cy) = (img.width() / HOG_CELL, img.height() / HOG_CELL);
    if cx < HOG_BLOCK || cy < HOG_BLOCK {
        return Err(Error::validation("image too small for a 2x2 HoG block"));
    }
    let mut cells = vec![[0.0f64; HOG_BINS]; cx * cy];
    let pi = std::f64::consts::PI;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let gx = img.get_replicate(x as isize + 1, y as isize)
                - img.get_replicate(x as isize - 1, y as isize);
            let gy = img.get_replicate(x as isize, y as isize + 1)
                - img.get_replicate(x as isize, y as isize - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).rem_euclid(pi);
            let bin = ((angle / pi) * HOG_BINS as f64) as usize % HOG_BINS;
            cells[(y / HOG_CELL) * cx + x / HOG_CELL][bin] += mag;
        }
    }
    let mut values = Vec::with_capacity((cx - 1) * (cy - 1) * HOG_BLOCK * HOG_BLOCK * HOG_BINS);
    for by in 0..=cy - HOG_BLOCK {
        for bx in 0..=cx - HOG_BLOCK {
            let start = values.len();
            for j in 0..HOG_BLOCK {
                for i in 0..HOG_BLOCK {
                    values.extend_from_slice(&cells[(by + j) * cx + bx + i]);
                }
            }
            let norm: f64 =
                values[start..].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for v in &mut values[start..] {
                *v /= norm;
            }
        }
    }
    Ok(FeatureVector::new(FeatureKind::Hog, values).into_l2_normalized())
}

// -------------------------------------------------------- external & store

/// Per-kind feature table keyed by record id, with a consistent
/// dimension across rows. Backed by a plain CSV: `record_id,v1,...,vd`,
/// `#` lines ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    kind: FeatureKind,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl FeatureStore {
    pub fn new(kind: FeatureKind) -> Self {
        FeatureStore { kind, vectors: BTreeMap::new() }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn insert(&mut self, record_id: impl Into<String>, vector: FeatureVector) -> Result<()> {
        if vector.kind != self.kind {
            return Err(Error::validation(format!(
                "store holds {} features, got {}",
                self.kind, vector.kind
            )));
        }
        if let Some(d) = self.dim() {
            if vector.dim() != d {
                return Err(Error::validation(format!(
                    "feature dim {} does not match store dim {d}",
                    vector.dim()
                )));
            }
        }
        self.vectors.insert(record_id.into(), vector.values);
        Ok(())
    }

    pub fn get(&self, record_id: &str) -> Option<FeatureVector> {
        self.vectors.get(record_id).map(|v| FeatureVector::new(self.kind, v.clone()))
    }

    pub fn require(&self, record_id: &str) -> Result<FeatureVector> {
        self.get(record_id).ok_or_else(|| {
            Error::validation(format!("no {} feature for record `{record_id}`", self.kind))
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.values().next().map(|v| v.len())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.vectors.keys()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "# kind={} dim={}", self.kind, self.dim().unwrap_or(0));
        for (id, vec) in &self.vectors {
            out.push_str(id);
            for v in vec {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(kind: FeatureKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store = FeatureStore::new(kind);
        let mut dim: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let id = parts.next().unwrap_or_default().trim().to_string();
            if id.is_empty() {
                return Err(Error::validation(format!(
                    "{}:{}: missing record id",
                    path.display(),
                    lineno + 1
                )));
            }
            let values: Vec<f64> = parts
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        Error::validation(format!(
                            "{}:{}: bad feature value `{p}`",
                            path.display(),
                            lineno + 1
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if values.is_empty() {
                return Err(Error::validation(format!(
                    "{}:{}: empty feature row",
                    path.display(),
                    lineno + 1
                )));
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::validation(format!(
                        "{}:{}: feature dim {} differs from earlier rows ({d})",
                        path.display(),
                        lineno + 1,
                        values.len()
                    )))
                }
                _ => {}
            }
            store.vectors.insert(id, values);
        }
        Ok(store)
    }
}

/// Ingest an external embedding table (CSV rows `record_id,v1..vd`),
/// L2-normalizing every row.
pub fn load_embedding_store(path: &Path) -> Result<FeatureStore> {
    let raw = FeatureStore::load_csv(FeatureKind::External, path)?;
    let mut store = FeatureStore::new(FeatureKind::External);
    for id in raw.ids() {
        let v = raw.get(id).unwrap().into_l2_normalized();
        store.insert(id.clone(), v)?;
    }
    Ok(store)
}

/// One record's external embedding, L2-normalized on load.
pub fn load_external_embedding(path: &Path, record_id: &str) -> Result<FeatureVector> {
    let store = load_embedding_store(path)?;
    store.require(record_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = SplitMix64::new(seed);
        GrayImage::from_vec(w, h, (0..w * h).map(|_| rng.next_f64()).collect()).unwrap()
    }

    #[test]
    fn cosine_identical_is_one() {
        let a = FeatureVector::new(FeatureKind::Gabor, vec![0.3, 0.4, 0.5]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        let a = FeatureVector::new(FeatureKind::Hog, vec![1.0, 0.0]);
        let b = FeatureVector::new(FeatureKind::Hog, vec![0.0, 1.0]);
        assert_eq!(cosine_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_hand_value() {
        let a = FeatureVector::new(FeatureKind::Lbp, vec![1.0, 2.0, 2.0]);
        let b = FeatureVector::new(FeatureKind::Lbp, vec![2.0, 1.0, 2.0]);
        let got = cosine_similarity(&a, &b).unwrap();
        assert!((got - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_mismatch_and_zero() {
        let a = FeatureVector::new(FeatureKind::Lbp, vec![1.0, 0.0]);
        let b = FeatureVector::new(FeatureKind::Hog, vec![1.0, 0.0]);
        assert!(cosine_similarity(&a, &b).is_err());
        let c = FeatureVector::new(FeatureKind::Lbp, vec![1.0, 0.0, 0.0]);
        assert!(cosine_similarity(&a, &c).is_err());
        let z = FeatureVector::new(FeatureKind::Lbp, vec![0.0, 0.0]);
        assert!(cosine_similarity(&a, &z).is_err());
    }

    #[test]
    fn gabor_filters_have_zero_dc() {
        let bank = GaborBank::new(
            GaborBankParams { scales: 2, orientations: 4, downsample: 4 },
            32,
            32,
        )
        .unwrap();
        for i in 0..bank.filter_count() {
            let taps = bank.spatial_taps(i);
            let sum_re: f64 = taps.iter().map(|c| c.re).sum();
            let sum_im: f64 = taps.iter().map(|c| c.im).sum();
            let dc = (sum_re * sum_re + sum_im * sum_im).sqrt();
            assert!(dc <= 1e-6, "filter {i}: DC {dc}");
        }
    }

    #[test]
    fn gabor_unit_norm_on_textured_input() {
        let img = random_image(32, 32, 12);
        let params = GaborBankParams { scales: 2, orientations: 4, downsample: 8 };
        let f = extract_gabor(&img, &params).unwrap();
        assert_eq!(f.dim(), 2 * 4 * 16);
        assert!((f.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gabor_default_dim_matches_contract() {
        let bank = GaborBank::new(GaborBankParams::default(), 128, 128).unwrap();
        let img = random_image(128, 128, 1);
        let f = bank.extract(&img).unwrap();
        assert_eq!(f.dim(), 5 * 8 * 32 * 32);
    }

    #[test]
    fn gabor_constant_image_flagged_zero() {
        let img = GrayImage::constant(32, 32, 0.6).unwrap();
        let params = GaborBankParams { scales: 2, orientations: 4, downsample: 8 };
        let f = extract_gabor(&img, &params).unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn gabor_rotation_shifts_orientation_profile() {
        // quarter-turn rotation cyclically shifts the per-orientation
        // energy profile by orientations/4 * (pi/2 / step) = half the bank
        let n = 32;
        let params = GaborBankParams { scales: 2, orientations: 8, downsample: 8 };
        let bank = GaborBank::new(params, n, n).unwrap();
        let img = random_image(n, n, 19);
        let mut rot = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                rot[y * n + x] = img.get(y, n - 1 - x);
            }
        }
        let rot = GrayImage::from_vec(n, n, rot).unwrap();
        let profile = |im: &GrayImage| -> Vec<f64> {
            let maps = bank.responses(im).unwrap();
            let mut p = vec![0.0; params.orientations];
            for (i, m) in maps.iter().enumerate() {
                p[i % params.orientations] += m.data().iter().sum::<f64>();
            }
            p
        };
        let base = profile(&img);
        let rotated = profile(&rot);
        for k in 0..params.orientations {
            let expect = base[(k + params.orientations / 2) % params.orientations];
            assert!(
                (rotated[k] - expect).abs() / expect.max(1e-12) < 1e-6,
                "orientation {k}: {} vs {expect}",
                rotated[k]
            );
        }
    }

    #[test]
    fn gist_dim_and_unit_norm() {
        let img = random_image(32, 32, 8);
        let params = GaborBankParams { scales: 2, orientations: 4, downsample: 8 };
        let bank = GaborBank::new(params, 32, 32).unwrap();
        let g = bank.extract_gist(&img).unwrap();
        assert_eq!(g.kind, FeatureKind::Gist);
        assert_eq!(g.dim(), 2 * 4 * 16);
        assert!((g.norm() - 1.0).abs() < 1e-9);
        assert_eq!(g, bank.extract_gist(&img).unwrap());
    }

    #[test]
    fn lbp_constant_image_mass_in_one_bin() {
        let img = GrayImage::constant(32, 32, 0.5).unwrap();
        let f = extract_lbp(&img).unwrap();
        // all neighbors equal center -> code 0xFF in every pixel
        let bin = lbp_uniform_table()[0xFF] as usize;
        let cells = (32 / LBP_CELL) * (32 / LBP_CELL);
        for c in 0..cells {
            for b in 0..LBP_BINS {
                let v = f.values[c * LBP_BINS + b];
                if b == bin {
                    assert!(v > 0.0);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn lbp_histograms_count_cell_pixels() {
        let img = random_image(32, 32, 4);
        let hists = lbp_cell_histograms(&img, LBP_CELL).unwrap();
        for h in &hists {
            let total: f64 = h.iter().sum();
            assert_eq!(total, (LBP_CELL * LBP_CELL) as f64);
        }
    }

    #[test]
    fn hog_vertical_edge_votes_horizontal_gradient_bin() {
        let mut data = vec![0.0; 32 * 32];
        for y in 0..32 {
            for x in 16..32 {
                data[y * 32 + x] = 1.0;
            }
        }
        let img = GrayImage::from_vec(32, 32, data).unwrap();
        let f = extract_hog(&img).unwrap();
        let mut per_bin = vec![0.0; HOG_BINS];
        for (i, v) in f.values.iter().enumerate() {
            per_bin[i % HOG_BINS] += v;
        }
        let max_bin =
            per_bin.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(max_bin, 0, "per_bin: {per_bin:?}");
    }

    #[test]
    fn hog_dim_for_128_crop() {
        let img = random_image(128, 128, 6);
        let f = extract_hog(&img).unwrap();
        assert_eq!(f.dim(), 15 * 15 * 4 * HOG_BINS);
        assert!((f.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn extractors_are_deterministic() {
        let img = random_image(32, 32, 33);
        assert_eq!(extract_lbp(&img).unwrap(), extract_lbp(&img).unwrap());
        assert_eq!(extract_hog(&img).unwrap(), extract_hog(&img).unwrap());
        let p = GaborBankParams { scales: 2, orientations: 4, downsample: 8 };
        assert_eq!(extract_gabor(&img, &p).unwrap(), extract_gabor(&img, &p).unwrap());
    }

    #[test]
    fn external_embedding_round_trip() {
        let dir = std::env::temp_dir().join("faceq-feat-ext");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("emb.csv");
        std::fs::write(&path, "r1,1,0,0,0\nr2,0.5,0.5,0.5,0.5\n").unwrap();
        let v = load_external_embedding(&path, "r1").unwrap();
        assert_eq!(v.dim(), 4);
        assert_eq!(v.values, vec![1.0, 0.0, 0.0, 0.0]);
        let v2 = load_external_embedding(&path, "r2").unwrap();
        assert!((v2.norm() - 1.0).abs() < 1e-12);
        assert!(load_external_embedding(&path, "r3").is_err());
    }

    #[test]
    fn external_embedding_dim_mismatch_rejected() {
        let dir = std::env::temp_dir().join("faceq-feat-ext2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("emb.csv");
        std::fs::write(&path, "r1,1,0\nr2,1,0,0\n").unwrap();
        assert!(load_embedding_store(&path).is_err());
    }

    #[test]
    fn store_csv_round_trip() {
        let mut store = FeatureStore::new(FeatureKind::Hog);
        store.insert("a", FeatureVector::new(FeatureKind::Hog, vec![0.25, 0.5])).unwrap();
        store.insert("b", FeatureVector::new(FeatureKind::Hog, vec![1.0, 0.125])).unwrap();
        let path = std::env::temp_dir().join("faceq-store-rt.csv");
        store.save_csv(&path).unwrap();
        let back = FeatureStore::load_csv(FeatureKind::Hog, &path).unwrap();
        assert_eq!(back, store);
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_bounded(
            a in prop::collection::vec(-5.0f64..5.0, 4),
            b in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let fa = FeatureVector::new(FeatureKind::Gist, a);
            let fb = FeatureVector::new(FeatureKind::Gist, b);
            if fa.norm() > 1e-3 && fb.norm() > 1e-3 {
                let ab = cosine_similarity(&fa, &fb).unwrap();
                let ba = cosine_similarity(&fb, &fa).unwrap();
                prop_assert_eq!(ab, ba);
                prop_assert!(ab.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn cosine_scale_invariant(
            a in prop::collection::vec(0.1f64..5.0, 4),
            b in prop::collection::vec(0.1f64..5.0, 4),
            c in 0.01f64..100.0,
        ) {
            let fa = FeatureVector::new(FeatureKind::Gist, a.clone());
            let fb = FeatureVector::new(FeatureKind::Gist, b);
            let fscaled = FeatureVector::new(FeatureKind::Gist, a.iter().map(|v| v * c).collect());
            let s1 = cosine_similarity(&fa, &fb).unwrap();
            let s2 = cosine_similarity(&fscaled, &fb).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-9);
        }
    }
}
