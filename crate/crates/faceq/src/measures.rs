//! Scalar quality measures: edge density (focus), low-pass sharpness,
//! and block spectral energy (illumination), plus the set statistics
//! used to derive selection thresholds.
//!
//! All measures are defined on the \[0,1\] intensity scale and are pure
//! functions; batch values are keyed by record id so evaluation order
//! never matters. Thresholds are always recomputed as set means over an
//! ingested high-quality set rather than taken from fixed constants.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{self, dft2_real, GrayImage, RealMap};

/// Default Gaussian sigma for the sharpness low-pass.
pub const SHARPNESS_SIGMA: f64 = 1.0;
/// Default tessellation block for spectral energy (8x8 blocks on a 128 crop).
pub const SPECTRAL_BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeasureKind {
    EdgeDensity,
    Sharpness,
    SpectralEnergy,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::EdgeDensity => "edge_density",
            MeasureKind::Sharpness => "sharpness",
            MeasureKind::SpectralEnergy => "spectral_energy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "edge_density" => Ok(MeasureKind::EdgeDensity),
            "sharpness" => Ok(MeasureKind::Sharpness),
            "spectral_energy" => Ok(MeasureKind::SpectralEnergy),
            other => Err(Error::validation(format!("unknown measure kind `{other}`"))),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureValue {
    pub kind: MeasureKind,
    pub value: f64,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

impl Region {
    pub fn new(x1: usize, y1: usize, x2: usize, y2: usize) -> Result<Self> {
        if x1 > x2 || y1 > y2 {
            return Err(Error::validation(format!(
                "degenerate region ({x1},{y1})-({x2},{y2})"
            )));
        }
        Ok(Region { x1, y1, x2, y2 })
    }

    pub fn full(img: &GrayImage) -> Self {
        Region { x1: 0, y1: 0, x2: img.width() - 1, y2: img.height() - 1 }
    }

    pub fn area(&self) -> usize {
        (self.x2 - self.x1 + 1) * (self.y2 - self.y1 + 1)
    }

    fn check_bounds(&self, img: &GrayImage) -> Result<()> {
        if self.x2 >= img.width() || self.y2 >= img.height() {
            return Err(Error::validation(format!(
                "region ({},{})-({},{}) outside {}x{} image",
                self.x1,
                self.y1,
                self.x2,
                self.y2,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

/// Mean Sobel gradient magnitude over a region: E = (1/a_r) sum e(x,y).
pub fn edge_density(img: &GrayImage, region: &Region) -> Result<MeasureValue> {
    region.check_bounds(img)?;
    let e = raster::sobel_gradient_magnitude(img);
    let mut sum = 0.0;
    for y in region.y1..=region.y2 {
        for x in region.x1..=region.x2 {
            sum += e.get(x, y);
        }
    }
    Ok(MeasureValue { kind: MeasureKind::EdgeDensity, value: sum / region.area() as f64 })
}

/// Mean absolute residual between the image and its Gaussian low-pass:
/// mean(|I - Lowpass(I)|).
pub fn sharpness(img: &GrayImage, sigma: f64) -> Result<MeasureValue> {
    if !(sigma > 0.0) {
        return Err(Error::numeric(format!("sharpness sigma must be positive, got {sigma}")));
    }
    let k = raster::gaussian_kernel_auto(sigma)?;
    let low = raster::convolve2d_raw(img, &k);
    let n = (img.width() * img.height()) as f64;
    let sum: f64 = img.data().iter().zip(low.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(MeasureValue { kind: MeasureKind::Sharpness, value: sum / n })
}

/// Per-block sum of DFT magnitudes along the horizontal and vertical
/// frequency axes, DC excluded, totalled over all blocks. The image is
/// tessellated into non-overlapping `block`-sized tiles, padding by edge
/// replication when the dimensions do not divide evenly. The DC bin
/// encodes mean brightness, not abruptness, so it is excluded; constant
/// images therefore measure exactly zero.
pub fn spectral_energy(img: &GrayImage, block: usize) -> Result<MeasureValue> {
    if block == 0 {
        return Err(Error::validation("spectral block must be at least 1"));
    }
    if block > img.width() || block > img.height() {
        return Err(Error::validation(format!(
            "spectral block {block} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let bx = img.width().div_ceil(block);
    let by = img.height().div_ceil(block);
    let mut total = 0.0;
    let mut tile = RealMap::zeros(block, block);
    for j in 0..by {
        for i in 0..bx {
            for y in 0..block {
                for x in 0..block {
                    let sx = (i * block + x) as isize;
                    let sy = (j * block + y) as isize;
                    tile.data_mut()[y * block + x] = img.get_replicate(sx, sy);
                }
            }
            let f = dft2_real(&tile);
            for u in 1..block {
                total += f.get(u, 0).abs();
            }
            for v in 1..block {
                total += f.get(0, v).abs();
            }
        }
    }
    Ok(MeasureValue { kind: MeasureKind::SpectralEnergy, value: total })
}

/// Arithmetic mean of a homogeneous measure list.
pub fn set_mean(values: &[MeasureValue], kind: MeasureKind) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::validation("set_mean over an empty list"));
    }
    if values.iter().any(|v| v.kind != kind) {
        return Err(Error::validation("set_mean over mixed measure kinds"));
    }
    Ok(values.iter().map(|v| v.value).sum::<f64>() / values.len() as f64)
}

/// All three measures of one image at the default parameters,
/// full-image region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureRow {
    pub edge_density: f64,
    pub sharpness: f64,
    pub spectral_energy: f64,
}

impl MeasureRow {
    pub fn get(&self, kind: MeasureKind) -> f64 {
        match kind {
            MeasureKind::EdgeDensity => self.edge_density,
            MeasureKind::Sharpness => self.sharpness,
            MeasureKind::SpectralEnergy => self.spectral_energy,
        }
    }
}

pub fn measure_all(img: &GrayImage) -> Result<MeasureRow> {
    Ok(MeasureRow {
        edge_density: edge_density(img, &Region::full(img))?.value,
        sharpness: sharpness(img, SHARPNESS_SIGMA)?.value,
        spectral_energy: spectral_energy(img, SPECTRAL_BLOCK.min(img.width()).min(img.height()))?
            .value,
    })
}

/// Batch measure output keyed by record id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasureTable {
    rows: BTreeMap<String, MeasureRow>,
}

impl MeasureTable {
    pub fn new() -> Self {
        MeasureTable::default()
    }

    pub fn insert(&mut self, record_id: impl Into<String>, row: MeasureRow) {
        self.rows.insert(record_id.into(), row);
    }

    pub fn get(&self, record_id: &str) -> Option<&MeasureRow> {
        self.rows.get(record_id)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &MeasureRow)> {
        self.rows.iter()
    }

    /// Mean of one measure over the listed record ids (a quality set).
    pub fn mean_over(&self, ids: &[String], kind: MeasureKind) -> Result<f64> {
        let values: Vec<MeasureValue> = ids
            .iter()
            .map(|id| {
                self.rows
                    .get(id)
                    .map(|r| MeasureValue { kind, value: r.get(kind) })
                    .ok_or_else(|| Error::validation(format!("no measures for record `{id}`")))
            })
            .collect::<Result<_>>()?;
        set_mean(&values, kind)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# intensity scale [0,1]\n");
        out.push_str("record_id,edge_density,sharpness,spectral_energy\n");
        for (id, row) in &self.rows {
            let _ = writeln!(
                out,
                "{id},{},{},{}",
                row.edge_density, row.sharpness, row.spectral_energy
            );
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = BTreeMap::new();
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        match lines.next() {
            Some(h) if h.trim() == "record_id,edge_density,sharpness,spectral_energy" => {}
            _ => {
                return Err(Error::validation(format!(
                    "{}: bad measures CSV header",
                    path.display()
                )))
            }
        }
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::validation(format!("{}: bad measures row", path.display())));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::validation(format!("{}: bad number `{s}`", path.display())))
            };
            rows.insert(
                f[0].trim().to_string(),
                MeasureRow {
                    edge_density: num(f[1])?,
                    sharpness: num(f[2])?,
                    spectral_energy: num(f[3])?,
                },
            );
        }
        Ok(MeasureTable { rows })
    }
}
