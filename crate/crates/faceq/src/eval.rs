//! Gallery/probe identification protocol: subject-keyed gallery index,
//! cosine matching with deterministic tie-breaking, CMC curves
//! (rank-1..K identification rates) and before/after comparison.
//!
//! Per-subject scores aggregate multi-image galleries by max similarity.
//! Closed-set evaluation is the default; probes whose subject is absent
//! from the gallery are reported separately and either excluded from the
//! denominator or counted as never retrieved, per policy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{cosine_similarity, FeatureKind, FeatureVector};

/// Default curve depth.
pub const DEFAULT_CMC_K: usize = 50;

/// Immutable subject-keyed index of gallery feature vectors.
#[derive(Debug, Clone)]
pub struct GalleryIndex {
    kind: FeatureKind,
    dim: usize,
    subjects: BTreeMap<String, Vec<FeatureVector>>,
}

impl GalleryIndex {
    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn contains_subject(&self, subject: &str) -> bool {
        self.subjects.contains_key(subject)
    }

    pub fn subjects(&self) -> impl Iterator<Item = &String> {
        self.subjects.keys()
    }
}

/// Build a gallery from (record_id, subject_id, vector) entries.
/// Record ids must be unique; every vector must share kind and dim.
pub fn build_gallery(entries: &[(String, String, FeatureVector)]) -> Result<GalleryIndex> {
    if entries.is_empty() {
        return Err(Error::validation("empty gallery"));
    }
    let kind = entries[0].2.kind;
    let dim = entries[0].2.dim();
    let mut seen = std::collections::BTreeSet::new();
    let mut subjects: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
    for (record_id, subject_id, vector) in entries {
        if !seen.insert(record_id.as_str()) {
            return Err(Error::validation(format!("duplicate gallery record `{record_id}`")));
        }
        if vector.kind != kind || vector.dim() != dim {
            return Err(Error::validation(format!(
                "gallery vector for `{record_id}` has kind/dim {}/{} (gallery is {}/{})",
                vector.kind,
                vector.dim(),
                kind,
                dim
            )));
        }
        subjects.entry(subject_id.clone()).or_default().push(vector.clone());
    }
    Ok(GalleryIndex { kind, dim, subjects })
}

/// Rank gallery subjects against one probe: per-subject score is the max
/// cosine similarity over that subject's vectors, sorted descending with
/// ties broken by ascending subject id.
pub fn match_probe(probe: &FeatureVector, gallery: &GalleryIndex) -> Result<Vec<(String, f64)>> {
    if probe.kind != gallery.kind || probe.dim() != gallery.dim {
        return Err(Error::validation(format!(
            "probe kind/dim {}/{} does not match gallery {}/{}",
            probe.kind,
            probe.dim(),
            gallery.kind,
            gallery.dim
        )));
    }
    let mut scored = Vec::with_capacity(gallery.subjects.len());
    for (subject, vectors) in &gallery.subjects {
        let mut best = f64::NEG_INFINITY;
        for v in vectors {
            best = best.max(cosine_similarity(probe, v)?);
        }
        scored.push((subject.clone(), best));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("non-finite similarity").then_with(|| a.0.cmp(&b.0))
    });
    Ok(scored)
}

/// Identification rates at ranks 1..=K; monotone non-decreasing by
/// construction and checked again at assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    rates: Vec<f64>,
}

impl CmcCurve {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::validation("empty CMC curve"));
        }
        for w in rates.windows(2) {
            if w[1] < w[0] {
                return Err(Error::numeric(format!(
                    "CMC curve not monotone: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::numeric("CMC rate outside [0,1]"));
        }
        Ok(CmcCurve { rates })
    }

    pub fn k(&self) -> usize {
        self.rates.len()
    }

    /// Rate at rank k (1-based).
    pub fn rate(&self, k: usize) -> f64 {
        self.rates[k - 1]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rank1(&self) -> f64 {
        self.rates[0]
    }
}

/// Handling of probes whose subject has no gallery entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingProbePolicy {
    /// Drop them from the denominator (default).
    Exclude,
    /// Keep them, counted as never retrieved at any rank.
    CountAsMiss,
}

/// A CMC computation together with its probe accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcRun {
    pub curve: CmcCurve,
    /// Probes contributing to the denominator.
    pub evaluated: usize,
    /// Probes whose subject was absent from the gallery.
    pub missing_subject: usize,
}

/// Cumulative match characteristic over labeled probes.
pub fn cmc(
    probes: &[(String, FeatureVector)],
    gallery: &GalleryIndex,
    k: usize,
    policy: MissingProbePolicy,
) -> Result<CmcRun> {
    if probes.is_empty() {
        return Err(Error::validation("empty probe set"));
    }
    if k == 0 {
        return Err(Error::validation("CMC needs k >= 1"));
    }
    let mut hits_at = vec![0usize; k];
    let mut evaluated = 0usize;
    let mut missing = 0usize;
    for (subject, vector) in probes {
        if !gallery.contains_subject(subject) {
            missing += 1;
            if policy == MissingProbePolicy::CountAsMiss {
                evaluated += 1;
            }
            continue;
        }
        evaluated += 1;
        let ranking = match_probe(vector, gallery)?;
        if let Some(pos) = ranking.iter().position(|(s, _)| s == subject) {
            if pos < k {
                hits_at[pos] += 1;
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::validation(
            "no evaluable probes (all subjects missing from the gallery)",
        ));
    }
    let mut rates = Vec::with_capacity(k);
    let mut cumulative = 0usize;
    for h in &hits_at {
        cumulative += h;
        rates.push(cumulative as f64 / evaluated as f64);
    }
    Ok(CmcRun { curve: CmcCurve::new(rates)?, evaluated, missing_subject: missing })
}

/// Per-rank differences between two curves of equal depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub deltas: Vec<f64>,
    pub rank1_delta: f64,
}

pub fn compare_runs(before: &CmcCurve, after: &CmcCurve) -> Result<DeltaReport> {
    if before.k() != after.k() {
        return Err(Error::validation(format!(
            "curve depth mismatch: {} vs {}",
            before.k(),
            after.k()
        )));
    }
    let deltas: Vec<f64> =
        after.rates().iter().zip(before.rates()).map(|(a, b)| a - b).collect();
    Ok(DeltaReport { rank1_delta: deltas[0], deltas })
}

// ----------------------------------------------------------- reporting

/// CMC as CSV rows `rank,rate`, preceded by `#` header lines carrying
/// run provenance.
pub fn write_cmc_csv(run: &CmcRun, header: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "# probes_evaluated={} missing_subject={}", run.evaluated, run.missing_subject);
    out.push_str("rank,rate\n");
    for (i, r) in run.curve.rates().iter().enumerate() {
        let _ = writeln!(out, "{},{r}", i + 1);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_delta_csv(delta: &DeltaReport, header: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "# rank1_delta={}", delta.rank1_delta);
    out.push_str("rank,delta\n");
    for (i, d) in delta.deltas.iter().enumerate() {
        let _ = writeln!(out, "{},{d}", i + 1);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

const SVG_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Standalone SVG plot of one or more CMC curves with axes and a legend.
/// Coordinates are written with fixed precision so output is
/// byte-reproducible.
pub fn write_cmc_svg(curves: &[(String, &CmcCurve)], title: &str, path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::validation("no curves to plot"));
    }
    let k = curves[0].1.k();
    if curves.iter().any(|(_, c)| c.k() != k) {
        return Err(Error::validation("curves of different depth in one plot"));
    }
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let x_of = |rank: usize| ml + pw * (rank as f64 - 1.0) / ((k - 1).max(1) as f64);
    let y_of = |rate: f64| mt + ph * (1.0 - rate);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{title}</text>"#,
        ml + pw / 2.0
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{ml:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(s, r#"<line x1="{ml:.1}" y1="{mt:.1}" x2="{ml:.1}" y2="{:.1}" stroke="black"/>"#, mt + ph);
    for tick in 0..=5 {
        let rate = tick as f64 / 5.0;
        let y = y_of(rate);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{ml:.1}" y2="{y:.1}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{rate:.1}</text>"#,
            ml - 8.0,
            y + 4.0
        );
    }
    let x_ticks: Vec<usize> = if k >= 5 {
        (0..5).map(|i| 1 + i * (k - 1) / 4).collect()
    } else {
        (1..=k).collect()
    };
    for rank in x_ticks {
        let x = x_of(rank);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{rank}</text>"#,
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">rank</text>"#,
        ml + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">identification rate</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    // curves
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let mut points = String::new();
        for (j, r) in curve.rates().iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x_of(j + 1), y_of(*r));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
            points.trim_end()
        );
        let ly = mt + 16.0 + i as f64 * 18.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"/>"#,
            ml + pw - 150.0,
            ml + pw - 120.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{label}</text>"#,
            ml + pw - 112.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
