//! Batch pipeline: the operations behind the `faceq` subcommands and
//! the experiment runner.
//!
//! Every stage works through files (crops, measures, scores and set
//! manifests are all materialized in the output bundle), so any
//! intermediate can be inspected or swapped with text tools. Stages
//! parallelize per record with an index-ordered merge; the worker count
//! never changes any output byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::config::{
    EnhanceConfig, ExperimentConfig, OperatorSpec, PartitionSource, PoseThresholdSource,
    SelectionSpec, ThresholdSource,
};
use crate::enhance::{self, EnhancementPlan, Operator, Scope, Selection, Stage};
use crate::error::{Error, Result};
use crate::eval::{self, CmcRun, GalleryIndex, MissingProbePolicy};
use crate::features::{FeatureKind, FeatureStore, FeatureVector, GaborBank};
use crate::fiqa::{self, QualityBand, QualityModel, QualityScore, TrainOptions};
use crate::geometry::{self, pose_exceeds, PoseThresholds, CROP_SIZE};
use crate::manifest::{self, ManifestRecord};
use crate::measures::{MeasureKind, MeasureRow, MeasureTable};
use crate::raster::{self, GrayImage};

/// Deterministic parallel map: items are claimed by index from a shared
/// counter and results merged back in index order, so the output is
/// identical for any worker count.
pub fn parallel_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut chunks: Vec<Vec<(usize, R)>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..workers {
            let next = &next;
            let f = &f;
            handles.push(scope.spawn(move || {
                let mut local = Vec::new();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    local.push((i, f(&items[i])));
                }
                local
            }));
        }
        for h in handles {
            chunks.push(h.join().expect("worker panicked"));
        }
    });
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    for chunk in chunks {
        for (i, r) in chunk {
            slots[i] = Some(r);
        }
    }
    slots.into_iter().map(|s| s.expect("missing parallel result")).collect()
}

/// Index-ordered error propagation: the reported failure is the same
/// whichever worker hit it first.
fn collect_results<R>(results: Vec<Result<R>>) -> Result<Vec<R>> {
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Process-unique scratch directory for intermediate crops.
fn scratch_dir(tag: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("faceq-{tag}-{}-{n}", std::process::id()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

// ------------------------------------------------------------ cropping

/// Aligned 128x128 crop of one record: landmark alignment when
/// landmarks are present; otherwise the image must already be a
/// canonical crop.
pub fn crop_record(record: &ManifestRecord) -> Result<GrayImage> {
    let img = raster::load_image(&record.image_path)?;
    crop_image(record, &img)
}

fn crop_image(record: &ManifestRecord, img: &GrayImage) -> Result<GrayImage> {
    match &record.landmarks {
        Some(lm) => geometry::align_crop(img, lm),
        None if img.width() == CROP_SIZE && img.height() == CROP_SIZE => Ok(img.clone()),
        None => Err(Error::validation(format!(
            "record {} has no landmarks and is not a {CROP_SIZE}x{CROP_SIZE} crop",
            record.record_id
        ))),
    }
}

/// Materialize aligned crops under `dir`, returning record_id -> path.
fn materialize_crops(
    records: &[ManifestRecord],
    dir: &Path,
    workers: usize,
) -> Result<BTreeMap<String, PathBuf>> {
    create_dir(dir)?;
    let results = parallel_map(workers, records, |r| -> Result<(String, PathBuf)> {
        let crop = crop_record(r).map_err(|e| e.in_stage("crop"))?;
        let path = dir.join(format!("{}.pgm", r.record_id));
        raster::save_image(&crop, &path)?;
        Ok((r.record_id.clone(), path))
    });
    Ok(collect_results(results)?.into_iter().collect())
}

// ------------------------------------------------------------ measures

/// Measure aligned crops of a manifest; `cmd measure` entry point.
pub fn cmd_measure(manifest_path: &Path, out_csv: &Path, workers: usize) -> Result<MeasureTable> {
    let records = load_manifest(manifest_path)?;
    let table = measure_records(&records, workers)?;
    table.save_csv(out_csv)?;
    Ok(table)
}

fn measure_records(records: &[ManifestRecord], workers: usize) -> Result<MeasureTable> {
    let results = parallel_map(workers, records, |r| -> Result<(String, MeasureRow)> {
        let crop = crop_record(r).map_err(|e| e.in_stage("measure"))?;
        Ok((r.record_id.clone(), crate::measures::measure_all(&crop)?))
    });
    let mut table = MeasureTable::new();
    for (id, row) in collect_results(results)? {
        table.insert(id, row);
    }
    Ok(table)
}

fn measure_paths(
    paths: &BTreeMap<String, PathBuf>,
    workers: usize,
) -> Result<MeasureTable> {
    let items: Vec<(&String, &PathBuf)> = paths.iter().collect();
    let results = parallel_map(workers, &items, |(id, path)| -> Result<(String, MeasureRow)> {
        let img = raster::load_image(path).map_err(|e| e.in_stage("measure"))?;
        Ok(((*id).clone(), crate::measures::measure_all(&img)?))
    });
    let mut table = MeasureTable::new();
    for (id, row) in collect_results(results)? {
        table.insert(id, row);
    }
    Ok(table)
}

fn load_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let records = manifest::read_manifest(path)?;
    if records.is_empty() {
        return Err(Error::validation(format!("{}: manifest has no records", path.display())));
    }
    Ok(records)
}

// ------------------------------------------------------------ features

/// Feature extraction over materialized crop files, with a shared Gabor
/// bank and path-keyed memoization so an image is never processed twice.
struct Extractor<'a> {
    kind: FeatureKind,
    bank: &'a GaborBank,
    embeddings: Option<FeatureStore>,
}

impl<'a> Extractor<'a> {
    fn extract_paths(
        &self,
        ids_to_paths: &[(String, PathBuf)],
        workers: usize,
    ) -> Result<FeatureStore> {
        let mut store = FeatureStore::new(self.kind);
        if self.kind == FeatureKind::External {
            let emb = self.embeddings.as_ref().ok_or_else(|| {
                Error::validation("external features requested but no embeddings were supplied")
            })?;
            for (id, _) in ids_to_paths {
                store.insert(id.clone(), emb.require(id)?)?;
            }
            return Ok(store);
        }
        let results =
            parallel_map(workers, ids_to_paths, |(id, path)| -> Result<(String, FeatureVector)> {
                let img = raster::load_image(path).map_err(|e| e.in_stage("features"))?;
                let v = match self.kind {
                    FeatureKind::Gabor => self.bank.extract(&img)?,
                    FeatureKind::Gist => self.bank.extract_gist(&img)?,
                    FeatureKind::Lbp => crate::features::extract_lbp(&img)?,
                    FeatureKind::Hog => crate::features::extract_hog(&img)?,
                    FeatureKind::External => unreachable!(),
                };
                Ok((id.clone(), v))
            });
        for (id, v) in collect_results(results)? {
            store.insert(id, v)?;
        }
        Ok(store)
    }
}

fn load_embeddings_for(
    records: &[ManifestRecord],
    config_path: Option<&Path>,
) -> Result<Option<FeatureStore>> {
    if let Some(path) = config_path {
        return Ok(Some(crate::features::load_embedding_store(path)?));
    }
    // fall back to per-record embedding_ref columns (usually one shared path)
    let mut paths: BTreeSet<PathBuf> = BTreeSet::new();
    for r in records {
        if let Some(refpath) = &r.embedding_ref {
            paths.insert(PathBuf::from(refpath));
        }
    }
    if paths.is_empty() {
        return Ok(None);
    }
    let mut merged = FeatureStore::new(FeatureKind::External);
    for p in paths {
        let store = crate::features::load_embedding_store(&p)?;
        for id in store.ids().cloned().collect::<Vec<_>>() {
            merged.insert(id.clone(), store.get(&id).unwrap())?;
        }
    }
    Ok(Some(merged))
}

/// `cmd features`: one CSV of feature vectors for a manifest.
pub fn cmd_features(
    manifest_path: &Path,
    kind: FeatureKind,
    config: &ExperimentConfig,
    out_csv: &Path,
    workers: usize,
) -> Result<()> {
    let records = load_manifest(manifest_path)?;
    let bank = GaborBank::new(config.gabor, CROP_SIZE, CROP_SIZE)?;
    let embeddings = load_embeddings_for(&records, config.embeddings.as_deref())?;
    // external embeddings never look at pixels; skip the crop pass
    let (pairs, tmp) = if kind == FeatureKind::External {
        let pairs = records.iter().map(|r| (r.record_id.clone(), r.image_path.clone())).collect();
        (pairs, None)
    } else {
        let tmp = scratch_dir("features");
        let crops = materialize_crops(&records, &tmp, workers)?;
        (crops.into_iter().collect::<Vec<(String, PathBuf)>>(), Some(tmp))
    };
    let store = Extractor { kind, bank: &bank, embeddings }.extract_paths(&pairs, workers)?;
    store.save_csv(out_csv)?;
    if let Some(tmp) = tmp {
        let _ = std::fs::remove_dir_all(&tmp);
    }
    Ok(())
}

// -------------------------------------------------------------- assess

fn stores_for_model(
    model: &QualityModel,
    crop_paths: &BTreeMap<String, PathBuf>,
    bank: &GaborBank,
    embeddings: Option<&FeatureStore>,
    workers: usize,
) -> Result<BTreeMap<FeatureKind, FeatureStore>> {
    let kinds: BTreeSet<FeatureKind> = model.level1.iter().map(|r| r.feature_kind).collect();
    let pairs: Vec<(String, PathBuf)> =
        crop_paths.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut stores = BTreeMap::new();
    for kind in kinds {
        let ex = Extractor { kind, bank, embeddings: embeddings.cloned() };
        stores.insert(kind, ex.extract_paths(&pairs, workers)?);
    }
    Ok(stores)
}

fn scores_csv_text(scores: &BTreeMap<String, QualityScore>) -> String {
    let mut out = String::from("# intensity scale [0,1]\nrecord_id,score,category\n");
    for (id, s) in scores {
        let _ = writeln!(out, "{id},{},{}", s.value(), fiqa::band(*s));
    }
    out
}

fn parse_scores_csv(path: &Path) -> Result<BTreeMap<String, QualityScore>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines =
        text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == "record_id,score,category" => {}
        _ => return Err(Error::validation(format!("{}: bad scores header", path.display()))),
    }
    let mut scores = BTreeMap::new();
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::validation(format!("{}: bad scores row `{line}`", path.display())));
        }
        let value: u8 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("{}: bad score `{}`", path.display(), parts[1])))?;
        scores.insert(parts[0].trim().to_string(), QualityScore::new(value)?);
    }
    Ok(scores)
}

/// `cmd assess`: score every record of a manifest with a trained model.
pub fn cmd_assess(
    manifest_path: &Path,
    model_path: &Path,
    config: &ExperimentConfig,
    out_csv: &Path,
    workers: usize,
) -> Result<BTreeMap<String, QualityScore>> {
    let records = load_manifest(manifest_path)?;
    let model = fiqa::load_model(model_path)?;
    let tmp = scratch_dir("assess");
    let crops = materialize_crops(&records, &tmp, workers)?;
    let scores = assess_records(&records, &model, &crops, config, workers)?;
    write_text(out_csv, &scores_csv_text(&scores))?;
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(scores)
}

fn assess_records(
    records: &[ManifestRecord],
    model: &QualityModel,
    crop_paths: &BTreeMap<String, PathBuf>,
    config: &ExperimentConfig,
    workers: usize,
) -> Result<BTreeMap<String, QualityScore>> {
    let bank = GaborBank::new(config.gabor, CROP_SIZE, CROP_SIZE)?;
    let embeddings = load_embeddings_for(records, config.embeddings.as_deref())?;
    let stores = stores_for_model(model, crop_paths, &bank, embeddings.as_ref(), workers)?;
    let mut scores = BTreeMap::new();
    for r in records {
        let s = fiqa::predict_quality(model, &stores, &r.record_id)
            .map_err(|e| e.in_stage("assess"))?;
        scores.insert(r.record_id.clone(), s);
    }
    Ok(scores)
}

// ------------------------------------------------------------ partition

/// Partition summary table (subjects and images per set).
pub fn partition_summary(
    records: &[ManifestRecord],
    bands: &BTreeMap<QualityBand, Vec<String>>,
) -> String {
    let by_id: BTreeMap<&str, &ManifestRecord> =
        records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let mut out = String::from("set      subjects   images\n");
    let mut total_images = 0usize;
    for band in [QualityBand::High, QualityBand::Middle, QualityBand::Low] {
        let ids = bands.get(&band).map(|v| v.as_slice()).unwrap_or(&[]);
        let subjects: BTreeSet<&str> =
            ids.iter().filter_map(|id| by_id.get(id.as_str())).map(|r| r.subject_id.as_str()).collect();
        let _ = writeln!(out, "{:<8} {:<10} {}", band.name(), subjects.len(), ids.len());
        total_images += ids.len();
    }
    let _ = writeln!(out, "{:<8} {:<10} {}", "total", "", total_images);
    out
}

fn bands_from_scores(
    scores: &BTreeMap<String, QualityScore>,
) -> BTreeMap<QualityBand, Vec<String>> {
    let p = fiqa::partition(scores);
    BTreeMap::from([
        (QualityBand::Low, p.low),
        (QualityBand::Middle, p.middle),
        (QualityBand::High, p.high),
    ])
}

fn bands_from_hints(records: &[ManifestRecord]) -> Result<BTreeMap<QualityBand, Vec<String>>> {
    let mut bands: BTreeMap<QualityBand, Vec<String>> = BTreeMap::new();
    for r in records {
        let hint = r.split_hint.as_deref().ok_or_else(|| {
            Error::validation(format!(
                "record {} has no split_hint and no model was configured",
                r.record_id
            ))
        })?;
        bands.entry(QualityBand::parse(hint)?).or_default().push(r.record_id.clone());
    }
    Ok(bands)
}

/// `cmd partition`: split a manifest into per-band manifests by scores.
pub fn cmd_partition(
    manifest_path: &Path,
    scores_csv: &Path,
    out_dir: &Path,
) -> Result<String> {
    let records = load_manifest(manifest_path)?;
    let scores = parse_scores_csv(scores_csv)?;
    for r in &records {
        if !scores.contains_key(&r.record_id) {
            return Err(Error::validation(format!("no score for record {}", r.record_id)));
        }
    }
    let bands = bands_from_scores(&scores);
    create_dir(out_dir)?;
    write_band_manifests(&records, &bands, out_dir)?;
    let summary = partition_summary(&records, &bands);
    write_text(&out_dir.join("partition_summary.txt"), &summary)?;
    Ok(summary)
}

fn write_band_manifests(
    records: &[ManifestRecord],
    bands: &BTreeMap<QualityBand, Vec<String>>,
    out_dir: &Path,
) -> Result<()> {
    let by_id: BTreeMap<&str, &ManifestRecord> =
        records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    for band in [QualityBand::Low, QualityBand::Middle, QualityBand::High] {
        let ids = bands.get(&band).map(|v| v.as_slice()).unwrap_or(&[]);
        let subset: Vec<ManifestRecord> =
            ids.iter().filter_map(|id| by_id.get(id.as_str())).map(|r| (*r).clone()).collect();
        manifest::write_manifest(&out_dir.join(format!("{}.csv", band.name())), &subset)?;
    }
    Ok(())
}

// -------------------------------------------------------------- enhance

/// Thresholds actually used by a run, for the run manifest.
#[derive(Debug, Clone, Default)]
pub struct ResolvedThresholds {
    pub measure: Option<(MeasureKind, f64, &'static str)>,
    pub pose: Option<(PoseThresholds, &'static str)>,
    pub frontalize: Option<(PoseThresholds, &'static str)>,
}

fn resolve_selection(
    spec: &SelectionSpec,
    measures: &MeasureTable,
    high_ids: &[String],
    records_by_id: &BTreeMap<&str, &ManifestRecord>,
) -> Result<(Selection, ResolvedThresholds)> {
    let mut resolved = ResolvedThresholds::default();
    let selection = match spec {
        SelectionSpec::All => Selection::All,
        SelectionSpec::Below(kind, src) => {
            let (value, origin) = resolve_measure_threshold(*kind, src, measures, high_ids)?;
            resolved.measure = Some((*kind, value, origin));
            Selection::MeasureBelow(*kind, value)
        }
        SelectionSpec::Above(kind, src) => {
            let (value, origin) = resolve_measure_threshold(*kind, src, measures, high_ids)?;
            resolved.measure = Some((*kind, value, origin));
            Selection::MeasureAbove(*kind, value)
        }
        SelectionSpec::Pose(src) => {
            let (t, origin) = resolve_pose_thresholds(src, high_ids, records_by_id)?;
            resolved.pose = Some((t, origin));
            Selection::PoseExceeds(t)
        }
    };
    Ok((selection, resolved))
}

fn resolve_measure_threshold(
    kind: MeasureKind,
    src: &ThresholdSource,
    measures: &MeasureTable,
    high_ids: &[String],
) -> Result<(f64, &'static str)> {
    match src {
        ThresholdSource::Fixed(v) => Ok((*v, "fixed")),
        ThresholdSource::MeanOfHigh => {
            if high_ids.is_empty() {
                return Err(Error::validation(
                    "threshold mean_of_high needs a non-empty high set",
                ));
            }
            Ok((measures.mean_over(high_ids, kind)?, "mean_of_high"))
        }
    }
}

fn resolve_pose_thresholds(
    src: &PoseThresholdSource,
    high_ids: &[String],
    records_by_id: &BTreeMap<&str, &ManifestRecord>,
) -> Result<(PoseThresholds, &'static str)> {
    match src {
        PoseThresholdSource::Fixed(t) => Ok((*t, "fixed")),
        PoseThresholdSource::MeanAbsOfHigh => {
            if high_ids.is_empty() {
                return Err(Error::validation(
                    "pose thresholds mean_abs_of_high need a non-empty high set",
                ));
            }
            let (mut r, mut p, mut y) = (0.0, 0.0, 0.0);
            for id in high_ids {
                let rec = records_by_id
                    .get(id.as_str())
                    .ok_or_else(|| Error::validation(format!("unknown record `{id}`")))?;
                let pose = rec.pose.ok_or_else(|| {
                    Error::validation(format!("record {id} has no pose angles"))
                })?;
                r += pose.roll.abs();
                p += pose.pitch.abs();
                y += pose.yaw.abs();
            }
            let n = high_ids.len() as f64;
            Ok((PoseThresholds::new(r / n, p / n, y / n)?, "mean_abs_of_high"))
        }
    }
}

fn operator_of(spec: &OperatorSpec) -> Operator {
    match spec {
        OperatorSpec::Weberface(p) => Operator::Weberface(*p),
        OperatorSpec::Deblur(p) => Operator::Deblur(*p),
        OperatorSpec::External => Operator::External,
    }
}

/// Per-band set1/set2/set3 table in the style of the experiment
/// summaries; the row arithmetic is asserted before printing.
fn enhance_summary(
    out: &enhance::EnhancedSet,
    bands: &BTreeMap<QualityBand, Vec<String>>,
    apply_to: &[QualityBand],
) -> Result<String> {
    let total = out.set1.len() + out.set2.len() + out.set3.len();
    let scoped: usize = apply_to
        .iter()
        .map(|b| bands.get(b).map(|v| v.len()).unwrap_or(0))
        .sum();
    if total != scoped {
        return Err(Error::numeric(format!(
            "set decomposition {total} does not cover the {scoped} records in scope"
        )));
    }
    let mut text = String::from("quality   set1   set2   set3   total\n");
    for band in apply_to {
        let members: BTreeSet<&str> = bands
            .get(band)
            .map(|v| v.iter().map(|s| s.as_str()).collect())
            .unwrap_or_default();
        let count = |ids: &[String]| ids.iter().filter(|id| members.contains(id.as_str())).count();
        let (s1, s2, s3) = (count(&out.set1), count(&out.set2), count(&out.set3));
        let _ = writeln!(text, "{:<9} {:<6} {:<6} {:<6} {}", band.name(), s1, s2, s3, s1 + s2 + s3);
    }
    let _ = writeln!(
        text,
        "{:<9} {:<6} {:<6} {:<6} {total}",
        "all",
        out.set1.len(),
        out.set2.len(),
        out.set3.len()
    );
    Ok(text)
}

/// `cmd enhance`: apply a configured plan to a manifest, writing
/// enhanced images, the record map, the enhanced manifest and the set
/// summary. A measures CSV from `cmd measure` may be supplied; without
/// one the measures are recomputed.
pub fn cmd_enhance(
    manifest_path: &Path,
    config: &ExperimentConfig,
    measures_csv: Option<&Path>,
    out_dir: &Path,
    workers: usize,
) -> Result<String> {
    if config.enhance.is_none() {
        return Err(Error::validation("config has no [enhance] section").in_stage("enhance"));
    }
    let records = load_manifest(manifest_path)?;
    let measures_override = match measures_csv {
        Some(path) => Some(MeasureTable::load_csv(path)?),
        None => None,
    };
    let run = RunState::prepare_with(records, config, out_dir, workers, measures_override)?;
    Ok(run.enhancement.as_ref().expect("enhancement configured").summary.clone())
}

// ----------------------------------------------------------------- run

struct EnhancementOutcome {
    set: enhance::EnhancedSet,
    /// record_id -> enhanced crop path (feature input for the after side)
    enhanced_crops: BTreeMap<String, PathBuf>,
    thresholds: ResolvedThresholds,
    plan: EnhancementPlan,
    summary: String,
    apply_to: Vec<QualityBand>,
}

/// Everything a run materializes before evaluation.
struct RunState {
    records: Vec<ManifestRecord>,
    bands: BTreeMap<QualityBand, Vec<String>>,
    crop_paths: BTreeMap<String, PathBuf>,
    measures: MeasureTable,
    scores: Option<BTreeMap<String, QualityScore>>,
    enhancement: Option<EnhancementOutcome>,
    out_dir: PathBuf,
    workers: usize,
}

impl RunState {
    fn prepare(
        records: Vec<ManifestRecord>,
        config: &ExperimentConfig,
        out_dir: &Path,
        workers: usize,
    ) -> Result<RunState> {
        RunState::prepare_with(records, config, out_dir, workers, None)
    }

    fn prepare_with(
        records: Vec<ManifestRecord>,
        config: &ExperimentConfig,
        out_dir: &Path,
        workers: usize,
        measures_override: Option<MeasureTable>,
    ) -> Result<RunState> {
        create_dir(out_dir)?;
        manifest::validate_manifest(&records).map_err(|e| e.in_stage("validate"))?;

        let crop_paths = materialize_crops(&records, &out_dir.join("crops"), workers)
            .map_err(|e| e.in_stage("crop"))?;
        let measures = match measures_override {
            Some(table) => {
                for r in &records {
                    if table.get(&r.record_id).is_none() {
                        return Err(Error::validation(format!(
                            "no measures for record {}",
                            r.record_id
                        ))
                        .in_stage("enhance"));
                    }
                }
                table
            }
            None => measure_paths(&crop_paths, workers).map_err(|e| e.in_stage("measure"))?,
        };
        measures.save_csv(&out_dir.join("measures.csv"))?;

        // partition
        let (bands, scores) = match &config.partition_source {
            PartitionSource::Model(model_path) => {
                let model = fiqa::load_model(model_path).map_err(|e| e.in_stage("assess"))?;
                let scores = assess_records(&records, &model, &crop_paths, config, workers)
                    .map_err(|e| e.in_stage("assess"))?;
                write_text(&out_dir.join("scores.csv"), &scores_csv_text(&scores))?;
                (bands_from_scores(&scores), Some(scores))
            }
            PartitionSource::Auto | PartitionSource::SplitHint => {
                (bands_from_hints(&records).map_err(|e| e.in_stage("partition"))?, None)
            }
        };
        let sets_dir = out_dir.join("sets");
        create_dir(&sets_dir)?;
        write_band_manifests(&records, &bands, &sets_dir)?;
        write_text(
            &out_dir.join("partition_summary.txt"),
            &partition_summary(&records, &bands),
        )?;

        let mut state = RunState {
            records,
            bands,
            crop_paths,
            measures,
            scores,
            enhancement: None,
            out_dir: out_dir.to_path_buf(),
            workers,
        };
        if let Some(ecfg) = &config.enhance {
            state.enhancement =
                Some(state.run_enhancement(ecfg).map_err(|e| e.in_stage("enhance"))?);
        }
        Ok(state)
    }

    fn band_ids(&self, band: QualityBand) -> &[String] {
        self.bands.get(&band).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn records_by_id(&self) -> BTreeMap<&str, &ManifestRecord> {
        self.records.iter().map(|r| (r.record_id.as_str(), r)).collect()
    }

    fn run_enhancement(&self, ecfg: &EnhanceConfig) -> Result<EnhancementOutcome> {
        let by_id = self.records_by_id();
        let high_ids = self.band_ids(QualityBand::High).to_vec();
        let (selection, mut thresholds) =
            resolve_selection(&ecfg.selection, &self.measures, &high_ids, &by_id)?;

        // records in scope, manifest order
        let in_scope: BTreeSet<&str> = ecfg
            .apply_to
            .iter()
            .flat_map(|b| self.band_ids(*b).iter().map(|s| s.as_str()))
            .collect();
        let scope_records: Vec<ManifestRecord> = self
            .records
            .iter()
            .filter(|r| in_scope.contains(r.record_id.as_str()))
            .cloned()
            .collect();

        // prior frontalization-selection flags for the set1/set2 split
        let frontalized: Option<BTreeSet<String>> = match &ecfg.frontalize {
            Some(src) => {
                let (t, origin) = resolve_pose_thresholds(src, &high_ids, &by_id)?;
                thresholds.frontalize = Some((t, origin));
                let mut flagged = BTreeSet::new();
                for r in &scope_records {
                    let pose = r.pose.ok_or_else(|| {
                        Error::validation(format!("record {} has no pose angles", r.record_id))
                    })?;
                    if pose_exceeds(&pose, &t) {
                        flagged.insert(r.record_id.clone());
                    }
                }
                Some(flagged)
            }
            None => None,
        };

        let plan = EnhancementPlan {
            operator: operator_of(&ecfg.operator),
            selection,
            scope: ecfg.scope,
            stage: ecfg.stage,
        };

        // stage decides what the operator sees: original frames or the
        // materialized crops
        let plan_records: Vec<ManifestRecord> = match ecfg.stage {
            Stage::BeforeCrop => scope_records.clone(),
            Stage::AfterCrop => scope_records
                .iter()
                .map(|r| {
                    let mut c = r.clone();
                    c.image_path = self.crop_paths[&r.record_id].clone();
                    c.landmarks = None;
                    c
                })
                .collect(),
        };
        let set =
            enhance::apply_plan(&plan_records, &plan, &self.measures, frontalized.as_ref())?;

        // materialize enhanced crops
        let enhanced_dir = self.out_dir.join("enhanced");
        create_dir(&enhanced_dir)?;
        let mut enhanced_crops = BTreeMap::new();
        for (id, img) in &set.outputs {
            let crop = match ecfg.stage {
                Stage::BeforeCrop => crop_image(by_id[id.as_str()], img)?,
                Stage::AfterCrop => {
                    if img.width() != CROP_SIZE || img.height() != CROP_SIZE {
                        return Err(Error::validation(format!(
                            "enhanced image for {id} is {}x{}, expected a {CROP_SIZE}x{CROP_SIZE} crop",
                            img.width(),
                            img.height()
                        )));
                    }
                    img.clone()
                }
            };
            let path = enhanced_dir.join(format!("{id}.pgm"));
            raster::save_image(&crop, &path)?;
            enhanced_crops.insert(id.clone(), path);
        }

        // record map: set label, bundle-relative output path, operator, selected flag
        let mut map_csv = String::from("record_id,set_label,output_path,operator,selected\n");
        for r in &scope_records {
            let id = &r.record_id;
            let label = if set.set1.contains(id) {
                "set1"
            } else if set.set2.contains(id) {
                "set2"
            } else {
                "set3"
            };
            let path = if enhanced_crops.contains_key(id) {
                format!("enhanced/{id}.pgm")
            } else {
                String::new()
            };
            let selected = set.selected.contains(id);
            let _ = writeln!(map_csv, "{id},{label},{path},{},{selected}", plan.operator.name());
        }
        write_text(&self.out_dir.join("enhanced_map.csv"), &map_csv)?;

        // manifest of the records flowing to feature extraction, pointing
        // at enhanced crops where the plan produced one (bundle-relative)
        let scoped: BTreeSet<&str> = set.feature_records.iter().map(|s| s.as_str()).collect();
        let enhanced_manifest: Vec<ManifestRecord> = scope_records
            .iter()
            .filter(|r| scoped.contains(r.record_id.as_str()))
            .map(|r| {
                let mut m = r.clone();
                m.image_path = if enhanced_crops.contains_key(&r.record_id) {
                    PathBuf::from("enhanced").join(format!("{}.pgm", r.record_id))
                } else {
                    PathBuf::from("crops").join(format!("{}.pgm", r.record_id))
                };
                m.landmarks = None;
                m
            })
            .collect();
        manifest::write_manifest(&self.out_dir.join("enhanced_manifest.csv"), &enhanced_manifest)?;

        let summary = enhance_summary(&set, &self.bands, &ecfg.apply_to)?;
        write_text(&self.out_dir.join("enhance_summary.txt"), &summary)?;

        Ok(EnhancementOutcome {
            set,
            enhanced_crops,
            thresholds,
            plan,
            summary,
            apply_to: ecfg.apply_to.clone(),
        })
    }
}

/// One probe set's before/after outcome.
pub struct ProbeOutcome {
    pub band: QualityBand,
    pub before: CmcRun,
    pub after: Option<CmcRun>,
    pub rank1_delta: Option<f64>,
}

pub struct RunOutcome {
    pub config_hash: String,
    pub probes: Vec<ProbeOutcome>,
    pub out_dir: PathBuf,
}

/// `cmd run`: the full experiment — validate, crop, measure, partition,
/// optionally enhance, extract, match, and emit CMC curves plus deltas.
pub fn cmd_run_experiment(
    manifest_path: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<RunOutcome> {
    let records = load_manifest(manifest_path)?;
    let state = RunState::prepare(records, config, out_dir, workers)?;
    let bank = GaborBank::new(config.gabor, CROP_SIZE, CROP_SIZE)
        .map_err(|e| e.in_stage("features"))?;
    let embeddings = load_embeddings_for(&state.records, config.embeddings.as_deref())
        .map_err(|e| e.in_stage("features"))?;
    let by_id = state.records_by_id();

    // before-side features over gallery + probe bands
    let mut before_ids: Vec<String> = state.band_ids(config.gallery).to_vec();
    for band in &config.probes {
        before_ids.extend(state.band_ids(*band).iter().cloned());
    }
    before_ids.sort();
    before_ids.dedup();
    let before_pairs: Vec<(String, PathBuf)> =
        before_ids.iter().map(|id| (id.clone(), state.crop_paths[id].clone())).collect();
    let extractor =
        Extractor { kind: config.feature, bank: &bank, embeddings: embeddings.clone() };
    let features_before = extractor
        .extract_paths(&before_pairs, state.workers)
        .map_err(|e| e.in_stage("features"))?;

    // after-side features reuse before vectors except where enhancement
    // replaced the crop
    let features_after: Option<FeatureStore> = match &state.enhancement {
        None => None,
        Some(enh) => {
            let changed: Vec<(String, PathBuf)> = enh
                .enhanced_crops
                .iter()
                .map(|(id, p)| (id.clone(), p.clone()))
                .collect();
            if config.feature == FeatureKind::External && !changed.is_empty() {
                return Err(Error::validation(
                    "feature=external cannot re-embed enhanced images; supply embeddings computed on them and run a plain cmc comparison instead",
                )
                .in_stage("features"));
            }
            let recomputed = extractor
                .extract_paths(&changed, state.workers)
                .map_err(|e| e.in_stage("features"))?;
            let mut store = FeatureStore::new(config.feature);
            for id in &before_ids {
                match recomputed.get(id) {
                    Some(v) => store.insert(id.clone(), v)?,
                    None => store.insert(id.clone(), features_before.require(id)?)?,
                }
            }
            Some(store)
        }
    };

    // galleries
    let gallery_ids = state.band_ids(config.gallery);
    if gallery_ids.is_empty() {
        return Err(Error::validation(format!(
            "gallery set `{}` is empty",
            config.gallery.name()
        ))
        .in_stage("gallery"));
    }
    let build = |store: &FeatureStore, ids: &[String]| -> Result<GalleryIndex> {
        let entries: Vec<(String, String, FeatureVector)> = ids
            .iter()
            .map(|id| -> Result<_> {
                Ok((id.clone(), by_id[id.as_str()].subject_id.clone(), store.require(id)?))
            })
            .collect::<Result<_>>()?;
        eval::build_gallery(&entries).map_err(|e| e.in_stage("gallery"))
    };
    let gallery_before = build(&features_before, gallery_ids)?;
    let gallery_enhanced = state
        .enhancement
        .as_ref()
        .map(|e| e.apply_to.contains(&config.gallery))
        .unwrap_or(false);
    let gallery_after = match (&features_after, gallery_enhanced) {
        (Some(store), true) => Some(build(store, gallery_ids)?),
        (Some(_), false) => None, // gallery untouched by the plan
        (None, _) => None,
    };

    let policy = if config.include_missing_probes {
        MissingProbePolicy::CountAsMiss
    } else {
        MissingProbePolicy::Exclude
    };
    let cmc_dir = out_dir.join("cmc");
    create_dir(&cmc_dir)?;

    let header = |band: QualityBand, side: &str| -> Vec<String> {
        let mut lines = vec![
            format!("config_hash={}", config.hash),
            format!("experiment={} probe_set={} side={side}", config.name, band.name()),
            format!(
                "feature={} k={} gallery={} aggregation=max_similarity",
                config.feature,
                config.k,
                config.gallery.name()
            ),
            format!(
                "set_sizes high={} middle={} low={} gallery_subjects={}",
                state.band_ids(QualityBand::High).len(),
                state.band_ids(QualityBand::Middle).len(),
                state.band_ids(QualityBand::Low).len(),
                gallery_before.subject_count()
            ),
        ];
        if let Some(enh) = &state.enhancement {
            if let Some((kind, value, origin)) = &enh.thresholds.measure {
                lines.push(format!("threshold {kind}={value} ({origin})"));
            }
            if let Some((p, origin)) = &enh.thresholds.pose {
                lines.push(format!(
                    "threshold pose roll={} pitch={} yaw={} ({origin})",
                    p.roll_max, p.pitch_max, p.yaw_max
                ));
            }
        }
        lines
    };

    let mut outcomes = Vec::new();
    for &band in &config.probes {
        let mut probe_ids: Vec<String> = state.band_ids(band).to_vec();
        if let Some(n) = config.subject_subsample {
            probe_ids = subsample_subjects(&probe_ids, &by_id, n);
        }
        if probe_ids.is_empty() {
            return Err(Error::validation(format!("probe set `{}` is empty", band.name()))
                .in_stage("cmc"));
        }
        let probes_of = |ids: &[String], store: &FeatureStore| -> Result<Vec<(String, FeatureVector)>> {
            ids.iter()
                .map(|id| -> Result<_> {
                    Ok((by_id[id.as_str()].subject_id.clone(), store.require(id)?))
                })
                .collect()
        };
        let before = eval::cmc(
            &probes_of(&probe_ids, &features_before)?,
            &gallery_before,
            config.k,
            policy,
        )
        .map_err(|e| e.in_stage("cmc"))?;
        eval::write_cmc_csv(
            &before,
            &header(band, "before"),
            &cmc_dir.join(format!("{}_before.csv", band.name())),
        )?;

        let (after, rank1_delta) = match (&state.enhancement, &features_after) {
            (Some(enh), Some(store)) => {
                // scope filters the after-side probe list
                let scoped: BTreeSet<&str> =
                    enh.set.feature_records.iter().map(|s| s.as_str()).collect();
                let after_ids: Vec<String> = probe_ids
                    .iter()
                    .filter(|id| scoped.contains(id.as_str()))
                    .cloned()
                    .collect();
                if after_ids.is_empty() {
                    return Err(Error::validation(format!(
                        "enhancement scope leaves no `{}` probes to evaluate",
                        band.name()
                    ))
                    .in_stage("cmc"));
                }
                let gallery = gallery_after.as_ref().unwrap_or(&gallery_before);
                let after =
                    eval::cmc(&probes_of(&after_ids, store)?, gallery, config.k, policy)
                        .map_err(|e| e.in_stage("cmc"))?;
                eval::write_cmc_csv(
                    &after,
                    &header(band, "after"),
                    &cmc_dir.join(format!("{}_after.csv", band.name())),
                )?;
                let delta = eval::compare_runs(&before.curve, &after.curve)?;
                eval::write_delta_csv(
                    &delta,
                    &header(band, "delta"),
                    &cmc_dir.join(format!("{}_delta.csv", band.name())),
                )?;
                eval::write_cmc_svg(
                    &[
                        ("before".to_string(), &before.curve),
                        ("after".to_string(), &after.curve),
                    ],
                    &format!("{} vs {} (experiment {})", band.name(), config.gallery.name(), config.name),
                    &cmc_dir.join(format!("{}.svg", band.name())),
                )?;
                (Some(after), Some(delta.rank1_delta))
            }
            _ => {
                eval::write_cmc_svg(
                    &[("identification".to_string(), &before.curve)],
                    &format!("{} vs {} (experiment {})", band.name(), config.gallery.name(), config.name),
                    &cmc_dir.join(format!("{}.svg", band.name())),
                )?;
                (None, None)
            }
        };
        outcomes.push(ProbeOutcome { band, before, after, rank1_delta });
    }

    write_text(&out_dir.join("config.cfg"), &config.normalized_text)?;
    write_run_manifest(&state, config, &outcomes, out_dir)?;
    Ok(RunOutcome { config_hash: config.hash.clone(), probes: outcomes, out_dir: out_dir.to_path_buf() })
}

fn subsample_subjects(
    ids: &[String],
    by_id: &BTreeMap<&str, &ManifestRecord>,
    n: usize,
) -> Vec<String> {
    let mut subjects: Vec<&str> = ids
        .iter()
        .filter_map(|id| by_id.get(id.as_str()))
        .map(|r| r.subject_id.as_str())
        .collect();
    subjects.sort();
    subjects.dedup();
    let keep: BTreeSet<&str> = subjects.into_iter().take(n).collect();
    ids.iter()
        .filter(|id| by_id.get(id.as_str()).map(|r| keep.contains(r.subject_id.as_str())).unwrap_or(false))
        .cloned()
        .collect()
}

/// The run manifest records the config hash and every threshold the run
/// actually used, fixed or derived, plus set cardinalities and outcomes.
/// No timestamps or absolute paths: reruns are byte-identical.
fn write_run_manifest(
    state: &RunState,
    config: &ExperimentConfig,
    outcomes: &[ProbeOutcome],
    out_dir: &Path,
) -> Result<()> {
    let mut out = String::from("faceq run manifest v1\n");
    let _ = writeln!(out, "intensity_scale 0..1");
    let _ = writeln!(out, "config_hash {}", config.hash);
    let _ = writeln!(out, "experiment {}", config.name);
    let _ = writeln!(out, "feature {}", config.feature);
    let _ = writeln!(out, "k {}", config.k);
    let _ = writeln!(out, "seed {}", config.seed);
    let _ = writeln!(
        out,
        "partition_source {}",
        match &config.partition_source {
            PartitionSource::Auto => "auto(split_hint)".to_string(),
            PartitionSource::SplitHint => "split_hint".to_string(),
            PartitionSource::Model(p) => format!("model({})", p.display()),
        }
    );
    for band in [QualityBand::High, QualityBand::Middle, QualityBand::Low] {
        let _ = writeln!(out, "set {} images {}", band.name(), state.band_ids(band).len());
    }
    if let Some(scores) = &state.scores {
        let _ = writeln!(out, "scored_records {}", scores.len());
    }
    if let Some(enh) = &state.enhancement {
        let _ = writeln!(out, "plan operator {}", enh.plan.operator.name());
        let _ = writeln!(
            out,
            "plan scope {}",
            match enh.plan.scope {
                Scope::SelectedOnly => "selected_only",
                Scope::SelectedPlusRemaining => "selected_plus_remaining",
            }
        );
        let _ = writeln!(
            out,
            "plan stage {}",
            match enh.plan.stage {
                Stage::BeforeCrop => "before_crop",
                Stage::AfterCrop => "after_crop",
            }
        );
        if let Some((kind, value, origin)) = &enh.thresholds.measure {
            let _ = writeln!(out, "threshold {kind} {value} ({origin})");
        }
        if let Some((t, origin)) = &enh.thresholds.pose {
            let _ = writeln!(
                out,
                "threshold pose roll {} pitch {} yaw {} ({origin})",
                t.roll_max, t.pitch_max, t.yaw_max
            );
        }
        if let Some((t, origin)) = &enh.thresholds.frontalize {
            let _ = writeln!(
                out,
                "threshold frontalize roll {} pitch {} yaw {} ({origin})",
                t.roll_max, t.pitch_max, t.yaw_max
            );
        }
        let _ = writeln!(
            out,
            "sets set1 {} set2 {} set3 {}",
            enh.set.set1.len(),
            enh.set.set2.len(),
            enh.set.set3.len()
        );
    }
    for o in outcomes {
        let _ = writeln!(
            out,
            "probe {} before rank1 {} evaluated {} missing {}",
            o.band.name(),
            o.before.curve.rank1(),
            o.before.evaluated,
            o.before.missing_subject
        );
        if let Some(after) = &o.after {
            let _ = writeln!(
                out,
                "probe {} after rank1 {} evaluated {} missing {}",
                o.band.name(),
                after.curve.rank1(),
                after.evaluated,
                after.missing_subject
            );
            let _ = writeln!(out, "probe {} rank1_delta {}", o.band.name(), o.rank1_delta.unwrap());
        }
    }
    write_text(&out_dir.join("run.txt"), &out)
}

// -------------------------------------------------------- match & cmc

/// `cmd match`: ranked gallery subjects per probe record.
pub fn cmd_match(
    probes_path: &Path,
    gallery_path: &Path,
    config: &ExperimentConfig,
    out_csv: &Path,
    workers: usize,
) -> Result<()> {
    let (probes, gallery) = load_probe_gallery(probes_path, gallery_path, config, workers)?;
    let mut out = String::from("probe_record_id,rank,subject_id,score\n");
    for (record_id, _, vector) in &probes {
        let ranked = eval::match_probe(vector, &gallery)?;
        for (rank, (subject, score)) in ranked.iter().take(config.k).enumerate() {
            let _ = writeln!(out, "{record_id},{},{subject},{score}", rank + 1);
        }
    }
    write_text(out_csv, &out)
}

/// `cmd cmc`: identification curve for a probe manifest against a
/// gallery manifest.
pub fn cmd_cmc(
    probes_path: &Path,
    gallery_path: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<CmcRun> {
    let (probes, gallery) = load_probe_gallery(probes_path, gallery_path, config, workers)?;
    let labeled: Vec<(String, FeatureVector)> =
        probes.into_iter().map(|(_, subject, v)| (subject, v)).collect();
    let policy = if config.include_missing_probes {
        MissingProbePolicy::CountAsMiss
    } else {
        MissingProbePolicy::Exclude
    };
    let run = eval::cmc(&labeled, &gallery, config.k, policy)?;
    create_dir(out_dir)?;
    let header = vec![
        format!("config_hash={}", config.hash),
        format!("feature={} k={} aggregation=max_similarity", config.feature, config.k),
    ];
    eval::write_cmc_csv(&run, &header, &out_dir.join("cmc.csv"))?;
    eval::write_cmc_svg(
        &[("identification".to_string(), &run.curve)],
        "identification",
        &out_dir.join("cmc.svg"),
    )?;
    Ok(run)
}

#[allow(clippy::type_complexity)]
fn load_probe_gallery(
    probes_path: &Path,
    gallery_path: &Path,
    config: &ExperimentConfig,
    workers: usize,
) -> Result<(Vec<(String, String, FeatureVector)>, GalleryIndex)> {
    let probe_records = load_manifest(probes_path)?;
    let gallery_records = load_manifest(gallery_path)?;
    let bank = GaborBank::new(config.gabor, CROP_SIZE, CROP_SIZE)?;
    let mut all = probe_records.clone();
    all.extend(gallery_records.iter().cloned());
    let embeddings = load_embeddings_for(&all, config.embeddings.as_deref())?;
    let extractor = Extractor { kind: config.feature, bank: &bank, embeddings };

    let tmp = scratch_dir("match");
    let featurize = |records: &[ManifestRecord],
                     sub: &str|
     -> Result<Vec<(String, String, FeatureVector)>> {
        let crops = materialize_crops(records, &tmp.join(sub), workers)?;
        let pairs: Vec<(String, PathBuf)> = crops.into_iter().collect();
        let store = extractor.extract_paths(&pairs, workers)?;
        records
            .iter()
            .map(|r| -> Result<_> {
                Ok((r.record_id.clone(), r.subject_id.clone(), store.require(&r.record_id)?))
            })
            .collect()
    };
    let probes = featurize(&probe_records, "probes")?;
    let gallery_entries = featurize(&gallery_records, "gallery")?;
    let _ = std::fs::remove_dir_all(&tmp);
    let gallery = eval::build_gallery(&gallery_entries)?;
    Ok((probes, gallery))
}

// ----------------------------------------------------------- training

/// `cmd train-fiqa`: train the two-level quality model from a manifest
/// whose split hints carry the ordinal classes (low < middle < high).
pub fn cmd_train_fiqa(
    manifest_path: &Path,
    config: &ExperimentConfig,
    opts: &TrainOptions,
    out_model: &Path,
    workers: usize,
) -> Result<QualityModel> {
    let records = load_manifest(manifest_path)?;
    let mut labels = Vec::new();
    for r in &records {
        let hint = r.split_hint.as_deref().ok_or_else(|| {
            Error::validation(format!("record {} has no split_hint label", r.record_id))
        })?;
        let class = match QualityBand::parse(hint)? {
            QualityBand::Low => 0u32,
            QualityBand::Middle => 1,
            QualityBand::High => 2,
        };
        labels.push((r.record_id.clone(), class));
    }

    let tmp = scratch_dir("train");
    let crops = materialize_crops(&records, &tmp, workers)?;
    let pairs: Vec<(String, PathBuf)> = crops.into_iter().collect();
    let bank = GaborBank::new(config.gabor, CROP_SIZE, CROP_SIZE)?;
    let embeddings = load_embeddings_for(&records, config.embeddings.as_deref())?;
    let mut stores = BTreeMap::new();
    for kind in [FeatureKind::Hog, FeatureKind::Gabor, FeatureKind::Gist, FeatureKind::Lbp] {
        let ex = Extractor { kind, bank: &bank, embeddings: None };
        stores.insert(kind, ex.extract_paths(&pairs, workers)?);
    }
    if let Some(emb) = embeddings {
        let ex = Extractor { kind: FeatureKind::External, bank: &bank, embeddings: Some(emb) };
        stores.insert(FeatureKind::External, ex.extract_paths(&pairs, workers)?);
    }
    let _ = std::fs::remove_dir_all(&tmp);

    let model = fiqa::train_quality_model(&labels, &stores, opts)?;
    fiqa::save_model(&model, out_model)?;
    Ok(model)
}
