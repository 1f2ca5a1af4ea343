//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its runtime (visible under `cargo test --test acceptance --
//! --nocapture`). Every tolerance and time bound is pinned here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use faceq::config::{ConfigFile, ExperimentConfig};
use faceq::enhance::{
    apply_plan, weberface, EnhancementPlan, Operator, Scope, Selection, Stage, WeberParams,
    DeblurParams,
};
use faceq::error::Result;
use faceq::eval::{build_gallery, cmc, MissingProbePolicy};
use faceq::features::{FeatureKind, FeatureStore, FeatureVector, GaborBank, GaborBankParams};
use faceq::fiqa::{
    self, band, load_model, partition, poly5_map, predict_raw, save_model, score_from_raw,
    train_quality_model, train_ranksvm, QualityBand, QualityScore, RankPair, TrainOptions,
};
use faceq::geometry::CROP_SIZE;
use faceq::manifest::ManifestRecord;
use faceq::measures::{edge_density, measure_all, sharpness, spectral_energy, MeasureKind, MeasureRow, MeasureTable, Region};
use faceq::pipeline::cmd_run_experiment;
use faceq::raster::{self, gaussian_kernel_auto, GrayImage};
use faceq::rng::SplitMix64;
use faceq::synthcorpus::{generate, CorpusSpec, Degradation, ImageVariant};

fn finish(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "criterion {name}: runtime {elapsed:?} exceeded budget {budget:?}"
    );
    println!("criterion {name}: PASS ({} ms)", elapsed.as_millis());
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("faceq-acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = SplitMix64::new(seed);
    GrayImage::from_vec(w, h, (0..w * h).map(|_| rng.next_f64()).collect()).unwrap()
}

// 1. Eq-(1) partition exactness at the band boundaries and against a
//    brute-force classifier over 10,000 random scores.
#[test]
fn criterion_01_partition_exactness() {
    let t = Instant::now();
    let expected = [
        (0u8, QualityBand::Low),
        (29, QualityBand::Low),
        (30, QualityBand::Middle),
        (59, QualityBand::Middle),
        (60, QualityBand::High),
        (100, QualityBand::High),
    ];
    for (s, want) in expected {
        assert_eq!(band(QualityScore::new(s).unwrap()), want, "score {s}");
    }
    let mut rng = SplitMix64::new(1);
    let mut scores = BTreeMap::new();
    for i in 0..10_000 {
        let v = (rng.next_f64() * 101.0) as u8;
        scores.insert(format!("r{i:05}"), QualityScore::new(v).unwrap());
    }
    let p = partition(&scores);
    let mut mismatches = 0usize;
    for (id, s) in &scores {
        // independent brute-force classification
        let v = s.value();
        let brute = if v < 30 {
            &p.low
        } else if v < 60 {
            &p.middle
        } else {
            &p.high
        };
        if !brute.contains(id) {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
    assert_eq!(p.low.len() + p.middle.len() + p.high.len(), 10_000);
    finish("01 partition-exactness", t, Duration::from_secs(1));
}

// 2. The three measures match independent naive-loop oracles within
//    1e-9 relative on 100 random 16x16 images.
#[test]
fn criterion_02_measure_oracles() {
    let t = Instant::now();
    for seed in 0..100u64 {
        let img = random_image(16, 16, 7000 + seed);
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1e-300);

        // edge density oracle: explicit Sobel taps, double loop
        let got_e = edge_density(&img, &Region::full(&img)).unwrap().value;
        let sx = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
        let sy = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];
        let mut sum = 0.0;
        for y in 0..16isize {
            for x in 0..16isize {
                let c = img.get_replicate(x, y);
                let (mut gx, mut gy) = (0.0, 0.0);
                for j in 0..3isize {
                    for i in 0..3isize {
                        let v = img.get_replicate(x + i - 1, y + j - 1) - c;
                        gx += sx[(j * 3 + i) as usize] * v;
                        gy += sy[(j * 3 + i) as usize] * v;
                    }
                }
                sum += (gx * gx + gy * gy).sqrt();
            }
        }
        assert!(rel(got_e, sum / 256.0) < 1e-9, "edge density seed {seed}");

        // sharpness oracle: independent kernel + window conv + mean abs
        let got_s = sharpness(&img, 1.0).unwrap().value;
        let k = raster::gaussian_kernel(1.0, 7).unwrap();
        let mut acc = 0.0;
        for y in 0..16isize {
            for x in 0..16isize {
                let mut low = 0.0;
                for j in 0..7isize {
                    for i in 0..7isize {
                        low += k.taps()[(j * 7 + i) as usize]
                            * img.get_replicate(x + i - 3, y + j - 3);
                    }
                }
                acc += (img.get(x as usize, y as usize) - low).abs();
            }
        }
        assert!(rel(got_s, acc / 256.0) < 1e-9, "sharpness seed {seed}");

        // spectral energy oracle: naive per-block DFT, axis bins, DC excluded
        let block = 8;
        let got_f = spectral_energy(&img, block).unwrap().value;
        let mut total = 0.0;
        for bj in 0..2 {
            for bi in 0..2 {
                let mag = |u: usize, v: usize| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for y in 0..block {
                        for x in 0..block {
                            let val = img.get(bi * block + x, bj * block + y);
                            let ang = -2.0
                                * std::f64::consts::PI
                                * (u as f64 * x as f64 + v as f64 * y as f64)
                                / block as f64;
                            re += val * ang.cos();
                            im += val * ang.sin();
                        }
                    }
                    (re * re + im * im).sqrt()
                };
                for u in 1..block {
                    total += mag(u, 0);
                }
                for v in 1..block {
                    total += mag(0, v);
                }
            }
        }
        assert!(rel(got_f, total) < 1e-9, "spectral energy seed {seed}");
    }
    finish("02 measure-oracles", t, Duration::from_secs(10));
}

// 3. Blur monotonicity: growing Gaussian blur strictly decreases both
//    focus measures on every one of 50 textured images.
#[test]
fn criterion_03_blur_monotonicity() {
    let t = Instant::now();
    for seed in 0..50u64 {
        let img = random_image(24, 24, 3000 + seed);
        let mut prev_e = f64::INFINITY;
        let mut prev_s = f64::INFINITY;
        for sigma in [0.0, 1.0, 2.0] {
            let blurred = if sigma == 0.0 {
                img.clone()
            } else {
                raster::convolve2d(&img, &gaussian_kernel_auto(sigma).unwrap())
            };
            let e = edge_density(&blurred, &Region::full(&blurred)).unwrap().value;
            let s = sharpness(&blurred, 1.0).unwrap().value;
            assert!(e < prev_e, "seed {seed} sigma {sigma}: edge {e} !< {prev_e}");
            assert!(s < prev_s, "seed {seed} sigma {sigma}: sharpness {s} !< {prev_s}");
            prev_e = e;
            prev_s = s;
        }
    }
    finish("03 blur-monotonicity", t, Duration::from_secs(30));
}

// 4. Weber-face: (a) exact illumination-scale invariance on above-floor
//    pixels; (b) end-to-end rank-1 never hurt and strictly improved on
//    at least one of five corpus seeds under ramp corruption.
#[test]
fn criterion_04_weberface_cancellation() {
    let t = Instant::now();

    // (a) invariance on a 10-subject corpus
    let dir = tmp_dir("weber-invariance");
    let spec = CorpusSpec {
        subjects: 10,
        images_per_subject: 1,
        seed: 400,
        variants: vec![ImageVariant::clean("high")],
    };
    let records = generate(&spec, &dir).unwrap();
    let params = WeberParams::default();
    let eps = faceq::enhance::WEBER_EPSILON;
    for r in &records {
        let img = raster::load_image(&r.image_path).unwrap();
        let base = weberface(&img, &params).unwrap();
        let smoothed = raster::convolve2d_raw(&img, &gaussian_kernel_auto(params.sigma).unwrap());
        for c in [0.25, 0.5, 1.0] {
            let scaled = GrayImage::from_vec(
                img.width(),
                img.height(),
                img.data().iter().map(|v| v * c).collect(),
            )
            .unwrap();
            let got = weberface(&scaled, &params).unwrap();
            let mut checked = 0usize;
            for (i, (a, b)) in got.data().iter().zip(base.data()).enumerate() {
                // only pixels whose scaled denominator clears the floor
                if smoothed.data()[i] * c >= eps {
                    assert!((a - b).abs() < 1e-6, "{}: c={c} pixel {i}: {a} vs {b}", r.record_id);
                    checked += 1;
                }
            }
            assert!(checked > (img.width() * img.height()) / 2, "mask too small");
        }
    }

    // (b) end-to-end: ramp-corrupted probes vs clean gallery, before and
    // after normalizing everything
    let cfg = ExperimentConfig::from_file(
        &ConfigFile::parse(
            "[experiment]\nname = weber-acceptance\nfeature = gabor\nk = 10\n\
             [partition]\nsource = split_hint\n\
             [enhance]\noperator = weberface\nselection = all\nscope = selected_plus_remaining\n\
             stage = after_crop\napply_to = high,low\n\
             [eval]\ngallery = high\nprobes = low\n",
        )
        .unwrap(),
    )
    .unwrap();
    let mut strict_improvement = false;
    for seed in 1..=5u64 {
        let spec = CorpusSpec {
            subjects: 10,
            images_per_subject: 2,
            seed,
            variants: vec![
                ImageVariant::clean("high"),
                ImageVariant::with(vec![Degradation::IlluminationRamp { strength: 1.0 }], "low"),
            ],
        };
        let dir = tmp_dir(&format!("weber-e2e-{seed}"));
        generate(&spec, &dir).unwrap();
        let outcome =
            cmd_run_experiment(&dir.join("manifest.csv"), &cfg, &dir.join("run"), 1).unwrap();
        let probe = &outcome.probes[0];
        let before = probe.before.curve.rank1();
        let after = probe.after.as_ref().unwrap().curve.rank1();
        assert!(after >= before, "seed {seed}: rank-1 {after} < {before}");
        if after > before {
            strict_improvement = true;
        }
    }
    assert!(strict_improvement, "no corpus seed showed a strict rank-1 improvement");
    finish("04 weberface-cancellation", t, Duration::from_secs(120));
}

// 5. CMC equals an independent brute-force computation exactly on a
//    20-subject, 3-images-per-subject instance, and stays monotone.
#[test]
fn criterion_05_cmc_oracle() {
    let t = Instant::now();
    let mut rng = SplitMix64::new(500);
    let dim = 8;
    let mut entries = Vec::new();
    for s in 0..20 {
        for i in 0..3 {
            let v: Vec<f64> = (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect();
            entries.push((
                format!("g{s:02}_{i}"),
                format!("s{s:02}"),
                FeatureVector::new(FeatureKind::Gabor, v),
            ));
        }
    }
    let gallery = build_gallery(&entries).unwrap();
    let probes: Vec<(String, FeatureVector)> = (0..40)
        .map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect();
            (format!("s{:02}", i % 20), FeatureVector::new(FeatureKind::Gabor, v))
        })
        .collect();
    let k = 20;
    let run = cmc(&probes, &gallery, k, MissingProbePolicy::Exclude).unwrap();

    // fully independent double-loop CMC: inline cosine, max aggregation,
    // descending sort with ascending-subject tie-break, cumulative rates
    let cosine = |a: &[f64], b: &[f64]| {
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for i in 0..a.len() {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        dot / (na.sqrt() * nb.sqrt())
    };
    let mut hits = vec![0usize; k];
    for (subject, pv) in &probes {
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for (_, gs, gv) in &entries {
            let sim = cosine(&pv.values, &gv.values);
            let e = best.entry(gs.as_str()).or_insert(f64::NEG_INFINITY);
            if sim > *e {
                *e = sim;
            }
        }
        let mut ranked: Vec<(&str, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
        let pos = ranked.iter().position(|(s, _)| *s == subject.as_str()).unwrap();
        for slot in hits.iter_mut().skip(pos) {
            *slot += 1;
        }
    }
    let expected: Vec<f64> = hits.iter().map(|h| *h as f64 / probes.len() as f64).collect();
    assert_eq!(run.curve.rates(), expected.as_slice(), "curve differs from brute force");
    for w in run.curve.rates().windows(2) {
        assert!(w[1] >= w[0]);
    }
    finish("05 cmc-oracle", t, Duration::from_secs(5));
}

// 6. RankSVM reaches perfect held-out pairwise accuracy on separable
//    5-D data within 500 iterations; a label-shuffled control sits at
//    chance.
#[test]
fn criterion_06_ranksvm_correctness() {
    let t = Instant::now();
    let w_star = [2.0, -1.0, 0.5, 3.0, -2.0];
    let mut rng = SplitMix64::new(600);
    let mut store = FeatureStore::new(FeatureKind::External);
    let mut quality = Vec::new();
    for i in 0..100 {
        let x: Vec<f64> = (0..5).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let q: f64 = w_star.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
            + rng.next_range(-1e-6, 1e-6);
        let id = format!("p{i:03}");
        store.insert(&id, FeatureVector::new(FeatureKind::External, x)).unwrap();
        quality.push((id, q));
    }
    let pair_sets = |q: &[(String, f64)]| {
        let mut train = Vec::new();
        let mut held = Vec::new();
        for i in 0..q.len() {
            for j in 0..q.len() {
                if i == j || q[i].1 <= q[j].1 + 0.1 {
                    continue;
                }
                let p = RankPair::new(q[i].0.clone(), q[j].0.clone()).unwrap();
                if (i + j) % 2 == 0 {
                    train.push(p);
                } else {
                    held.push(p);
                }
            }
        }
        (train, held)
    };
    let accuracy = |r: &faceq::fiqa::LinearRanker, held: &[RankPair]| {
        let correct = held
            .iter()
            .filter(|p| {
                let hi = r.score(&store.require(&p.higher).unwrap().values).unwrap();
                let lo = r.score(&store.require(&p.lower).unwrap().values).unwrap();
                hi > lo
            })
            .count();
        correct as f64 / held.len() as f64
    };

    let (train, held) = pair_sets(&quality);
    assert!(held.len() > 1000, "need a meaningful held-out set");
    let ranker = train_ranksvm(&train, &store, 1e-4, 500).unwrap();
    assert_eq!(accuracy(&ranker, &held), 1.0, "held-out pairwise accuracy");

    // control: shuffle the quality values so pairs carry no signal
    let mut shuffled = quality.clone();
    let mut values: Vec<f64> = shuffled.iter().map(|(_, q)| *q).collect();
    let mut rng2 = SplitMix64::new(606);
    rng2.shuffle(&mut values);
    for ((_, q), v) in shuffled.iter_mut().zip(values) {
        *q = v;
    }
    let (strain, sheld) = pair_sets(&shuffled);
    let control = train_ranksvm(&strain, &store, 1e-4, 500).unwrap();
    let acc = accuracy(&control, &sheld);
    assert!((acc - 0.5).abs() <= 0.1, "shuffled control accuracy {acc}");
    finish("06 ranksvm-correctness", t, Duration::from_secs(30));
}

// 7. Two-level model plumbing: monomial map dimension, bit-identical
//    serialize/load/predict round trip, and the anchor score mapping.
#[test]
fn criterion_07_two_level_plumbing() {
    let t = Instant::now();
    assert_eq!(poly5_map(&[0.0; 5]).unwrap().len(), 252);

    // tiny training setup with two separated classes over four kinds
    let mut rng = SplitMix64::new(700);
    let mut labels = Vec::new();
    let mut stores = BTreeMap::new();
    for kind in [FeatureKind::Hog, FeatureKind::Gabor, FeatureKind::Gist, FeatureKind::Lbp] {
        stores.insert(kind, FeatureStore::new(kind));
    }
    for i in 0..24 {
        let class = (i % 2) as u32;
        let id = format!("t{i:02}");
        let base = if class == 1 { 1.0 } else { -1.0 };
        for (k, s) in stores.iter_mut() {
            let v: Vec<f64> = (0..3).map(|_| base + rng.next_range(-0.2, 0.2)).collect();
            s.insert(&id, FeatureVector::new(*k, v)).unwrap();
        }
        labels.push((id, class));
    }
    let model = train_quality_model(&labels, &stores, &TrainOptions::default()).unwrap();
    let dir = tmp_dir("plumbing");
    let path = dir.join("model.txt");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model, "serialize/load round trip");
    for (id, _) in &labels {
        let a = predict_raw(&model, &stores, id).unwrap();
        let b = predict_raw(&loaded, &stores, id).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "prediction for {id}");
    }

    assert_eq!(score_from_raw(&model, model.score_min).value(), 0);
    assert_eq!(score_from_raw(&model, model.score_max).value(), 100);
    let mid = 0.5 * (model.score_min + model.score_max);
    assert_eq!(score_from_raw(&model, mid).value(), 50);
    finish("07 two-level-plumbing", t, Duration::from_secs(10));
}

// 8. Experiment-plan set arithmetic on a 200-record manifest: lossless
//    disjoint decomposition and strict threshold boundaries.
#[test]
fn criterion_08_plan_set_arithmetic() {
    let t = Instant::now();
    let dir = tmp_dir("plan-sets");
    let mut records = Vec::new();
    let mut measures = MeasureTable::new();
    let mut rng = SplitMix64::new(800);
    let threshold = 0.5;
    for i in 0..200 {
        let id = format!("r{i:03}");
        let path = dir.join(format!("{id}.pgm"));
        raster::save_image(&random_image(32, 32, 800 + i as u64), &path).unwrap();
        records.push(ManifestRecord::new(&id, &path, format!("s{:03}", i / 2)));
        // a few records sit exactly on the threshold
        let v = if i % 50 == 0 { threshold } else { rng.next_f64() };
        measures.insert(&id, MeasureRow { edge_density: v, sharpness: v, spectral_energy: v });
    }
    let frontalized: BTreeSet<String> =
        records.iter().step_by(3).map(|r| r.record_id.clone()).collect();
    let plan = EnhancementPlan {
        operator: Operator::Deblur(DeblurParams::default()),
        selection: Selection::MeasureBelow(MeasureKind::EdgeDensity, threshold),
        scope: Scope::SelectedPlusRemaining,
        stage: Stage::AfterCrop,
    };
    let out = apply_plan(&records, &plan, &measures, Some(&frontalized)).unwrap();
    assert_eq!(out.set1.len() + out.set2.len() + out.set3.len(), 200);
    let union: BTreeSet<&String> = out.set1.iter().chain(&out.set2).chain(&out.set3).collect();
    assert_eq!(union.len(), 200, "sets overlap or drop records");
    // independent filter: strict `<`, boundary records stay unselected
    let expected: BTreeSet<&String> = records
        .iter()
        .map(|r| &r.record_id)
        .filter(|id| measures.get(id).unwrap().edge_density < threshold)
        .collect();
    let got: BTreeSet<&String> = out.selected.iter().collect();
    assert_eq!(got, expected);
    for i in (0..200).step_by(50) {
        let id = format!("r{i:03}");
        assert!(out.remaining.contains(&id), "threshold-equal record {id} must remain");
    }
    // mirrored strictness for the above-threshold direction
    let above = EnhancementPlan {
        selection: Selection::MeasureAbove(MeasureKind::EdgeDensity, threshold),
        ..plan
    };
    let out_above = apply_plan(&records, &above, &measures, None).unwrap();
    for i in (0..200).step_by(50) {
        let id = format!("r{i:03}");
        assert!(out_above.remaining.contains(&id));
    }
    assert_eq!(
        out_above.selected.len() + out.selected.len() + 4,
        200,
        "below + above + boundary must cover everything"
    );
    finish("08 plan-set-arithmetic", t, Duration::from_secs(10));
}

// 9. Wiener deblurring with a matched PSF raises the sharpness measure
//    on at least 95 of 100 blurred textured images.
#[test]
fn criterion_09_deblur_efficacy() {
    let t = Instant::now();
    let kernel = gaussian_kernel_auto(1.0).unwrap();
    let params = DeblurParams { psf_sigma: 1.0, noise_to_signal: 1e-3 };
    let mut improved = 0usize;
    for seed in 0..100u64 {
        let img = random_image(32, 32, 9000 + seed);
        let blurred = raster::convolve2d(&img, &kernel);
        let restored = faceq::enhance::wiener_deblur(&blurred, &params).unwrap();
        let s_blur = sharpness(&blurred, 1.0).unwrap().value;
        let s_rest = sharpness(&restored, 1.0).unwrap().value;
        if s_rest > s_blur {
            improved += 1;
        }
    }
    assert!(improved >= 95, "sharpness improved on only {improved}/100 images");
    finish("09 deblur-efficacy", t, Duration::from_secs(60));
}

// 10. Determinism: the full experiment bundle is byte-identical across
//     repeat runs and across worker counts 1 and 4.
#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let corpus_dir = tmp_dir("determinism-corpus");
    let spec = CorpusSpec {
        subjects: 8,
        images_per_subject: 3,
        seed: 99,
        variants: vec![
            ImageVariant::clean("high"),
            ImageVariant::with(vec![Degradation::IlluminationRamp { strength: 0.8 }], "low"),
            ImageVariant::with(
                vec![Degradation::Blur { sigma: 1.0 }, Degradation::Noise { sigma: 0.01 }],
                "middle",
            ),
        ],
    };
    generate(&spec, &corpus_dir).unwrap();
    let config = ExperimentConfig::load("c2").unwrap();
    let manifest = corpus_dir.join("manifest.csv");

    let run = |name: &str, workers: usize| -> Result<PathBuf> {
        let out = tmp_dir(name);
        cmd_run_experiment(&manifest, &config, &out, workers)?;
        Ok(out)
    };
    let a = run("det-run-a", 1).unwrap();
    let b = run("det-run-b", 1).unwrap();
    let c = run("det-run-c", 4).unwrap();

    let snapshot = |root: &Path| -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                    files.insert(rel, std::fs::read(&path).unwrap());
                }
            }
        }
        files
    };
    let sa = snapshot(&a);
    let sb = snapshot(&b);
    let sc = snapshot(&c);
    assert_eq!(
        sa.keys().collect::<Vec<_>>(),
        sb.keys().collect::<Vec<_>>(),
        "file sets differ between reruns"
    );
    assert_eq!(
        sa.keys().collect::<Vec<_>>(),
        sc.keys().collect::<Vec<_>>(),
        "file sets differ across worker counts"
    );
    for (rel, bytes) in &sa {
        assert_eq!(bytes, &sb[rel], "rerun differs at {rel}");
        assert_eq!(bytes, &sc[rel], "worker count changed {rel}");
    }
    assert!(sa.contains_key("run.txt"));
    assert!(sa.contains_key("measures.csv"));
    finish("10 determinism", t, Duration::from_secs(180));
}

// supporting check: the full measurement path over a generated corpus is
// itself reproducible (measures CSV bytes)
#[test]
fn measures_csv_reproducible() {
    let dir = tmp_dir("measures-repro");
    let spec = CorpusSpec {
        subjects: 3,
        images_per_subject: 1,
        seed: 5,
        variants: vec![ImageVariant::clean("high")],
    };
    let records = generate(&spec, &dir).unwrap();
    let mut table = MeasureTable::new();
    for r in &records {
        let img = raster::load_image(&r.image_path).unwrap();
        table.insert(&r.record_id, measure_all(&img).unwrap());
    }
    let p1 = dir.join("m1.csv");
    let p2 = dir.join("m2.csv");
    table.save_csv(&p1).unwrap();
    table.save_csv(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

// supporting check: gabor responses at crop scale behave on the corpus
// (non-degenerate vectors, unit norm)
#[test]
fn corpus_features_wellformed() {
    let dir = tmp_dir("corpus-features");
    let spec = CorpusSpec {
        subjects: 2,
        images_per_subject: 1,
        seed: 21,
        variants: vec![ImageVariant::clean("high")],
    };
    let records = generate(&spec, &dir).unwrap();
    let bank = GaborBank::new(
        GaborBankParams { scales: 2, orientations: 4, downsample: 16 },
        CROP_SIZE,
        CROP_SIZE,
    )
    .unwrap();
    for r in &records {
        let img = raster::load_image(&r.image_path).unwrap();
        let f = bank.extract(&img).unwrap();
        assert!(!f.is_zero());
        assert!((f.norm() - 1.0).abs() < 1e-9);
    }
    let _ = fiqa::QualityScore::new(100).unwrap();
}
