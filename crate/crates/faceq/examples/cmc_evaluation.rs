//! Gallery/probe identification: build a subject-keyed gallery from the
//! high-quality set, match degraded probes by cosine similarity, and
//! plot the rank-1..K identification curve.

use faceq::eval::{build_gallery, cmc, write_cmc_svg, MissingProbePolicy};
use faceq::features::{FeatureVector, GaborBank, GaborBankParams};
use faceq::geometry::CROP_SIZE;
use faceq::raster::load_image;
use faceq::synthcorpus::{generate, CorpusSpec, Degradation, ImageVariant};

fn main() {
    let dir = std::env::temp_dir().join("faceq-example-cmc");
    let _ = std::fs::remove_dir_all(&dir);
    let spec = CorpusSpec {
        subjects: 8,
        images_per_subject: 2,
        seed: 9,
        variants: vec![
            ImageVariant::clean("high"),
            ImageVariant::with(
                vec![
                    Degradation::Blur { sigma: 2.0 },
                    Degradation::IlluminationRamp { strength: 1.2 },
                    Degradation::Noise { sigma: 0.05 },
                ],
                "low",
            ),
        ],
    };
    let records = generate(&spec, &dir).expect("corpus");

    let bank = GaborBank::new(GaborBankParams::default(), CROP_SIZE, CROP_SIZE).unwrap();
    let feats: Vec<(String, String, FeatureVector)> = records
        .iter()
        .map(|r| {
            let img = load_image(&r.image_path).unwrap();
            (r.record_id.clone(), r.subject_id.clone(), bank.extract(&img).unwrap())
        })
        .collect();

    let gallery_entries: Vec<_> =
        feats.iter().filter(|(id, _, _)| id.ends_with("_i00")).cloned().collect();
    let gallery = build_gallery(&gallery_entries).unwrap();
    let probes: Vec<(String, FeatureVector)> = feats
        .iter()
        .filter(|(id, _, _)| id.ends_with("_i01"))
        .map(|(_, subject, v)| (subject.clone(), v.clone()))
        .collect();

    let run = cmc(&probes, &gallery, 8, MissingProbePolicy::Exclude).unwrap();
    println!("rank  rate");
    for (i, r) in run.curve.rates().iter().enumerate() {
        println!("{:>4}  {r:.4}", i + 1);
    }
    println!("({} probes evaluated, {} without gallery subject)", run.evaluated, run.missing_subject);

    let svg = dir.join("cmc.svg");
    write_cmc_svg(&[("degraded probes".to_string(), &run.curve)], "identification", &svg)
        .unwrap();
    println!("plot: {}", svg.display());
}
