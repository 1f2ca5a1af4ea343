//! The full experiment pipeline in one call: partition a corpus, apply
//! the photometric-normalization preset to every set, and compare
//! before/after identification. The bundle on disk holds every
//! intermediate (crops, measures, sets, enhanced images, CMC tables,
//! SVG plots, run manifest).

use faceq::config::ExperimentConfig;
use faceq::pipeline::cmd_run_experiment;
use faceq::synthcorpus::{generate, CorpusSpec, Degradation, ImageVariant};

fn main() {
    let dir = std::env::temp_dir().join("faceq-example-run");
    let _ = std::fs::remove_dir_all(&dir);
    let spec = CorpusSpec {
        subjects: 8,
        images_per_subject: 3,
        seed: 2,
        variants: vec![
            ImageVariant::clean("high"),
            ImageVariant::with(vec![Degradation::IlluminationRamp { strength: 1.0 }], "low"),
            ImageVariant::with(vec![Degradation::IlluminationRamp { strength: 0.6 }], "middle"),
        ],
    };
    generate(&spec, &dir).expect("corpus");

    // c2: weberface on the cropped faces of every set
    let config = ExperimentConfig::load("c2").expect("preset");
    let bundle = dir.join("bundle");
    let outcome = cmd_run_experiment(&dir.join("manifest.csv"), &config, &bundle, 2)
        .expect("experiment run");

    println!("experiment {} (config hash {})", config.name, outcome.config_hash);
    for p in &outcome.probes {
        let after = p.after.as_ref().unwrap();
        println!(
            "probe {:<7} rank-1 {:.3} -> {:.3} (delta {:+.3}; {} probes)",
            p.band.name(),
            p.before.curve.rank1(),
            after.curve.rank1(),
            p.rank1_delta.unwrap(),
            p.before.evaluated
        );
    }
    println!("bundle: {}", bundle.display());
    for f in ["run.txt", "enhance_summary.txt", "cmc/low.svg"] {
        println!("  {}", bundle.join(f).display());
    }
}
