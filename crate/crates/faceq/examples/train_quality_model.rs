//! Train the two-level ranking quality model on a synthetic corpus
//! (split hints provide the ordinal classes), score every record, and
//! partition by the 30/60 band rule.

use std::collections::BTreeMap;

use faceq::config::{ConfigFile, ExperimentConfig};
use faceq::fiqa::{band, load_model, TrainOptions};
use faceq::pipeline::{cmd_assess, cmd_train_fiqa};
use faceq::synthcorpus::{generate, CorpusSpec, Degradation, ImageVariant};

fn main() {
    let dir = std::env::temp_dir().join("faceq-example-train");
    let _ = std::fs::remove_dir_all(&dir);
    let spec = CorpusSpec {
        subjects: 6,
        images_per_subject: 3,
        seed: 17,
        variants: vec![
            ImageVariant::clean("high"),
            ImageVariant::with(
                vec![Degradation::Blur { sigma: 2.0 }, Degradation::Noise { sigma: 0.03 }],
                "low",
            ),
            ImageVariant::with(vec![Degradation::Blur { sigma: 0.8 }], "middle"),
        ],
    };
    generate(&spec, &dir).expect("corpus");
    let manifest = dir.join("manifest.csv");

    // a compact gabor bank keeps the example fast
    let config = ExperimentConfig::from_file(
        &ConfigFile::parse(
            "[features]\ngabor_scales = 2\ngabor_orientations = 4\ngabor_downsample = 16\n",
        )
        .unwrap(),
    )
    .unwrap();
    let model_path = dir.join("model.txt");
    let model = cmd_train_fiqa(&manifest, &config, &TrainOptions::default(), &model_path, 2)
        .expect("training");
    println!(
        "trained: {} level-1 rankers, level-2 dim {}, anchors [{:.4}, {:.4}]",
        model.level1.len(),
        model.level2_weights.len(),
        model.score_min,
        model.score_max
    );
    let _ = load_model(&model_path).expect("round trip");

    let scores = cmd_assess(&manifest, &model_path, &config, &dir.join("scores.csv"), 2)
        .expect("assessment");
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (id, s) in &scores {
        *counts.entry(band(*s).name()).or_default() += 1;
        if id.ends_with("_i00") || id.ends_with("_i01") {
            println!("  {id} -> score {:>3} ({})", s.value(), band(*s));
        }
    }
    println!("band counts: {counts:?}");
}
