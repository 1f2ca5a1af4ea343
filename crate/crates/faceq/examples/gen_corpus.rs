//! Generate a deterministic synthetic corpus: per-subject band-limited
//! noise bases with landmark blobs, plus degraded variants tagged with
//! quality hints. Run twice with the same seed and the output bytes are
//! identical.

use faceq::synthcorpus::{generate, CorpusSpec, Degradation, ImageVariant};

fn main() {
    let spec = CorpusSpec {
        subjects: 6,
        images_per_subject: 3,
        seed: 42,
        variants: vec![
            ImageVariant::clean("high"),
            ImageVariant::with(vec![Degradation::IlluminationRamp { strength: 0.8 }], "low"),
            ImageVariant::with(
                vec![Degradation::Blur { sigma: 1.5 }, Degradation::Noise { sigma: 0.02 }],
                "middle",
            ),
        ],
    };
    let out = std::env::temp_dir().join("faceq-example-corpus");
    let records = generate(&spec, &out).expect("corpus generation");
    println!("wrote {} images under {}", records.len(), out.display());
    println!("manifest: {}", out.join("manifest.csv").display());
    println!("ground truth: {}", out.join("truth.csv").display());
    for r in records.iter().take(4) {
        println!(
            "  {} subject={} hint={}",
            r.record_id,
            r.subject_id,
            r.split_hint.as_deref().unwrap_or("-")
        );
    }
}
