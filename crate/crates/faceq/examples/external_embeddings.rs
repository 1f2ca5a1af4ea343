//! Precomputed embeddings (e.g. from a deep face model) run through the
//! same evaluation harness: one CSV row per record, L2-normalized on
//! load, matched by cosine similarity against a gallery.

use std::fmt::Write as _;

use faceq::eval::{build_gallery, cmc, MissingProbePolicy};
use faceq::features::{load_embedding_store, load_external_embedding};
use faceq::rng::SplitMix64;

fn main() {
    // fabricate a 64-dim embedding table: subjects get separated
    // directions, probe rows are noisy copies
    let dir = std::env::temp_dir().join("faceq-example-embeddings");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("embeddings.csv");
    let mut rng = SplitMix64::new(44);
    let mut text = String::new();
    let subjects = 6;
    let dim = 64;
    let anchors: Vec<Vec<f64>> = (0..subjects)
        .map(|_| (0..dim).map(|_| rng.next_gaussian()).collect())
        .collect();
    for (s, anchor) in anchors.iter().enumerate() {
        for (role, noise) in [("gallery", 0.0), ("probe", 0.6)] {
            let _ = write!(text, "s{s:02}_{role}");
            for v in anchor {
                let _ = write!(text, ",{}", v + noise * rng.next_gaussian());
            }
            text.push('\n');
        }
    }
    std::fs::write(&path, text).unwrap();

    let one = load_external_embedding(&path, "s00_gallery").unwrap();
    println!("loaded one embedding: dim {} |v| = {:.6}", one.dim(), one.norm());

    let store = load_embedding_store(&path).unwrap();
    let gallery_entries: Vec<_> = (0..subjects)
        .map(|s| {
            let id = format!("s{s:02}_gallery");
            (id.clone(), format!("s{s:02}"), store.get(&id).unwrap())
        })
        .collect();
    let gallery = build_gallery(&gallery_entries).unwrap();
    let probes: Vec<_> = (0..subjects)
        .map(|s| (format!("s{s:02}"), store.get(&format!("s{s:02}_probe")).unwrap()))
        .collect();
    let run = cmc(&probes, &gallery, subjects, MissingProbePolicy::Exclude).unwrap();
    println!("embedding CMC: rank-1 {:.3}, rank-{} {:.3}", run.curve.rank1(), subjects,
        run.curve.rate(subjects));
}
