//! Landmark-driven alignment: estimate the least-squares similarity
//! from six eye/mouth points onto the canonical template and warp the
//! face into a 128x128 crop.

use faceq::geometry::{
    align_crop, canonical_template, estimate_similarity, LandmarkSet, CROP_SIZE,
};
use faceq::raster::{save_image, GrayImage};
use faceq::rng::SplitMix64;

fn main() {
    // a synthetic 200x160 frame whose face sits rotated and shifted
    let mut rng = SplitMix64::new(3);
    let (w, h) = (200usize, 160usize);
    let mut data: Vec<f64> = (0..w * h).map(|_| rng.next_range(0.2, 0.6)).collect();

    // paint blobs at landmark positions transformed away from canon
    let angle = 0.25f64;
    let (c, s) = (angle.cos(), angle.sin());
    let place = |x: f64, y: f64| -> (f64, f64) {
        (1.2 * (c * x - s * y) + 40.0, 1.2 * (s * x + c * y) + 10.0)
    };
    let mut landmarks = Vec::new();
    for &(lx, ly) in canonical_template().points() {
        let (px, py) = place(lx, ly);
        landmarks.push((px, py));
        for y in 0..h {
            for x in 0..w {
                let d2 = (x as f64 - px).powi(2) + (y as f64 - py).powi(2);
                data[y * w + x] = (data[y * w + x] - 0.35 * (-d2 / 18.0).exp()).max(0.0);
            }
        }
    }
    let frame = GrayImage::from_vec(w, h, data).unwrap();
    let lm = LandmarkSet::new(landmarks).unwrap();

    let t = estimate_similarity(&lm, &canonical_template()).unwrap();
    println!(
        "recovered similarity: scale {:.4} rotation {:.4} rad translation ({:.2}, {:.2})",
        t.scale, t.rotation, t.translation.0, t.translation.1
    );

    let crop = align_crop(&frame, &lm).unwrap();
    assert_eq!(crop.width(), CROP_SIZE);
    let dir = std::env::temp_dir().join("faceq-example-align");
    std::fs::create_dir_all(&dir).unwrap();
    save_image(&frame, &dir.join("frame.pgm")).unwrap();
    save_image(&crop, &dir.join("crop.pgm")).unwrap();
    println!("wrote frame.pgm and crop.pgm under {}", dir.display());
}
