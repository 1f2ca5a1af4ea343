//! Weber-face photometric normalization: the arctan ratio of local
//! intensity differences to the center intensity cancels multiplicative
//! illumination, so a ramped image normalizes to (nearly) the same
//! representation as its clean sibling.

use faceq::enhance::{weberface, weberface_image, WeberParams};
use faceq::raster::save_image;
use faceq::synthcorpus::subject_base;

fn main() {
    let base = subject_base(11, 0);
    let (w, h) = (base.width(), base.height());

    // multiplicative left-to-right ramp, mean gain one
    let strength = 0.9;
    let ramped = faceq::raster::GrayImage::from_vec(
        w,
        h,
        base.data()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = (i % w) as f64 / (w - 1) as f64;
                (v * (1.0 + strength * (x - 0.5))).clamp(0.0, 1.0)
            })
            .collect(),
    )
    .unwrap();

    let params = WeberParams::default();
    let w_clean = weberface(&base, &params).unwrap();
    let w_ramped = weberface(&ramped, &params).unwrap();

    let rms = |a: &[f64], b: &[f64]| {
        (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
    };
    println!("rms(clean, ramped) raw pixels:        {:.5}", rms(base.data(), ramped.data()));
    println!("rms(weber(clean), weber(ramped)):     {:.5}", rms(w_clean.data(), w_ramped.data()));

    let dir = std::env::temp_dir().join("faceq-example-weber");
    std::fs::create_dir_all(&dir).unwrap();
    save_image(&base, &dir.join("clean.pgm")).unwrap();
    save_image(&ramped, &dir.join("ramped.pgm")).unwrap();
    save_image(&weberface_image(&base, &params).unwrap(), &dir.join("weber_clean.pgm")).unwrap();
    save_image(&weberface_image(&ramped, &params).unwrap(), &dir.join("weber_ramped.pgm"))
        .unwrap();
    println!("images written under {}", dir.display());
}
