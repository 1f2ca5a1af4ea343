//! The three scalar quality measures — edge density (focus), low-pass
//! sharpness, and block spectral energy (illumination) — evaluated on a
//! texture under increasing blur and illumination ramps.

use faceq::measures::{edge_density, sharpness, spectral_energy, Region};
use faceq::raster::{convolve2d, gaussian_kernel_auto, GrayImage};
use faceq::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(7);
    let base =
        GrayImage::from_vec(64, 64, (0..64 * 64).map(|_| rng.next_range(0.1, 0.9)).collect())
            .unwrap();

    println!("blur sweep (focus measures fall):");
    println!("{:>6} {:>14} {:>12}", "sigma", "edge_density", "sharpness");
    for sigma in [0.0, 0.5, 1.0, 2.0] {
        let img = if sigma == 0.0 {
            base.clone()
        } else {
            convolve2d(&base, &gaussian_kernel_auto(sigma).unwrap())
        };
        let e = edge_density(&img, &Region::full(&img)).unwrap().value;
        let s = sharpness(&img, 1.0).unwrap().value;
        println!("{sigma:>6.1} {e:>14.6} {s:>12.6}");
    }

    println!("\nillumination ramp sweep (spectral energy rises):");
    println!("{:>9} {:>16}", "strength", "spectral_energy");
    for strength in [0.0, 0.3, 0.6, 0.9] {
        let data: Vec<f64> = base
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = (i % 64) as f64 / 63.0;
                (v * (1.0 + strength * (x - 0.5))).clamp(0.0, 1.0)
            })
            .collect();
        let img = GrayImage::from_vec(64, 64, data).unwrap();
        let f = spectral_energy(&img, 16).unwrap().value;
        println!("{strength:>9.1} {f:>16.3}");
    }
}
