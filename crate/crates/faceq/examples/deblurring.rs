//! Baseline Wiener deconvolution: blur a texture with a known Gaussian
//! PSF, restore it with the matched filter, and watch the sharpness
//! measure recover.

use faceq::enhance::{wiener_deblur, DeblurParams};
use faceq::measures::sharpness;
use faceq::raster::{convolve2d, gaussian_kernel_auto, save_image, GrayImage};
use faceq::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(5);
    let img =
        GrayImage::from_vec(64, 64, (0..64 * 64).map(|_| rng.next_range(0.1, 0.9)).collect())
            .unwrap();
    let blurred = convolve2d(&img, &gaussian_kernel_auto(1.0).unwrap());
    let restored =
        wiener_deblur(&blurred, &DeblurParams { psf_sigma: 1.0, noise_to_signal: 1e-3 }).unwrap();

    let s = |im: &GrayImage| sharpness(im, 1.0).unwrap().value;
    println!("sharpness original: {:.6}", s(&img));
    println!("sharpness blurred:  {:.6}", s(&blurred));
    println!("sharpness restored: {:.6}", s(&restored));

    let dir = std::env::temp_dir().join("faceq-example-deblur");
    std::fs::create_dir_all(&dir).unwrap();
    save_image(&img, &dir.join("original.pgm")).unwrap();
    save_image(&blurred, &dir.join("blurred.pgm")).unwrap();
    save_image(&restored, &dir.join("restored.pgm")).unwrap();
    println!("images written under {}", dir.display());
}
