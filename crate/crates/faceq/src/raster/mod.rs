//! Grayscale rasters and the shared numerical kernels: convolution,
//! Gaussian smoothing, Sobel gradients and the 2-D DFT.
//!
//! Intensities are real-valued on the \[0,1\] scale throughout the crate;
//! 8-bit files are mapped onto that scale at load time. Every operation
//! here is a pure function of its inputs and safe to call from multiple
//! threads.

mod fft;
mod io;

pub use fft::{dft2, dft2_complex, dft2_real, idft2, idft2_complex, Complex, Spectrum};
pub use io::{load_image, save_image};

use crate::error::{Error, Result};

/// Single-channel image with intensities in \[0,1\], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("image dimensions must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::validation(format!(
                "pixel buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("intensity outside [0,1]"));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        GrayImage::from_vec(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel at (x, y) with out-of-range coordinates clamped to the edge.
    #[inline]
    pub fn get_replicate(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    /// Bilinear sample at fractional coordinates, edge-replicated.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    pub fn to_map(&self) -> RealMap {
        RealMap { width: self.width, height: self.height, data: self.data.clone() }
    }
}

/// Unconstrained real-valued raster: gradient maps, Weber responses,
/// unclamped filter outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "buffer length mismatch");
        RealMap { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        RealMap { width, height, data: vec![0.0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_replicate(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    /// Clamp into \[0,1\] and reinterpret as an image.
    pub fn clamp_to_image(&self) -> GrayImage {
        let data = self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    /// Affine map of [lo, hi] onto \[0,1\], clamped.
    pub fn normalize_to_image(&self, lo: f64, hi: f64) -> GrayImage {
        assert!(hi > lo, "degenerate normalization range");
        let span = hi - lo;
        let data = self.data.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect();
        GrayImage { width: self.width, height: self.height, data }
    }
}

/// Square odd-sized convolution kernel, row-major taps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) || size == 0 {
            return Err(Error::validation(format!("kernel size must be odd, got {size}")));
        }
        if taps.len() != size * size {
            return Err(Error::validation(format!(
                "kernel needs {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        Ok(Kernel { size, taps })
    }

    pub fn identity() -> Self {
        Kernel { size: 1, taps: vec![1.0] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Normalized Gaussian kernel with the given standard deviation and side length.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::numeric(format!("gaussian sigma must be positive, got {sigma}")));
    }
    if size.is_multiple_of(2) || size == 0 {
        return Err(Error::validation(format!("gaussian kernel size must be odd, got {size}")));
    }
    let c = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for y in 0..size as isize {
        for x in 0..size as isize {
            let dx = (x - c) as f64;
            let dy = (y - c) as f64;
            taps.push((-(dx * dx + dy * dy) * inv).exp());
        }
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(Kernel { size, taps })
}

/// Gaussian kernel sized to capture >99% of the mass: side = 2*ceil(3*sigma)+1.
pub fn gaussian_kernel_auto(sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::numeric(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let half = (3.0 * sigma).ceil() as usize;
    gaussian_kernel(sigma, 2 * half + 1)
}

/// Sliding-window filter with edge replication, raw (unclamped) output.
pub fn convolve2d_raw(img: &GrayImage, k: &Kernel) -> RealMap {
    convolve_map(&img.to_map(), k)
}

/// Same filter on an unconstrained map.
pub fn convolve_map(src: &RealMap, k: &Kernel) -> RealMap {
    let (w, h) = (src.width, src.height);
    let c = (k.size / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for j in 0..k.size as isize {
                for i in 0..k.size as isize {
                    acc += k.taps[(j * k.size as isize + i) as usize]
                        * src.get_replicate(x + i - c, y + j - c);
                }
            }
            out[(y as usize) * w + x as usize] = acc;
        }
    }
    RealMap { width: w, height: h, data: out }
}

/// Filter an image, clamping the result back into \[0,1\].
pub fn convolve2d(img: &GrayImage, k: &Kernel) -> GrayImage {
    convolve2d_raw(img, k).clamp_to_image()
}

const SOBEL_X: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
const SOBEL_Y: [f64; 9] = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];

/// Gradient magnitude e(x,y) = sqrt(Gx^2 + Gy^2) with 3x3 Sobel taps,
/// edge-replicated borders.
///
/// Taps are applied to intensities relative to the window center (the
/// taps sum to zero, so the value is unchanged); constant images then
/// map to exact zeros.
pub fn sobel_gradient_magnitude(img: &GrayImage) -> RealMap {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = img.get_replicate(x, y);
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..3isize {
                for i in 0..3isize {
                    let v = img.get_replicate(x + i - 1, y + j - 1) - center;
                    gx += SOBEL_X[(j * 3 + i) as usize] * v;
                    gy += SOBEL_Y[(j * 3 + i) as usize] * v;
                }
            }
            out[(y as usize) * w + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    RealMap { width: w, height: h, data: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn gaussian_degenerate_size_one() {
        let k = gaussian_kernel(1.0, 1).unwrap();
        assert_eq!(k.taps(), &[1.0]);
    }

    #[test]
    fn gaussian_taps_sum_to_one() {
        for (sigma, size) in [(0.5, 3), (1.0, 7), (2.5, 15)] {
            let k = gaussian_kernel(sigma, size).unwrap();
            let sum: f64 = k.taps().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        }
    }

    #[test]
    fn gaussian_center_tap_hand_value() {
        // sigma=1, size=3: taps exp(0), exp(-1/2) x4, exp(-1) x4, normalized.
        let k = gaussian_kernel(1.0, 3).unwrap();
        let e = (-0.5f64).exp();
        let e2 = (-1.0f64).exp();
        let expected = 1.0 / (1.0 + 4.0 * e + 4.0 * e2);
        assert!((k.taps()[4] - expected).abs() < 1e-12);
        assert!((k.taps()[4] - 0.2042).abs() < 5e-4);
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(gaussian_kernel(0.0, 3).is_err());
        assert!(gaussian_kernel(-1.0, 3).is_err());
        assert!(gaussian_kernel(1.0, 4).is_err());
    }

    #[test]
    fn gaussian_kernel_symmetry() {
        let k = gaussian_kernel(1.3, 7).unwrap();
        let n = k.size();
        for y in 0..n {
            for x in 0..n {
                let v = k.taps()[y * n + x];
                assert_eq!(v, k.taps()[y * n + (n - 1 - x)], "horizontal flip");
                assert_eq!(v, k.taps()[(n - 1 - y) * n + x], "vertical flip");
                assert_eq!(v, k.taps()[x * n + y], "diagonal flip");
            }
        }
    }

    #[test]
    fn convolve_identity_kernel_is_identity() {
        let img = random_image(9, 7, 11);
        let out = convolve2d(&img, &Kernel::identity());
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn convolve_constant_image_fixed_point() {
        let img = GrayImage::constant(8, 8, 0.37).unwrap();
        let k = gaussian_kernel(1.0, 5).unwrap();
        let out = convolve2d_raw(&img, &k);
        for v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_ramp_box_hand_computed() {
        // 3x3 ramp I(x,y) = x/2 against a 3x3 box kernel (all 1/9), replicate
        // borders. Hand result per row: [ (0+0+0 +.5*3 ... ) ] computed below.
        let img = GrayImage::from_vec(3, 3, vec![0.0, 0.5, 1.0, 0.0, 0.5, 1.0, 0.0, 0.5, 1.0])
            .unwrap();
        let k = Kernel::new(3, vec![1.0 / 9.0; 9]).unwrap();
        let out = convolve2d_raw(&img, &k);
        // column x=0: window columns {-1,0,1} replicate to {0,0,0.5} -> mean = (0*6+0.5*3)/9
        let left = (0.0 * 6.0 + 0.5 * 3.0) / 9.0;
        let mid = (0.0 * 3.0 + 0.5 * 3.0 + 1.0 * 3.0) / 9.0;
        let right = (0.5 * 3.0 + 1.0 * 6.0) / 9.0;
        for y in 0..3 {
            assert!((out.get(0, y) - left).abs() < 1e-12);
            assert!((out.get(1, y) - mid).abs() < 1e-12);
            assert!((out.get(2, y) - right).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_matches_sliding_window_oracle() {
        let img = random_image(6, 5, 3);
        let k = gaussian_kernel(0.8, 3).unwrap();
        let out = convolve2d_raw(&img, &k);
        for y in 0..5isize {
            for x in 0..6isize {
                let mut acc = 0.0;
                for j in -1..=1isize {
                    for i in -1..=1isize {
                        acc += k.taps()[((j + 1) * 3 + i + 1) as usize]
                            * img.get_replicate(x + i, y + j);
                    }
                }
                assert!((out.get(x as usize, y as usize) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sobel_constant_image_zero() {
        let img = GrayImage::constant(5, 5, 0.6).unwrap();
        let e = sobel_gradient_magnitude(&img);
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_step_edge_positive_on_edge_columns() {
        let mut data = vec![0.0; 25];
        for y in 0..5 {
            for x in 3..5 {
                data[y * 5 + x] = 1.0;
            }
        }
        let img = GrayImage::from_vec(5, 5, data).unwrap();
        let e = sobel_gradient_magnitude(&img);
        for y in 0..5 {
            assert!(e.get(2, y) > 0.0);
            assert!(e.get(3, y) > 0.0);
            assert_eq!(e.get(0, y), 0.0);
        }
    }

    #[test]
    fn sobel_ramp_interior_hand_value() {
        // 5x5 ramp I = x/4: Sobel x response on interior = 8 * (1/4) = 2.0.
        let mut data = vec![0.0; 25];
        for y in 0..5 {
            for x in 0..5 {
                data[y * 5 + x] = x as f64 / 4.0;
            }
        }
        let img = GrayImage::from_vec(5, 5, data).unwrap();
        let e = sobel_gradient_magnitude(&img);
        for y in 1..4 {
            for x in 1..4 {
                assert!((e.get(x, y) - 2.0).abs() < 1e-12, "at ({x},{y}): {}", e.get(x, y));
            }
        }
    }

    #[test]
    fn sobel_translation_covariant_on_interior() {
        let img = random_image(8, 8, 21);
        let mut shifted = vec![0.0; 64];
        for y in 0..8usize {
            for x in 0..8usize {
                shifted[y * 8 + x] = img.get_replicate(x as isize - 1, y as isize);
            }
        }
        let shifted = GrayImage::from_vec(8, 8, shifted).unwrap();
        let e0 = sobel_gradient_magnitude(&img);
        let e1 = sobel_gradient_magnitude(&shifted);
        // interior pixels away from the wrap column
        for y in 2..6 {
            for x in 2..6 {
                assert!((e1.get(x, y) - e0.get(x - 1, y)).abs() < 1e-12);
            }
        }
    }

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = SplitMix64::new(seed);
        let data = (0..w * h).map(|_| rng.next_f64()).collect();
        GrayImage::from_vec(w, h, data).unwrap()
    }

    proptest! {
        // conv(a*X + b*Y) = a*conv(X) + b*conv(Y) on the raw variant.
        #[test]
        fn convolution_linearity(seed in 0u64..1000, a in 0.1f64..1.0, b in 0.1f64..1.0) {
            let x = random_image(7, 7, seed).to_map();
            let y = random_image(7, 7, seed.wrapping_add(777)).to_map();
            let k = gaussian_kernel(1.0, 3).unwrap();
            let mixed = RealMap::new(7, 7,
                x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect());
            let lhs = convolve_map(&mixed, &k);
            let cx = convolve_map(&x, &k);
            let cy = convolve_map(&y, &k);
            for i in 0..49 {
                let rhs = a * cx.data()[i] + b * cy.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() < 1e-9);
            }
        }
    }
}
