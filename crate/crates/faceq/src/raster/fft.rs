//! 2-D discrete Fourier transform.
//!
//! Row-column decomposition with an iterative radix-2 path for
//! power-of-two lengths and a direct O(n^2) fallback otherwise. The
//! forward transform is unnormalized (Parseval: sum |F|^2 = N * sum |I|^2);
//! the inverse carries the 1/N factor so `idft2(dft2(x)) == x`.

use super::{GrayImage, RealMap};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Complex { re: self.re * s, im: self.im * s }
    }
}

impl std::ops::Add for Complex {
    type Output = Complex;
    fn add(self, rhs: Complex) -> Complex {
        Complex { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl std::ops::Sub for Complex {
    type Output = Complex;
    fn sub(self, rhs: Complex) -> Complex {
        Complex { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl std::ops::Mul for Complex {
    type Output = Complex;
    fn mul(self, rhs: Complex) -> Complex {
        Complex {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

/// Complex spectrum of a 2-D transform, same dimensions as the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<Complex>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex>) -> Self {
        assert_eq!(data.len(), width * height, "buffer length mismatch");
        Spectrum { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex {
        self.data[v * self.width + u]
    }
}

fn transform_1d(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        fft_radix2(buf, inverse);
    } else {
        naive_dft(buf, inverse);
    }
}

fn fft_radix2(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = Complex::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w = w * wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

fn naive_dft(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex::ZERO; n];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex::ZERO;
        for (j, &x) in buf.iter().enumerate() {
            let ang = sign * 2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
            acc = acc + x * Complex::new(ang.cos(), ang.sin());
        }
        *slot = acc;
    }
    buf.copy_from_slice(&out);
}

fn transform_2d(data: &mut [Complex], width: usize, height: usize, inverse: bool) {
    for row in data.chunks_exact_mut(width) {
        transform_1d(row, inverse);
    }
    let mut col = vec![Complex::ZERO; height];
    for x in 0..width {
        for y in 0..height {
            col[y] = data[y * width + x];
        }
        transform_1d(&mut col, inverse);
        for y in 0..height {
            data[y * width + x] = col[y];
        }
    }
}

/// Unnormalized forward 2-D DFT of an image.
pub fn dft2(img: &GrayImage) -> Spectrum {
    dft2_real(&img.to_map())
}

/// Unnormalized forward 2-D DFT of an arbitrary real map.
pub fn dft2_real(map: &RealMap) -> Spectrum {
    let (w, h) = (map.width(), map.height());
    let mut data: Vec<Complex> = map.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    transform_2d(&mut data, w, h, false);
    Spectrum { width: w, height: h, data }
}

/// Inverse 2-D DFT including the 1/(w*h) factor; returns the real part.
pub fn idft2(spec: &Spectrum) -> RealMap {
    let (w, h) = (spec.width, spec.height);
    let mut data = spec.data.clone();
    transform_2d(&mut data, w, h, true);
    let scale = 1.0 / (w * h) as f64;
    RealMap::new(w, h, data.iter().map(|c| c.re * scale).collect())
}

/// Forward transform of complex spatial data (e.g. a complex filter).
pub fn dft2_complex(width: usize, height: usize, mut data: Vec<Complex>) -> Spectrum {
    assert_eq!(data.len(), width * height, "buffer length mismatch");
    transform_2d(&mut data, width, height, false);
    Spectrum { width, height, data }
}

/// Inverse transform keeping the full complex result, 1/(w*h) included.
pub fn idft2_complex(spec: &Spectrum) -> Spectrum {
    let (w, h) = (spec.width, spec.height);
    let mut data = spec.data.clone();
    transform_2d(&mut data, w, h, true);
    let scale = 1.0 / (w * h) as f64;
    for c in &mut data {
        *c = c.scale(scale);
    }
    Spectrum { width: w, height: h, data }
}
