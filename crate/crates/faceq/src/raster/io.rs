//! Image file I/O: binary PGM (P5, 8-bit) and 8-bit PNG.
//!
//! PGM is the canonical interchange format here: bit-exact, trivially
//! hand-writable, no compression. Loading maps 8-bit samples onto the
//! \[0,1\] intensity scale; color PNG input is converted with the
//! 0.299/0.587/0.114 luma weights.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

pub fn load_image(path: &Path) -> Result<GrayImage> {
    match extension(path) {
        Some("pgm") => load_pgm(path),
        Some("png") => load_png(path),
        _ => Err(Error::validation(format!(
            "unsupported image format for {} (expected .pgm or .png)",
            path.display()
        ))),
    }
}

/// Writes PGM or PNG depending on the path extension. Round trip
/// guarantee: load(save(img)) is within 1/255 of img per pixel.
pub fn save_image(img: &GrayImage, path: &Path) -> Result<()> {
    match extension(path) {
        Some("pgm") => save_pgm(img, path),
        Some("png") => save_png(img, path),
        _ => Err(Error::validation(format!(
            "unsupported image format for {} (expected .pgm or .png)",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

// ---------------------------------------------------------------- PGM (P5)

fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = 0usize;

    let magic = read_token(&bytes, &mut cursor)
        .ok_or_else(|| Error::validation(format!("{}: truncated PGM header", path.display())))?;
    if magic != b"P5" {
        return Err(Error::validation(format!(
            "{}: not a binary PGM (magic {:?})",
            path.display(),
            String::from_utf8_lossy(magic)
        )));
    }
    let width = read_number(&bytes, &mut cursor, path)?;
    let height = read_number(&bytes, &mut cursor, path)?;
    let maxval = read_number(&bytes, &mut cursor, path)?;
    if width == 0 || height == 0 {
        return Err(Error::validation(format!("{}: zero-dimension image", path.display())));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::validation(format!(
            "{}: unsupported PGM maxval {maxval} (8-bit only)",
            path.display()
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    cursor += 1;
    let need = width * height;
    if bytes.len() < cursor + need {
        return Err(Error::validation(format!("{}: truncated pixel data", path.display())));
    }
    let scale = 1.0 / maxval as f64;
    let data = bytes[cursor..cursor + need].iter().map(|&b| b as f64 * scale).collect();
    GrayImage::from_vec(width, height, data)
}

fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(img.width() * img.height() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend(img.data().iter().map(|&v| quantize(v)));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Skips whitespace and `#` comment lines, then returns the next token.
fn read_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    if *cursor >= bytes.len() {
        return None;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    Some(&bytes[start..*cursor])
}

fn read_number(bytes: &[u8], cursor: &mut usize, path: &Path) -> Result<usize> {
    let tok = read_token(bytes, cursor)
        .ok_or_else(|| Error::validation(format!("{}: truncated PGM header", path.display())))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::validation(format!("{}: bad PGM header field", path.display())))
}

// ------------------------------------------------------------------- PNG

fn load_png(path: &Path) -> Result<GrayImage> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(file);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::validation(format!("{}: bad PNG: {e}", path.display())))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::validation(format!("{}: bad PNG: {e}", path.display())))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::validation(format!(
            "{}: only 8-bit PNG supported",
            path.display()
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    if w == 0 || h == 0 {
        return Err(Error::validation(format!("{}: zero-dimension image", path.display())));
    }
    let pixels = &buf[..info.buffer_size()];
    let data: Vec<f64> = match info.color_type {
        png::ColorType::Grayscale => pixels.iter().map(|&v| v as f64 / 255.0).collect(),
        png::ColorType::GrayscaleAlpha => {
            pixels.chunks_exact(2).map(|p| p[0] as f64 / 255.0).collect()
        }
        png::ColorType::Rgb => pixels.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect(),
        png::ColorType::Rgba => pixels.chunks_exact(4).map(|p| luma(p[0], p[1], p[2])).collect(),
        other => {
            return Err(Error::validation(format!(
                "{}: unsupported PNG color type {other:?}",
                path.display()
            )))
        }
    };
    GrayImage::from_vec(w, h, data)
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

fn save_png(img: &GrayImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let writer = BufWriter::new(file);
    let mut encoder = png::Encoder::new(writer, img.width() as u32, img.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut w = encoder
        .write_header()
        .map_err(|e| Error::validation(format!("{}: PNG encode: {e}", path.display())))?;
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    w.write_image_data(&bytes)
        .map_err(|e| Error::validation(format!("{}: PNG encode: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("faceq-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn pgm_single_pixel_endpoints() {
        for (byte, expected) in [(255u8, 1.0f64), (0, 0.0)] {
            let path = tmp(&format!("one-{byte}.pgm"));
            fs::write(&path, [b"P5\n1 1\n255\n".as_slice(), &[byte]].concat()).unwrap();
            let img = load_image(&path).unwrap();
            assert_eq!(img.data(), &[expected]);
        }
    }

    #[test]
    fn pgm_divide_by_255() {
        let path = tmp("quad.pgm");
        fs::write(&path, [b"P5\n2 2\n255\n".as_slice(), &[0, 51, 102, 255]].concat()).unwrap();
        let img = load_image(&path).unwrap();
        let expected = [0.0, 51.0 / 255.0, 102.0 / 255.0, 1.0];
        for (a, b) in img.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((img.data()[1] - 0.2).abs() < 1e-12);
        assert!((img.data()[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pgm_header_comments_ok() {
        let path = tmp("comment.pgm");
        fs::write(&path, [b"P5\n# made by hand\n2 1\n255\n".as_slice(), &[10, 20]].concat())
            .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.width(), 2);
    }

    #[test]
    fn pgm_rejects_zero_dims_and_bad_magic() {
        let z = tmp("zero.pgm");
        fs::write(&z, b"P5\n0 4\n255\n").unwrap();
        assert!(load_image(&z).is_err());
        let m = tmp("ascii.pgm");
        fs::write(&m, b"P2\n1 1\n255\n5").unwrap();
        assert!(load_image(&m).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image(Path::new("/nonexistent/nowhere.pgm")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn round_trip_constant_half() {
        let img = GrayImage::constant(4, 3, 0.5).unwrap();
        let path = tmp("half.pgm");
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        for v in back.data() {
            assert!((v - 0.5).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn round_trip_endpoint_exact() {
        let img = GrayImage::from_vec(1, 1, vec![1.0]).unwrap();
        let path = tmp("white.pgm");
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap().data(), &[1.0]);
    }

    #[test]
    fn round_trip_quantization_bound() {
        let mut rng = SplitMix64::new(99);
        let img =
            GrayImage::from_vec(3, 3, (0..9).map(|_| rng.next_f64()).collect()).unwrap();
        for ext in ["pgm", "png"] {
            let path = tmp(&format!("rand.{ext}"));
            save_image(&img, &path).unwrap();
            let back = load_image(&path).unwrap();
            let max_diff = img
                .data()
                .iter()
                .zip(back.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_diff <= 1.0 / 255.0 + 1e-12, "{ext}: {max_diff}");
        }
    }

    #[test]
    fn png_round_trip_bytes() {
        let mut rng = SplitMix64::new(3);
        let img =
            GrayImage::from_vec(5, 4, (0..20).map(|_| rng.next_f64()).collect()).unwrap();
        let path = tmp("roundtrip.png");
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.height(), 4);
    }
}
