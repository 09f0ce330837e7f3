//! Image containers and codecs.
//!
//! Inputs arrive as PNG, JPEG, or binary PNM (P6 PPM / P5 PGM) streams and
//! are decoded to [`RgbImage`]; the pipeline works on [`GrayImage`] after
//! luma conversion. PNG is the only output codec: the render-back path must
//! round-trip pixel data exactly, which rules out lossy formats.

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use thiserror::Error;

/// 8-bit interleaved RGB raster, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// 8-bit single-channel raster, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("unrecognized image magic bytes")]
    UnsupportedFormat,
    #[error("corrupt image stream: {0}")]
    CorruptStream(String),
    #[error("image has zero width or height")]
    ZeroDimension,
    #[error("pixel buffer length {actual} does not match dimensions (expected {expected})")]
    DataLength { expected: usize, actual: usize },
}

impl RgbImage {
    /// `data` is interleaved R,G,B and must hold exactly `width*height*3` bytes.
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroDimension);
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(RasterError::DataLength { expected, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// (r, g, b) at pixel coordinates; panics out of bounds.
    pub fn pixel(&self, x: u32, y: u32) -> (u8, u8, u8) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        let i = (y as usize * self.width as usize + x as usize) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }
}

impl GrayImage {
    /// `data` must hold exactly `width*height` bytes.
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroDimension);
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(RasterError::DataLength { expected, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Codec of an encoded image stream. The discriminants double as the
/// format codes stored in bundle entry headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImageFormat {
    Png = 1,
    Jpeg = 2,
    Ppm = 3,
    Pgm = 4,
}

impl ImageFormat {
    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            1 => Some(ImageFormat::Png),
            2 => Some(ImageFormat::Jpeg),
            3 => Some(ImageFormat::Ppm),
            4 => Some(ImageFormat::Pgm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg => "jpeg",
            ImageFormat::Ppm => "ppm",
            ImageFormat::Pgm => "pgm",
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(ImageFormat::Png),
            "jpeg" | "jpg" => Ok(ImageFormat::Jpeg),
            "ppm" => Ok(ImageFormat::Ppm),
            "pgm" => Ok(ImageFormat::Pgm),
            other => Err(format!("unknown image format '{other}'")),
        }
    }
}

/// Identify the codec from magic bytes, without decoding.
pub fn sniff_format(bytes: &[u8]) -> Option<ImageFormat> {
    const PNG_SIG: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];
    if bytes.starts_with(&PNG_SIG) {
        return Some(ImageFormat::Png);
    }
    if bytes.starts_with(&[0xff, 0xd8, 0xff]) {
        return Some(ImageFormat::Jpeg);
    }
    // PNM magic is two bytes followed by whitespace.
    if bytes.len() >= 3 && bytes[2].is_ascii_whitespace() {
        match &bytes[..2] {
            b"P6" => return Some(ImageFormat::Ppm),
            b"P5" => return Some(ImageFormat::Pgm),
            _ => {}
        }
    }
    None
}

/// Decode a PNG/JPEG/PNM stream. With `hint: None` the codec is sniffed
/// from magic bytes; a hint forces the named decoder. PGM input promotes
/// to RGB by replicating the single channel.
pub fn decode_image(bytes: &[u8], hint: Option<ImageFormat>) -> Result<RgbImage, RasterError> {
    let format = match hint {
        Some(f) => f,
        None => sniff_format(bytes).ok_or(RasterError::UnsupportedFormat)?,
    };
    match format {
        ImageFormat::Png => decode_via_image_crate(bytes, image::ImageFormat::Png),
        ImageFormat::Jpeg => decode_via_image_crate(bytes, image::ImageFormat::Jpeg),
        ImageFormat::Ppm | ImageFormat::Pgm => decode_pnm(bytes, format),
    }
}

fn decode_via_image_crate(bytes: &[u8], format: image::ImageFormat) -> Result<RgbImage, RasterError> {
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| RasterError::CorruptStream(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (width, height) = rgb.dimensions();
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension);
    }
    RgbImage::new(width, height, rgb.into_raw())
}

/// Binary PNM parser. Header: magic, width, height, maxval as ASCII tokens
/// separated by whitespace, `#` comments allowed, then exactly one
/// whitespace byte before the raw samples.
fn decode_pnm(bytes: &[u8], format: ImageFormat) -> Result<RgbImage, RasterError> {
    let expected_magic: &[u8] = match format {
        ImageFormat::Ppm => b"P6",
        ImageFormat::Pgm => b"P5",
        _ => unreachable!("decode_pnm called for non-PNM format"),
    };
    if bytes.len() < 2 || &bytes[..2] != expected_magic {
        return Err(RasterError::CorruptStream(format!(
            "bad PNM magic (expected {})",
            String::from_utf8_lossy(expected_magic)
        )));
    }
    let mut pos = 2;
    let width = pnm_token(bytes, &mut pos)?;
    let height = pnm_token(bytes, &mut pos)?;
    let maxval = pnm_token(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension);
    }
    if maxval == 0 || maxval > 255 {
        return Err(RasterError::CorruptStream(format!(
            "unsupported PNM maxval {maxval} (8-bit samples only)"
        )));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(RasterError::CorruptStream(
                "missing whitespace between PNM header and samples".into(),
            ))
        }
    }
    let channels = if format == ImageFormat::Ppm { 3 } else { 1 };
    let expected = width as usize * height as usize * channels;
    let samples = &bytes[pos..];
    if samples.len() < expected {
        return Err(RasterError::CorruptStream(format!(
            "PNM sample data truncated: have {}, need {expected}",
            samples.len()
        )));
    }
    if samples.len() > expected {
        return Err(RasterError::CorruptStream(format!(
            "PNM stream has {} trailing bytes",
            samples.len() - expected
        )));
    }
    let data = if channels == 3 {
        samples.to_vec()
    } else {
        let mut out = Vec::with_capacity(expected * 3);
        for &v in samples {
            out.extend_from_slice(&[v, v, v]);
        }
        out
    };
    RgbImage::new(width, height, data)
}

fn pnm_token(bytes: &[u8], pos: &mut usize) -> Result<u32, RasterError> {
    // Skip whitespace and '#' comments running to end of line.
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while matches!(bytes.get(*pos), Some(b) if b.is_ascii_digit()) {
        *pos += 1;
    }
    if *pos == start {
        return Err(RasterError::CorruptStream("expected integer in PNM header".into()));
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).expect("digits are valid UTF-8");
    text.parse::<u32>()
        .map_err(|_| RasterError::CorruptStream(format!("PNM header value '{text}' out of range")))
}

/// BT.601 luma, round-half-up: gray = round(0.299 R + 0.587 G + 0.114 B).
/// Computed in integer arithmetic so results are exact and platform-stable.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut data = Vec::with_capacity(img.width as usize * img.height as usize);
    for px in img.data.chunks_exact(3) {
        let (r, g, b) = (px[0] as u32, px[1] as u32, px[2] as u32);
        data.push(((299 * r + 587 * g + 114 * b + 500) / 1000) as u8);
    }
    GrayImage { width: img.width, height: img.height, data }
}

pub fn encode_png_rgb(img: &RgbImage) -> Vec<u8> {
    encode_png_bytes(&img.data, img.width, img.height, image::ExtendedColorType::Rgb8)
}

pub fn encode_png_gray(img: &GrayImage) -> Vec<u8> {
    encode_png_bytes(&img.data, img.width, img.height, image::ExtendedColorType::L8)
}

fn encode_png_bytes(data: &[u8], width: u32, height: u32, color: image::ExtendedColorType) -> Vec<u8> {
    use image::ImageEncoder;
    let mut out = Cursor::new(Vec::new());
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(data, width, height, color)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}
