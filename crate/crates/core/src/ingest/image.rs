//! Single-channel images: binary masks in, grayscale footprints and height maps out.
//!
//! Readers accept binary or ASCII PGM (`P5`/`P2`) and grayscale PNG at 1–16
//! bits, detected by content. Writers pick PGM or PNG from the extension.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use super::{read_bytes, write_bytes, IngestError};

/// Row-major boolean occupancy; `true` where the source pixel was `> 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskImage {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl MaskImage {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, IngestError> {
        check_dims(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self, IngestError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    /// Pixel at column `u`, row `v`; `None` outside the image.
    #[inline]
    pub fn get(&self, u: u32, v: u32) -> Option<bool> {
        (u < self.width && v < self.height).then(|| self.data[v as usize * self.width as usize + u as usize])
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Row-major 8-bit grayscale image, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, IngestError> {
        check_dims(width, height, data.len())?;
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

    pub fn get(&self, column: u32, row: u32) -> Option<u8> {
        (column < self.width && row < self.height)
            .then(|| self.data[row as usize * self.width as usize + column as usize])
    }
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<(), IngestError> {
    if width == 0 || height == 0 {
        return Err(IngestError::InvalidImage(format!("dimensions {width}×{height} must be positive")));
    }
    if width as usize * height as usize != len {
        return Err(IngestError::InvalidImage(format!(
            "{width}×{height} image needs {} samples, got {len}",
            width as usize * height as usize
        )));
    }
    Ok(())
}

/// Decoded samples of any supported single-channel format.
struct Samples {
    width: u32,
    height: u32,
    max_value: u32,
    data: Vec<u16>,
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

fn decode_samples(bytes: &[u8]) -> Result<Samples, IngestError> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"P3") || bytes.starts_with(b"P6") {
        Err(IngestError::UnsupportedColorType("PPM RGB".into()))
    } else {
        Err(IngestError::parse(0, "neither a PNG nor a PGM file"))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Samples, IngestError> {
    let png_err = |e: png::DecodingError| IngestError::parse(0, format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale {
        return Err(IngestError::UnsupportedColorType(format!("{color:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| IngestError::InvalidImage("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (info.width, info.height);
    let pixels = width as usize * height as usize;
    let (data, max_value) = match depth {
        png::BitDepth::Sixteen => {
            let stride = info.line_size;
            let mut out = Vec::with_capacity(pixels);
            for row in buf.chunks(stride).take(height as usize) {
                out.extend(row[..2 * width as usize].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
            }
            (out, u16::MAX as u32)
        }
        _ => {
            let stride = info.line_size;
            let mut out = Vec::with_capacity(pixels);
            for row in buf.chunks(stride).take(height as usize) {
                out.extend(row[..width as usize].iter().map(|&b| b as u16));
            }
            (out, 255)
        }
    };
    Ok(Samples { width, height, max_value, data })
}

fn decode_pgm(bytes: &[u8]) -> Result<Samples, IngestError> {
    let binary = bytes[1] == b'5';
    let mut pos = 2;
    let mut header = [0u32; 3];
    for slot in header.iter_mut() {
        // Whitespace and `#` comments separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IngestError::parse(start, "expected a header integer"))?;
    }
    let [width, height, max_value] = header;
    if width == 0 || height == 0 {
        return Err(IngestError::parse(pos, "zero image dimension"));
    }
    if max_value == 0 || max_value > u16::MAX as u32 {
        return Err(IngestError::parse(pos, format!("maxval {max_value} outside 1..=65535")));
    }
    let pixels = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| IngestError::parse(pos, "image dimensions overflow"))?;
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(IngestError::parse(pos, "expected whitespace after header"));
    }
    pos += 1;

    let mut data = Vec::with_capacity(pixels.min(bytes.len()));
    if binary {
        let wide = max_value > 255;
        let need = pixels * if wide { 2 } else { 1 };
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| IngestError::parse(bytes.len(), "raster data truncated"))?;
        if wide {
            data.extend(raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
        } else {
            data.extend(raster.iter().map(|&b| b as u16));
        }
    } else {
        let text = &bytes[pos..];
        let mut i = 0;
        while data.len() < pixels {
            while text.get(i).is_some_and(|b| b.is_ascii_whitespace()) {
                i += 1;
            }
            let start = i;
            while text.get(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
            let value: u32 = std::str::from_utf8(&text[start..i])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| IngestError::parse(pos + start, "expected a pixel value"))?;
            if value > max_value {
                return Err(IngestError::parse(pos + start, format!("pixel {value} exceeds maxval {max_value}")));
            }
            data.push(value as u16);
        }
    }
    if data.iter().any(|&v| v as u32 > max_value) {
        return Err(IngestError::parse(pos, "pixel exceeds maxval"));
    }
    Ok(Samples { width, height, max_value, data })
}

/// Decodes a mask; any pixel value `> 0` is `true`.
pub fn decode_mask(bytes: &[u8]) -> Result<MaskImage, IngestError> {
    let s = decode_samples(bytes)?;
    MaskImage::new(s.width, s.height, s.data.iter().map(|&v| v > 0).collect())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskImage, IngestError> {
    decode_mask(&read_bytes(path.as_ref())?)
}

/// Decodes an 8-bit grayscale image (`maxval ≤ 255`).
pub fn decode_grayscale(bytes: &[u8]) -> Result<GrayImage, IngestError> {
    let s = decode_samples(bytes)?;
    if s.max_value > 255 {
        return Err(IngestError::UnsupportedColorType("16-bit grayscale".into()));
    }
    GrayImage::new(s.width, s.height, s.data.iter().map(|&v| v as u8).collect())
}

pub fn read_grayscale(path: impl AsRef<Path>) -> Result<GrayImage, IngestError> {
    decode_grayscale(&read_bytes(path.as_ref())?)
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

pub fn encode_png(image: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, image.width, image.height);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().expect("in-memory PNG header");
    writer.write_image_data(&image.data).expect("in-memory PNG data");
    writer.finish().expect("in-memory PNG trailer");
    out
}

/// Writes 8-bit grayscale as binary PGM (`.pgm`) or PNG (`.png`).
pub fn write_grayscale(image: &GrayImage, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm") => encode_pgm(image),
        Some("png") => encode_png(image),
        _ => return Err(IngestError::UnsupportedExtension(path.to_owned())),
    };
    write_bytes(path, &bytes)
}

/// Writes a mask as 0/255 grayscale.
pub fn write_mask(mask: &MaskImage, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let gray = GrayImage::new(mask.width, mask.height, mask.data.iter().map(|&b| if b { 255 } else { 0 }).collect())?;
    write_grayscale(&gray, path)
}

/// `mask_{frame_id:06}.{ext}`.
pub fn mask_file_name(frame_id: i64, ext: &str) -> String {
    format!("mask_{frame_id:06}.{ext}")
}

/// The PNG or PGM mask for `frame_id` inside `dir`, PNG preferred.
pub fn locate_mask(dir: &Path, frame_id: i64) -> Option<PathBuf> {
    ["png", "pgm"].iter().map(|ext| dir.join(mask_file_name(frame_id, ext))).find(|p| p.is_file())
}
