//! Image file codecs: PGM (P2/P5) and 8-bit grayscale PNG in, PGM P5 and
//! PPM P6 out.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::GrayRaster;
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decodes a PGM or grayscale PNG file. Color images are rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayRaster> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&data)
}

pub(crate) fn decode(data: &[u8]) -> Result<GrayRaster> {
    if data.starts_with(PNG_SIGNATURE) {
        return decode_png(data);
    }
    match data.get(..2) {
        Some(b"P2") => decode_pgm(data, false),
        Some(b"P5") => decode_pgm(data, true),
        Some(b"P3") | Some(b"P6") => Err(Error::UnsupportedFormat(
            "color PPM input is not accepted".into(),
        )),
        Some(b"P1") | Some(b"P4") => Err(Error::UnsupportedFormat(
            "PBM bitmaps are not accepted".into(),
        )),
        _ => Err(Error::UnsupportedFormat("not a PGM or PNG file".into())),
    }
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn corrupt(msg: &str) -> Error {
    Error::CorruptImage(msg.to_string())
}

/// Reads the next whitespace-delimited token, skipping `#` comments.
fn next_token(data: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= data.len() {
        return None;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some((start, *pos))
}

fn next_number(data: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    let (s, e) = next_token(data, pos).ok_or_else(|| corrupt(&format!("missing {what}")))?;
    std::str::from_utf8(&data[s..e])
        .ok()
        .and_then(|t| t.parse::<u32>().ok())
        .ok_or_else(|| corrupt(&format!("invalid {what}")))
}

fn read_header(data: &[u8]) -> Result<Header> {
    let mut pos = 2;
    let width = next_number(data, &mut pos, "width")? as usize;
    let height = next_number(data, &mut pos, "height")? as usize;
    let maxval = next_number(data, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(corrupt("zero image dimension"));
    }
    if maxval == 0 {
        return Err(corrupt("maxval is zero"));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "16-bit PGM (maxval {maxval})"
        )));
    }
    // Exactly one whitespace byte separates the header from binary data.
    if pos >= data.len() {
        return Err(corrupt("truncated header"));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

fn scale(v: u32, maxval: u32) -> u8 {
    if maxval == 255 {
        v as u8
    } else {
        ((v * 255 + maxval / 2) / maxval) as u8
    }
}

fn decode_pgm(data: &[u8], binary: bool) -> Result<GrayRaster> {
    let header = read_header(data)?;
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| corrupt("image too large"))?;
    let mut samples = Vec::with_capacity(n);
    if binary {
        let raw = data
            .get(header.data_start..header.data_start + n)
            .ok_or_else(|| corrupt("truncated pixel data"))?;
        for &v in raw {
            if v as u32 > header.maxval {
                return Err(corrupt("sample exceeds maxval"));
            }
            samples.push(scale(v as u32, header.maxval));
        }
    } else {
        let mut pos = header.data_start - 1;
        for _ in 0..n {
            let v = next_number(data, &mut pos, "sample")?;
            if v > header.maxval {
                return Err(corrupt("sample exceeds maxval"));
            }
            samples.push(scale(v, header.maxval));
        }
    }
    GrayRaster::new(header.width, header.height, samples)
}

fn decode_png(data: &[u8]) -> Result<GrayRaster> {
    let mut decoder = png::Decoder::new(Cursor::new(data));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| corrupt(&format!("png: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "PNG color type {:?}; only grayscale is accepted",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG bit depth {:?}; only 8-bit is accepted",
            info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| corrupt("png: image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| corrupt(&format!("png: {e}")))?;
    let mut samples = Vec::with_capacity(width * height);
    for row in 0..height {
        let start = row * frame.line_size;
        samples.extend_from_slice(&buf[start..start + width]);
    }
    GrayRaster::new(width, height, samples)
}

pub(crate) fn encode_pgm(g: &GrayRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.width(), g.height()).into_bytes();
    out.extend_from_slice(g.samples());
    out
}

/// Writes a binary (P5) PGM.
pub fn write_pgm(g: &GrayRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g)).map_err(|e| Error::io(path, e))
}

/// 8-bit RGB image, row-major, used for segmentation overlays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for px in &self.pixels {
            out.extend_from_slice(px);
        }
        out
    }
}

/// Writes a binary (P6) PPM.
pub fn write_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, img.encode_ppm()).map_err(|e| Error::io(path, e))
}
