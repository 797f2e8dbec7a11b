//! Signature rasters: loading, binarization and normalization to the fixed
//! 256×512 working geometry.
//!
//! Black is stored as `true` internally. Exported PGM files encode ink as 0
//! and background as 255.

mod pnm;

pub use pnm::{load_image, write_pgm, write_ppm, RgbImage};

use crate::error::{Error, Result};

/// Rows of a normalized raster.
pub const ROWS: usize = 256;
/// Columns of a normalized raster.
pub const COLS: usize = 512;

/// Threshold used when every pixel has the same intensity.
pub const UNIFORM_THRESHOLD: u8 = 128;

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::CorruptImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.samples[row * self.width + col]
    }
}

/// Variable-size black/white grid produced by [`binarize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BwImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BwImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// All-white grid.
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_black(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, black: bool) {
        self.bits[row * self.width + col] = black;
    }

    pub fn black_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box of black pixels as `(top, left, bottom, right)`,
    /// inclusive.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.is_black(row, col) {
                    continue;
                }
                bbox = Some(match bbox {
                    None => (row, col, row, col),
                    Some((t, l, b, r)) => (t.min(row), l.min(col), b.max(row), r.max(col)),
                });
            }
        }
        bbox
    }
}

/// A normalized signature: exactly [`ROWS`] × [`COLS`] black/white pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryRaster {
    bits: Vec<bool>,
}

impl BinaryRaster {
    /// All-white raster.
    pub fn blank() -> Self {
        Self {
            bits: vec![false; ROWS * COLS],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.len() != ROWS * COLS {
            return Err(Error::DimensionMismatch {
                expected: ROWS * COLS,
                got: bits.len(),
            });
        }
        Ok(Self { bits })
    }

    /// Builds a raster by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(ROWS * COLS);
        for row in 0..ROWS {
            for col in 0..COLS {
                bits.push(f(row, col));
            }
        }
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_black(&self, row: usize, col: usize) -> bool {
        self.bits[row * COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, black: bool) {
        self.bits[row * COLS + col] = black;
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.bits[row * COLS..(row + 1) * COLS]
    }

    pub fn black_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_bw(&self) -> BwImage {
        BwImage {
            width: COLS,
            height: ROWS,
            bits: self.bits.clone(),
        }
    }

    /// Grayscale rendering: ink 0, background 255.
    pub fn to_gray(&self) -> GrayRaster {
        GrayRaster {
            width: COLS,
            height: ROWS,
            samples: self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        }
    }
}

/// Otsu threshold over the 256-bin histogram.
///
/// Returns the `t` in `1..=255` maximizing the between-class variance of the
/// split `{v < t}` / `{v >= t}`; the smallest such `t` wins ties. Images whose
/// best split has zero variance (a single intensity) get
/// [`UNIFORM_THRESHOLD`].
pub fn otsu_threshold(g: &GrayRaster) -> u8 {
    let mut hist = [0u64; 256];
    for &v in g.samples() {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &n)| v as u64 * n).sum();

    let mut best_t = UNIFORM_THRESHOLD;
    let mut best_var = 0.0f64;
    let mut below_n = 0u64;
    let mut below_sum = 0u64;
    for t in 1..=255usize {
        below_n += hist[t - 1];
        below_sum += (t as u64 - 1) * hist[t - 1];
        let var = between_class_variance(below_n, below_sum, total, total_sum);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    best_t
}

// w0 * w1 * (mu0 - mu1)^2, from exact integer class statistics.
fn between_class_variance(n0: u64, s0: u64, n: u64, s: u64) -> f64 {
    let n1 = n - n0;
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = (s - s0) as f64 / n1 as f64;
    let w0 = n0 as f64 / n as f64;
    let w1 = n1 as f64 / n as f64;
    w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
}

/// Pixel is black iff its intensity is below the threshold. Without an
/// explicit threshold Otsu's method picks one.
pub fn binarize(g: &GrayRaster, threshold: Option<u8>) -> BwImage {
    let t = threshold.unwrap_or_else(|| otsu_threshold(g));
    BwImage {
        width: g.width(),
        height: g.height(),
        bits: g.samples().iter().map(|&v| v < t).collect(),
    }
}

/// Crops to the ink bounding box and stretches it to 256×512 with
/// nearest-neighbour sampling. Aspect ratio is not preserved.
pub fn normalize(bw: &BwImage) -> Result<BinaryRaster> {
    let (top, left, bottom, right) = bw.bounding_box().ok_or(Error::BlankImage)?;
    let h = bottom - top + 1;
    let w = right - left + 1;
    Ok(BinaryRaster::from_fn(|row, col| {
        let src_row = top + row * h / ROWS;
        let src_col = left + col * w / COLS;
        bw.is_black(src_row, src_col)
    }))
}

/// Full preprocessing chain for one file: decode, binarize with Otsu and
/// normalize.
pub fn load_normalized(path: impl AsRef<std::path::Path>) -> Result<BinaryRaster> {
    let gray = load_image(path)?;
    normalize(&binarize(&gray, None))
}
