//! Band and global signature descriptors, plus z-score normalization fitted
//! on a training set.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, COLS, ROWS};
use crate::segmenter::{segment, BandSplit};
use crate::wavelet::{dwt2_two_level, Matrix};

/// Length of a band feature vector.
pub const SECONDARY_LEN: usize = 6;
/// Number of global attributes.
pub const GLOBAL_LEN: usize = 7;

/// Wavelet statistics and ink count of one band. The wavelet statistics
/// come from the level-2 subbands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondaryFeatures {
    pub mean_approx: f64,
    pub std_approx: f64,
    pub std_h: f64,
    pub std_v: f64,
    pub std_d: f64,
    pub black_count: u64,
}

impl SecondaryFeatures {
    pub fn to_vec(&self) -> [f64; SECONDARY_LEN] {
        [
            self.mean_approx,
            self.std_approx,
            self.std_h,
            self.std_v,
            self.std_d,
            self.black_count as f64,
        ]
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Band rows as a 0/1 real matrix.
pub fn band_matrix(r: &BinaryRaster, band: Range<usize>) -> Matrix {
    let rows = band.len();
    let data = band
        .flat_map(|row| r.row(row).iter().map(|&b| if b { 1.0 } else { 0.0 }))
        .collect();
    Matrix {
        rows,
        cols: COLS,
        data,
    }
}

pub fn band_secondary_features(r: &BinaryRaster, band: Range<usize>) -> Result<SecondaryFeatures> {
    let black_count = band
        .clone()
        .map(|row| r.row(row).iter().filter(|&&b| b).count() as u64)
        .sum();
    let pyramid = dwt2_two_level(&band_matrix(r, band))?;
    let (mean_approx, std_approx) = mean_std(&pyramid.approx.data);
    let details = &pyramid.coarsest().details;
    Ok(SecondaryFeatures {
        mean_approx,
        std_approx,
        std_h: mean_std(&details.horizontal.data).1,
        std_v: mean_std(&details.vertical.data).1,
        std_d: mean_std(&details.diagonal.data).1,
        black_count,
    })
}

/// Principal-axis orientation of the ink.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    /// Angle in degrees, in (-90, 90]. Columns grow rightwards and rows grow
    /// downwards, so ink running from top-left to bottom-right is +45.
    pub degrees: f64,
    /// Second moments are isotropic (`mu20 == mu02`, `mu11 == 0`) and the
    /// angle is reported as 0 by convention.
    pub isotropic: bool,
}

/// `0.5 * atan2(2 mu11, mu20 - mu02)` over black-pixel coordinates, with
/// `x` the column and `y` the row. Moments are accumulated exactly in
/// integers.
pub fn orientation(r: &BinaryRaster) -> Result<Orientation> {
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128, 0i128);
    for row in 0..ROWS {
        for (col, &b) in r.row(row).iter().enumerate() {
            if b {
                let (x, y) = (col as i128, row as i128);
                n += 1;
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
            }
        }
    }
    if n < 2 {
        return Err(Error::DegenerateCloud);
    }
    // Central moments scaled by n^2; the scale cancels inside atan2.
    let mu20 = n * sxx - sx * sx;
    let mu02 = n * syy - sy * sy;
    let mu11 = n * sxy - sx * sy;
    let isotropic = mu11 == 0 && mu20 == mu02;
    let theta = 0.5 * (2.0 * mu11 as f64).atan2((mu20 - mu02) as f64);
    let mut degrees = theta.to_degrees();
    if degrees <= -90.0 {
        degrees += 180.0;
    }
    Ok(Orientation { degrees, isotropic })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalAttributes {
    /// Per band, the largest per-column black count inside the band.
    pub max_vproj: [u32; 3],
    pub heights: [u32; 3],
    pub orientation: f64,
}

impl GlobalAttributes {
    /// `[h1, h2, h3, p1, p2, p3, theta]`, the order the principal model uses.
    pub fn to_vec(&self) -> [f64; GLOBAL_LEN] {
        let [h1, h2, h3] = self.heights;
        let [p1, p2, p3] = self.max_vproj;
        [
            h1 as f64,
            h2 as f64,
            h3 as f64,
            p1 as f64,
            p2 as f64,
            p3 as f64,
            self.orientation,
        ]
    }
}

pub fn global_attributes(r: &BinaryRaster, split: &BandSplit) -> Result<GlobalAttributes> {
    let orientation = orientation(r)?.degrees;
    let mut max_vproj = [0u32; 3];
    for (slot, band) in max_vproj.iter_mut().zip(split.bands()) {
        let mut col_counts = vec![0u32; COLS];
        for row in band {
            for (count, &b) in col_counts.iter_mut().zip(r.row(row)) {
                *count += b as u32;
            }
        }
        *slot = col_counts.into_iter().max().unwrap_or(0);
    }
    Ok(GlobalAttributes {
        max_vproj,
        heights: split.heights().map(|h| h as u32),
        orientation,
    })
}

/// Everything the planar model consumes for one signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureFeatures {
    pub split: BandSplit,
    pub bands: [SecondaryFeatures; 3],
    pub global: GlobalAttributes,
}

pub fn extract(r: &BinaryRaster, min_height: usize) -> Result<SignatureFeatures> {
    let split = segment(r, min_height);
    let [b0, b1, b2] = split.bands();
    let bands = [
        band_secondary_features(r, b0)?,
        band_secondary_features(r, b1)?,
        band_secondary_features(r, b2)?,
    ];
    let global = global_attributes(r, &split)?;
    Ok(SignatureFeatures {
        split,
        bands,
        global,
    })
}

/// Per-feature z-score parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Feature had zero training variance; its std was forced to 1.
    pub constant: Vec<bool>,
}

impl FeatureScaler {
    pub fn fit<R: AsRef<[f64]>>(records: &[R]) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::TooFewSamples {
                min: 2,
                got: records.len(),
            });
        }
        let dim = records[0].as_ref().len();
        let mut scaler = FeatureScaler {
            mean: Vec::with_capacity(dim),
            std: Vec::with_capacity(dim),
            constant: Vec::with_capacity(dim),
        };
        for k in 0..dim {
            let column = records
                .iter()
                .map(|r| {
                    let r = r.as_ref();
                    if r.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: r.len(),
                        });
                    }
                    Ok(r[k])
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&column);
            let constant = !(std > 0.0);
            scaler.mean.push(mean);
            scaler.std.push(if constant { 1.0 } else { std });
            scaler.constant.push(constant);
        }
        Ok(scaler)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, record: &[f64]) -> Result<Vec<f64>> {
        if record.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: record.len(),
            });
        }
        Ok(record
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// Scalers for the three band vectors and the global attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub bands: [FeatureScaler; 3],
    pub global: FeatureScaler,
}

impl NormStats {
    pub fn fit(train: &[SignatureFeatures]) -> Result<Self> {
        let band = |b: usize| {
            let rows: Vec<[f64; SECONDARY_LEN]> = train.iter().map(|f| f.bands[b].to_vec()).collect();
            FeatureScaler::fit(&rows)
        };
        let global: Vec<[f64; GLOBAL_LEN]> = train.iter().map(|f| f.global.to_vec()).collect();
        Ok(Self {
            bands: [band(0)?, band(1)?, band(2)?],
            global: FeatureScaler::fit(&global)?,
        })
    }

    pub fn band(&self, b: usize, f: &SecondaryFeatures) -> Vec<f64> {
        self.bands[b]
            .apply(&f.to_vec())
            .expect("band scaler has the band vector length")
    }

    pub fn global(&self, g: &GlobalAttributes) -> Vec<f64> {
        self.global
            .apply(&g.to_vec())
            .expect("global scaler has the attribute count")
    }
}

/// Mean/std of every subband of a band's two-level pyramid, for debugging.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubbandStats {
    pub level: usize,
    pub subband: String,
    pub rows: usize,
    pub cols: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn subband_stats(r: &BinaryRaster, band: Range<usize>) -> Result<Vec<SubbandStats>> {
    let pyramid = dwt2_two_level(&band_matrix(r, band))?;
    let entry = |level: usize, name: &str, m: &Matrix| {
        let (mean, std) = mean_std(&m.data);
        SubbandStats {
            level,
            subband: name.to_string(),
            rows: m.rows,
            cols: m.cols,
            mean,
            std,
        }
    };
    let mut out = Vec::new();
    for (i, level) in pyramid.levels.iter().enumerate() {
        let d = &level.details;
        out.push(entry(i + 1, "horizontal", &d.horizontal));
        out.push(entry(i + 1, "vertical", &d.vertical));
        out.push(entry(i + 1, "diagonal", &d.diagonal));
    }
    out.push(entry(pyramid.levels.len(), "approx", &pyramid.approx));
    Ok(out)
}
