//! Separable two-level 2D discrete wavelet transform with the Symlet-6 filter
//! bank.
//!
//! One level of the 1D transform extends the signal by half-point symmetric
//! reflection, fully convolves it with each analysis filter and keeps every
//! other sample, giving `(n + L - 1) / 2` coefficients per output for a
//! length-`n` input and an `L`-tap filter. Reconstruction uses the
//! orthonormal synthesis sum restricted to the retained coefficients and is
//! exact for every `n >= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Taps of the Symlet-6 filters.
pub const SYM6_LEN: usize = 12;

// Symlet-6 analysis lowpass (decomposition) filter.
const SYM6_DEC_LO: [f64; SYM6_LEN] = [
    0.015404109327027373,
    0.0034907120842174702,
    -0.11799011114819057,
    -0.048311742585632998,
    0.49105594192674662,
    0.787641141030194,
    0.3379294217276218,
    -0.072637522786462516,
    -0.021060292512300564,
    0.044724901770665779,
    0.0017677118642428036,
    -0.007800708325034148,
];

/// Orthogonal two-channel analysis filter pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl FilterBank {
    /// Builds the quadrature mirror pair `g[k] = (-1)^k h[L-1-k]`.
    pub fn from_lowpass(lowpass: Vec<f64>) -> Self {
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Self { lowpass, highpass }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Coefficient count per subband for an input of length `n`.
    pub fn output_len(&self, n: usize) -> usize {
        (n + self.len() - 1) / 2
    }
}

pub fn sym6_bank() -> FilterBank {
    FilterBank::from_lowpass(SYM6_DEC_LO.to_vec())
}

/// Half-point symmetric extension: `... x1 x0 | x0 x1 ... xn-1 | xn-1 ...`.
/// Repeats the reflection for indexes further than `n` outside the signal.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

/// Single-level 1D analysis. Returns `(approx, detail)`.
pub fn dwt1(signal: &[f64], bank: &FilterBank) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::InputTooShort { min: 2, got: n });
    }
    let out_len = bank.output_len(n);
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let mut a = 0.0;
        let mut d = 0.0;
        for (j, (&h, &g)) in bank.lowpass.iter().zip(&bank.highpass).enumerate() {
            let x = signal[reflect(2 * k as isize + 1 - j as isize, n)];
            a += h * x;
            d += g * x;
        }
        approx.push(a);
        detail.push(d);
    }
    Ok((approx, detail))
}

/// Single-level 1D synthesis back to a length-`n` signal.
pub fn idwt1(approx: &[f64], detail: &[f64], n: usize, bank: &FilterBank) -> Result<Vec<f64>> {
    let expected = bank.output_len(n);
    for got in [approx.len(), detail.len()] {
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
    }
    let len = bank.len() as isize;
    let mut out = vec![0.0; n];
    for (m, o) in out.iter_mut().enumerate() {
        // Contributing k satisfy 0 <= 2k + 1 - m < L, i.e. k >= m / 2.
        let m = m as isize;
        let mut acc = 0.0;
        for k in (m / 2)..expected as isize {
            let tap = 2 * k + 1 - m;
            if tap >= len {
                break;
            }
            let t = tap as usize;
            acc += approx[k as usize] * bank.lowpass[t] + detail[k as usize] * bank.highpass[t];
        }
        *o = acc;
    }
    Ok(out)
}

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Detail subbands of one level. `horizontal` is lowpass along rows and
/// highpass along columns, `vertical` the reverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Details {
    pub horizontal: Matrix,
    pub vertical: Matrix,
    pub diagonal: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub details: Details,
    /// Input size `(rows, cols)` of this level.
    pub input_dims: (usize, usize),
}

/// Result of the two-level transform: the level-2 approximation plus both
/// detail triplets (`levels[0]` is level 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletPyramid {
    pub approx: Matrix,
    pub levels: Vec<Level>,
}

impl WaveletPyramid {
    /// Deepest level (the one whose statistics feed the band features).
    pub fn coarsest(&self) -> &Level {
        self.levels.last().expect("pyramid has at least one level")
    }
}

/// One separable level: every row is transformed, then every column of the
/// two row outputs.
pub fn dwt2(x: &Matrix, bank: &FilterBank) -> Result<(Matrix, Details)> {
    if x.rows < 2 || x.cols < 2 {
        return Err(Error::InputTooShort {
            min: 2,
            got: x.rows.min(x.cols),
        });
    }
    let oc = bank.output_len(x.cols);
    let or = bank.output_len(x.rows);
    let mut lo = Matrix::zeros(x.rows, oc);
    let mut hi = Matrix::zeros(x.rows, oc);
    for r in 0..x.rows {
        let (a, d) = dwt1(&x.data[r * x.cols..(r + 1) * x.cols], bank)?;
        lo.data[r * oc..(r + 1) * oc].copy_from_slice(&a);
        hi.data[r * oc..(r + 1) * oc].copy_from_slice(&d);
    }
    let mut ll = Matrix::zeros(or, oc);
    let mut lh = Matrix::zeros(or, oc);
    let mut hl = Matrix::zeros(or, oc);
    let mut hh = Matrix::zeros(or, oc);
    for c in 0..oc {
        let (a, d) = dwt1(&lo.column(c), bank)?;
        for r in 0..or {
            ll.set(r, c, a[r]);
            lh.set(r, c, d[r]);
        }
        let (a, d) = dwt1(&hi.column(c), bank)?;
        for r in 0..or {
            hl.set(r, c, a[r]);
            hh.set(r, c, d[r]);
        }
    }
    Ok((
        ll,
        Details {
            horizontal: lh,
            vertical: hl,
            diagonal: hh,
        },
    ))
}

/// Inverse of [`dwt2`] to an `(rows, cols)` output.
pub fn idwt2(
    approx: &Matrix,
    details: &Details,
    dims: (usize, usize),
    bank: &FilterBank,
) -> Result<Matrix> {
    let (rows, cols) = dims;
    let or = bank.output_len(rows);
    let oc = bank.output_len(cols);
    for m in [approx, &details.horizontal, &details.vertical, &details.diagonal] {
        if m.rows != or || m.cols != oc {
            return Err(Error::DimensionMismatch {
                expected: or * oc,
                got: m.rows * m.cols,
            });
        }
    }
    let mut lo = Matrix::zeros(rows, oc);
    let mut hi = Matrix::zeros(rows, oc);
    for c in 0..oc {
        let col = idwt1(&approx.column(c), &details.horizontal.column(c), rows, bank)?;
        for (r, v) in col.into_iter().enumerate() {
            lo.set(r, c, v);
        }
        let col = idwt1(&details.vertical.column(c), &details.diagonal.column(c), rows, bank)?;
        for (r, v) in col.into_iter().enumerate() {
            hi.set(r, c, v);
        }
    }
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let row = idwt1(
            &lo.data[r * oc..(r + 1) * oc],
            &hi.data[r * oc..(r + 1) * oc],
            cols,
            bank,
        )?;
        out.data[r * cols..(r + 1) * cols].copy_from_slice(&row);
    }
    Ok(out)
}

/// Two-level decomposition with the Symlet-6 bank.
pub fn dwt2_two_level(band: &Matrix) -> Result<WaveletPyramid> {
    dwt2_levels(band, 2, &sym6_bank())
}

pub fn dwt2_levels(x: &Matrix, levels: usize, bank: &FilterBank) -> Result<WaveletPyramid> {
    let mut approx = x.clone();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let input_dims = (approx.rows, approx.cols);
        let (ll, details) = dwt2(&approx, bank)?;
        out.push(Level {
            details,
            input_dims,
        });
        approx = ll;
    }
    Ok(WaveletPyramid {
        approx,
        levels: out,
    })
}

pub fn idwt2_two_level(p: &WaveletPyramid) -> Result<Matrix> {
    idwt2_levels(p, &sym6_bank())
}

pub fn idwt2_levels(p: &WaveletPyramid, bank: &FilterBank) -> Result<Matrix> {
    let mut approx = p.approx.clone();
    for level in p.levels.iter().rev() {
        approx = idwt2(&approx, &level.details, level.input_dims, bank)?;
    }
    Ok(approx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sym6_admissibility() {
        let bank = sym6_bank();
        let sum: f64 = bank.lowpass.iter().sum();
        let energy: f64 = bank.lowpass.iter().map(|h| h * h).sum();
        let shift2: f64 = (0..SYM6_LEN - 2)
            .map(|k| bank.lowpass[k] * bank.lowpass[k + 2])
            .sum();
        let hsum: f64 = bank.highpass.iter().sum();
        assert!((sum - 2f64.sqrt()).abs() < 1e-10);
        assert!((energy - 1.0).abs() < 1e-10);
        assert!(shift2.abs() < 1e-10);
        assert!(hsum.abs() < 1e-10);
        for k in 0..SYM6_LEN {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(bank.highpass[k], sign * bank.lowpass[SYM6_LEN - 1 - k]);
        }
    }

    #[test]
    fn constant_signal_passes_lowpass_only() {
        let bank = sym6_bank();
        let (a, d) = dwt1(&[3.0; 8], &bank).unwrap();
        assert_eq!(a.len(), 9);
        assert_eq!(d.len(), 9);
        for v in a {
            assert!((v - 3.0 * 2f64.sqrt()).abs() < 1e-10);
        }
        for v in d {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn too_short_signal_is_rejected() {
        assert!(matches!(
            dwt1(&[1.0], &sym6_bank()),
            Err(Error::InputTooShort { .. })
        ));
    }

    #[test]
    fn one_dimensional_roundtrip() {
        let bank = sym6_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..1000 {
            let n = 2 + i % 63;
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let (a, d) = dwt1(&x, &bank).unwrap();
            let y = idwt1(&a, &d, n, &bank).unwrap();
            let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn zero_band_gives_zero_subbands() {
        let p = dwt2_two_level(&Matrix::zeros(35, 512)).unwrap();
        assert!(p.approx.data.iter().all(|&v| v == 0.0));
        for level in &p.levels {
            let d = &level.details;
            for m in [&d.horizontal, &d.vertical, &d.diagonal] {
                assert!(m.data.iter().all(|&v| v == 0.0));
            }
        }
        let back = idwt2_two_level(&p).unwrap();
        assert!(back.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_band_gain_is_four() {
        let m = Matrix::from_vec(40, 64, vec![0.75; 40 * 64]).unwrap();
        let p = dwt2_two_level(&m).unwrap();
        for &v in &p.approx.data {
            assert!((v - 3.0).abs() < 1e-8);
        }
        for level in &p.levels {
            let d = &level.details;
            for m in [&d.horizontal, &d.vertical, &d.diagonal] {
                assert!(m.data.iter().all(|v| v.abs() < 1e-8));
            }
        }
    }

    #[test]
    fn subband_dimensions() {
        let p = dwt2_two_level(&Matrix::zeros(35, 512)).unwrap();
        assert_eq!(p.levels[0].details.diagonal.rows, 23);
        assert_eq!(p.levels[0].details.diagonal.cols, 261);
        assert_eq!((p.approx.rows, p.approx.cols), (17, 136));
    }

    #[test]
    fn random_matrix_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data = (0..40 * 64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = Matrix::from_vec(40, 64, data).unwrap();
        let back = idwt2_two_level(&dwt2_two_level(&m).unwrap()).unwrap();
        assert!(back.max_abs_diff(&m) < 1e-9);
    }

    #[test]
    fn single_level_matches_composed_1d_transforms() {
        let bank = sym6_bank();
        let m = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (ll, details) = dwt2(&m, &bank).unwrap();
        // Rows first, then columns, by hand.
        let (a0, d0) = dwt1(&[1.0, 0.0], &bank).unwrap();
        let (a1, d1) = dwt1(&[0.0, 1.0], &bank).unwrap();
        for c in 0..a0.len() {
            let (ca, cd) = dwt1(&[a0[c], a1[c]], &bank).unwrap();
            let (ha, hd) = dwt1(&[d0[c], d1[c]], &bank).unwrap();
            for r in 0..ca.len() {
                assert_eq!(ll.get(r, c), ca[r]);
                assert_eq!(details.horizontal.get(r, c), cd[r]);
                assert_eq!(details.vertical.get(r, c), ha[r]);
                assert_eq!(details.diagonal.get(r, c), hd[r]);
            }
        }
        let back = idwt2(&ll, &details, (2, 2), &bank).unwrap();
        let err = back.max_abs_diff(&m);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn inconsistent_pyramid_is_rejected() {
        let mut p = dwt2_two_level(&Matrix::zeros(8, 8)).unwrap();
        p.levels[1].details.diagonal = Matrix::zeros(3, 3);
        assert!(matches!(
            idwt2_two_level(&p),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
