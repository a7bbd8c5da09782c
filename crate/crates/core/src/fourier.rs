//! Complex Fourier descriptors of closed curves.
//!
//! Analysis uses the `1/N` normalised DFT, so `z_0` is the mean of the
//! samples; synthesis is the plain sum `sum_n z_n exp(2 pi j n t)`. With
//! `N` prime and tiny (71 by default) direct summation is used.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{resample_closed, trace_boundary, Contour};
use crate::error::{FcsnError, Result};
use crate::mask::BinaryMask;

/// Paper default: harmonics `-10..=10`, i.e. 21 coefficients.
pub const DEFAULT_K: usize = 10;
/// Safety factor applied to observed coefficient ranges.
pub const DEFAULT_RANGE_MARGIN: f64 = 1.1;
/// Smallest allowed per-harmonic scale.
pub const RANGE_FLOOR: f64 = 1e-6;

/// Coefficients `z_n` for `n = -k..=k`, stored in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    k: usize,
    coeffs: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(k: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * k + 1 {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} coefficients for k = {k}, expected {}",
                coeffs.len(),
                2 * k + 1
            )));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FcsnError::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(CoefficientVector { k, coeffs })
    }

    pub fn zeros(k: usize) -> Self {
        CoefficientVector {
            k,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * k + 1],
        }
    }

    /// Builds a vector from `(n, z_n)` pairs; unspecified harmonics are zero.
    pub fn from_harmonics(k: usize, pairs: &[(i64, Complex64)]) -> Result<Self> {
        let mut v = Self::zeros(k);
        for &(n, z) in pairs {
            if n.unsigned_abs() as usize > k {
                return Err(FcsnError::InvalidParameter(format!(
                    "harmonic {n} outside -{k}..={k}"
                )));
            }
            v.coeffs[(n + k as i64) as usize] = z;
        }
        Self::new(k, v.coeffs)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `z_n`; panics when `|n| > k`.
    pub fn get(&self, n: i64) -> Complex64 {
        self.coeffs[self.index(n)]
    }

    pub fn set(&mut self, n: i64, z: Complex64) {
        let i = self.index(n);
        self.coeffs[i] = z;
    }

    fn index(&self, n: i64) -> usize {
        assert!(
            n.unsigned_abs() as usize <= self.k,
            "harmonic {n} outside -{k}..={k}",
            k = self.k
        );
        (n + self.k as i64) as usize
    }

    /// `(n, z_n)` in ascending `n`.
    pub fn harmonics(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k = self.k as i64;
        self.coeffs.iter().enumerate().map(move |(i, &z)| (i as i64 - k, z))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoefficientFile::from(self)).expect("coefficients serialize")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: CoefficientFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.try_into().map_err(|e: FcsnError| e.to_string())
    }

    /// CSV with columns `n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "re", "im"]).expect("csv write");
        for (n, z) in self.harmonics() {
            w.serialize((n, z.re, z.im)).expect("csv write");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut rows: Vec<(i64, f64, f64)> = Vec::new();
        for rec in r.deserialize() {
            rows.push(rec.map_err(|e| e.to_string())?);
        }
        rows.sort_by_key(|r| r.0);
        let k = rows.last().map(|r| r.0).unwrap_or(0);
        if k < 0 || rows.len() != 2 * k as usize + 1 || rows.iter().enumerate().any(|(i, r)| r.0 != i as i64 - k) {
            return Err("rows must cover n = -k..=k exactly once".into());
        }
        let coeffs = rows.iter().map(|r| Complex64::new(r.1, r.2)).collect();
        Self::new(k as usize, coeffs).map_err(|e| e.to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FcsnError::io(path, e))?;
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let parsed = if is_csv {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        };
        parsed.map_err(|m| FcsnError::format(path, m))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let text = if is_csv {
            self.to_csv()
        } else {
            let mut s = self.to_json();
            s.push('\n');
            s
        };
        std::fs::write(path, text).map_err(|e| FcsnError::io(path, e))
    }
}

/// On-disk layout: `{"k": 10, "coeffs": [[re, im], ...]}` ordered `n = -k..=k`.
#[derive(Serialize, Deserialize)]
struct CoefficientFile {
    k: usize,
    coeffs: Vec<[f64; 2]>,
}

impl From<&CoefficientVector> for CoefficientFile {
    fn from(v: &CoefficientVector) -> Self {
        CoefficientFile {
            k: v.k,
            coeffs: v.coeffs.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<CoefficientFile> for CoefficientVector {
    type Error = FcsnError;

    fn try_from(f: CoefficientFile) -> Result<Self> {
        CoefficientVector::new(f.k, f.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
    }
}

/// Per-harmonic scale `s_n` applied to the soft-argmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRanges {
    k: usize,
    scales: Vec<f64>,
}

impl CoefficientRanges {
    pub fn new(k: usize, scales: Vec<f64>) -> Result<Self> {
        if scales.len() != 2 * k + 1 {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} scales for k = {k}",
                scales.len()
            )));
        }
        if scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(FcsnError::InvalidParameter("scales must be positive".into()));
        }
        Ok(CoefficientRanges { k, scales })
    }

    pub fn uniform(k: usize, scale: f64) -> Result<Self> {
        Self::new(k, vec![scale; 2 * k + 1])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, n: i64) -> f64 {
        self.scales[(n + self.k as i64) as usize]
    }

    /// Scales in ascending `n`.
    pub fn as_slice(&self) -> &[f64] {
        &self.scales
    }
}

fn check_nyquist(n_points: usize, k: usize) -> Result<()> {
    if n_points < 2 * k + 1 {
        return Err(FcsnError::NyquistViolation { points: n_points, k });
    }
    Ok(())
}

/// `z_n = (1/N) sum_m samples[m] exp(-2 pi j n m / N)` for `n = -k..=k`.
pub fn dft_coefficients(samples: &[Complex64], k: usize) -> Result<CoefficientVector> {
    let n_points = samples.len();
    check_nyquist(n_points, k)?;
    let inv_n = 1.0 / n_points as f64;
    let coeffs = (-(k as i64)..=k as i64)
        .map(|n| {
            // Reduce n*m mod N so the twiddle angle stays small and exact.
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(m, &a)| {
                    let idx = (n * m as i64).rem_euclid(n_points as i64) as f64;
                    a * Complex64::from_polar(1.0, -2.0 * PI * idx * inv_n)
                })
                .sum();
            sum * inv_n
        })
        .collect();
    CoefficientVector::new(k, coeffs)
}

/// Coefficients of a contour treated as uniformly spaced samples of `alpha`.
pub fn forward(contour: &Contour, k: usize) -> Result<CoefficientVector> {
    dft_coefficients(contour.points(), k)
}

/// Mask to coefficients: boundary of the largest component (holes
/// filled), resampled to `n_points` by arc length, then analysed up to `k`.
pub fn encode_mask(mask: &BinaryMask, n_points: usize, k: usize) -> Result<CoefficientVector> {
    if n_points < 2 * k + 1 {
        return Err(FcsnError::NyquistViolation { points: n_points, k });
    }
    let contour = trace_boundary(mask)?;
    forward(&resample_closed(&contour, n_points)?, k)
}

/// `alpha(t) = sum_n z_n exp(2 pi j n t)` at each `t`.
pub fn evaluate(coeffs: &CoefficientVector, t_values: &[f64]) -> Vec<Complex64> {
    t_values
        .iter()
        .map(|&t| {
            coeffs
                .harmonics()
                .map(|(n, z)| z * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * t))
                .sum()
        })
        .collect()
}

/// The curve sampled at `t = m / n_samples`, `m = 0..n_samples`.
pub fn sample_curve(coeffs: &CoefficientVector, n_samples: usize) -> Vec<Complex64> {
    let ts: Vec<f64> = (0..n_samples).map(|m| m as f64 / n_samples as f64).collect();
    evaluate(coeffs, &ts)
}

/// Keeps `|n| <= k_new`.
pub fn truncate(coeffs: &CoefficientVector, k_new: usize) -> Result<CoefficientVector> {
    if k_new > coeffs.k() {
        return Err(FcsnError::InvalidParameter(format!(
            "cannot truncate k = {} up to {k_new}",
            coeffs.k()
        )));
    }
    let drop = coeffs.k() - k_new;
    CoefficientVector::new(k_new, coeffs.as_slice()[drop..drop + 2 * k_new + 1].to_vec())
}

/// `s_n = margin * max_i max(|Re z_n|, |Im z_n|)`, floored at [`RANGE_FLOOR`].
pub fn estimate_ranges(dataset: &[CoefficientVector], margin: f64) -> Result<CoefficientRanges> {
    let first = dataset.first().ok_or(FcsnError::EmptyDataset)?;
    if !(margin >= 1.0) {
        return Err(FcsnError::InvalidParameter(format!("margin {margin} < 1")));
    }
    let k = first.k();
    let mut scales = vec![0.0f64; 2 * k + 1];
    for item in dataset {
        if item.k() != k {
            return Err(FcsnError::ShapeMismatch(format!(
                "dataset mixes k = {k} and k = {}",
                item.k()
            )));
        }
        for (s, z) in scales.iter_mut().zip(item.as_slice()) {
            *s = s.max(z.re.abs()).max(z.im.abs());
        }
    }
    let scales = scales
        .into_iter()
        .map(|s| (margin * s).max(RANGE_FLOOR))
        .collect();
    CoefficientRanges::new(k, scales)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn samples(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..n).map(|m| f(m as f64 / n as f64)).collect()
    }

    #[test]
    fn offset_circle_has_two_coefficients() {
        let pts = samples(71, |t| c(0.3, 0.0) + Complex64::from_polar(0.5, 2.0 * PI * t));
        let z = dft_coefficients(&pts, 10).unwrap();
        for (n, zn) in z.harmonics() {
            let expect = match n {
                0 => c(0.3, 0.0),
                1 => c(0.5, 0.0),
                _ => c(0.0, 0.0),
            };
            assert!((zn - expect).norm() < 1e-12, "n = {n}: {zn}");
        }
    }

    #[test]
    fn ellipse_splits_into_plus_and_minus_one() {
        let (a, b) = (0.6, 0.4);
        let pts = samples(71, |t| c(a * (2.0 * PI * t).cos(), b * (2.0 * PI * t).sin()));
        let z = dft_coefficients(&pts, 10).unwrap();
        assert!((z.get(1) - c(0.5, 0.0)).norm() < 1e-12);
        assert!((z.get(-1) - c(0.1, 0.0)).norm() < 1e-12);
        assert!(z.get(0).norm() < 1e-12);
    }

    #[test]
    fn nyquist_is_enforced() {
        let pts = samples(71, |t| Complex64::from_polar(0.5, 2.0 * PI * t));
        assert!(dft_coefficients(&pts, 35).is_ok());
        assert!(matches!(
            dft_coefficients(&pts, 36),
            Err(FcsnError::NyquistViolation { points: 71, k: 36 })
        ));
        assert!(dft_coefficients(&pts[..21], 10).is_ok());
    }

    #[test]
    fn evaluate_examples() {
        let z0 = CoefficientVector::from_harmonics(3, &[(0, c(0.2, 0.1))]).unwrap();
        for p in evaluate(&z0, &[0.0, 0.3, 0.77]) {
            assert!((p - c(0.2, 0.1)).norm() < 1e-15);
        }
        let z1 = CoefficientVector::from_harmonics(3, &[(1, c(0.5, 0.0))]).unwrap();
        let p = evaluate(&z1, &[0.25])[0];
        assert!((p - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn truncate_keeps_the_low_band() {
        let z = CoefficientVector::new(2, (0..5).map(|i| c(i as f64, 0.0)).collect()).unwrap();
        assert_eq!(truncate(&z, 2).unwrap(), z);
        let t = truncate(&z, 1).unwrap();
        assert_eq!(t.as_slice(), &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert!(truncate(&z, 3).is_err());
    }

    #[test]
    fn ranges_examples() {
        let one = CoefficientVector::from_harmonics(1, &[(1, c(0.5, 0.0))]).unwrap();
        let r = estimate_ranges(&[one], 1.0).unwrap();
        assert_eq!(r.get(1), 0.5);
        assert_eq!(r.get(0), RANGE_FLOOR);
        let zero = CoefficientVector::zeros(2);
        let r = estimate_ranges(&[zero.clone(), zero], 1.1).unwrap();
        assert!(r.as_slice().iter().all(|&s| s == RANGE_FLOOR));
        assert!(matches!(estimate_ranges(&[], 1.1), Err(FcsnError::EmptyDataset)));
        assert!(estimate_ranges(&[CoefficientVector::zeros(1)], 0.5).is_err());
    }

    #[test]
    fn json_and_csv_layouts() {
        let z = CoefficientVector::from_harmonics(1, &[(-1, c(0.1, -0.2)), (1, c(0.5, 0.0))]).unwrap();
        assert_eq!(z.to_json(), r#"{"k":1,"coeffs":[[0.1,-0.2],[0.0,0.0],[0.5,0.0]]}"#);
        assert_eq!(CoefficientVector::from_json(&z.to_json()).unwrap(), z);
        assert_eq!(z.to_csv(), "n,re,im\n-1,0.1,-0.2\n0,0.0,0.0\n1,0.5,0.0\n");
        assert_eq!(CoefficientVector::from_csv(&z.to_csv()).unwrap(), z);
        assert!(CoefficientVector::from_json(r#"{"k":1,"coeffs":[[0,0]]}"#).is_err());
    }

    #[test]
    fn coefficient_vector_rejects_bad_lengths_and_nan() {
        assert!(CoefficientVector::new(1, vec![c(0.0, 0.0); 2]).is_err());
        assert!(CoefficientVector::new(0, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
