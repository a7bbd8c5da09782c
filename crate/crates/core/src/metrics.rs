//! Overlap and boundary-sensitive mask metrics.
//!
//! The Hausdorff distance is exact: squared Euclidean distance transforms
//! (lower envelope of parabolas, separable over rows and columns) are
//! computed in integer-valued `f64`, so the result is bit-identical to a
//! brute-force search over all foreground pairs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{FcsnError, Result};
use crate::mask::BinaryMask;

fn check_shapes(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(FcsnError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `2|A n B| / (|A| + |B|)`, defined as 1 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    check_shapes(a, b)?;
    let (mut inter, mut total) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (x & y) as usize;
        total += (x + y) as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

// Larger than any squared distance on a realistic grid; kept finite so the
// envelope arithmetic never produces NaN.
const FAR: f64 = 1e20;

/// 1D squared distance transform of a sampled function (Felzenszwalb and
/// Huttenlocher lower envelope).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let p = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            // z[0] is -inf, so this never underflows k.
            if s > z[k] {
                break;
            }
            k -= 1;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel center to the nearest
/// foreground pixel center. Row-major.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = mask.shape();
    let n = h.max(w);
    let mut grid: Vec<f64> = mask
        .as_slice()
        .iter()
        .map(|&v| if v != 0 { 0.0 } else { FAR })
        .collect();
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for c in 0..w {
        for r in 0..h {
            f[r] = grid[r * w + c];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            grid[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        f[..w].copy_from_slice(&grid[r * w..(r + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

fn directed_sq(from: &BinaryMask, to_dt: &[f64]) -> f64 {
    from.as_slice()
        .iter()
        .zip(to_dt)
        .filter(|(&m, _)| m != 0)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between foregrounds, in pixels.
///
/// Either mask being empty is reported as [`FcsnError::EmptyMask`].
pub fn hausdorff(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    check_shapes(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(FcsnError::EmptyMask);
    }
    let (dt_a, dt_b) = (squared_distance_transform(a), squared_distance_transform(b));
    Ok(directed_sq(a, &dt_b).max(directed_sq(b, &dt_a)).sqrt())
}

/// One evaluated prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub image_id: String,
    pub dice: f64,
    /// `None` when either mask is empty.
    pub hausdorff: Option<f64>,
    pub empty_flag: bool,
}

pub fn evaluate_pair(image_id: impl Into<String>, truth: &BinaryMask, pred: &BinaryMask) -> Result<EvalRecord> {
    let d = dice(truth, pred)?;
    let (hausdorff, empty_flag) = match hausdorff(truth, pred) {
        Ok(h) => (Some(h), false),
        Err(FcsnError::EmptyMask) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(EvalRecord {
        image_id: image_id.into(),
        dice: d,
        hausdorff,
        empty_flag,
    })
}

/// Aggregate over records. Hausdorff statistics skip empty predictions,
/// which are counted separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSummary {
    pub count: usize,
    pub mean_dice: f64,
    pub std_dice: f64,
    pub mean_hausdorff: f64,
    pub std_hausdorff: f64,
    pub empty_count: usize,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn summarize(records: &[EvalRecord]) -> EvalSummary {
    let (mean_dice, std_dice) = mean_std(records.iter().map(|r| r.dice));
    let (mean_hausdorff, std_hausdorff) = mean_std(records.iter().filter_map(|r| r.hausdorff));
    EvalSummary {
        count: records.len(),
        mean_dice,
        std_dice,
        mean_hausdorff,
        std_hausdorff,
        empty_count: records.iter().filter(|r| r.empty_flag).count(),
    }
}

/// CSV with columns `image_id,dice,hausdorff,empty_flag`; the Hausdorff
/// cell is blank for empty predictions.
pub fn write_records_csv(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("csv write");
    }
    let bytes = w.into_inner().expect("csv flush");
    let mut file = std::fs::File::create(path).map_err(|e| FcsnError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| FcsnError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize, r0: usize, c0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(n, n, |r, c| r >= r0 && r < r0 + side && c >= c0 && c < c0 + side)
    }

    #[test]
    fn dice_examples() {
        let a = square(20, 2, 2, 10);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &square(20, 12, 12, 5)).unwrap(), 0.0);
        let e = BinaryMask::empty(20, 20);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        // |A| = |B| = 100, overlap 80.
        let a = BinaryMask::from_fn(10, 20, |r, c| c < 10 && r < 10);
        let b = BinaryMask::from_fn(10, 20, |r, c| (2..12).contains(&c) && r < 10);
        assert_eq!(dice(&a, &b).unwrap(), 0.8);
        assert!(matches!(dice(&a, &BinaryMask::empty(3, 3)), Err(FcsnError::ShapeMismatch(_))));
    }

    #[test]
    fn hausdorff_examples() {
        let a = square(16, 3, 3, 5);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let mut p = BinaryMask::empty(8, 8);
        p.set(4, 1, true);
        let mut q = BinaryMask::empty(8, 8);
        q.set(4, 4, true);
        assert_eq!(hausdorff(&p, &q).unwrap(), 3.0);
        assert!(matches!(hausdorff(&p, &BinaryMask::empty(8, 8)), Err(FcsnError::EmptyMask)));
    }

    #[test]
    fn distance_transform_of_single_point() {
        let mut m = BinaryMask::empty(5, 7);
        m.set(1, 2, true);
        let dt = squared_distance_transform(&m);
        for r in 0..5 {
            for c in 0..7 {
                let (dr, dc) = (r as f64 - 1.0, c as f64 - 2.0);
                assert_eq!(dt[r * 7 + c], dr * dr + dc * dc);
            }
        }
    }

    #[test]
    fn records_and_summary() {
        let t = square(16, 3, 3, 5);
        let ok = evaluate_pair("a", &t, &t).unwrap();
        let empty = evaluate_pair("b", &t, &BinaryMask::empty(16, 16)).unwrap();
        assert!(empty.empty_flag && empty.hausdorff.is_none() && empty.dice == 0.0);
        let s = summarize(&[ok, empty.clone()]);
        assert_eq!(s.count, 2);
        assert_eq!(s.empty_count, 1);
        assert_eq!(s.mean_dice, 0.5);
        assert_eq!(s.mean_hausdorff, 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.csv");
        write_records_csv(&path, &[empty]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "image_id,dice,hausdorff,empty_flag\nb,0.0,,true\n");
    }
}
