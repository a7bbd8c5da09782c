//! Inference-time image perturbations.
//!
//! Specs parse from compact strings: `gauss:<std>`, `sp:<prob>`,
//! `contrast:<factor>` and `mblur:<length>:<angle in degrees>`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{FcsnError, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    GaussianNoise { std: f64 },
    SaltPepper { prob: f64 },
    Contrast { factor: f64 },
    /// Line kernel of `length` pixels; `angle` is counter-clockwise from
    /// the +x axis with y pointing up.
    MotionBlur { length: usize, angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl PerturbationKind {
    /// Short name used in spec strings and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::GaussianNoise { .. } => "gauss",
            PerturbationKind::SaltPepper { .. } => "sp",
            PerturbationKind::Contrast { .. } => "contrast",
            PerturbationKind::MotionBlur { .. } => "mblur",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PerturbationKind::GaussianNoise { std } => std >= 0.0 && std.is_finite(),
            PerturbationKind::SaltPepper { prob } => (0.0..=1.0).contains(&prob),
            PerturbationKind::Contrast { factor } => factor > 0.0 && factor.is_finite(),
            PerturbationKind::MotionBlur { length, angle } => length >= 1 && angle.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(FcsnError::InvalidParameter(format!("perturbation {self}")))
        }
    }

    pub fn is_identity(&self) -> bool {
        match *self {
            PerturbationKind::GaussianNoise { std } => std == 0.0,
            PerturbationKind::SaltPepper { prob } => prob == 0.0,
            PerturbationKind::Contrast { factor } => factor == 1.0,
            PerturbationKind::MotionBlur { length, .. } => length == 1,
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PerturbationKind::GaussianNoise { std } => write!(f, "gauss:{std}"),
            PerturbationKind::SaltPepper { prob } => write!(f, "sp:{prob}"),
            PerturbationKind::Contrast { factor } => write!(f, "contrast:{factor}"),
            PerturbationKind::MotionBlur { length, angle } => write!(f, "mblur:{length}:{angle}"),
        }
    }
}

impl FromStr for PerturbationKind {
    type Err = FcsnError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FcsnError::InvalidParameter(format!("cannot parse perturbation `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let kind = match (parts[0], parts.len()) {
            ("gauss", 2) => PerturbationKind::GaussianNoise { std: num(1)? },
            ("sp", 2) => PerturbationKind::SaltPepper { prob: num(1)? },
            ("contrast", 2) => PerturbationKind::Contrast { factor: num(1)? },
            ("mblur", 2 | 3) => PerturbationKind::MotionBlur {
                length: parts[1].parse().map_err(|_| bad())?,
                angle: if parts.len() == 3 { num(2)? } else { 0.0 },
            },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Applies a perturbation; the result is clamped to `[0, 1]`.
pub fn apply(image: &Grid, p: &Perturbation) -> Result<Grid> {
    p.kind.validate()?;
    if p.kind.is_identity() {
        return Ok(image.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut out = match p.kind {
        PerturbationKind::GaussianNoise { std } => {
            let noise = Normal::new(0.0, std).map_err(|e| FcsnError::InvalidParameter(e.to_string()))?;
            let mut out = image.clone();
            for v in out.as_mut_slice() {
                *v += noise.sample(&mut rng);
            }
            out
        }
        PerturbationKind::SaltPepper { prob } => {
            let mut out = image.clone();
            for v in out.as_mut_slice() {
                if rng.random_bool(prob) {
                    *v = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
                }
            }
            out
        }
        PerturbationKind::Contrast { factor } => image.map(|v| 0.5 + factor * (v - 0.5)),
        PerturbationKind::MotionBlur { length, angle } => motion_blur(image, length, angle),
    };
    for v in out.as_mut_slice() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Normalised line kernel as `(dy, dx, weight)` taps. Points are spaced one
/// pixel apart, centered on the origin, and split bilinearly between the
/// four surrounding pixels, so the kernel is point-symmetric.
pub fn line_kernel(length: usize, angle: f64) -> Vec<(i64, i64, f64)> {
    let (sin, cos) = angle.to_radians().sin_cos();
    let mut taps: Vec<(i64, i64, f64)> = Vec::new();
    let mut add = |dy: i64, dx: i64, w: f64| {
        if w <= 0.0 {
            return;
        }
        match taps.iter_mut().find(|t| t.0 == dy && t.1 == dx) {
            Some(t) => t.2 += w,
            None => taps.push((dy, dx, w)),
        }
    };
    let share = 1.0 / length as f64;
    for i in 0..length {
        let t = i as f64 - (length as f64 - 1.0) / 2.0;
        let (x, y) = (t * cos, -t * sin);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        add(y0, x0, share * (1.0 - fx) * (1.0 - fy));
        add(y0, x0 + 1, share * fx * (1.0 - fy));
        add(y0 + 1, x0, share * (1.0 - fx) * fy);
        add(y0 + 1, x0 + 1, share * fx * fy);
    }
    taps
}

/// Half-sample symmetric reflection into `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

fn motion_blur(image: &Grid, length: usize, angle: f64) -> Grid {
    let taps = line_kernel(length, angle);
    let (h, w) = image.shape();
    Grid::from_fn(h, w, |r, c| {
        taps.iter()
            .map(|&(dy, dx, wt)| wt * image.get(reflect(r as i64 + dy, h), reflect(c as i64 + dx, w)))
            .sum()
    })
}

/// Five default levels per kind, preceded by the identity at level 0.
pub fn default_sweep(name: &str) -> Result<Vec<PerturbationKind>> {
    let levels: Vec<PerturbationKind> = match name {
        "gauss" => [0.0, 0.02, 0.05, 0.1, 0.2, 0.3]
            .map(|std| PerturbationKind::GaussianNoise { std })
            .to_vec(),
        "sp" => [0.0, 0.01, 0.02, 0.05, 0.1, 0.2]
            .map(|prob| PerturbationKind::SaltPepper { prob })
            .to_vec(),
        "contrast" => [1.0, 0.8, 0.6, 0.4, 0.3, 0.2]
            .map(|factor| PerturbationKind::Contrast { factor })
            .to_vec(),
        "mblur" => [1, 3, 5, 7, 9, 11]
            .map(|length| PerturbationKind::MotionBlur { length, angle: 45.0 })
            .to_vec(),
        other => return Err(FcsnError::InvalidParameter(format!("unknown perturbation kind `{other}`"))),
    };
    Ok(levels)
}

pub const SWEEP_KINDS: [&str; 4] = ["gauss", "sp", "contrast", "mblur"];
