//! Synthetic shapes with known Fourier coefficients.
//!
//! Ellipses and band-limited curves are generated directly from their
//! coefficients, and the contour is the curve sampled at `t = m / 71`, so
//! analysing the contour gives the generating coefficients back exactly.
//! Stars are sharp polygons; their coefficients are measured from the
//! arc-length resampled outline.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contour::{is_simple_polygon, resample_points, signed_area, Contour, DEFAULT_POINTS};
use crate::error::{FcsnError, Result};
use crate::fourier::{dft_coefficients, sample_curve, CoefficientVector, DEFAULT_K};
use crate::grid::Grid;
use crate::mask::BinaryMask;
use crate::raster::fill_polygon;

pub const MASK_SIZE: usize = 256;
pub const IMAGE_SIZE: usize = 32;
pub const FOREGROUND: f64 = 0.8;
pub const BACKGROUND: f64 = 0.2;
/// Attempts allowed before a random generator gives up.
pub const MAX_REJECTIONS: usize = 100;

/// Dense samples used to rasterise the exact curve.
const CURVE_SAMPLES: usize = 1024;
/// Generated curves must stay inside this box (strictly inside `D`).
const CONTAINMENT: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    /// `center + e^{j rotation} (a cos 2 pi t + j b sin 2 pi t)`.
    Ellipse {
        a: f64,
        b: f64,
        center: [f64; 2],
        rotation: f64,
    },
    /// Random coefficients up to order `k`: a dominant first harmonic plus
    /// `|c_n| <= decay / (1 + n^2)` elsewhere.
    BandLimited { k: usize, decay: f64 },
    /// Star polygon with `points` tips.
    Star {
        points: usize,
        inner: f64,
        outer: f64,
        center: [f64; 2],
        rotation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: ShapeKind,
    pub seed: u64,
    /// Standard deviation of Gaussian texture added to the rendered image.
    #[serde(default)]
    pub texture: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub contour: Contour,
    pub coeffs: CoefficientVector,
    pub mask: BinaryMask,
    pub image: Grid,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn contained(points: &[Complex64]) -> bool {
    points
        .iter()
        .all(|p| p.re.abs() < CONTAINMENT && p.im.abs() < CONTAINMENT)
}

/// Box-filters a fine mask down to `size` and maps coverage to intensity.
fn render(mask: &BinaryMask, size: usize, texture: f64, rng: &mut ChaCha8Rng) -> Result<Grid> {
    let (h, w) = mask.shape();
    if h % size != 0 || w % size != 0 {
        return Err(FcsnError::ShapeMismatch(format!(
            "mask {h}x{w} is not a multiple of image size {size}"
        )));
    }
    let (fy, fx) = (h / size, w / size);
    let area = (fy * fx) as f64;
    let mut image = Grid::from_fn(size, size, |r, col| {
        let mut covered = 0usize;
        for y in r * fy..(r + 1) * fy {
            for x in col * fx..(col + 1) * fx {
                covered += mask.get(y, x) as usize;
            }
        }
        BACKGROUND + (FOREGROUND - BACKGROUND) * covered as f64 / area
    });
    if texture > 0.0 {
        let noise = Normal::new(0.0, texture)
            .map_err(|e| FcsnError::InvalidParameter(e.to_string()))?;
        for v in image.as_mut_slice() {
            *v = (*v + noise.sample(rng)).clamp(0.0, 1.0);
        }
    }
    Ok(image)
}

fn from_coefficients(coeffs: CoefficientVector, spec: &ShapeSpec, rng: &mut ChaCha8Rng) -> Result<SyntheticSample> {
    let points = sample_curve(&coeffs, DEFAULT_POINTS);
    let contour = Contour::new(points)?;
    let dense = sample_curve(&coeffs, CURVE_SAMPLES);
    let mask = fill_polygon(&dense, MASK_SIZE, MASK_SIZE);
    let image = render(&mask, IMAGE_SIZE, spec.texture, rng)?;
    Ok(SyntheticSample {
        contour,
        coeffs,
        mask,
        image,
    })
}

fn ellipse_coefficients(a: f64, b: f64, center: [f64; 2], rotation: f64) -> Result<CoefficientVector> {
    let turn = Complex64::from_polar(1.0, rotation);
    CoefficientVector::from_harmonics(
        DEFAULT_K,
        &[
            (0, c(center[0], center[1])),
            (1, turn * ((a + b) / 2.0)),
            (-1, turn * ((a - b) / 2.0)),
        ],
    )
}

fn draw_band_limited(k: usize, decay: f64, rng: &mut ChaCha8Rng) -> Result<CoefficientVector> {
    let mut z = CoefficientVector::zeros(DEFAULT_K.max(k));
    z.set(0, c(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)));
    z.set(1, Complex64::from_polar(rng.random_range(0.35..0.55), rng.random_range(0.0..2.0 * PI)));
    for n in -(k as i64)..=k as i64 {
        if n == 0 || n == 1 {
            continue;
        }
        let bound = decay / (1.0 + (n * n) as f64);
        let r = rng.random_range(0.0..=bound);
        z.set(n, Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI)));
    }
    Ok(z)
}

fn star_polygon(points: usize, inner: f64, outer: f64, center: [f64; 2], rotation: f64) -> Vec<Complex64> {
    (0..2 * points)
        .map(|i| {
            let radius = if i % 2 == 0 { outer } else { inner };
            c(center[0], center[1]) + Complex64::from_polar(radius, rotation + PI * i as f64 / points as f64)
        })
        .collect()
}

/// Generates contour (71 points), coefficients (`k = 10`), a 256x256 mask
/// of the exact curve and a 32x32 rendered image.
pub fn generate(spec: &ShapeSpec) -> Result<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        ShapeKind::Ellipse { a, b, center, rotation } => {
            if !(a > 0.0 && b > 0.0) {
                return Err(FcsnError::InvalidParameter(format!("ellipse axes {a}, {b}")));
            }
            let z = ellipse_coefficients(a, b, center, rotation)?;
            if !contained(&sample_curve(&z, CURVE_SAMPLES)) {
                return Err(FcsnError::InvalidParameter("ellipse leaves the frame".into()));
            }
            from_coefficients(z, spec, &mut rng)
        }
        ShapeKind::BandLimited { k, decay } => {
            if k > (DEFAULT_POINTS - 1) / 2 || !(decay >= 0.0) {
                return Err(FcsnError::InvalidParameter(format!("band limit k = {k}, decay = {decay}")));
            }
            for _ in 0..MAX_REJECTIONS {
                let z = draw_band_limited(k, decay, &mut rng)?;
                let dense = sample_curve(&z, CURVE_SAMPLES);
                if !contained(&dense) || signed_area(&dense) <= 0.0 {
                    continue;
                }
                let coarse = sample_curve(&z, 256);
                if !is_simple_polygon(&coarse) || !is_simple_polygon(&dense[..].iter().step_by(2).copied().collect::<Vec<_>>()) {
                    continue;
                }
                return from_coefficients(z, spec, &mut rng);
            }
            Err(FcsnError::RejectionLimit(MAX_REJECTIONS))
        }
        ShapeKind::Star { points, inner, outer, center, rotation } => {
            if points < 2 || !(inner > 0.0 && outer > inner) {
                return Err(FcsnError::InvalidParameter(format!(
                    "star with {points} points, radii {inner}..{outer}"
                )));
            }
            let polygon = star_polygon(points, inner, outer, center, rotation);
            if !contained(&polygon) {
                return Err(FcsnError::InvalidParameter("star leaves the frame".into()));
            }
            let contour = Contour::counter_clockwise(resample_points(&polygon, DEFAULT_POINTS)?)?;
            let coeffs = dft_coefficients(contour.points(), DEFAULT_K)?;
            let mask = fill_polygon(&polygon, MASK_SIZE, MASK_SIZE);
            let image = render(&mask, IMAGE_SIZE, spec.texture, &mut rng)?;
            Ok(SyntheticSample {
                contour,
                coeffs,
                mask,
                image,
            })
        }
    }
}

/// Families of random shapes for datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Axis-aligned ellipses, `a, b` in `[0.25, 0.6]`, center in `[-0.2, 0.2]^2`.
    Ellipses,
    BandLimited,
    Stars,
}

impl std::str::FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ellipses" | "ellipse" => Ok(DatasetKind::Ellipses),
            "band_limited" | "band-limited" => Ok(DatasetKind::BandLimited),
            "stars" | "star" => Ok(DatasetKind::Stars),
            other => Err(format!("unknown dataset kind `{other}`")),
        }
    }
}

/// Default texture for dataset images.
pub const DEFAULT_TEXTURE: f64 = 0.05;

/// Draws the shape spec of item `index` from a dataset seed.
pub fn dataset_spec(kind: DatasetKind, seed: u64, index: usize, texture: f64) -> ShapeSpec {
    let item_seed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64)
        .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed);
    let kind = match kind {
        DatasetKind::Ellipses => ShapeKind::Ellipse {
            a: rng.random_range(0.25..0.6),
            b: rng.random_range(0.25..0.6),
            center: [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
            rotation: 0.0,
        },
        DatasetKind::BandLimited => ShapeKind::BandLimited { k: DEFAULT_K, decay: 0.3 },
        DatasetKind::Stars => {
            let outer = rng.random_range(0.5..0.7);
            ShapeKind::Star {
                points: 5,
                inner: outer * rng.random_range(0.45..0.65),
                outer,
                center: [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
                rotation: rng.random_range(0.0..2.0 * PI),
            }
        }
    };
    ShapeSpec {
        kind,
        seed: item_seed,
        texture,
    }
}

/// A loaded or generated dataset entry.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub id: String,
    pub image: Grid,
    pub mask: BinaryMask,
    pub coeffs: CoefficientVector,
}

pub fn generate_dataset(kind: DatasetKind, count: usize, seed: u64, texture: f64) -> Result<Vec<DatasetItem>> {
    (0..count)
        .map(|i| {
            let s = generate(&dataset_spec(kind, seed, i, texture))?;
            Ok(DatasetItem {
                id: format!("{i:05}"),
                image: s.image,
                mask: s.mask,
                coeffs: s.coeffs,
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    id: String,
    image: String,
    mask: String,
    coeffs: String,
}

pub const MANIFEST: &str = "manifest.csv";

/// Writes `<id>_image.pgm`, `<id>_mask.pgm`, `<id>_coeffs.json` per item and
/// a `manifest.csv` listing them.
pub fn write_dataset(dir: &Path, items: &[DatasetItem]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| FcsnError::io(dir, e))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for item in items {
        let row = ManifestRow {
            id: item.id.clone(),
            image: format!("{}_image.pgm", item.id),
            mask: format!("{}_mask.pgm", item.id),
            coeffs: format!("{}_coeffs.json", item.id),
        };
        item.image.write(&dir.join(&row.image))?;
        item.mask.write(&dir.join(&row.mask))?;
        item.coeffs.write(&dir.join(&row.coeffs))?;
        w.serialize(&row).expect("csv write");
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, w.into_inner().expect("csv flush")).map_err(|e| FcsnError::io(&path, e))
}

pub fn read_dataset(dir: &Path) -> Result<Vec<DatasetItem>> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| FcsnError::io(&path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut items = Vec::new();
    for row in r.deserialize() {
        let row: ManifestRow = row.map_err(|e| FcsnError::format(&path, e))?;
        items.push(DatasetItem {
            image: Grid::read(&dir.join(&row.image))?,
            mask: BinaryMask::read(&dir.join(&row.mask))?,
            coeffs: CoefficientVector::read(&dir.join(&row.coeffs))?,
            id: row.id,
        });
    }
    if items.is_empty() {
        return Err(FcsnError::EmptyDataset);
    }
    Ok(items)
}
