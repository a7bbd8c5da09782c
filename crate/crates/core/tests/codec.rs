use std::f64::consts::PI;

use fcsn::contour::{perimeter, resample_closed, trace_boundary, Contour};
use fcsn::fourier::{dft_coefficients, encode_mask, estimate_ranges, evaluate, forward, sample_curve, truncate, CoefficientVector};
use fcsn::mask::BinaryMask;
use fcsn::metrics::{dice, hausdorff};
use fcsn::raster::rasterize;
use fcsn::synth::{generate, ShapeKind, ShapeSpec};
use fcsn::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn band_limited(seed: u64) -> fcsn::synth::SyntheticSample {
    generate(&ShapeSpec {
        kind: ShapeKind::BandLimited { k: 10, decay: 0.3 },
        seed,
        texture: 0.0,
    })
    .unwrap()
}

/// Plain O(N k) DFT written out independently of the library.
fn naive_dft(points: &[Complex64], n: i64) -> Complex64 {
    let len = points.len() as f64;
    points
        .iter()
        .enumerate()
        .map(|(m, p)| p * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * m as f64 / len))
        .sum::<Complex64>()
        / len
}

#[test]
fn analysis_matches_a_naive_dft() {
    let s = band_limited(11);
    let z = forward(&s.contour, 10).unwrap();
    for (n, zn) in z.harmonics() {
        assert!((zn - naive_dft(s.contour.points(), n)).norm() < 1e-13);
    }
}

#[test]
fn generator_and_analyser_agree() {
    for seed in 0..25 {
        let s = band_limited(seed);
        let z = forward(&s.contour, 10).unwrap();
        for (a, b) in z.as_slice().iter().zip(s.coeffs.as_slice()) {
            assert!((a - b).norm() < 1e-10, "seed {seed}");
        }
    }
}

#[test]
fn synthesis_inverts_analysis_on_the_sample_grid() {
    for seed in 0..10 {
        let s = band_limited(seed);
        let z = forward(&s.contour, 10).unwrap();
        let ts: Vec<f64> = (0..71).map(|m| m as f64 / 71.0).collect();
        for (p, q) in evaluate(&z, &ts).iter().zip(s.contour.points()) {
            assert!((p - q).norm() < 1e-10);
        }
    }
}

#[test]
fn translation_only_moves_z0() {
    let s = band_limited(3);
    let d = Complex64::new(0.013, -0.021);
    let shifted: Vec<Complex64> = s.contour.points().iter().map(|p| p + d).collect();
    let a = dft_coefficients(s.contour.points(), 10).unwrap();
    let b = dft_coefficients(&shifted, 10).unwrap();
    for (n, zn) in a.harmonics() {
        let expected = if n == 0 { zn + d } else { zn };
        assert!((b.get(n) - expected).norm() < 1e-12, "n = {n}");
    }
}

#[test]
fn analysis_is_linear() {
    let (c1, c2) = (band_limited(4), band_limited(5));
    let (a, b) = (Complex64::new(0.3, 0.2), Complex64::new(-0.7, 0.1));
    let mixed: Vec<Complex64> = c1
        .contour
        .points()
        .iter()
        .zip(c2.contour.points())
        .map(|(p, q)| a * p + b * q)
        .collect();
    let lhs = dft_coefficients(&mixed, 10).unwrap();
    let z1 = dft_coefficients(c1.contour.points(), 10).unwrap();
    let z2 = dft_coefficients(c2.contour.points(), 10).unwrap();
    for n in -10..=10 {
        assert!((lhs.get(n) - (a * z1.get(n) + b * z2.get(n))).norm() < 1e-12);
    }
}

#[test]
fn smooth_curve_has_two_harmonics() {
    let points: Vec<Complex64> = (0..71)
        .map(|m| {
            let t = m as f64 / 71.0;
            Complex64::from_polar(1.0, 2.0 * PI * t) + 0.05 * Complex64::from_polar(1.0, 6.0 * PI * t)
        })
        .collect();
    let z = dft_coefficients(&points, 10).unwrap();
    for (n, zn) in z.harmonics() {
        match n {
            1 => assert!((zn - 1.0).norm() < 1e-12),
            3 => assert!((zn - 0.05).norm() < 1e-12),
            _ => assert!(zn.norm() < 1e-10, "n = {n}"),
        }
    }
}

#[test]
fn square_harmonics_decay_quadratically() {
    let corners = [
        Complex64::new(0.5, 0.5),
        Complex64::new(-0.5, 0.5),
        Complex64::new(-0.5, -0.5),
        Complex64::new(0.5, -0.5),
    ];
    let dense: Vec<Complex64> = (0..4)
        .flat_map(|i| {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            (0..50).map(move |j| a + (b - a) * (j as f64 / 50.0))
        })
        .collect();
    let contour = resample_closed(&Contour::new(dense).unwrap(), 71).unwrap();
    let z = forward(&contour, 10).unwrap();
    // A square only excites n = 1 (mod 4); along that sequence |z_n| n^2
    // stays bounded and the magnitudes shrink.
    let seq: Vec<i64> = vec![1, -3, 5, -7, 9];
    for pair in seq.windows(2) {
        assert!(z.get(pair[1]).norm() < z.get(pair[0]).norm());
    }
    let c = z.get(-3).norm() * 9.0;
    for &n in &seq[1..] {
        let scaled = z.get(n).norm() * (n * n) as f64;
        assert!(scaled > 0.5 * c && scaled < 2.0 * c, "n = {n}: {scaled} vs {c}");
    }
}

#[test]
fn star_k10_stays_close_to_k35() {
    let s = generate(&ShapeSpec {
        kind: ShapeKind::Star {
            points: 5,
            inner: 0.3,
            outer: 0.7,
            center: [0.0, 0.0],
            rotation: 0.3,
        },
        seed: 0,
        texture: 0.0,
    })
    .unwrap();
    let z35 = forward(&s.contour, 35).unwrap();
    let z10 = truncate(&z35, 10).unwrap();
    let m35 = rasterize(&z35, 256, 256, 512).unwrap().mask;
    let m10 = rasterize(&z10, 256, 256, 512).unwrap().mask;
    let d = dice(&m10, &m35).unwrap();
    assert!(d >= 0.9, "{d}");
    assert!(d < 1.0);
    // Truncation acts as a smoother: the k = 10 outline is shorter.
    let p35 = perimeter(&sample_curve(&z35, 2048));
    let p10 = perimeter(&sample_curve(&z10, 2048));
    assert!(p10 < p35);
}

#[test]
fn disc_encodes_its_radius() {
    let mask = BinaryMask::from_fn(128, 128, |r, c| {
        let (y, x) = (r as f64 + 0.5 - 64.0, c as f64 + 0.5 - 64.0);
        x * x + y * y <= 40.0 * 40.0
    });
    let z = encode_mask(&mask, 71, 10).unwrap();
    let radius = 40.0 * 2.0 / 128.0;
    assert!((z.get(1).norm() - radius).abs() < 2.0 / 128.0);
    assert!(z.get(0).norm() < 1e-3);
}

#[test]
fn mask_round_trip_on_smooth_blobs() {
    for seed in 0..10 {
        let s = band_limited(100 + seed);
        let z = encode_mask(&s.mask, 71, 10).unwrap();
        let back = rasterize(&z, 256, 256, 256).unwrap().mask;
        assert!(dice(&s.mask, &back).unwrap() >= 0.98, "seed {seed}");
        assert!(hausdorff(&s.mask, &back).unwrap() <= 2.0, "seed {seed}");
    }
}

#[test]
fn resampling_keeps_the_perimeter() {
    for seed in 0..10 {
        let s = band_limited(200 + seed);
        let dense = Contour::new(sample_curve(&s.coeffs, 256)).unwrap();
        let coarse = resample_closed(&dense, 71).unwrap();
        let ratio = coarse.perimeter() / dense.perimeter();
        assert!((0.98..=1.0 + 1e-12).contains(&ratio), "{ratio}");
    }
}

#[test]
fn resampling_an_equal_chord_polygon_is_idempotent() {
    // 1.2 x 0.6 rectangle walked in steps of 0.15: 24 equal chords.
    let mut points = Vec::new();
    let corners = [(0.6, 0.3), (-0.6, 0.3), (-0.6, -0.3), (0.6, -0.3)];
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let steps = (((b.0 - a.0) as f64).abs() + ((b.1 - a.1) as f64).abs()) / 0.15;
        let steps = steps.round() as usize;
        for j in 0..steps {
            let t = j as f64 / steps as f64;
            points.push(Complex64::new(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
        }
    }
    let c = Contour::new(points).unwrap();
    let again = resample_closed(&c, c.len()).unwrap();
    for (a, b) in again.points().iter().zip(c.points()) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn traced_contours_are_closed_ccw_polygons_inside_the_frame() {
    let s = band_limited(7);
    let c = trace_boundary(&s.mask).unwrap();
    assert!(c.signed_area() > 0.0);
    assert!(c.points().iter().all(|p| p.re.abs() <= 1.0 && p.im.abs() <= 1.0));
}

#[test]
fn ranges_match_a_brute_force_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let set: Vec<CoefficientVector> = (0..100)
        .map(|i| {
            let (a, b) = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
            generate(&ShapeSpec {
                kind: ShapeKind::Ellipse {
                    a,
                    b,
                    center: [0.0, 0.0],
                    rotation: 0.0,
                },
                seed: i,
                texture: 0.0,
            })
            .unwrap()
            .coeffs
        })
        .collect();
    let ranges = estimate_ranges(&set, 1.1).unwrap();
    let max_z1 = set.iter().map(|z| z.get(1).re.abs()).fold(0.0, f64::max);
    assert!((ranges.get(1) - 1.1 * max_z1).abs() < 1e-15);
}
