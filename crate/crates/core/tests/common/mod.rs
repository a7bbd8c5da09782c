//! Oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use fcsn::fourier::{estimate_ranges, CoefficientVector};
use fcsn::grid::Grid;
use fcsn::loss::{coefficient_weights, LossConfig};
use fcsn::mask::BinaryMask;
use fcsn::model::{Architecture, HeadKind, ToyModel};
use fcsn::synth::{generate, ShapeKind, ShapeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, density: f64) -> BinaryMask {
    let mut m = BinaryMask::from_fn(h, w, |_, _| rng.random_bool(density));
    if m.is_empty() {
        m.set(rng.random_range(0..h), rng.random_range(0..w), true);
    }
    m
}

/// Directed distance by checking every pair of foreground pixels.
pub fn brute_directed(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let bs: Vec<(usize, usize)> = b.foreground().collect();
    a.foreground()
        .map(|(r, c)| {
            bs.iter()
                .map(|&(r2, c2)| {
                    let (dr, dc) = (r as f64 - r2 as f64, c as f64 - c2 as f64);
                    (dr * dr + dc * dc).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn brute_hausdorff(a: &BinaryMask, b: &BinaryMask) -> f64 {
    brute_directed(a, b).max(brute_directed(b, a))
}

/// Two predictions with the same pixel counts against the same truth, but
/// one puts its stray pixels next to the object and the other far away.
pub fn equal_dice_pair() -> (BinaryMask, BinaryMask, BinaryMask) {
    let truth = BinaryMask::from_fn(64, 64, |r, c| (20..40).contains(&r) && (20..40).contains(&c));
    let mut near = truth.clone();
    let mut far = truth.clone();
    for c in 20..40 {
        near.set(39, c, false);
        far.set(39, c, false);
    }
    for r in 20..26 {
        near.set(r, 40, true);
    }
    for r in 2..8 {
        far.set(r, 60, true);
    }
    (truth, near, far)
}

pub fn band_limited(seed: u64) -> fcsn::synth::SyntheticSample {
    generate(&ShapeSpec {
        kind: ShapeKind::BandLimited { k: 10, decay: 0.3 },
        seed,
        texture: 0.0,
    })
    .unwrap()
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Fourth-order central difference.
pub fn stencil5(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

pub struct Instance {
    pub model: ToyModel,
    pub image: Grid,
    pub truth: CoefficientVector,
    pub weights: Vec<f64>,
}

pub fn instance(head: HeadKind, seed: u64) -> Instance {
    let set: Vec<CoefficientVector> = (0..8).map(|i| band_limited(100 * seed + i).coeffs).collect();
    let ranges = estimate_ranges(&set, 1.1).unwrap();
    let weights = coefficient_weights(&set, 1e-6).unwrap();
    let model = ToyModel::new(Architecture::new(10, head), ranges, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
    let image = Grid::from_fn(32, 32, |_, _| rng.random());
    Instance {
        model,
        image,
        truth: set[0].clone(),
        weights,
    }
}

/// Worst relative error over `per_layer` random parameters per layer and
/// `pixels` random input pixels, with the number of coordinates checked.
pub fn check_model(inst: &mut Instance, cfg: &LossConfig, per_layer: usize, pixels: usize, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let (_, grad, grad_input) = inst
        .model
        .backward_with_input(&inst.image, &inst.truth, &inst.weights, cfg)
        .unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for range in inst.model.architecture().layer_ranges() {
        for _ in 0..per_layer {
            let i = rng.random_range(range.clone());
            let x = inst.model.params()[i];
            let numeric = stencil5(
                |v| {
                    inst.model.params_mut()[i] = v;
                    inst.model.item_loss(&inst.image, &inst.truth, &inst.weights, cfg).unwrap().total
                },
                x,
                1e-4,
            );
            inst.model.params_mut()[i] = x;
            worst = worst.max(rel_err(grad[i], numeric));
            checked += 1;
        }
    }
    for _ in 0..pixels {
        let (r, c) = (rng.random_range(0..32), rng.random_range(0..32));
        let x = inst.image.get(r, c);
        let numeric = stencil5(
            |v| {
                let mut img = inst.image.clone();
                img.set(r, c, v);
                inst.model.item_loss(&img, &inst.truth, &inst.weights, cfg).unwrap().total
            },
            x,
            1e-3,
        );
        worst = worst.max(rel_err(grad_input.get(r, c), numeric));
        checked += 1;
    }
    (worst, checked)
}
