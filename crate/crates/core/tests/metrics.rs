mod common;

use fcsn::mask::BinaryMask;
use fcsn::metrics::{dice, hausdorff, squared_distance_transform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_hausdorff, equal_dice_pair, random_mask};

#[test]
fn fast_hausdorff_equals_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100 {
        let density = [0.02, 0.1, 0.3, 0.6][i % 4];
        let a = random_mask(&mut rng, 16, 16, density);
        let b = random_mask(&mut rng, 16, 16, density);
        assert_eq!(hausdorff(&a, &b).unwrap(), brute_hausdorff(&a, &b), "pair {i}");
    }
}

#[test]
fn distance_transform_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = random_mask(&mut rng, 12, 9, 0.1);
        let fg: Vec<(usize, usize)> = m.foreground().collect();
        let dt = squared_distance_transform(&m);
        for r in 0..12 {
            for c in 0..9 {
                let best = fg
                    .iter()
                    .map(|&(r2, c2)| ((r as i64 - r2 as i64).pow(2) + (c as i64 - c2 as i64).pow(2)) as f64)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(dt[r * 9 + c], best);
            }
        }
    }
}

#[test]
fn concentric_squares() {
    let square = |half: i64| BinaryMask::from_fn(15, 15, move |r, c| (r as i64 - 7).abs() <= half && (c as i64 - 7).abs() <= half);
    let (small, large) = (square(1), square(3));
    let h = hausdorff(&small, &large).unwrap();
    assert_eq!(h, brute_hausdorff(&small, &large));
    // Corner of the 7x7 to the nearest corner of the 3x3: (2, 2) apart.
    assert_eq!(h, 8f64.sqrt());
    assert_eq!(dice(&small, &large).unwrap(), 2.0 * 9.0 / (9.0 + 49.0));
}

#[test]
fn hausdorff_is_a_metric_on_small_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..60 {
        let a = random_mask(&mut rng, 10, 10, 0.2);
        let b = random_mask(&mut rng, 10, 10, 0.2);
        let c = random_mask(&mut rng, 10, 10, 0.2);
        let (ab, bc, ac) = (hausdorff(&a, &b).unwrap(), hausdorff(&b, &c).unwrap(), hausdorff(&a, &c).unwrap());
        assert_eq!(ab, hausdorff(&b, &a).unwrap());
        assert!(ac <= ab + bc + 1e-12);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn dice_matches_hand_counts_and_is_translation_invariant() {
    let a = BinaryMask::from_fn(8, 8, |r, c| r < 4 && c < 4);
    let b = BinaryMask::from_fn(8, 8, |r, c| (2..6).contains(&r) && c < 4);
    // |A| = |B| = 16, overlap is rows 2..4: 8 pixels.
    assert_eq!(dice(&a, &b).unwrap(), 0.5);
    assert_eq!(dice(&b, &a).unwrap(), 0.5);
    let shift = |m: &BinaryMask| BinaryMask::from_fn(8, 8, |r, c| r >= 1 && c >= 2 && m.get(r - 1, c - 2));
    assert_eq!(dice(&shift(&a), &shift(&b)).unwrap(), 0.5);
}

#[test]
fn equal_dice_can_hide_very_different_hausdorff() {
    let (truth, near, far) = equal_dice_pair();
    let (d_near, d_far) = (dice(&truth, &near).unwrap(), dice(&truth, &far).unwrap());
    assert_eq!(d_near, d_far);
    assert!(d_near > 0.9);
    let (h_near, h_far) = (hausdorff(&truth, &near).unwrap(), hausdorff(&truth, &far).unwrap());
    assert!(h_far > 2.0 * h_near, "{h_near} vs {h_far}");
}

#[test]
fn empty_masks() {
    let e = BinaryMask::empty(4, 4);
    let a = BinaryMask::from_fn(4, 4, |r, _| r == 0);
    assert_eq!(dice(&e, &e).unwrap(), 1.0);
    assert_eq!(dice(&a, &e).unwrap(), 0.0);
    assert!(hausdorff(&a, &e).is_err());
}
