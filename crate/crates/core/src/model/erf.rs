//! Effective receptive field maps: `|d output / d pixel|`, max-normalised.

use super::network::{OutputUnit, ToyModel};
use crate::error::Result;
use crate::grid::Grid;

pub fn erf_map(model: &ToyModel, image: &Grid, unit: OutputUnit) -> Result<Grid> {
    Ok(model.output_input_gradient(image, unit)?.map(f64::abs).max_normalized())
}

/// Fraction of the map's total mass inside the inclusive pixel box
/// `(r0, c0, r1, c1)`. Zero for an all-zero map.
pub fn mass_fraction_in_box(map: &Grid, (r0, c0, r1, c1): (usize, usize, usize, usize)) -> f64 {
    let total: f64 = map.as_slice().iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut inside = 0.0;
    for r in r0..=r1.min(map.height() - 1) {
        for c in c0..=c1.min(map.width() - 1) {
            inside += map.get(r, c);
        }
    }
    inside / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_fraction() {
        let g = Grid::from_fn(4, 4, |r, c| if r < 2 && c < 2 { 1.0 } else { 0.0 });
        assert_eq!(mass_fraction_in_box(&g, (0, 0, 1, 1)), 1.0);
        assert_eq!(mass_fraction_in_box(&g, (0, 0, 0, 0)), 0.25);
        assert_eq!(mass_fraction_in_box(&Grid::zeros(4, 4), (0, 0, 3, 3)), 0.0);
    }
}
