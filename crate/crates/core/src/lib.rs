//! Segmentation by regression of complex Fourier coefficients.
//!
//! A binary mask is reduced to its outer boundary, resampled by arc length,
//! and summarised by the `2k + 1` lowest complex Fourier coefficients of the
//! closed curve. A small network predicts one heatmap per coefficient; the
//! soft-argmax of each heatmap (scaled per harmonic) gives the coefficient,
//! and the inverse transform plus a scanline fill gives the mask back.
//!
//! Module map:
//!
//! * [`mask`] and [`contour`]: masks, boundary extraction, resampling.
//! * [`fourier`]: analysis, synthesis, truncation, per-harmonic ranges.
//! * [`raster`]: curve to mask.
//! * [`metrics`]: Dice and exact Hausdorff distance.
//! * [`heatmap`]: spatial softmax, soft-argmax, Gaussian targets, JS divergence.
//! * [`loss`]: the weighted L1 + L2 + JS objective and its gradients.
//! * [`model`]: the hand-differentiated toy regressor, Adam and training loop.
//! * [`perturb`]: inference-time image degradations.
//! * [`synth`]: synthetic shapes with known coefficients.
//! * [`cli`]: the `fcsn` command-line surface.

pub mod cli;
pub mod contour;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod heatmap;
pub mod loss;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod perturb;
pub mod raster;
pub mod synth;

pub use error::{FcsnError, Result};
pub use num_complex::Complex64;
