//! A desk-scale, hand-differentiated stand-in for the backbone plus
//! heatmap head, with Adam training, evaluation and receptive-field maps.

mod adam;
pub mod checkpoint;
mod erf;
pub mod layers;
mod network;
mod train;

pub use adam::Adam;
pub use erf::{erf_map, mass_fraction_in_box};
pub use network::{Architecture, Axis, HeadKind, OutputUnit, Prediction, ToyModel};
pub use train::{evaluate, fit, history_csv, holdout_split, EvalItem, TrainConfig, TrainSample};
