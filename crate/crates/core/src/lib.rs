//! Dataset similarity and segmentation metrics, standard augmentations, and
//! Bayesian selection between curves that relate the two.

pub mod augment;
pub mod error;
pub mod features;
pub mod frechet;
pub mod imgcore;
pub mod inference;
pub mod models;
pub mod pipeline;
pub mod rng;

pub use error::{Error, ErrorClass, Result};
pub use nalgebra;
pub use frechet::{frechet_distance, sqrt_psd, FeatureDistribution, FidResult};
pub use imgcore::{average_dsc, dsc, BinaryMask, GrayImage, PackedImage};
pub use models::{default_priors, eval_model, Baseline, ModelFamily, ModelSpec, PriorBox};
