//! Raster primitives, Dice scoring and scan/mask channel packing.

mod dice;
mod pack;
pub mod pnm;
mod raster;

pub use dice::{average_dsc, dsc, mean_defined, DiceSummary};
pub use pack::{pack, unpack, unpack_rgb, PackedImage, MASK_LEVEL, MASK_WEIGHT, UNPACK_THRESHOLD};
pub use raster::{BinaryMask, GrayImage, Raster};
