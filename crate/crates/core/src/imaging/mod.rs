//! Binary images on posed lattices: sampling bodies and counting the
//! `2×⋯×2` cell configurations.

pub mod count;
pub mod image;
pub mod pose;
pub mod voxelize;

pub use count::{brute_force_count, count_classes, count_configurations, ConfigHistogram};
pub use image::BinaryImage;
pub use pose::LatticePose;
pub use voxelize::voxelize;
