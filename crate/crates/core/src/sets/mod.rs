//! Cell covers of compact sets and the operations on them.

pub mod attractor;
pub mod cellset;
pub mod chaos;
pub mod hausdorff;
pub mod image;

pub use attractor::{attractor_approx, attractor_approx_with, bound_radius, AttractorApprox, AttractorOptions};
pub use cellset::CellSet;
pub use chaos::{chaos_game, PointCloud};
pub use hausdorff::{hausdorff_distance, hausdorff_points, min_center_distance};
pub use image::{hutchinson_step, image_cellset, image_cellset_with, CollarRule};
