//! Connectedness loci over parameter windows and the sets that bound them.

pub mod mset;
pub mod raster;
pub mod scaling;
pub mod sweep;
pub mod tiles;
pub mod window;

pub use mset::{covering_upper_bound, mset_compute, mset_direct, mset_direct_raster, DifferenceSet};
pub use raster::{ClassCounts, ClassificationRaster, MembershipRaster, Raster, SweepReport};
pub use scaling::{scaling_reduce, sphere_criterion, MinkowskiTest, ScalingReport};
pub use sweep::{boundary_refine, det_fastpath, sweep, SweepPolicy};
pub use tiles::{tile_ifs, TileSpec};
pub use window::ParamWindow;
