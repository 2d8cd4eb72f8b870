//! Linear forward model for a collimated beam in layered media.

mod simulate;
mod sparse;
mod system;
mod travel;

pub use simulate::{simulate_measurements, DirectArrivalCoeffs};
pub use sparse::SparseColumns;
pub use system::{
    apply_a, apply_a_transpose, apply_d, apply_d_transpose, build_direct_arrival_basis,
    build_system_matrix, voxel_column, SystemModel, SPARSITY_THRESHOLD,
};
pub use travel::{beam_weight, travel_time};
