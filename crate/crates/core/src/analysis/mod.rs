//! Specimen phantom, image-quality metrics and the repeated
//! post-processing study.

mod metrics;
mod phantom;
mod study;

pub use metrics::{
    median_wall_error, ringing_energy, rmse, wall_depth_estimate, wall_peak_amplitude, MetricsReport, WallEstimate,
};
pub use phantom::{insonified_columns, make_phantom, make_phantom_with, specimen_medium, Phantom, PhantomConfig};
pub use study::{bm3d_postprocess_study, StudyResult, StudySnapshot};
