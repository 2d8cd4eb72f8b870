//! The three consensus agents: proximal data fit, QGGMRF prior, and the
//! ringing-suppression collaborative filter.

mod data_fit;
mod denoise;
mod kernel;
mod qggmrf;
mod transform;

pub use data_fit::{prox_data_fit, DataFitProx, DataFitTrace};
pub use denoise::{denoise_ringing, DenoiserSettings, RingingDenoiser};
pub use kernel::{build_ring_kernel, kernel_psd, min_kernel_size, psd_from_array, NoisePsd, RingKernel};
pub use qggmrf::{
    potential, potential_derivative, prior_energy, prox_qggmrf, qggmrf_objective, NeighborWeights,
    QggmrfParams, QggmrfShape,
};
