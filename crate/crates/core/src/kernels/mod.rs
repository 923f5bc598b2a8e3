//! Sampling primitives and transition densities.

mod density;
pub(crate) mod path;
mod rng;
pub(crate) mod sample;

pub use density::{
    bessel_density_from_origin, chi_cdf, gaussian_density, log_gaussian_density, normal_cdf,
};
pub use path::{uniform_grid, PathGrid};
pub use rng::{RngStream, StreamRng};
pub use sample::{
    sample_bessel_path, sample_bm_path, sample_branch_time, sample_bridge, standard_normal,
};
