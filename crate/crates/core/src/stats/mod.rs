//! Statistical analysis of simulated extremes.

mod estimate;
mod experiments;
mod ks;
mod tail;

pub use estimate::{CompensatedSum, TailEstimate};
pub use experiments::{
    bramson_shape, bramson_tail_bound_check, centered_max_samples, coupling_tail_compare,
    max_config, prune_bias, prune_event_bias, window_max_samples, BramsonCell, BramsonTable,
    PruneBias,
};
pub use ks::{kolmogorov_pvalue, ks_test, KsResult};
pub use tail::{
    band_width, estimate_centered_max_cdf, fit_tail_rate, gumbel_fit, mallein_ratio,
    right_tail_normalized, sample_synthetic, synthetic_tail, tail_estimates, zero_count_upper,
    GumbelFit, RateFit, Ratio,
};
