//! Random streams, Brownian sampling primitives and analytic laws.

pub mod analytic;
pub mod quadrature;
pub mod rng;
pub mod sampling;

pub use analytic::{
    exit_time_density, expected_exit_time, local_time_tail, mills_ratio_bounds, scaled_normal_tail,
    OVERSHOOT_CONSTANT,
};
pub use rng::{derive_seed, Lane, RngStream};
pub use sampling::{
    bridge_max_from_exp, bridge_max_sample, bridge_max_tail, bridge_point_sample, gaussian_step,
    gaussian_step_into, levy_fpt_cdf, levy_hitting_time_sample,
};
