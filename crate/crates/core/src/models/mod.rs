//! Bus model families: uncontrolled swing, delayed droop and AGC.

mod agc;
mod droop;
mod swing;

pub use agc::{
    agc_gamma_star, agc_model, agc_sweep, beta_guidance, log_range, AgcParams, AgcSweep, MultiplierChoice, AGC_TABLE,
};
pub use droop::{
    default_canonical_grid, droop_circle_check, droop_delay_bounds, droop_delay_check, half_plane_direction,
    CircleDistance, DroopBounds, DroopCanonical, DroopCheck, DroopDelayParams,
};
pub use swing::{swing_certificate, swing_plant, SwingCertificate, SwingParams};
