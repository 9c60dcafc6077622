//! Positive-real tests, class membership, robustness margins and multiplier design.

mod design;
mod espr;
mod membership;
mod multiplier;
pub mod optimize;

pub use design::{
    auto_multiplier, fit_constant_phase_multiplier, passivity_multiplier_t, AutoResult, AutoSearch, PhaseFit,
    PHASE_GUARD,
};
pub use espr::{
    espr_check_state_space, espr_check_state_space_with, espr_margin_grid, espr_margin_grid_with, pr_test_biquad,
    state_space_strictly_above, EsprOptions, EsprReport,
};
pub use membership::{
    check_p, gamma_star, gamma_star_affine, ph_membership, CertOptions, GammaStar, MembershipChecks,
    MembershipReport, Method,
};
pub use multiplier::{MembershipFunction, Multiplier};
