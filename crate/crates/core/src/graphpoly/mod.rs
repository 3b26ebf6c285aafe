//! Graph polynomials behind the loop series: `θ_G(β, γ)`, its reduction
//! `ω_G(β)`, the matching polynomial and the identities linking them.

mod matching;
mod omega;
mod theta;

pub use matching::{
    matching_polynomial, omega_determinant_form, regular_graph_matching_check,
    DETERMINANT_MAX_NODES,
};
pub use omega::{omega, omega_at_1_count, omega_recurrence_check, OmegaCount};
pub use theta::{
    bouquet_theta, golden_ratio_value, loop_count_bound, theta_at_beta1,
    theta_closed_form_at_beta1, theta_contraction_deletion, theta_contraction_deletion_with,
    theta_direct, LoopCountBound, ThetaAtOne, ThetaMemo, ThetaPoly,
};
