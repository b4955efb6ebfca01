//! Closed-form and semi-analytic predictions.

pub mod ansatz;
pub mod linear_response;
pub mod mp;
pub mod oneblock;
pub mod resolvent;
pub mod special;

pub use ansatz::{
    ansatz_asymptotic, ansatz_density, ansatz_invert, ansatz_moments, bulk_moment_extrapolation, emerging_moments,
    AnsatzParams,
};
pub use linear_response::{
    delta_m1_exact, delta_m2_exact, delta_m_asymptotic, element_moment, linear_response_warnings, TheoryConstants,
    CONSTANTS,
};
pub use mp::{mp_density, mp_edges, mp_moments, mp_zero_mass};
pub use oneblock::{
    largest_correction_estimate, oneblock_ansatz, oneblock_ansatz_moments, oneblock_delta_moments, oneblock_density,
    separated_position, OneBlockAnsatz,
};
pub use resolvent::{cwoe_density, cwoe_resolvent, CwoeResolvent, ResolventQuery, ResolventSolution};
pub use special::{digamma, trigamma, EULER_GAMMA};
