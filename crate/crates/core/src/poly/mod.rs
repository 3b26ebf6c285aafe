//! Exact polynomial arithmetic over arbitrary-precision integers and
//! Gaussian integers.

mod bi;
mod coeff;
mod recurrence;
mod uni;

pub use bi::BiPoly;
pub use coeff::{gaussian, Coeff, GaussianInt};
pub use recurrence::{f_poly, f_product_identity_check, f_value, g_poly, g_value};
pub use uni::UniPoly;
