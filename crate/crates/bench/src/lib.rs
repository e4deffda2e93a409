//! Inputs shared by the criterion benches.

use dctc_core::gallery::{u1_system, u2_system, u3_system, EpsFamily};
use dctc_core::{CtcSystem, DensityMatrix};

/// U2 with CR `|0⟩` at noise `p`.
pub fn u2_ground(p: f64) -> CtcSystem {
    u2_system(DensityMatrix::basis(2, 0), p).expect("valid gallery system")
}

/// U1 with CR `|0⟩` at noise `p`.
pub fn u1_ground(p: f64) -> CtcSystem {
    u1_system(DensityMatrix::basis(2, 0), p).expect("valid gallery system")
}

/// Discontinuity example at one cell of the pure family.
pub fn u3_cell(eps_a: f64, eps_b: f64, p: f64) -> CtcSystem {
    let rho = EpsFamily::Pure.state(eps_a, eps_b).expect("eps in [0, 1]");
    u3_system(rho, p).expect("valid gallery system")
}
