//! d-metrics, d-connections and their torsion, curvature and nonmetricity.
//!
//! Connection coefficients are stored over the N-adapted frame c_A = (z_a', v_a)
//! as `Γ[D][B][X]`, the c_D component of D_{c_X} c_B. A d-connection only fills
//! the four blocks that preserve the splitting.

mod connection;
mod metric;
mod tensors;

pub use connection::*;
pub use metric::*;
pub use tensors::*;

/// Numeric rank-3 array.
pub type Arr3 = Vec<Vec<Vec<f64>>>;
/// Numeric rank-4 array.
pub type Arr4 = Vec<Vec<Vec<Vec<f64>>>>;

pub(crate) fn vals2(m: &crate::linalg::Mat) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()
}

pub(crate) fn vals3(t: &crate::linalg::T3) -> Arr3 {
    t.iter().map(vals2).collect()
}

pub(crate) fn max_abs3(t: &Arr3) -> f64 {
    t.iter().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
}

pub(crate) fn max_abs4(t: &Arr4) -> f64 {
    t.iter().map(max_abs3).fold(0.0, f64::max)
}
