//! Size functionals of singular drifts: form-bounds, Morrey and
//! Chang–Wilson–Wolff functionals, critical exponents.

mod ball;
mod rayleigh;

pub use ball::{cww_functional, morrey_functional, BallEstimate, BallGrid};
pub use rayleigh::{rayleigh_formbound, RayleighEstimate, TrialFamily};

use crate::error::{LabError, Result};
use crate::fields::sphere_area;

/// Form-bound of the N-particle kernel with attraction strength `κ`:
/// `δ = (N−1)²/N² · κ`.
pub fn formbound_from_kappa(n: usize, kappa: f64) -> f64 {
    let n = n as f64;
    (n - 1.0) * (n - 1.0) / (n * n) * kappa
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// Form-bound of a drift in weak `L^d` with quasi-norm `norm_d_inf`:
/// `δ = ‖b‖_{d,∞} |B₁|^{−1/d} · 2/(d−2)`.
pub fn weak_ld_formbound(norm_d_inf: f64, d: usize) -> Result<f64> {
    if d < 3 {
        return Err(LabError::ConfigInvalid(format!("weak L^d form-bound needs d >= 3, got {d}")));
    }
    Ok(norm_d_inf * unit_ball_volume(d).powf(-1.0 / d as f64) * 2.0 / (d as f64 - 2.0))
}

/// Critical Lebesgue exponent `p* = 2/(2 − √δ)` for `0 ≤ δ < 4`.
pub fn critical_p(delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(LabError::ConfigInvalid(format!("form-bound must be >= 0, got {delta}")));
    }
    if delta >= 4.0 {
        return Err(LabError::DeltaAtOrAboveCritical { delta });
    }
    Ok(2.0 / (2.0 - delta.sqrt()))
}
