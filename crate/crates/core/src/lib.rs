//! Monte Carlo laboratory for interacting Brownian particles with singular
//! attracting drifts.
//!
//! * [`fields`]: drift fields, stream matrices, mollifier families
//! * [`norms`]: form-bounds, Morrey and Chang–Wilson–Wolff functionals
//! * [`bessel`]: squared Bessel samplers and the collision regime classifier
//! * [`particles`]: ensemble simulator, collision statistics, uniqueness test
//! * [`hardy`]: bounds on the many-particle Hardy constant

pub mod bessel;
pub mod error;
pub mod fields;
pub mod hardy;
pub mod norms;
pub mod particles;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{LabError, Result};
