//! Singular drift fields, stream matrices and their regularisations.

mod mollifier;
mod profile;
mod stream;
mod vector_field;

pub use mollifier::{mollify, MollifierFamily, MollifierKind, PairMollifiedKernel};
pub use profile::{bump_normalization, psi_direct, sphere_area, KernelShape, RadialProfile};
pub use stream::{
    clip_bound, truncate_stream, CustomStream, StreamKind, StreamMatrix, TruncatedStream,
    TruncationSettings,
};
pub use vector_field::{
    CustomField, FieldKind, FormBound, Modulation, ParticleKernel, SingularSet, VectorField,
    SINGULAR_TOL,
};

use crate::error::{check_dim, Result};

/// Central-difference estimate of `Σ_i ∂_i v^i(x)` for any vector-valued map
/// `v`, e.g. `|y| field.eval(y)` or `|y| stream.row_divergence(y)`.
pub fn numeric_divergence(
    v: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    h_fd: f64,
) -> Result<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    let mut div = 0.0;
    for i in 0..n {
        y[i] = x[i] + h_fd;
        let plus = v(&y)?;
        check_dim(n, plus.len())?;
        y[i] = x[i] - h_fd;
        let minus = v(&y)?;
        y[i] = x[i];
        div += (plus[i] - minus[i]) / (2.0 * h_fd);
    }
    Ok(div)
}
