use std::fmt;
use std::sync::Arc;

use super::vector_field::SINGULAR_TOL;
use crate::error::{check_dim, LabError, Result};
use crate::quadrature::GaussHermite;

type EntryFn = dyn Fn(&[f64], usize, usize) -> Option<f64> + Send + Sync;

/// Stream matrix entries given by a closure on the strict upper triangle
/// `i < j`; the lower triangle is filled by antisymmetry.
#[derive(Clone)]
pub struct CustomStream {
    pub name: String,
    upper: Arc<EntryFn>,
}

impl fmt::Debug for CustomStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomStream({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum StreamKind {
    Zero,
    /// `Q^{12} = −Q^{21} = amplitude · log ρ`, `ρ² = x_1² + x_2²`; its
    /// row-divergence is the rotational field.
    Rotational { amplitude: f64 },
    /// `Q^{ij} = (c_i x_j − c_j x_i)/(n − 1)`, row-divergence `c`.
    Linear { c: Vec<f64> },
    Custom(CustomStream),
    /// Clip-then-heat-smooth regularisation of another stream matrix.
    Truncated(Arc<TruncatedStream>),
}

/// Antisymmetric matrix field `Q` whose row-divergence
/// `q^i = Σ_j ∂_j Q^{ij}` is a divergence-free drift.
#[derive(Debug, Clone)]
pub struct StreamMatrix {
    dim: usize,
    kind: StreamKind,
    pub bmo_seminorm_hint: Option<f64>,
}

#[derive(Debug)]
pub struct TruncatedStream {
    inner: StreamMatrix,
    eps: f64,
    log_coeff: f64,
    sigma: f64,
    /// Flattened tensor Gauss–Hermite nodes (`dim` per node) and weights.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const FD_STEP: f64 = 1e-5;

impl StreamMatrix {
    pub fn zero(dim: usize) -> Self {
        Self { dim, kind: StreamKind::Zero, bmo_seminorm_hint: Some(0.0) }
    }

    pub fn rotational(dim: usize, amplitude: f64) -> Self {
        assert!(dim >= 2);
        Self { dim, kind: StreamKind::Rotational { amplitude }, bmo_seminorm_hint: None }
    }

    pub fn linear(c: Vec<f64>) -> Self {
        assert!(c.len() >= 2);
        Self { dim: c.len(), kind: StreamKind::Linear { c }, bmo_seminorm_hint: None }
    }

    pub fn custom(
        dim: usize,
        name: impl Into<String>,
        upper: impl Fn(&[f64], usize, usize) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            kind: StreamKind::Custom(CustomStream { name: name.into(), upper: Arc::new(upper) }),
            bmo_seminorm_hint: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &StreamKind {
        &self.kind
    }

    /// Full matrix at `x`, row-major `dim × dim`.
    pub fn matrix_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        match &self.kind {
            StreamKind::Zero => {}
            StreamKind::Rotational { amplitude } => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if rho < SINGULAR_TOL {
                    return Err(LabError::SingularPoint("rotation axis".into()));
                }
                m[1] = amplitude * rho.ln();
                m[n] = -m[1];
            }
            StreamKind::Linear { c } => {
                let k = 1.0 / (n as f64 - 1.0);
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] = k * (c[i] * x[j] - c[j] * x[i]);
                    }
                }
            }
            StreamKind::Custom(cs) => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let v = (cs.upper)(x, i, j)
                            .ok_or_else(|| LabError::SingularPoint(cs.name.clone()))?;
                        m[i * n + j] = v;
                        m[j * n + i] = -v;
                    }
                }
            }
            StreamKind::Truncated(t) => t.smoothed_matrix(x, &mut m),
        }
        Ok(m)
    }

    pub fn entry(&self, x: &[f64], i: usize, j: usize) -> Result<f64> {
        Ok(self.matrix_at(x)?[i * self.dim + j])
    }

    /// Row-divergence `q^i(x) = Σ_j ∂_j Q^{ij}(x)`.
    pub fn row_divergence(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        match &self.kind {
            StreamKind::Zero => Ok(vec![0.0; n]),
            StreamKind::Rotational { amplitude } => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                if rho2.sqrt() < SINGULAR_TOL {
                    return Err(LabError::SingularPoint("rotation axis".into()));
                }
                let mut q = vec![0.0; n];
                q[0] = amplitude * x[1] / rho2;
                q[1] = -amplitude * x[0] / rho2;
                Ok(q)
            }
            StreamKind::Linear { c } => Ok(c.clone()),
            StreamKind::Custom(_) => {
                let mut q = vec![0.0; n];
                let mut y = x.to_vec();
                for j in 0..n {
                    y[j] = x[j] + FD_STEP;
                    let plus = self.matrix_at(&y)?;
                    y[j] = x[j] - FD_STEP;
                    let minus = self.matrix_at(&y)?;
                    y[j] = x[j];
                    for (i, qi) in q.iter_mut().enumerate() {
                        *qi += (plus[i * n + j] - minus[i * n + j]) / (2.0 * FD_STEP);
                    }
                }
                Ok(q)
            }
            StreamKind::Truncated(t) => Ok(t.smoothed_divergence(x)),
        }
    }
}

/// Componentwise clip bound `U_ε(y) = ((−c log|y| + 1/ε) ∧ 1/ε) ∨ 0`; the
/// lower bound is `V_ε = −U_ε`.
pub fn clip_bound(y: &[f64], eps: f64, log_coeff: f64) -> f64 {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return 1.0 / eps;
    }
    (-log_coeff * r.ln() + 1.0 / eps).min(1.0 / eps).max(0.0)
}

impl TruncatedStream {
    fn clipped_at(&self, y: &[f64], buf: &mut Vec<f64>) -> bool {
        match self.inner.matrix_at(y) {
            Ok(m) => {
                let u = clip_bound(y, self.eps, self.log_coeff);
                buf.clear();
                buf.extend(m.iter().map(|&q| q.clamp(-u, u)));
                true
            }
            Err(_) => false,
        }
    }

    fn smoothed_matrix(&self, x: &[f64], out: &mut [f64]) {
        let n = self.inner.dim;
        let mut y = vec![0.0; n];
        let mut buf = Vec::with_capacity(n * n);
        for (z, &w) in self.nodes.chunks_exact(n).zip(&self.weights) {
            for k in 0..n {
                y[k] = x[k] + self.sigma * z[k];
            }
            if self.clipped_at(&y, &mut buf) {
                for (o, v) in out.iter_mut().zip(&buf) {
                    *o += w * v;
                }
            }
        }
    }

    /// Differentiates the Gaussian kernel rather than the clipped field:
    /// `∂_j (Γ_σ * C)(x) = E[C(x + σZ) Z_j] / σ`.
    fn smoothed_divergence(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inner.dim;
        let mut q = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut buf = Vec::with_capacity(n * n);
        for (z, &w) in self.nodes.chunks_exact(n).zip(&self.weights) {
            for k in 0..n {
                y[k] = x[k] + self.sigma * z[k];
            }
            if self.clipped_at(&y, &mut buf) {
                for i in 0..n {
                    let s: f64 = (0..n).map(|j| buf[i * n + j] * z[j]).sum();
                    q[i] += w * s / self.sigma;
                }
            }
        }
        q
    }
}

/// Tensor Gauss–Hermite nodes for the standard normal law on `R^dim`.
pub(crate) fn tensor_hermite(dim: usize, per_axis: usize, budget: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = (per_axis as u128).pow(dim as u32);
    if total > budget as u128 {
        return Err(LabError::QuadratureBudgetExceeded {
            needed: total.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    let total = total as usize;
    let gh = GaussHermite::new(per_axis);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for &k in &idx {
            nodes.push(gh.nodes[k]);
            w *= gh.weights[k];
        }
        weights.push(w);
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    Ok((nodes, weights))
}

/// Settings for [`truncate_stream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSettings {
    /// Coefficient `c` of the logarithmic clip envelope.
    pub log_coeff: f64,
    /// Gauss–Hermite nodes per axis for the heat smoothing.
    pub nodes_per_axis: usize,
    pub node_budget: usize,
}

impl Default for TruncationSettings {
    fn default() -> Self {
        Self { log_coeff: 1.0, nodes_per_axis: 6, node_budget: 1 << 20 }
    }
}

/// `Q_ε = E_ε(Q ∧ U_ε ∨ V_ε)`: componentwise clip to `|Q| ≤ U_ε ≤ 1/ε`
/// followed by the heat semigroup at time `ε`.
pub fn truncate_stream(q: &StreamMatrix, eps: f64, settings: TruncationSettings) -> Result<StreamMatrix> {
    if !(eps > 0.0) {
        return Err(LabError::ConfigInvalid(format!("truncation eps must be > 0, got {eps}")));
    }
    let (nodes, weights) = tensor_hermite(q.dim, settings.nodes_per_axis, settings.node_budget)?;
    let inner = TruncatedStream {
        inner: q.clone(),
        eps,
        log_coeff: settings.log_coeff,
        sigma: (2.0 * eps).sqrt(),
        nodes,
        weights,
    };
    Ok(StreamMatrix {
        dim: q.dim,
        kind: StreamKind::Truncated(Arc::new(inner)),
        bmo_seminorm_hint: q.bmo_seminorm_hint,
    })
}
