use std::sync::Arc;

use super::profile::{bump_normalization, KernelShape, RadialProfile};
use super::stream::{tensor_hermite, truncate_stream, TruncationSettings};
use super::vector_field::{ParticleKernel, VectorField};
use crate::error::{check_dim, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MollifierKind {
    /// De Giorgi mollifier `E_ε = e^{εΔ}` (Gaussian of variance `2ε`).
    Heat,
    /// Convolution with the compact bump `γ_ε`.
    Bump,
    /// Clip-then-heat-smooth of the field's stream matrix.
    StreamTruncation,
}

/// A regularisation family indexed by a decreasing scale schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierFamily {
    pub kind: MollifierKind,
    pub schedule: Vec<f64>,
    /// Nodes per axis for the convolution quadrature.
    pub quadrature_nodes: usize,
    /// Upper bound on the total number of quadrature nodes.
    pub node_budget: usize,
    /// Coefficient of the logarithmic clip envelope (stream truncation).
    pub log_coeff: f64,
}

impl MollifierFamily {
    pub fn new(kind: MollifierKind, schedule: Vec<f64>) -> Result<Self> {
        let fam = Self { kind, schedule, quadrature_nodes: 8, node_budget: 1 << 22, log_coeff: 1.0 };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_quadrature(mut self, nodes: usize, budget: usize) -> Self {
        self.quadrature_nodes = nodes;
        self.node_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(LabError::ConfigInvalid("mollifier schedule is empty".into()));
        }
        if self.schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(LabError::ConfigInvalid("mollifier scales must be positive".into()));
        }
        if self.schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::ConfigInvalid(
                "mollifier schedule must be strictly decreasing".into(),
            ));
        }
        if self.quadrature_nodes == 0 {
            return Err(LabError::ConfigInvalid("quadrature node count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn scale(&self, index: usize) -> Result<f64> {
        self.schedule.get(index).copied().ok_or_else(|| {
            LabError::ConfigInvalid(format!(
                "mollifier index {index} outside schedule of length {}",
                self.schedule.len()
            ))
        })
    }

    /// Pairwise-mollified particle kernel at `schedule[index]`, the form used
    /// by the ensemble simulator.
    pub fn pair_mollified(&self, kernel: &ParticleKernel, index: usize) -> Result<PairMollifiedKernel> {
        let eps = self.scale(index)?;
        match self.kind {
            MollifierKind::Heat => Ok(PairMollifiedKernel::heat(kernel.clone(), eps)),
            MollifierKind::Bump => Ok(PairMollifiedKernel::bump(kernel.clone(), eps)),
            MollifierKind::StreamTruncation => Err(LabError::ConfigInvalid(
                "stream truncation applies to stream perturbations, not to the particle kernel".into(),
            )),
        }
    }
}

/// Mollify `field` at `schedule[index]` and evaluate at `x` by deterministic
/// quadrature: tensor Gauss–Hermite for the heat kernel, a midpoint rule on
/// the support ball for the bump, and clip-then-smooth of the stream matrix
/// (followed by its row-divergence) for stream truncation. Quadrature nodes
/// landing on the singular set are dropped.
pub fn mollify(family: &MollifierFamily, field: &VectorField, index: usize, x: &[f64]) -> Result<Vec<f64>> {
    let eps = family.scale(index)?;
    let n = field.ambient_dim();
    check_dim(n, x.len())?;
    match family.kind {
        MollifierKind::Heat => {
            let (nodes, weights) = tensor_hermite(n, family.quadrature_nodes, family.node_budget)?;
            let sigma = (2.0 * eps).sqrt();
            convolve(field, x, nodes.chunks_exact(n).map(|z| z.iter().map(|v| sigma * v)), &weights)
        }
        MollifierKind::Bump => {
            let (offsets, weights) = bump_midpoint(n, eps, family.quadrature_nodes, family.node_budget)?;
            convolve(field, x, offsets.chunks_exact(n).map(|z| z.iter().copied()), &weights)
        }
        MollifierKind::StreamTruncation => {
            let q = field.stream_matrix().ok_or_else(|| {
                LabError::ConfigInvalid("field has no stream-matrix representation".into())
            })?;
            let settings = TruncationSettings {
                log_coeff: family.log_coeff,
                nodes_per_axis: family.quadrature_nodes,
                node_budget: family.node_budget,
            };
            truncate_stream(&q, eps, settings)?.row_divergence(x)
        }
    }
}

fn convolve<I, O>(field: &VectorField, x: &[f64], offsets: O, weights: &[f64]) -> Result<Vec<f64>>
where
    I: Iterator<Item = f64>,
    O: Iterator<Item = I>,
{
    let n = field.ambient_dim();
    let mut acc = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut val = vec![0.0; n];
    for (off, &w) in offsets.zip(weights) {
        for ((yk, xk), o) in y.iter_mut().zip(x).zip(off) {
            *yk = xk + o;
        }
        match field.eval_into(&y, &mut val) {
            Ok(()) => {
                for (a, v) in acc.iter_mut().zip(&val) {
                    *a += w * v;
                }
            }
            Err(LabError::SingularPoint(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(acc)
}

/// Midpoint cells of `[-ε, ε]^n` inside the ball, weighted by `γ_ε` and
/// normalised to unit total mass.
fn bump_midpoint(n: usize, eps: f64, per_axis: usize, budget: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = (per_axis as u128).pow(n as u32);
    if total > budget as u128 {
        return Err(LabError::QuadratureBudgetExceeded {
            needed: total.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    let c = bump_normalization(n);
    let h = 2.0 / per_axis as f64;
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; n];
    let mut p = vec![0.0; n];
    for _ in 0..total as usize {
        for (pk, &k) in p.iter_mut().zip(&idx) {
            *pk = -1.0 + (k as f64 + 0.5) * h;
        }
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 < 1.0 {
            weights.push(c * (1.0 / (r2 - 1.0)).exp());
            offsets.extend(p.iter().map(|v| v * eps));
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) {
        return Err(LabError::QuadratureBudgetExceeded { needed: total as usize * 2, budget });
    }
    weights.iter_mut().for_each(|w| *w /= mass);
    Ok((offsets, weights))
}

/// The particle kernel with every pair term mollified in `R^d`:
/// `K(u) = u/|u|²` is replaced by `ψ(|u|/σ) u/|u|²`.
///
/// For the heat family this coincides with `E_ε b` on `R^{Nd}` because the
/// difference of two independent Gaussian perturbations of variance `2ε` is
/// Gaussian with variance `4ε`, hence `σ = 2√ε`. For the bump family each
/// pair term is convolved with `γ_ε` on `R^d`, `σ = ε`.
#[derive(Debug, Clone)]
pub struct PairMollifiedKernel {
    kernel: ParticleKernel,
    profile: Arc<RadialProfile>,
    sigma: f64,
    eps: f64,
}

impl PairMollifiedKernel {
    pub fn heat(kernel: ParticleKernel, eps: f64) -> Self {
        let profile = RadialProfile::get(KernelShape::Heat, kernel.d);
        Self { kernel, profile, sigma: 2.0 * eps.sqrt(), eps }
    }

    pub fn bump(kernel: ParticleKernel, eps: f64) -> Self {
        let profile = RadialProfile::get(KernelShape::Bump, kernel.d);
        Self { kernel, profile, sigma: eps, eps }
    }

    pub fn kernel(&self) -> &ParticleKernel {
        &self.kernel
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Pair length scale of the mollifier.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Bound on the magnitude of each block of the drift.
    pub fn block_bound(&self) -> f64 {
        let k = &self.kernel;
        (k.n - 1) as f64 * k.pair_coefficient() * self.profile.max_psi_over_s() / self.sigma
    }

    /// Evaluate the mollified drift into `out` (length `N·d`). Finite at every
    /// configuration, coincident particles included.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let k = &self.kernel;
        let (n, d) = (k.n, k.d);
        let coef = k.pair_coefficient();
        let inv_sigma = 1.0 / self.sigma;
        out.iter_mut().for_each(|o| *o = 0.0);
        let uniform = matches!(k.modulation, super::Modulation::Uniform);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut r2 = 0.0;
                for c in 0..d {
                    let u = x[i * d + c] - x[j * d + c];
                    r2 += u * u;
                }
                if r2 == 0.0 {
                    continue;
                }
                let w = coef * self.profile.psi(r2.sqrt() * inv_sigma) / r2;
                let (wij, wji) = if uniform {
                    (w, w)
                } else {
                    (w * k.modulation.get(n, i, j), w * k.modulation.get(n, j, i))
                };
                for c in 0..d {
                    let u = x[i * d + c] - x[j * d + c];
                    out[i * d + c] += wij * u;
                    out[j * d + c] -= wji * u;
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }
}
