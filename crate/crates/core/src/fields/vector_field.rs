use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, LabError, Result};
use crate::norms::formbound_from_kappa;

/// Distances below this count as lying on a singular set.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Static pairwise modulation table `e_ij` with `|e_ij| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    /// `e_ij ≡ 1`, the attracting Keller–Segel-type kernel.
    Uniform,
    /// Row-major `N × N` table.
    Table(Vec<f64>),
}

impl Modulation {
    #[inline]
    pub fn get(&self, n: usize, i: usize, j: usize) -> f64 {
        match self {
            Modulation::Uniform => 1.0,
            Modulation::Table(t) => t[i * n + j],
        }
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            Modulation::Uniform => true,
            Modulation::Table(t) => t.iter().all(|&e| e == 1.0),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let Modulation::Table(t) = self {
            if t.len() != n * n {
                return Err(LabError::ConfigInvalid(format!(
                    "modulation table needs {} entries, got {}",
                    n * n,
                    t.len()
                )));
            }
            if t.iter().any(|e| !e.is_finite() || e.abs() > 1.0) {
                return Err(LabError::ConfigInvalid(
                    "modulation entries must satisfy |e_ij| <= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// The N-particle attracting kernel on `R^{Nd}`:
/// `b^i(x) = (1/N) Σ_{j≠i} √κ (d−2)/2 e_ij (x^i − x^j)/|x^i − x^j|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleKernel {
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
    pub modulation: Modulation,
}

impl ParticleKernel {
    pub fn new(n: usize, d: usize, kappa: f64, modulation: Modulation) -> Result<Self> {
        if n < 2 || d < 3 {
            return Err(LabError::ConfigInvalid(format!(
                "particle kernel needs N >= 2 and d >= 3 (got N={n}, d={d})"
            )));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(LabError::ConfigInvalid(format!("kappa must be >= 0, got {kappa}")));
        }
        modulation.validate(n)?;
        Ok(Self { n, d, kappa, modulation })
    }

    /// Prefactor `√κ (d−2) / (2N)` multiplying each pair term.
    #[inline]
    pub fn pair_coefficient(&self) -> f64 {
        self.kappa.sqrt() * (self.d as f64 - 2.0) / (2.0 * self.n as f64)
    }

    /// Smallest pairwise distance of a configuration.
    pub fn min_pair_distance(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let r2: f64 = (0..d).map(|k| (x[i * d + k] - x[j * d + k]).powi(2)).sum();
                best = best.min(r2.sqrt());
            }
        }
        best
    }
}

/// Loci where a field cannot be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularSet {
    Empty,
    /// The single point 0.
    Origin,
    /// The axis `x_1 = x_2 = 0`.
    Axis,
    /// Configurations with `x^i = x^j` for some pair.
    PairCoincidence { n: usize, d: usize },
    /// Described only by the custom evaluator.
    Opaque,
}

/// A declared form-bound `(δ, c_δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormBound {
    pub delta: f64,
    pub c_delta: f64,
}

type CustomFn = dyn Fn(&[f64], &mut [f64]) -> bool + Send + Sync;

/// User supplied evaluator. Returns `false` when the point is singular.
#[derive(Clone)]
pub struct CustomField {
    pub name: String,
    eval: Arc<CustomFn>,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomField({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    /// `√δ (d−2)/2 · x/|x|²`.
    Hardy { delta: f64 },
    ParticleKernel(ParticleKernel),
    /// `amplitude · (x_2/ρ², −x_1/ρ², 0, …)`, `ρ² = x_1² + x_2²`.
    Rotational { amplitude: f64 },
    Constant { value: Vec<f64> },
    Custom(CustomField),
}

/// An evaluable, possibly singular, drift on `R^n`. Immutable once built.
#[derive(Debug, Clone)]
pub struct VectorField {
    ambient_dim: usize,
    kind: FieldKind,
    scale: f64,
    declared_formbound: Option<FormBound>,
}

impl VectorField {
    pub fn hardy(delta: f64, d: usize) -> Result<Self> {
        if d < 3 {
            return Err(LabError::ConfigInvalid(format!("Hardy drift needs d >= 3, got {d}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(LabError::ConfigInvalid(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self {
            ambient_dim: d,
            kind: FieldKind::Hardy { delta },
            scale: 1.0,
            declared_formbound: Some(FormBound { delta, c_delta: 0.0 }),
        })
    }

    pub fn particle_kernel(kernel: ParticleKernel) -> Self {
        let delta = formbound_from_kappa(kernel.n, kernel.kappa);
        Self {
            ambient_dim: kernel.n * kernel.d,
            kind: FieldKind::ParticleKernel(kernel),
            scale: 1.0,
            declared_formbound: Some(FormBound { delta, c_delta: 0.0 }),
        }
    }

    pub fn rotational(d: usize, amplitude: f64) -> Result<Self> {
        if d < 2 {
            return Err(LabError::ConfigInvalid("rotational field needs d >= 2".into()));
        }
        Ok(Self {
            ambient_dim: d,
            kind: FieldKind::Rotational { amplitude },
            scale: 1.0,
            declared_formbound: None,
        })
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let c2: f64 = value.iter().map(|v| v * v).sum();
        Self {
            ambient_dim: value.len(),
            kind: FieldKind::Constant { value },
            scale: 1.0,
            declared_formbound: Some(FormBound { delta: 0.0, c_delta: c2 }),
        }
    }

    pub fn custom(
        ambient_dim: usize,
        name: impl Into<String>,
        eval: impl Fn(&[f64], &mut [f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            ambient_dim,
            kind: FieldKind::Custom(CustomField {
                name: name.into(),
                eval: Arc::new(eval),
            }),
            scale: 1.0,
            declared_formbound: None,
        }
    }

    pub fn with_declared_formbound(mut self, bound: Option<FormBound>) -> Self {
        self.declared_formbound = bound;
        self
    }

    /// `λ · b`; the declared form-bound scales by `λ²`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.scale *= lambda;
        out.declared_formbound = self.declared_formbound.map(|b| FormBound {
            delta: b.delta * lambda * lambda,
            c_delta: b.c_delta * lambda * lambda,
        });
        out
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn declared_formbound(&self) -> Option<FormBound> {
        self.declared_formbound
    }

    pub fn singular_set(&self) -> SingularSet {
        match &self.kind {
            FieldKind::Hardy { .. } => SingularSet::Origin,
            FieldKind::ParticleKernel(k) => SingularSet::PairCoincidence { n: k.n, d: k.d },
            FieldKind::Rotational { .. } => SingularSet::Axis,
            FieldKind::Constant { .. } => SingularSet::Empty,
            FieldKind::Custom(_) => SingularSet::Opaque,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ambient_dim];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluate into a caller-provided buffer of length `ambient_dim`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.ambient_dim, x.len())?;
        check_dim(self.ambient_dim, out.len())?;
        match &self.kind {
            FieldKind::Hardy { delta } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2.sqrt() < SINGULAR_TOL {
                    return Err(LabError::SingularPoint("origin".into()));
                }
                let c = self.scale * delta.sqrt() * (self.ambient_dim as f64 - 2.0) / 2.0 / r2;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
            }
            FieldKind::ParticleKernel(k) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let (n, d) = (k.n, k.d);
                let coef = self.scale * k.pair_coefficient();
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let r2: f64 = (0..d).map(|c| (x[i * d + c] - x[j * d + c]).powi(2)).sum();
                        if r2.sqrt() < SINGULAR_TOL {
                            return Err(LabError::SingularPoint(format!(
                                "particles {i} and {j} coincide"
                            )));
                        }
                        let w = coef * k.modulation.get(n, i, j) / r2;
                        for c in 0..d {
                            out[i * d + c] += w * (x[i * d + c] - x[j * d + c]);
                        }
                    }
                }
            }
            FieldKind::Rotational { amplitude } => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                if rho2.sqrt() < SINGULAR_TOL {
                    return Err(LabError::SingularPoint("rotation axis".into()));
                }
                out.iter_mut().for_each(|o| *o = 0.0);
                let c = self.scale * amplitude / rho2;
                out[0] = c * x[1];
                out[1] = -c * x[0];
            }
            FieldKind::Constant { value } => {
                for (o, v) in out.iter_mut().zip(value) {
                    *o = self.scale * v;
                }
            }
            FieldKind::Custom(cf) => {
                if !(cf.eval)(x, out) {
                    return Err(LabError::SingularPoint(cf.name.clone()));
                }
                if self.scale != 1.0 {
                    out.iter_mut().for_each(|o| *o *= self.scale);
                }
            }
        }
        Ok(())
    }

    /// Stream matrix `Q` with row-divergence equal to this field, when one
    /// is known in closed form.
    pub fn stream_matrix(&self) -> Option<super::StreamMatrix> {
        match &self.kind {
            FieldKind::Rotational { amplitude } => Some(super::StreamMatrix::rotational(
                self.ambient_dim,
                self.scale * amplitude,
            )),
            FieldKind::Constant { value } => Some(super::StreamMatrix::linear(
                value.iter().map(|v| v * self.scale).collect(),
            )),
            _ => None,
        }
    }
}
