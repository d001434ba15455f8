use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LabError, Result};
use crate::fields::VectorField;
use crate::quadrature::{golden_max, GaussLegendre, Halton};
use crate::rng::{self, domain};

const GL_ORDER: usize = 8;
const GOLDEN_ITERS: usize = 40;
const SWEEPS: usize = 3;

/// Radial trial functions `φ(x) = f(|x − center|)` with
/// `f(r) = (r² + r0²)^{−a/2} exp(−r²/R²)`, `R = r0 e^λ`: a power law of
/// exponent `a` between the core radius `r0` and the Gaussian cutoff `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFamily {
    pub center: Vec<f64>,
    pub r0: f64,
    pub a_range: (f64, f64),
    pub lambda_range: (f64, f64),
    /// Quasi-Monte Carlo directions for the sphere means of `|b|²`.
    pub directions: usize,
    /// Gauss–Legendre panels per unit of `ln r`.
    pub panels_per_unit: f64,
    pub seed: u64,
}

impl TrialFamily {
    /// Power laws centred at the origin of `R^n`, exponents up to `n − 2`
    /// (the Hardy optimiser sits at `(n − 2)/2`).
    pub fn radial(n: usize) -> Self {
        Self {
            center: vec![0.0; n],
            r0: 1.0,
            a_range: (0.0, (n as f64 - 2.0).max(1.0)),
            lambda_range: (1.0, 30.0),
            directions: 64,
            panels_per_unit: 4.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.r0 > 0.0
            && self.a_range.0 >= 0.0
            && self.a_range.1 >= self.a_range.0
            && self.lambda_range.0 > 0.0
            && self.lambda_range.1 >= self.lambda_range.0
            && self.directions >= 1
            && self.panels_per_unit > 0.0
            && !self.center.is_empty()
            && self.center.len() <= 40;
        if ok {
            Ok(())
        } else {
            Err(LabError::ConfigInvalid("invalid trial family".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighEstimate {
    /// `max ⟨|b|²φ²⟩ / ⟨|∇φ|²⟩` over the family.
    pub delta: f64,
    pub a: f64,
    pub lambda: f64,
    pub evaluations: usize,
    pub rejection_fraction: f64,
}

/// Lower estimate of the sharp form-bound (with `c_δ = 0`) by maximising the
/// Rayleigh quotient over radial trial functions. Integrals are taken in
/// `t = ln r` on a fixed composite Gauss–Legendre grid with sphere means of
/// `|b|²` precomputed at every node.
pub fn rayleigh_formbound(field: &VectorField, trial: &TrialFamily, budget: usize) -> Result<RayleighEstimate> {
    trial.validate()?;
    let n = field.ambient_dim();
    if trial.center.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: trial.center.len() });
    }
    let t_lo = trial.r0.ln() - 15.0;
    let t_hi = trial.r0.ln() + trial.lambda_range.1 + 3.0;
    let panels = ((t_hi - t_lo) * trial.panels_per_unit).ceil() as usize;
    let total_nodes = panels * GL_ORDER;
    let needed = total_nodes.saturating_mul(trial.directions);
    if needed > budget {
        return Err(LabError::QuadratureBudgetExceeded { needed, budget });
    }

    let gl = GaussLegendre::new(GL_ORDER);
    let width = (t_hi - t_lo) / panels as f64;
    let mut ts = Vec::with_capacity(total_nodes);
    let mut ws = Vec::with_capacity(total_nodes);
    for p in 0..panels {
        let a = t_lo + p as f64 * width;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            ts.push(a + 0.5 * width * (x + 1.0));
            ws.push(0.5 * width * w);
        }
    }

    let dirs = sphere_directions(n, trial.directions, trial.seed);
    let means: Vec<Result<(f64, usize)>> = ts
        .par_iter()
        .map(|&t| {
            let r = t.exp();
            let mut y = vec![0.0; n];
            let mut b = vec![0.0; n];
            let (mut acc, mut used, mut rejected) = (0.0, 0usize, 0usize);
            for w in dirs.chunks_exact(n) {
                for ((yk, ck), wk) in y.iter_mut().zip(&trial.center).zip(w) {
                    *yk = ck + r * wk;
                }
                match field.eval_into(&y, &mut b) {
                    Ok(()) => {
                        acc += b.iter().map(|v| v * v).sum::<f64>();
                        used += 1;
                    }
                    Err(LabError::SingularPoint(_)) => rejected += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((if used > 0 { acc / used as f64 } else { 0.0 }, rejected))
        })
        .collect();
    let mut sphere_mean = Vec::with_capacity(total_nodes);
    let mut rejected = 0usize;
    for m in means {
        let (v, rej) = m?;
        sphere_mean.push(v);
        rejected += rej;
    }

    let nf = n as f64;
    let r0sq = trial.r0 * trial.r0;
    let quotient = |a: f64, lambda: f64| -> f64 {
        let big_r2 = (trial.r0 * lambda.exp()).powi(2);
        let log_measure = |t: f64| {
            let r2 = (2.0 * t).exp();
            -a * (r2 + r0sq).ln() - 2.0 * r2 / big_r2 + nf * t
        };
        // the quotient is scale free; shift logs to avoid overflow in high dimension
        let shift = ts.iter().map(|&t| log_measure(t)).fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for ((&t, &w), &am) in ts.iter().zip(&ws).zip(&sphere_mean) {
            let r = t.exp();
            let measure = w * (log_measure(t) - shift).exp();
            let dlog = -a * r / (r * r + r0sq) - 2.0 * r / big_r2;
            num += measure * am;
            den += measure * dlog * dlog;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };

    let (a_lo, a_hi) = trial.a_range;
    let (l_lo, l_hi) = trial.lambda_range;
    let mut a = 0.5 * (a_lo + a_hi);
    let mut lambda = 0.5 * (l_lo + l_hi);
    let mut best = quotient(a, lambda);
    for _ in 0..SWEEPS {
        let (na, qa) = golden_max(a_lo, a_hi, GOLDEN_ITERS, |s| quotient(s, lambda));
        if qa >= best {
            a = na;
            best = qa;
        }
        let (nl, ql) = golden_max(l_lo, l_hi, GOLDEN_ITERS, |s| quotient(a, s));
        if ql >= best {
            lambda = nl;
            best = ql;
        }
    }
    Ok(RayleighEstimate {
        delta: best,
        a,
        lambda,
        evaluations: needed,
        rejection_fraction: rejected as f64 / needed as f64,
    })
}

/// Low-discrepancy unit vectors in `R^n` (Halton mapped through the normal
/// quantile, then normalised).
fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, domain::QUADRATURE, 1);
    let shift: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let halton = Halton::new(n, shift);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut u = vec![0.0; n];
    let mut out = Vec::with_capacity(count * n);
    for i in 1..=count as u64 {
        halton.point(i, &mut u);
        let start = out.len();
        out.extend(u.iter().map(|&v| normal.inverse_cdf(v.clamp(1e-15, 1.0 - 1e-15))));
        let norm = out[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
        out[start..].iter_mut().for_each(|v| *v /= norm);
    }
    out
}
