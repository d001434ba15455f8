use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LabError, Result};
use crate::fields::VectorField;
use crate::quadrature::Halton;
use crate::rng::{self, domain};

/// Discretisation of `sup_{x, r}`: a finite set of centres and an increasing
/// sequence of radii, with a fixed quasi-Monte Carlo rule per ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub mc_nodes: usize,
    pub seed: u64,
}

/// Result of a grid maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallEstimate {
    pub value: f64,
    pub center_index: usize,
    pub radius: f64,
    /// Fraction of quadrature nodes dropped because they hit the singular set.
    pub rejection_fraction: f64,
}

pub const MIN_MC_NODES: usize = 1000;

impl BallGrid {
    pub fn new(centers: Vec<Vec<f64>>, radii: Vec<f64>, mc_nodes: usize, seed: u64) -> Result<Self> {
        let grid = Self { centers, radii, mc_nodes, seed };
        grid.validate()?;
        Ok(grid)
    }

    /// Radii `r_min · 2^k`, `k = 0..=k_max`.
    pub fn dyadic(centers: Vec<Vec<f64>>, r_min: f64, k_max: usize, mc_nodes: usize, seed: u64) -> Result<Self> {
        let radii = (0..=k_max).map(|k| r_min * 2f64.powi(k as i32)).collect();
        Self::new(centers, radii, mc_nodes, seed)
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.radii.is_empty() {
            return Err(LabError::ConfigInvalid("ball grid needs centres and radii".into()));
        }
        let n = self.centers[0].len();
        if n == 0 || n > 39 || self.centers.iter().any(|c| c.len() != n) {
            return Err(LabError::ConfigInvalid(
                "ball grid centres must share a dimension between 1 and 39".into(),
            ));
        }
        if !(self.radii[0] > 0.0) || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::ConfigInvalid(
                "ball grid radii must be positive and strictly increasing".into(),
            ));
        }
        if self.mc_nodes < MIN_MC_NODES {
            return Err(LabError::ConfigInvalid(format!(
                "ball grid needs at least {MIN_MC_NODES} nodes per ball"
            )));
        }
        Ok(())
    }

    /// Nodes of the unit ball with weights of unit mean. Radii are drawn as
    /// `u^{2/n}` (weight `2u`), which tames point singularities at the centre.
    fn unit_ball_rule(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut r = rng::stream(self.seed, domain::QUADRATURE, 0);
        let shift: Vec<f64> = (0..=n).map(|_| r.random::<f64>()).collect();
        let halton = Halton::new(n + 1, shift);
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let mut u = vec![0.0; n + 1];
        let mut nodes = Vec::with_capacity(self.mc_nodes * n);
        let mut weights = Vec::with_capacity(self.mc_nodes);
        for i in 1..=self.mc_nodes as u64 {
            halton.point(i, &mut u);
            let start = nodes.len();
            let mut norm2 = 0.0;
            for &uk in &u[..n] {
                let z = normal.inverse_cdf(uk.clamp(1e-15, 1.0 - 1e-15));
                norm2 += z * z;
                nodes.push(z);
            }
            let t = u[n].max(1e-300);
            let rho = t.powf(2.0 / n as f64) / norm2.sqrt();
            nodes[start..].iter_mut().for_each(|z| *z *= rho);
            weights.push(2.0 * t);
        }
        (nodes, weights)
    }
}

/// Ball averages of `g(|b|, r)` for every grid entry, then the maximum of
/// `post(average, r)`.
fn maximise(
    field: &VectorField,
    grid: &BallGrid,
    g: impl Fn(f64, f64) -> f64 + Sync,
    post: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<BallEstimate> {
    grid.validate()?;
    let n = grid.dim();
    if field.ambient_dim() != n {
        return Err(LabError::DimensionMismatch { expected: field.ambient_dim(), got: n });
    }
    let (nodes, weights) = grid.unit_ball_rule();
    let entries: Vec<(usize, f64)> = (0..grid.centers.len())
        .flat_map(|c| grid.radii.iter().map(move |&r| (c, r)))
        .collect();
    let results: Vec<Result<(f64, usize, usize)>> = entries
        .par_iter()
        .map(|&(ci, r)| {
            let center = &grid.centers[ci];
            let mut y = vec![0.0; n];
            let mut b = vec![0.0; n];
            let (mut acc, mut mass, mut rejected) = (0.0, 0.0, 0usize);
            for (z, &w) in nodes.chunks_exact(n).zip(&weights) {
                for ((yk, ck), zk) in y.iter_mut().zip(center).zip(z) {
                    *yk = ck + r * zk;
                }
                match field.eval_into(&y, &mut b) {
                    Ok(()) => {
                        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                        acc += w * g(nb, r);
                        mass += w;
                    }
                    Err(LabError::SingularPoint(_)) => rejected += 1,
                    Err(e) => return Err(e),
                }
            }
            let avg = if mass > 0.0 { acc / mass } else { 0.0 };
            Ok((post(avg, r), ci, rejected))
        })
        .collect();
    let mut best = BallEstimate { value: f64::NEG_INFINITY, center_index: 0, radius: 0.0, rejection_fraction: 0.0 };
    let mut rejected_total = 0usize;
    for (res, &(_, r)) in results.into_iter().zip(&entries) {
        let (v, ci, rej) = res?;
        rejected_total += rej;
        if v > best.value {
            best.value = v;
            best.center_index = ci;
            best.radius = r;
        }
    }
    best.rejection_fraction = rejected_total as f64 / (entries.len() * grid.mc_nodes) as f64;
    Ok(best)
}

/// `max_{x, r} r · (⨍_{B_r(x)} |b|^p)^{1/p}` over the grid. A lower estimate
/// of the Morrey norm.
pub fn morrey_functional(field: &VectorField, p: f64, grid: &BallGrid) -> Result<BallEstimate> {
    if !(p >= 1.0) {
        return Err(LabError::ConfigInvalid(format!("Morrey exponent must be >= 1, got {p}")));
    }
    maximise(field, grid, |nb, _| nb.powf(p), |avg, r| r * avg.powf(1.0 / p))
}

/// `max_{x, r} ⨍_{B_r(x)} |b|² r² (1 + (log⁺(|b|² r²))^{1+α})` over the grid.
pub fn cww_functional(field: &VectorField, alpha: f64, grid: &BallGrid) -> Result<BallEstimate> {
    if !(alpha > 0.0) {
        return Err(LabError::ConfigInvalid(format!("CWW exponent must be > 0, got {alpha}")));
    }
    maximise(
        field,
        grid,
        |nb, r| {
            let s = nb * nb * r * r;
            s * (1.0 + s.ln().max(0.0).powf(1.0 + alpha))
        },
        |avg, _| avg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn inverse_square(n: usize) -> VectorField {
        // x/|x|² equals the Hardy field with √δ (n−2)/2 = 1
        let delta = (2.0 / (n as f64 - 2.0)).powi(2);
        VectorField::hardy(delta, n).unwrap()
    }

    fn grid3(k_max: usize) -> BallGrid {
        let centers = vec![vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.3, -0.4, 0.2]];
        BallGrid::dyadic(centers, 0.125, k_max, 20_000, 7).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(BallGrid::new(vec![vec![0.0]], vec![1.0, 0.5], 1000, 0).is_err());
        assert!(BallGrid::new(vec![vec![0.0]], vec![1.0], 999, 0).is_err());
        assert!(BallGrid::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0], 1000, 0).is_err());
        assert!(BallGrid::new(vec![], vec![1.0], 1000, 0).is_err());
    }

    #[test]
    fn unit_ball_rule_has_unit_mass_and_uniform_second_moment() {
        let grid = BallGrid::dyadic(vec![vec![0.0; 3]], 1.0, 0, 50_000, 1).unwrap();
        let (nodes, w) = grid.unit_ball_rule();
        let mass: f64 = w.iter().sum::<f64>() / w.len() as f64;
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
        // E|Y|² = n/(n+2) for the uniform law on the ball
        let m2: f64 = nodes
            .chunks_exact(3)
            .zip(&w)
            .map(|(z, w)| w * z.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / w.len() as f64;
        assert!((m2 - 0.6).abs() < 2e-3, "{m2}");
        assert!(nodes.chunks_exact(3).all(|z| z.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12));
    }

    #[test]
    fn zero_field() {
        let z = VectorField::constant(vec![0.0; 3]);
        assert_eq!(morrey_functional(&z, 2.0, &grid3(2)).unwrap().value, 0.0);
        assert_eq!(cww_functional(&z, 1.0, &grid3(2)).unwrap().value, 0.0);
    }

    #[test]
    fn centred_inverse_square_morrey() {
        let est = morrey_functional(&inverse_square(3), 2.0, &grid3(3)).unwrap();
        let exact = 3f64.sqrt();
        assert!(est.value >= 0.95 * exact, "{est:?}");
        assert!(est.value <= 1.05 * exact, "{est:?}");
        let refined = morrey_functional(&inverse_square(3), 2.0, &grid3(6)).unwrap();
        assert!(refined.value >= est.value);
        assert!((refined.value / est.value - 1.0).abs() < 0.05);
    }

    #[test]
    fn inverse_distance_on_first_block_is_stable() {
        // |x¹|^{-1} on R^4 (two planar particles), p = 1.5
        let f = VectorField::custom(4, "inv_x1", |x, out| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            out.iter_mut().for_each(|o| *o = 0.0);
            if r < 1e-12 {
                return false;
            }
            out[0] = 1.0 / r;
            true
        });
        let centers = vec![vec![0.0; 4], vec![0.5, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]];
        let a = BallGrid::dyadic(centers.clone(), 0.25, 3, 20_000, 3).unwrap();
        let b = BallGrid::dyadic(centers, 0.25, 6, 20_000, 3).unwrap();
        let va = morrey_functional(&f, 1.5, &a).unwrap();
        let vb = morrey_functional(&f, 1.5, &b).unwrap();
        assert!(va.value.is_finite() && va.value > 0.0);
        assert!((vb.value / va.value - 1.0).abs() < 0.05, "{va:?} {vb:?}");
    }

    #[test]
    fn monotone_under_pointwise_domination() {
        let b = inverse_square(3);
        let big = b.scaled(1.5);
        let g = grid3(3);
        assert!(morrey_functional(&big, 2.0, &g).unwrap().value >= morrey_functional(&b, 2.0, &g).unwrap().value);
        assert!(cww_functional(&big, 1.0, &g).unwrap().value >= cww_functional(&b, 1.0, &g).unwrap().value);
    }

    #[test]
    fn bounded_field_in_unit_ball() {
        let f = VectorField::custom(3, "unit_bump", |x, out| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            out.iter_mut().for_each(|o| *o = 0.0);
            if r2 < 1.0 {
                out[0] = 1.0 - r2;
            }
            true
        });
        let g = BallGrid::new(vec![vec![0.0; 3]], vec![1.0], 5000, 0).unwrap();
        let v = cww_functional(&f, 1.0, &g).unwrap().value;
        assert!(v > 0.0 && v <= 1.0, "{v}");
    }

    #[test]
    fn cww_of_inverse_square_against_radial_oracle() {
        // centred ball in R^3: ⨍ = 3 ∫_0^1 t² t^{-2} (1 + (−2 ln t)^{1+α}) dt
        let alpha = 1.0;
        let gl = GaussLegendre::new(40);
        let mut oracle = 0.0;
        let mut hi = 1.0;
        for _ in 0..60 {
            let lo = hi * 0.5;
            oracle += gl.integrate(lo, hi, |t| 3.0 * (1.0 + (-2.0 * t.ln()).powf(1.0 + alpha)));
            hi = lo;
        }
        assert!((oracle - 27.0).abs() < 1e-6, "{oracle}");
        let g = BallGrid::new(vec![vec![0.0; 3]], vec![1.0], 50_000, 11).unwrap();
        let v = cww_functional(&inverse_square(3), alpha, &g).unwrap().value;
        assert!((v / oracle - 1.0).abs() < 0.03, "{v} vs {oracle}");
        let g2 = BallGrid::dyadic(vec![vec![0.0; 3]], 0.25, 4, 50_000, 11).unwrap();
        let v2 = cww_functional(&inverse_square(3), alpha, &g2).unwrap().value;
        assert!(v2 >= v * 0.999 && (v2 / oracle - 1.0).abs() < 0.03);
    }

    #[test]
    fn scaling_of_homogeneous_field() {
        // b_λ(x) = λ b(λx) has Morrey-2 value on grid/λ equal to that of b on grid
        let lambda = 3.0;
        let b = VectorField::custom(3, "shifted_inverse", |x, out| {
            let y = [x[0] - 1.0, x[1], x[2]];
            let r2: f64 = y.iter().map(|v| v * v).sum();
            if r2 < 1e-24 {
                return false;
            }
            for (o, v) in out.iter_mut().zip(y) {
                *o = v / r2 * (1.0 + 0.5 * x[2].tanh());
            }
            true
        });
        let bl = {
            let b = b.clone();
            VectorField::custom(3, "rescaled", move |x, out| {
                let y: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                match b.eval_into(&y, out) {
                    Ok(()) => {
                        out.iter_mut().for_each(|o| *o *= lambda);
                        true
                    }
                    Err(_) => false,
                }
            })
        };
        let centers = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]];
        let g = BallGrid::dyadic(centers.clone(), 0.125, 4, 10_000, 5).unwrap();
        let gl = BallGrid::dyadic(
            centers.iter().map(|c| c.iter().map(|v| v / lambda).collect()).collect(),
            0.125 / lambda,
            4,
            10_000,
            5,
        )
        .unwrap();
        let v = morrey_functional(&b, 2.0, &g).unwrap().value;
        let vl = morrey_functional(&bl, 2.0, &gl).unwrap().value;
        assert!((v / vl - 1.0).abs() < 1e-9, "{v} {vl}");
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let g = grid3(3);
        let b = inverse_square(3);
        let one = rng::with_workers(1, || morrey_functional(&b, 2.0, &g).unwrap());
        let four = rng::with_workers(4, || morrey_functional(&b, 2.0, &g).unwrap());
        assert_eq!(one, four);
    }
}
