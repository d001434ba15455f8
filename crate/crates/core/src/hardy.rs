//! Bounds on the best constant `C_{d,N}` in the many-particle Hardy
//! inequality `∫|∇φ|² ≥ C_{d,N} Σ_{i<j} ∫ φ²/|x^i − x^j|²` on `R^{Nd}`, and
//! the κ thresholds derived from them.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

use crate::bessel::sticky_threshold;
use crate::error::{LabError, Result};
use crate::quadrature::golden_max;
use crate::rng::{self, domain};

/// The two radicands disagree by a factor 2; both are kept as written.
pub const RADICAND_NOTE: &str =
    "admissible endpoint uses radicand factor 3(d-2)^2/(d-1)^2, lower bound uses 3(d-2)^2/(2(d-1)^2)";

fn check(d: usize, n: usize) -> Result<()> {
    if d < 3 || n < 2 {
        return Err(LabError::ConfigInvalid(format!(
            "Hardy bounds need d >= 3 and N >= 2, got d = {d}, N = {n}"
        )));
    }
    Ok(())
}

fn branch(d: usize, n: usize, radicand_factor: f64) -> f64 {
    let (df, nf) = (d as f64, n as f64);
    let ratio = (df - 2.0).powi(2) / (df - 1.0).powi(2);
    1.0 / (1.0 + (1.0 + radicand_factor * ratio * (nf - 1.0) * (nf - 2.0)).sqrt())
}

/// `(d−2)² max{1/N, 1/(1 + √(1 + 3(d−2)²/(2(d−1)²)(N−1)(N−2)))}`.
pub fn hhlt_lower(d: usize, n: usize) -> Result<f64> {
    check(d, n)?;
    let df = d as f64;
    Ok((df - 2.0).powi(2) * (1.0 / n as f64).max(branch(d, n, 1.5)))
}

/// `d(d−2)/N`.
pub fn paper_upper(d: usize, n: usize) -> Result<f64> {
    check(d, n)?;
    let df = d as f64;
    Ok(df * (df - 2.0) / n as f64)
}

/// `(2d/(2(N−1))) π^{d/2} Γ(d/2)`.
pub fn hhlt_upper(d: usize, n: usize) -> Result<f64> {
    check(d, n)?;
    let df = d as f64;
    Ok(2.0 * df / (2.0 * (n as f64 - 1.0)) * PI.powf(df / 2.0) * gamma(df / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaThresholds {
    /// `4N²/(N−1)²`.
    pub kappa_hyp: f64,
    /// `16`.
    pub kappa_hyp2: f64,
    /// `16 (1 ∨ N/(1 + √(1 + 3(d−2)²/(d−1)² (N−1)(N−2))))²`.
    pub admissible_endpoint: f64,
    /// Whether the `1` in the maximum is the larger entry.
    pub first_branch_active: bool,
}

pub fn kappa_thresholds(d: usize, n: usize) -> Result<KappaThresholds> {
    check(d, n)?;
    let nf = n as f64;
    let second = nf * branch(d, n, 3.0);
    let first_branch_active = second <= 1.0;
    Ok(KappaThresholds {
        kappa_hyp: 4.0 * nf * nf / ((nf - 1.0) * (nf - 1.0)),
        kappa_hyp2: 16.0,
        admissible_endpoint: 16.0 * second.max(1.0).powi(2),
        first_branch_active,
    })
}

/// `√κ (d−2)²/N / C` at `κ = sticky_threshold(d)` and `C = paper_upper(d, N)`;
/// equals 4 identically.
pub fn blowup_ratio(d: usize, n: usize) -> Result<f64> {
    let df = d as f64;
    Ok(sticky_threshold(d).sqrt() * (df - 2.0).powi(2) / n as f64 / paper_upper(d, n)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub d: usize,
    pub n: usize,
    pub hhlt_lower: f64,
    pub paper_upper: f64,
    pub hhlt_upper: f64,
    pub kappa_hyp: f64,
    pub kappa_hyp2: f64,
    pub admissible_endpoint: f64,
    pub variational: Option<VariationalEstimate>,
}

impl BoundRow {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let k = kappa_thresholds(d, n)?;
        Ok(Self {
            d,
            n,
            hhlt_lower: hhlt_lower(d, n)?,
            paper_upper: paper_upper(d, n)?,
            hhlt_upper: hhlt_upper(d, n)?,
            kappa_hyp: k.kappa_hyp,
            kappa_hyp2: k.kappa_hyp2,
            admissible_endpoint: k.admissible_endpoint,
            variational: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
}

impl BoundTable {
    /// One row per `(d, N)` with `d` outer and `N` inner.
    pub fn new(d_range: impl IntoIterator<Item = usize>, n_range: impl IntoIterator<Item = usize> + Clone) -> Result<Self> {
        let mut rows = Vec::new();
        for d in d_range {
            for n in n_range.clone() {
                rows.push(BoundRow::new(d, n)?);
            }
        }
        Ok(Self { rows })
    }

    /// Attach variational estimates to the rows with `N ≤ 3`.
    pub fn with_variational(mut self, spec: &VariationalSpec, budget: usize) -> Result<Self> {
        for row in &mut self.rows {
            if row.n <= 3 {
                row.variational = Some(variational_upper(row.d, row.n, spec, budget)?);
            }
        }
        Ok(self)
    }
}

/// Trial functions `φ = Π_{i<j} f(|x^i − x^j|)` with
/// `f(r) = (r² + r0²)^{−a/2} exp(−r²/R²)`, `R = r0 e^λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalSpec {
    pub r0: f64,
    pub a_range: (f64, f64),
    pub lambda_range: (f64, f64),
    pub samples: usize,
    pub batches: usize,
    /// Golden-section iterations per parameter.
    pub iters: usize,
    pub seed: u64,
}

impl VariationalSpec {
    pub fn for_dim(d: usize) -> Self {
        Self {
            r0: 1.0,
            a_range: (0.0, d as f64),
            lambda_range: (1.0, 30.0),
            samples: 200_000,
            batches: 20,
            iters: 24,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.r0 > 0.0
            && self.a_range.0 >= 0.0
            && self.a_range.1 >= self.a_range.0
            && self.lambda_range.0 > 0.0
            && self.lambda_range.1 >= self.lambda_range.0
            && self.batches >= 2
            && self.samples >= self.batches;
        if ok {
            Ok(())
        } else {
            Err(LabError::ConfigInvalid("invalid variational spec".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationalEstimate {
    pub value: f64,
    pub stderr: f64,
    pub a: f64,
    pub lambda: f64,
    pub samples: usize,
}

/// Geometry of `N ≤ 3` particles with zero centre of mass, written in
/// orthonormal relative coordinates `(z1, z2)` adapted to one pair `(i, j)`:
/// `z1 = (x^i − x^j)/√2`, `z2 = (x^i + x^j − 2x^k)/√6`.
struct Layout {
    d: usize,
    n: usize,
    pairs: Vec<(usize, usize)>,
    /// `(i, j, k)` with `j < k`, both different from `i`.
    triples: Vec<(usize, usize, usize)>,
    t_lo: f64,
    t_hi: f64,
}

/// Quantities of one sample that every trial evaluation needs.
struct Sample {
    log_p: f64,
    r2: Vec<f64>,
    dots: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn ln_sphere_area(m: usize) -> f64 {
    2f64.ln() + (m as f64 / 2.0) * PI.ln() - ln_gamma(m as f64 / 2.0)
}

impl Layout {
    fn new(d: usize, n: usize, spec: &VariationalSpec) -> Self {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        let mut triples = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in j + 1..n {
                    if j != i && k != i {
                        triples.push((i, j, k));
                    }
                }
            }
        }
        let l0 = spec.r0.ln();
        Self {
            d,
            n,
            pairs,
            triples,
            t_lo: l0 - 8.0,
            t_hi: l0 + spec.lambda_range.1 + 3.0,
        }
    }

    fn rel_dim(&self) -> usize {
        (self.n - 1) * self.d
    }

    /// Log density of the log-radial law on `R^m` at radius `rho`.
    fn ln_log_radial(&self, m: usize, rho: f64) -> f64 {
        -ln_sphere_area(m) - m as f64 * rho.ln() - (self.t_hi - self.t_lo).ln()
    }

    fn draw_log_radial<R: Rng>(&self, out: &mut [f64], rng: &mut R) {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm2 += *v * *v;
        }
        let rho = rng.random_range(self.t_lo..self.t_hi).exp();
        let s = rho / norm2.sqrt();
        out.iter_mut().for_each(|v| *v *= s);
    }

    /// Difference vectors `x^a − x^b` (`a < b`, in `pairs` order) for the
    /// point with coordinates `(z1, z2)` adapted to pair `(i, j)`. Built
    /// directly from `z1`, `z2` so that close pairs keep full precision.
    fn diffs(&self, z1: &[f64], z2: &[f64], i: usize, j: usize) -> Vec<Vec<f64>> {
        let s2 = 2f64.sqrt();
        if self.n == 2 {
            return vec![z1.iter().map(|v| s2 * v).collect()];
        }
        let k = 3 - i - j;
        let c = 3.0 / 6f64.sqrt();
        let mut out = vec![Vec::new(); self.pairs.len()];
        let mut put = |a: usize, b: usize, v: Vec<f64>| {
            let (idx, sign) = if a < b { (self.pair_index(a, b), 1.0) } else { (self.pair_index(b, a), -1.0) };
            out[idx] = v.into_iter().map(|x| sign * x).collect();
        };
        put(i, j, z1.iter().map(|v| s2 * v).collect());
        put(i, k, z1.iter().zip(z2).map(|(a, b)| a / s2 + c * b).collect());
        put(j, k, z1.iter().zip(z2).map(|(a, b)| -a / s2 + c * b).collect());
        out
    }

    fn diff<'v>(&self, v: &'v [Vec<f64>], a: usize, b: usize) -> (f64, &'v [f64]) {
        if a < b {
            (1.0, &v[self.pair_index(a, b)])
        } else {
            (-1.0, &v[self.pair_index(b, a)])
        }
    }

    /// Norms of `(z1, z2)` for pair `(i, j)`.
    fn pair_coords(&self, v: &[Vec<f64>], i: usize, j: usize) -> (f64, f64) {
        let k = 3 - i - j;
        let (_, vij) = self.diff(v, i, j);
        let (si, vik) = self.diff(v, i, k);
        let (sj, vjk) = self.diff(v, j, k);
        let z1 = vij.iter().map(|x| x * x).sum::<f64>().sqrt() / 2f64.sqrt();
        let z2 = vik
            .iter()
            .zip(vjk)
            .map(|(a, b)| (si * a + sj * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / 6f64.sqrt();
        (z1, z2)
    }

    /// Equal-weight mixture of a log-radial law on the whole relative space
    /// and, for `N = 3`, one per pair with independent log-radial laws on
    /// `z1` and `z2`.
    fn components(&self) -> usize {
        if self.n == 2 {
            1
        } else {
            1 + self.pairs.len()
        }
    }

    /// Mixture log density. `exact` carries the coordinate norms of the
    /// component that produced the point (`None` for the full component,
    /// whose radius is `rho`); the others are recomputed from differences and
    /// floored at rounding level.
    fn ln_density(&self, v: &[Vec<f64>], rho: f64, exact: Option<(usize, f64, f64)>) -> f64 {
        let floor = 1e-15 * rho;
        let mut terms = vec![self.ln_log_radial(self.rel_dim(), rho)];
        if self.n == 3 {
            for (c, &(i, j)) in self.pairs.iter().enumerate() {
                let (z1, z2) = match exact {
                    Some((e, z1, z2)) if e == c => (z1, z2),
                    _ => {
                        let (z1, z2) = self.pair_coords(v, i, j);
                        (z1.max(floor), z2.max(floor))
                    }
                };
                terms.push(self.ln_log_radial(self.d, z1) + self.ln_log_radial(self.d, z2));
            }
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + (terms.iter().map(|t| (t - m).exp()).sum::<f64>() / terms.len() as f64).ln()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Sample {
        let d = self.d;
        let c = rng.random_range(0..self.components());
        let (v, rho, exact) = if c == 0 {
            let mut y = vec![0.0; self.rel_dim()];
            self.draw_log_radial(&mut y, rng);
            let (z1, z2) = y.split_at(d);
            (self.diffs(z1, z2, 0, 1), norm(&y), None)
        } else {
            let (i, j) = self.pairs[c - 1];
            let mut z1 = vec![0.0; d];
            let mut z2 = vec![0.0; d];
            self.draw_log_radial(&mut z1, rng);
            self.draw_log_radial(&mut z2, rng);
            let (n1, n2) = (norm(&z1), norm(&z2));
            let rho = n1.hypot(n2);
            (self.diffs(&z1, &z2, i, j), rho, Some((c - 1, n1, n2)))
        };
        let r2: Vec<f64> = v.iter().map(|w| w.iter().map(|x| x * x).sum()).collect();
        let dots = self
            .triples
            .iter()
            .map(|&(i, j, k)| {
                let (sa, a) = self.diff(&v, i, j);
                let (sb, b) = self.diff(&v, i, k);
                sa * sb * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect();
        Sample {
            log_p: self.ln_density(&v, rho, exact),
            r2,
            dots,
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().position(|&p| p == (i, j)).expect("pair")
    }
}

/// Weighted sums `(Σ w|∇φ|²/φ², Σ w V)` with `w = φ²/p` rescaled by `shift`.
struct Evaluator<'a> {
    layout: &'a Layout,
    a: f64,
    r0sq: f64,
    inv_r2cut: f64,
}

impl Evaluator<'_> {
    fn log_weight(&self, s: &Sample) -> f64 {
        s.r2.iter()
            .map(|&r2| -self.a * (r2 + self.r0sq).ln() - 2.0 * r2 * self.inv_r2cut)
            .sum::<f64>()
            - s.log_p
    }

    /// `g(r)/r` where `g = f'/f`.
    fn coeff(&self, r2: f64) -> f64 {
        -self.a / (r2 + self.r0sq) - 2.0 * self.inv_r2cut
    }

    fn grad_and_potential(&self, s: &Sample) -> (f64, f64) {
        let l = self.layout;
        let c: Vec<f64> = s.r2.iter().map(|&r2| self.coeff(r2)).collect();
        // each pair appears in the sums of both of its particles
        let mut grad = 2.0 * s.r2.iter().zip(&c).map(|(r2, c)| c * c * r2).sum::<f64>();
        for (t, &(i, j, k)) in l.triples.iter().enumerate() {
            grad += 2.0 * c[l.pair_index(i, j)] * c[l.pair_index(i, k)] * s.dots[t];
        }
        let pot = s.r2.iter().map(|r2| 1.0 / r2).sum();
        (grad, pot)
    }

    fn batch_sums(&self, batch: &[Sample], shift: f64) -> (f64, f64) {
        batch.iter().fold((0.0, 0.0), |(num, den), s| {
            let w = (self.log_weight(s) - shift).exp();
            let (g, v) = self.grad_and_potential(s);
            (num + w * g, den + w * v)
        })
    }

    fn batch_quotients(&self, batches: &[Vec<Sample>]) -> Vec<(f64, f64)> {
        let shift = batches
            .par_iter()
            .map(|b| b.iter().map(|s| self.log_weight(s)).fold(f64::NEG_INFINITY, f64::max))
            .reduce(|| f64::NEG_INFINITY, f64::max);
        batches.par_iter().map(|b| self.batch_sums(b, shift)).collect()
    }

    fn quotient(&self, batches: &[Vec<Sample>]) -> f64 {
        let sums = self.batch_quotients(batches);
        let num: f64 = sums.iter().map(|s| s.0).sum();
        let den: f64 = sums.iter().map(|s| s.1).sum();
        num / den
    }
}

/// Upper estimate of `C_{d,N}`: the Rayleigh quotient
/// `∫|∇φ|² / Σ_{i<j} ∫ φ²/|x^i − x^j|²` minimised over the product trial
/// family, with integrals over the centre-of-mass-free subspace estimated by
/// importance sampling. The same samples serve every trial, so the
/// nested golden-section search (λ outer, `a` inner) sees a smooth objective.
pub fn variational_upper(d: usize, n: usize, spec: &VariationalSpec, budget: usize) -> Result<VariationalEstimate> {
    check(d, n)?;
    if n > 3 {
        return Err(LabError::UnsupportedN(n));
    }
    spec.validate()?;
    if spec.samples > budget {
        return Err(LabError::QuadratureBudgetExceeded {
            needed: spec.samples,
            budget,
        });
    }
    let layout = Layout::new(d, n, spec);
    let per_batch = spec.samples / spec.batches;
    let batches: Vec<Vec<Sample>> = (0..spec.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(spec.seed, domain::QUADRATURE, b as u64);
            (0..per_batch).map(|_| layout.draw(&mut rng)).collect()
        })
        .collect();
    let evaluator = |a: f64, lambda: f64| Evaluator {
        layout: &layout,
        a,
        r0sq: spec.r0 * spec.r0,
        inv_r2cut: (-2.0 * lambda).exp() / (spec.r0 * spec.r0),
    };
    let best_a = |lambda: f64| {
        golden_max(spec.a_range.0, spec.a_range.1, spec.iters, |a| {
            -evaluator(a, lambda).quotient(&batches)
        })
    };
    let (lambda, _) = golden_max(spec.lambda_range.0, spec.lambda_range.1, spec.iters, |l| best_a(l).1);
    let (a, _) = best_a(lambda);

    let e = evaluator(a, lambda);
    let sums = e.batch_quotients(&batches);
    let num: f64 = sums.iter().map(|s| s.0).sum();
    let den: f64 = sums.iter().map(|s| s.1).sum();
    let value = num / den;
    let per: Vec<f64> = sums.iter().map(|s| s.0 / s.1).collect();
    let b = per.len() as f64;
    let m = per.iter().sum::<f64>() / b;
    let var = per.iter().map(|q| (q - m).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(VariationalEstimate {
        value,
        stderr: (var / b).sqrt(),
        a,
        lambda,
        samples: per_batch * spec.batches,
    })
}
