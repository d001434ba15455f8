//! One-dimensional quadrature rules, graded composite integration,
//! low-discrepancy point sets and golden-section search.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(mid + half * z))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule normalised for the standard normal law:
/// `sum_k w_k f(z_k) ≈ E[f(Z)]`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        // Physicists' Hermite roots by Newton iteration on the orthonormal
        // recurrence, then rescaled to the probabilists' measure.
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                        - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let sqrt_pi = PI.sqrt();
        let nodes = x.iter().rev().map(|v| v * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().rev().map(|v| v / sqrt_pi).collect();
        Self { nodes, weights }
    }
}

/// Composite Gauss–Legendre integration over [a, b] with panels graded
/// geometrically toward the interior (or end) point `focus`, where the
/// integrand may have an integrable kink or steep layer.
pub fn integrate_graded(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    focus: Option<f64>,
    levels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    if let Some(c) = focus {
        if c > a && c < b {
            breaks.push(c);
        }
        let c = c.clamp(a, b);
        for k in 1..=levels {
            let scale = 0.5f64.powi(k as i32);
            let left = c - (c - a) * scale;
            let right = c + (b - c) * scale;
            if left > a && left < c {
                breaks.push(left);
            }
            if right < b && right > c {
                breaks.push(right);
            }
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Radical-inverse Halton sequence with a Cranley–Patterson rotation.
#[derive(Debug, Clone)]
pub struct Halton {
    bases: Vec<u32>,
    shift: Vec<f64>,
}

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

impl Halton {
    /// `dim` ≤ 40 coordinates; `shift` components in [0, 1).
    pub fn new(dim: usize, shift: Vec<f64>) -> Self {
        assert!(dim <= PRIMES.len(), "Halton supports at most 40 dimensions");
        assert_eq!(shift.len(), dim);
        Self {
            bases: PRIMES[..dim].to_vec(),
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// Point with index `i` (index 0 is skipped by callers if desired).
    pub fn point(&self, i: u64, out: &mut [f64]) {
        for ((o, &b), &s) in out.iter_mut().zip(&self.bases).zip(&self.shift) {
            let v = radical_inverse(i, b) + s;
            *o = v - v.floor();
        }
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Golden-section maximisation of a unimodal function on [lo, hi].
/// Returns (argmax, max).
pub fn golden_max(lo: f64, hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // endpoints are candidates too; monotone objectives peak there
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-9);
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        for n in [2, 5, 8, 20, 40] {
            let gh = GaussHermite::new(n);
            let m0: f64 = gh.weights.iter().sum();
            let m2: f64 = gh.nodes.iter().zip(&gh.weights).map(|(z, w)| w * z * z).sum();
            assert!((m0 - 1.0).abs() < 1e-12, "n={n} m0={m0}");
            assert!((m2 - 1.0).abs() < 1e-11, "n={n} m2={m2}");
            if n >= 3 {
                let m4: f64 = gh.nodes.iter().zip(&gh.weights).map(|(z, w)| w * z.powi(4)).sum();
                assert!((m4 - 3.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn graded_rule_handles_log_kink() {
        let gl = GaussLegendre::new(8);
        // ∫_0^2 ln|x-1| dx = -2
        let v = integrate_graded(&gl, 0.0, 2.0, Some(1.0), 40, |x| (x - 1.0).abs().ln());
        assert!((v + 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn halton_first_points() {
        let h = Halton::new(2, vec![0.0, 0.0]);
        let mut p = [0.0; 2];
        h.point(1, &mut p);
        assert_eq!(p, [0.5, 1.0 / 3.0]);
        h.point(2, &mut p);
        assert_eq!(p, [0.25, 2.0 / 3.0]);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(-3.0, 5.0, 80, |x| -(x - 1.3).powi(2));
        assert!((x - 1.3).abs() < 1e-6 && v.abs() < 1e-10);
    }
}
