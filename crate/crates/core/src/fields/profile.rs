//! Radial profiles of the mollified kernel `y ↦ y/|y|²`.
//!
//! For a radial unit-scale mollifier `g` on `R^d`, the convolution
//! `g * (y/|y|²)` is again radial and equals `ψ(|x|) x/|x|²`. Homogeneity of
//! the kernel turns every scale `σ` into a lookup `ψ(|x|/σ) x/|x|²`, so one
//! table per (shape, d) serves all mollification scales.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::{gamma, ln_gamma};

use crate::quadrature::{integrate_graded, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelShape {
    /// Standard normal density on `R^d`.
    Heat,
    /// `c · exp(1/(|y|² − 1))` on the unit ball, `c` fixed by unit mass.
    Bump,
}

const TABLE_INTERVALS: usize = 2048;
const PANEL_WIDTH: f64 = 0.25;

#[derive(Debug)]
pub struct RadialProfile {
    shape: KernelShape,
    dim: usize,
    s_max: f64,
    values: Vec<f64>,
    /// `ψ(s) ≈ 1 − Σ_k tail[k] s^{−2(k+1)}` for `s ≥ s_max`.
    tail: Vec<f64>,
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// `∫_0^1 ρ^{d−1} exp(1/(ρ² − 1)) dρ`.
fn bump_radial_moment(d: usize, power: usize) -> f64 {
    let gl = GaussLegendre::new(32);
    integrate_graded(&gl, 0.0, 1.0, Some(1.0), 12, |r| {
        if r >= 1.0 {
            0.0
        } else {
            r.powi((d - 1 + power) as i32) * (1.0 / (r * r - 1.0)).exp()
        }
    })
}

/// Constant `c` making `c · exp(1/(|y|² − 1)) 1_{|y|<1}` a probability
/// density on `R^d`.
pub fn bump_normalization(d: usize) -> f64 {
    1.0 / (sphere_area(d) * bump_radial_moment(d, 0))
}

/// Density of `|Y|` for the unit-scale kernel.
fn radial_density(shape: KernelShape, d: usize, rho: f64) -> f64 {
    match shape {
        KernelShape::Heat => {
            let df = d as f64;
            let log_norm = (df / 2.0 - 1.0) * 2f64.ln() + ln_gamma(df / 2.0);
            ((df - 1.0) * rho.ln() - 0.5 * rho * rho - log_norm).exp()
        }
        KernelShape::Bump => {
            if rho >= 1.0 {
                0.0
            } else {
                bump_normalization_cached(d) * sphere_area(d) * rho.powi(d as i32 - 1) * (1.0 / (rho * rho - 1.0)).exp()
            }
        }
    }
}

fn bump_normalization_cached(d: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    *map.lock().unwrap().entry(d).or_insert_with(|| bump_normalization(d))
}

fn support_radius(shape: KernelShape, d: usize) -> f64 {
    match shape {
        KernelShape::Heat => (d as f64).sqrt() + 10.0,
        KernelShape::Bump => 1.0,
    }
}

/// Mean of `(s − ρ ω_1)/|s e_1 − ρ ω|²` over `ω` uniform on the sphere.
pub fn sphere_mean_axial(d: usize, s: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 1.0 / s;
    }
    if s == 0.0 {
        return 0.0;
    }
    match d {
        3 => {
            if rho == s {
                return 1.0 / (2.0 * s);
            }
            1.0 / (2.0 * s)
                + (s * s - rho * rho) / (4.0 * s * s * rho) * ((s + rho) / (s - rho).abs()).ln()
        }
        4 => {
            if rho < s {
                (2.0 * s * s - rho * rho) / (2.0 * s * s * s)
            } else {
                s / (2.0 * rho * rho)
            }
        }
        _ => sphere_mean_axial_numeric(d, s, rho),
    }
}

/// Quadrature route for [`sphere_mean_axial`], valid for every `d ≥ 3`.
pub fn sphere_mean_axial_numeric(d: usize, s: f64, rho: f64) -> f64 {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    let gl = RULE.get_or_init(|| GaussLegendre::new(10));
    let p = d as i32 - 2;
    let gap = (s - rho) * (s - rho);
    let j = integrate_graded(gl, 0.0, PI, Some(0.0), 30, |t| {
        let h = (0.5 * t).sin();
        t.sin().powi(p) / (gap + 4.0 * s * rho * h * h)
    });
    let df = d as f64;
    let w = PI.sqrt() * (ln_gamma((df - 1.0) / 2.0) - ln_gamma(df / 2.0)).exp();
    1.0 / (2.0 * s) + (s * s - rho * rho) / (2.0 * s) * j / w
}

/// `ψ(s)` by direct quadrature over the radial law of the kernel.
pub fn psi_direct(shape: KernelShape, d: usize, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    let gl = RULE.get_or_init(|| GaussLegendre::new(16));
    let rmax = support_radius(shape, d);
    let panels = (rmax / PANEL_WIDTH).ceil() as usize;
    let width = rmax / panels as f64;
    let integrand = |rho: f64| radial_density(shape, d, rho) * sphere_mean_axial(d, s, rho);
    let phi: f64 = (0..panels)
        .map(|k| {
            let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
            // grade toward the kink of the sphere mean at rho = s
            let focus = if s > a - width && s < b + width { Some(s.clamp(a, b)) } else { None };
            integrate_graded(gl, a, b, focus, 30, integrand)
        })
        .sum();
    s * phi
}

/// Coefficients of the large-`s` expansion of `ψ`, from the mean-value
/// expansion of `log|x|` against a radial law.
fn tail_coefficients(shape: KernelShape, d: usize, terms: usize) -> Vec<f64> {
    let df = d as f64;
    let mut out = Vec::with_capacity(terms);
    // Δ^k log r = a_k r^{−2k}
    let mut a = df - 2.0;
    let mut fact = 1.0;
    let mut rising = 1.0;
    for k in 1..=terms {
        let kf = k as f64;
        fact *= kf;
        rising *= df + 2.0 * (kf - 1.0);
        let moment = match shape {
            KernelShape::Heat => rising,
            KernelShape::Bump => bump_radial_moment(d, 2 * k) / bump_radial_moment(d, 0),
        };
        let c = moment / (2f64.powi(k as i32) * fact * rising);
        out.push(2.0 * kf * c * a);
        a *= (-2.0 * kf) * (df - 2.0 - 2.0 * kf);
    }
    out
}

impl RadialProfile {
    fn build(shape: KernelShape, dim: usize) -> Self {
        let (s_max, terms) = match shape {
            KernelShape::Heat => (14.0, 6),
            KernelShape::Bump => (3.0, 40),
        };
        let values = (0..=TABLE_INTERVALS + 1)
            .map(|k| psi_direct(shape, dim, s_max * k as f64 / TABLE_INTERVALS as f64))
            .collect();
        Self { shape, dim, s_max, values, tail: tail_coefficients(shape, dim, terms) }
    }

    /// Shared, lazily built table for `(shape, dim)`.
    pub fn get(shape: KernelShape, dim: usize) -> Arc<RadialProfile> {
        static CACHE: OnceLock<Mutex<HashMap<(KernelShape, usize), Arc<RadialProfile>>>> = OnceLock::new();
        let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(p) = map.lock().unwrap().get(&(shape, dim)) {
            return p.clone();
        }
        let built = Arc::new(Self::build(shape, dim));
        map.lock().unwrap().entry((shape, dim)).or_insert(built).clone()
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_value(&self, s: f64) -> f64 {
        let inv2 = 1.0 / (s * s);
        let mut p = inv2;
        let mut acc = 1.0;
        for c in &self.tail {
            acc -= c * p;
            p *= inv2;
        }
        acc
    }

    /// Interpolated `ψ(s)`, `s ≥ 0`.
    #[inline]
    pub fn psi(&self, s: f64) -> f64 {
        if s >= self.s_max {
            return self.tail_value(s);
        }
        let u = s / self.s_max * TABLE_INTERVALS as f64;
        let k = u as usize;
        let t = u - k as f64;
        let v = &self.values;
        let p1 = v[k];
        let p2 = v[k + 1];
        // ψ is odd-extendable through 0 (ψ(s) ~ c s²·sign), mirror for k = 0
        let p0 = if k == 0 { v[1] } else { v[k - 1] };
        let p3 = v[k + 2];
        // Catmull–Rom
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
    }

    /// Largest value of `ψ(s)/s`, which bounds the mollified kernel:
    /// `|ψ(|u|/σ) u/|u|²| ≤ max(ψ(s)/s)/σ`.
    pub fn max_psi_over_s(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| v / (self.s_max * k as f64 / TABLE_INTERVALS as f64))
            .fold(0.0, f64::max)
    }
}
