//! Squared Bessel processes: the dispersion `R_t` of the particle system
//! solves `dR = 2√R dW + μ dt`. Exact samplers, an Euler reference and the
//! collision regime classifier.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};

use crate::error::{LabError, Result};

/// Squared Bessel dimension `μ` and start point `R₀ = x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselParams {
    pub mu: f64,
    pub x0: f64,
}

impl BesselParams {
    pub fn new(mu: f64, x0: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(LabError::ConfigInvalid(format!("mu must be finite, got {mu}")));
        }
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(LabError::ConfigInvalid(format!("x0 must be >= 0, got {x0}")));
        }
        Ok(Self { mu, x0 })
    }
}

fn check_particles(n: usize, d: usize, kappa: f64) -> Result<()> {
    if n < 2 || d < 3 {
        return Err(LabError::ConfigInvalid(format!(
            "need N >= 2 and d >= 3 (got N={n}, d={d})"
        )));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(LabError::ConfigInvalid(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(())
}

/// `4d/(d−2)`, the value of `√κ` at which `μ` vanishes.
fn critical_root(d: usize) -> f64 {
    4.0 * d as f64 / (d as f64 - 2.0)
}

/// Sticky threshold `κ* = 16 (d/(d−2))²`.
pub fn sticky_threshold(d: usize) -> f64 {
    let c = critical_root(d);
    c * c
}

/// `μ = (N−1)(d − √κ (d−2)/4)`.
///
/// Evaluated as `(N−1)(d−2)/4 · (κ* − κ)/(4d/(d−2) + √κ)` so that the sign
/// of `μ` is exactly the sign of `κ* − κ` in floating point.
pub fn bessel_dimension(n: usize, d: usize, kappa: f64) -> f64 {
    let c = critical_root(d);
    let pre = (n as f64 - 1.0) * (d as f64 - 2.0) / 4.0;
    pre * ((c * c - kappa) / (c + kappa.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    /// `μ ≥ 2`: `R` never reaches 0.
    NoCollision,
    /// `0 < μ < 2`: `R` hits 0 and leaves instantly.
    NonSticky,
    /// `μ ≤ 0`: `R` is absorbed at 0.
    Sticky,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::NoCollision => "no_collision",
            RegimeLabel::NonSticky => "non_sticky",
            RegimeLabel::Sticky => "sticky",
        }
    }
}

/// Collision regime of the `N`-particle system at `(d, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub mu: f64,
    pub kappa_star: f64,
    /// `κ` interval where `0 < μ < 2`:
    /// `(κ* (1 − 2/(d(N−1)))², κ*)`.
    pub non_sticky_interval: (f64, f64),
    /// The non-sticky interval as usually quoted,
    /// `(κ* (1 − 2/(d(N−1))), κ*)`, reported for comparison.
    pub quoted_interval: (f64, f64),
}

/// Classify by the sign of `μ` and its position relative to 2. The boundary
/// `μ = 2` counts as no collision.
pub fn classify_regime(n: usize, d: usize, kappa: f64) -> Result<Regime> {
    check_particles(n, d, kappa)?;
    let mu = bessel_dimension(n, d, kappa);
    let label = if mu <= 0.0 {
        RegimeLabel::Sticky
    } else if mu < 2.0 {
        RegimeLabel::NonSticky
    } else {
        RegimeLabel::NoCollision
    };
    let ks = sticky_threshold(d);
    let f = 1.0 - 2.0 / (d as f64 * (n as f64 - 1.0));
    Ok(Regime {
        label,
        mu,
        kappa_star: ks,
        non_sticky_interval: (ks * f * f, ks),
        quoted_interval: (ks * f, ks),
    })
}

/// Sticky test through the threshold alone: `κ ≥ κ*`.
pub fn is_sticky_by_threshold(d: usize, kappa: f64) -> bool {
    kappa >= sticky_threshold(d)
}

fn gamma(shape: f64, scale: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, scale)
        .map_err(|e| LabError::ConfigInvalid(format!("gamma({shape}, {scale}): {e}")))
}

/// Exact draw of `R_t` given `R_0 = x0`: `t · χ'²_μ(x0/t)`, sampled as a
/// Poisson(`x0/(2t)`) mixture of Gamma(`μ/2 + K`, scale 2).
pub fn sample_besq_transition<R: Rng + ?Sized>(params: &BesselParams, t: f64, rng: &mut R) -> Result<f64> {
    if params.mu <= 0.0 {
        return Err(LabError::UnsupportedDimension {
            mu: params.mu,
            reason: "exact transition needs mu > 0; use the Euler reference",
        });
    }
    if !(t > 0.0) {
        return Err(LabError::ConfigInvalid(format!("t must be > 0, got {t}")));
    }
    let k = if params.x0 > 0.0 {
        let poisson = Poisson::new(params.x0 / (2.0 * t))
            .map_err(|e| LabError::ConfigInvalid(format!("poisson: {e}")))?;
        poisson.sample(rng)
    } else {
        0.0
    };
    Ok(t * gamma(params.mu / 2.0 + k, 2.0)?.sample(rng))
}

/// Exact draw of the first hitting time of 0, `T₀ = x0/(2G)` with
/// `G ~ Gamma(1 − μ/2, 1)`, for `0 < μ < 2`.
pub fn sample_hitting_time<R: Rng + ?Sized>(params: &BesselParams, rng: &mut R) -> Result<f64> {
    if params.mu >= 2.0 {
        return Err(LabError::UnsupportedDimension {
            mu: params.mu,
            reason: "0 is never reached for mu >= 2",
        });
    }
    if params.mu <= 0.0 {
        return Err(LabError::UnsupportedDimension {
            mu: params.mu,
            reason: "hitting law for mu <= 0 is not sampled exactly; use the Euler reference",
        });
    }
    if !(params.x0 > 0.0) {
        return Err(LabError::ConfigInvalid("hitting time needs x0 > 0".into()));
    }
    Ok(params.x0 / (2.0 * gamma(1.0 - params.mu / 2.0, 1.0)?.sample(rng)))
}

/// `P(T₀ ≤ t) = P(G ≥ x0/(2t))`, `G ~ Gamma(1 − μ/2, 1)`, for `μ < 2`.
/// For `μ ≤ 0` this is the absorption probability by time `t`.
pub fn hitting_time_cdf(params: &BesselParams, t: f64) -> Result<f64> {
    if !(params.mu < 2.0) {
        return Err(LabError::UnsupportedDimension {
            mu: params.mu,
            reason: "0 is never reached for mu >= 2",
        });
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let law = GammaLaw::new(1.0 - params.mu / 2.0, 1.0)
        .map_err(|e| LabError::ConfigInvalid(format!("gamma law: {e}")))?;
    Ok(law.sf(params.x0 / (2.0 * t)))
}

/// Outcome of an Euler reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerOutcome {
    pub terminal: f64,
    /// First time the scheme reached `R ≤ 0`.
    pub first_hit: Option<f64>,
    /// Held at 0 from `first_hit` on (only when `μ ≤ 0`).
    pub absorbed: bool,
}

/// A full Euler path on the uniform grid `k·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerPath {
    pub h: f64,
    pub values: Vec<f64>,
    pub outcome: EulerOutcome,
}

fn euler_run<R: Rng + ?Sized>(
    params: &BesselParams,
    h: f64,
    horizon: f64,
    rng: &mut R,
    mut record: impl FnMut(f64),
) -> Result<EulerOutcome> {
    if !(h > 0.0) || !(horizon >= h) {
        return Err(LabError::ConfigInvalid(format!("need h > 0 and T >= h (h={h}, T={horizon})")));
    }
    let steps = (horizon / h).round() as u64;
    let sqrt_h = h.sqrt();
    let absorbing = params.mu <= 0.0;
    let mut r = params.x0;
    let mut first_hit = None;
    let mut absorbed = false;
    if r <= 0.0 {
        first_hit = Some(0.0);
        absorbed = absorbing;
        r = 0.0;
    }
    record(r);
    for k in 1..=steps {
        if absorbed {
            record(0.0);
            continue;
        }
        let z: f64 = StandardNormal.sample(rng);
        r += params.mu * h + 2.0 * r.max(0.0).sqrt() * sqrt_h * z;
        if r <= 0.0 {
            if first_hit.is_none() {
                first_hit = Some(k as f64 * h);
            }
            r = 0.0;
            absorbed = absorbing;
        }
        record(r);
    }
    Ok(EulerOutcome { terminal: r, first_hit, absorbed })
}

/// Euler–Maruyama for `dR = 2√(R⁺) dW + μ dt`, clamped at 0 and absorbed
/// there when `μ ≤ 0`.
pub fn besq_euler_path<R: Rng + ?Sized>(params: &BesselParams, h: f64, horizon: f64, rng: &mut R) -> Result<EulerPath> {
    let mut values = Vec::with_capacity((horizon / h).round() as usize + 1);
    let outcome = euler_run(params, h, horizon, rng, |v| values.push(v))?;
    Ok(EulerPath { h, values, outcome })
}

/// [`besq_euler_path`] without storing the path.
pub fn besq_euler_outcome<R: Rng + ?Sized>(params: &BesselParams, h: f64, horizon: f64, rng: &mut R) -> Result<EulerOutcome> {
    euler_run(params, h, horizon, rng, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, domain};
    use crate::stats;

    #[test]
    fn dimension_examples() {
        assert_eq!(bessel_dimension(2, 3, 0.0), 3.0);
        assert_eq!(bessel_dimension(2, 3, 144.0), 0.0);
        assert_eq!(bessel_dimension(3, 3, 16.0), 4.0);
        assert_eq!(bessel_dimension(2, 3, 16.0), 2.0);
        for &(n, d, k) in &[(2, 3, 48.0), (5, 7, 3.3), (3, 4, 100.0)] {
            let direct = (n as f64 - 1.0) * (d as f64 - (k as f64).sqrt() * (d as f64 - 2.0) / 4.0);
            assert!((bessel_dimension(n, d, k) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(sticky_threshold(3), 144.0);
        assert_eq!(sticky_threshold(4), 64.0);
        assert!((sticky_threshold(100_000) - 16.0).abs() < 1e-2);
    }

    #[test]
    fn regime_examples() {
        let r = classify_regime(2, 3, 160.0).unwrap();
        assert_eq!(r.label, RegimeLabel::Sticky);
        assert!((r.mu - (3.0 - 160f64.sqrt() / 4.0)).abs() < 1e-12);
        let r = classify_regime(2, 3, 100.0).unwrap();
        assert_eq!(r.label, RegimeLabel::NonSticky);
        assert!((r.quoted_interval.0 - 48.0).abs() < 1e-12 && r.quoted_interval.1 == 144.0);
        assert!(100.0 > r.quoted_interval.0);
        assert!((r.non_sticky_interval.0 - 16.0).abs() < 1e-12);
        assert_eq!(classify_regime(2, 3, 16.0).unwrap().label, RegimeLabel::NoCollision);
        assert!(classify_regime(1, 3, 1.0).is_err());
        assert!(classify_regime(2, 3, -1.0).is_err());
    }

    #[test]
    fn transition_means() {
        let mut rng = rng::stream(1, domain::BESSEL, 0);
        let p0 = BesselParams::new(3.0, 0.0).unwrap();
        let a: Vec<f64> = (0..100_000).map(|_| sample_besq_transition(&p0, 1.0, &mut rng).unwrap()).collect();
        assert!((stats::mean(&a) - 3.0).abs() < 0.03);
        let p1 = BesselParams::new(3.0, 1.0).unwrap();
        let b: Vec<f64> = (0..100_000).map(|_| sample_besq_transition(&p1, 1.0, &mut rng).unwrap()).collect();
        assert!((stats::mean(&b) - 4.0).abs() < 0.04);
    }

    #[test]
    fn transition_rejects_nonpositive_dimension() {
        let mut rng = rng::stream(1, domain::BESSEL, 1);
        let p = BesselParams::new(0.0, 1.0).unwrap();
        assert!(matches!(
            sample_besq_transition(&p, 1.0, &mut rng),
            Err(LabError::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn hitting_time_median() {
        // oracle: median of Gamma(1/2, 1) by bisection on its CDF
        let law = GammaLaw::new(0.5, 1.0).unwrap();
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if law.cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let want = 1.0 / (2.0 * lo);
        assert!((lo - 0.22747).abs() < 1e-5);
        assert!((want - 2.1981).abs() < 1e-3);
        let p = BesselParams::new(1.0, 1.0).unwrap();
        let mut rng = rng::stream(2, domain::BESSEL, 0);
        let t: Vec<f64> = (0..100_000).map(|_| sample_hitting_time(&p, &mut rng).unwrap()).collect();
        assert!((stats::median(&t) / want - 1.0).abs() < 0.02);
        assert!((hitting_time_cdf(&p, want).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hitting_time_errors() {
        let mut rng = rng::stream(2, domain::BESSEL, 1);
        for mu in [2.0, 3.0, 0.0, -0.5] {
            let p = BesselParams::new(mu, 1.0).unwrap();
            assert!(matches!(sample_hitting_time(&p, &mut rng), Err(LabError::UnsupportedDimension { .. })));
        }
    }

    #[test]
    fn absorption_probability_for_nonpositive_mu() {
        let p = BesselParams::new(bessel_dimension(2, 3, 160.0), 1.0).unwrap();
        assert!((hitting_time_cdf(&p, 20.0).unwrap() - 0.982).abs() < 1e-3);
        let flat = BesselParams::new(0.0, 1.0).unwrap();
        // G ~ Exp(1): P(T₀ ≤ t) = e^{−1/(2t)}
        assert!((hitting_time_cdf(&flat, 2.0).unwrap() - (-0.25f64).exp()).abs() < 1e-12);
        assert!(hitting_time_cdf(&BesselParams::new(2.0, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn hitting_time_diverges_near_two() {
        let mut rng = rng::stream(2, domain::BESSEL, 2);
        let near = BesselParams::new(1.999, 1.0).unwrap();
        let far = BesselParams::new(1.0, 1.0).unwrap();
        let m_near = stats::median(&(0..5000).map(|_| sample_hitting_time(&near, &mut rng).unwrap()).collect::<Vec<_>>());
        let m_far = stats::median(&(0..5000).map(|_| sample_hitting_time(&far, &mut rng).unwrap()).collect::<Vec<_>>());
        assert!(m_near > 100.0 * m_far, "{m_near} {m_far}");
    }

    #[test]
    fn euler_zero_is_absorbing() {
        let mut rng = rng::stream(3, domain::BESSEL, 0);
        let p = BesselParams::new(0.0, 0.0).unwrap();
        let path = besq_euler_path(&p, 1e-2, 1.0, &mut rng).unwrap();
        assert!(path.values.iter().all(|&v| v == 0.0));
        assert_eq!(path.values.len(), 101);
        assert!(path.outcome.absorbed);
        assert_eq!(path.outcome.first_hit, Some(0.0));
    }

    #[test]
    fn euler_mean() {
        let p = BesselParams::new(3.0, 1.0).unwrap();
        let t_end = 1.0;
        let v: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut rng = rng::stream(4, domain::BESSEL, i);
                besq_euler_outcome(&p, 1e-3, t_end, &mut rng).unwrap().terminal
            })
            .collect();
        let se = (stats::variance(&v) / v.len() as f64).sqrt();
        assert!((stats::mean(&v) - (1.0 + 3.0 * t_end)).abs() < 3.0 * se);
    }

    #[test]
    fn euler_rejects_bad_steps() {
        let mut rng = rng::stream(3, domain::BESSEL, 1);
        let p = BesselParams::new(1.0, 1.0).unwrap();
        assert!(besq_euler_outcome(&p, 0.0, 1.0, &mut rng).is_err());
        assert!(besq_euler_outcome(&p, 0.5, 0.1, &mut rng).is_err());
    }
}
