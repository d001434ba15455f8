use super::config::ParticleConfig;
use super::simulate::{simulate_ensemble, Ensemble};
use crate::bessel::{classify_regime, RegimeLabel};
use crate::error::{LabError, Result};
use crate::stats;

/// Normal quantile for 95% Wilson intervals.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CollisionStats {
    pub paths: usize,
    pub collisions: usize,
    pub collision_probability: f64,
    pub collision_se: f64,
    pub collision_interval: (f64, f64),
    pub sticky: usize,
    pub sticky_fraction: f64,
    pub sticky_se: f64,
    pub sticky_interval: (f64, f64),
    /// `(t, P(first collision ≤ t))` at the checkpoints.
    pub hitting_cdf: Vec<(f64, f64)>,
    pub excluded: usize,
}

/// Collision probability and sticky fraction (both over all retained
/// paths) with Wilson 95% intervals, and the empirical first-collision CDF.
pub fn collision_statistics(ensemble: &Ensemble) -> Result<CollisionStats> {
    let m = ensemble.records.len();
    if m == 0 {
        return Err(LabError::ConfigInvalid("empty ensemble".into()));
    }
    let collisions = ensemble.records.iter().filter(|r| r.collision_time.is_some()).count();
    let sticky = ensemble.records.iter().filter(|r| r.sticky).count();
    let (clo, chi, cse) = stats::wilson(collisions, m, Z95);
    let (slo, shi, sse) = stats::wilson(sticky, m, Z95);
    let hitting_cdf = ensemble
        .checkpoints
        .iter()
        .map(|&t| {
            let hit = ensemble
                .records
                .iter()
                .filter(|r| r.collision_time.is_some_and(|c| c <= t + 1e-12))
                .count();
            (t, hit as f64 / m as f64)
        })
        .collect();
    Ok(CollisionStats {
        paths: m,
        collisions,
        collision_probability: collisions as f64 / m as f64,
        collision_se: cse,
        collision_interval: (clo, chi),
        sticky,
        sticky_fraction: sticky as f64 / m as f64,
        sticky_se: sse,
        sticky_interval: (slo, shi),
        hitting_cdf,
        excluded: ensemble.excluded,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanRow {
    pub kappa: f64,
    pub label: RegimeLabel,
    pub mu: f64,
    pub collision_probability: f64,
    pub collision_se: f64,
    pub sticky_fraction: f64,
    pub sticky_se: f64,
}

/// Run `base` at each `κ` of the grid; rows sorted by `κ`.
pub fn scan_kappa(base: &ParticleConfig, grid: &[f64]) -> Result<Vec<ScanRow>> {
    let mut kappas = grid.to_vec();
    if kappas.iter().any(|k| !(*k >= 0.0)) {
        return Err(LabError::ConfigInvalid("kappa grid must be nonnegative".into()));
    }
    kappas.sort_by(f64::total_cmp);
    kappas
        .into_iter()
        .map(|kappa| {
            let mut cfg = base.clone();
            cfg.kappa = kappa;
            let regime = classify_regime(cfg.n, cfg.d, kappa)?;
            let s = collision_statistics(&simulate_ensemble(&cfg)?)?;
            Ok(ScanRow {
                kappa,
                label: regime.label,
                mu: regime.mu,
                collision_probability: s.collision_probability,
                collision_se: s.collision_se,
                sticky_fraction: s.sticky_fraction,
                sticky_se: s.sticky_se,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComSlope {
    pub slope: f64,
    pub se: f64,
    /// `2/N`.
    pub expected: f64,
    /// `(t, per-coordinate variance of the centre-of-mass displacement)`.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of the per-coordinate variance of the centre of mass
/// against time. Pairwise cancellation of the drift makes the centre of
/// mass a Brownian motion with variance `2t/N` per coordinate.
pub fn com_diffusion_check(ensemble: &Ensemble) -> Result<ComSlope> {
    if !ensemble.uniform_modulation || ensemble.has_stream {
        return Err(LabError::ConfigInvalid(
            "centre-of-mass check needs e_ij = 1 and no stream perturbation".into(),
        ));
    }
    if ensemble.stopped_at_collision {
        return Err(LabError::ConfigInvalid("centre-of-mass check needs full paths".into()));
    }
    let d = ensemble.d;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (k, &t) in ensemble.checkpoints.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let mut v = 0.0;
        for c in 0..d {
            let col: Vec<f64> = ensemble.records.iter().map(|r| r.com_trace[k * d + c]).collect();
            v += stats::variance(&col);
        }
        ts.push(t);
        vs.push(v / d as f64);
    }
    if ts.len() < 2 {
        return Err(LabError::ConfigInvalid("centre-of-mass check needs two positive checkpoints".into()));
    }
    let (slope, se) = stats::ols_slope(&ts, &vs);
    Ok(ComSlope {
        slope,
        se,
        expected: 2.0 / ensemble.n as f64,
        points: ts.into_iter().zip(vs).collect(),
    })
}
