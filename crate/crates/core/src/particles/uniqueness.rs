use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::config::ParticleConfig;
use super::simulate::{simulate_ensemble, Ensemble};
use crate::error::{LabError, Result};
use crate::fields::MollifierFamily;
use crate::norms::formbound_from_kappa;
use crate::rng::{self, domain};
use crate::stats;

/// How the two families' ensembles are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Family B uses noise streams independent of family A.
    Independent,
    /// Both families use the same noise streams.
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessSettings {
    pub projections: usize,
    pub splits: usize,
    pub coupling: Coupling,
}

impl Default for UniquenessSettings {
    fn default() -> Self {
        Self { projections: 32, splits: 8, coupling: Coupling::Independent }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UniquenessPoint {
    pub index: usize,
    pub eps_a: f64,
    pub eps_b: f64,
    /// Projected energy distance between the laws of `X_T`.
    pub distance: f64,
    /// Mean projected distance between random halves of ensemble A.
    pub floor: f64,
}

/// Seed of family B under independent coupling.
pub fn family_b_seed(seed: u64) -> u64 {
    seed ^ 0xA5A5_5A5A_C3C3_3C3C
}

/// Unit directions in `R^dim`, fixed by the seed.
pub fn projection_directions(seed: u64, dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, domain::PROJECTIONS, 0);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / norm).collect()
        })
        .collect()
}

fn project(states: &[&[f64]], dir: &[f64]) -> Vec<f64> {
    states.iter().map(|x| x.iter().zip(dir).map(|(a, b)| a * b).sum()).collect()
}

/// Energy distance averaged over the projection directions.
pub fn projected_energy_distance(a: &[&[f64]], b: &[&[f64]], dirs: &[Vec<f64>]) -> f64 {
    dirs.iter()
        .map(|d| stats::energy_distance_1d(&project(a, d), &project(b, d)))
        .sum::<f64>()
        / dirs.len() as f64
}

fn terminals(e: &Ensemble) -> Vec<&[f64]> {
    e.records.iter().map(|r| r.terminal.as_slice()).collect()
}

/// Noise floor: projected distance between random halves of one ensemble,
/// averaged over `splits` permutations.
pub fn split_noise_floor(states: &[&[f64]], dirs: &[Vec<f64>], seed: u64, splits: usize) -> f64 {
    let mut total = 0.0;
    for s in 0..splits {
        let mut idx: Vec<usize> = (0..states.len()).collect();
        idx.shuffle(&mut rng::stream(seed, domain::PERMUTATIONS, s as u64));
        let half = idx.len() / 2;
        let left: Vec<&[f64]> = idx[..half].iter().map(|&i| states[i]).collect();
        let right: Vec<&[f64]> = idx[half..].iter().map(|&i| states[i]).collect();
        total += projected_energy_distance(&left, &right, dirs);
    }
    total / splits as f64
}

/// Compare the laws of `X_T` under two mollifier families at each index of
/// `indices`. Requires `δ = (N−1)²κ/N² < 4`.
pub fn mollifier_uniqueness_test(
    config: &ParticleConfig,
    family_a: &MollifierFamily,
    family_b: &MollifierFamily,
    indices: &[usize],
    settings: UniquenessSettings,
) -> Result<Vec<UniquenessPoint>> {
    let delta = formbound_from_kappa(config.n, config.kappa);
    if delta >= 4.0 {
        return Err(LabError::DeltaAtOrAboveCritical { delta });
    }
    if settings.projections == 0 || settings.splits == 0 {
        return Err(LabError::ConfigInvalid("need at least one projection and one split".into()));
    }
    let dirs = projection_directions(config.seed, config.n * config.d, settings.projections);
    indices
        .iter()
        .map(|&index| {
            let mut cfg_a = config.clone();
            cfg_a.mollifier = family_a.clone();
            cfg_a.mollifier_index = index;
            let mut cfg_b = config.clone();
            cfg_b.mollifier = family_b.clone();
            cfg_b.mollifier_index = index;
            if settings.coupling == Coupling::Independent {
                cfg_b.seed = family_b_seed(config.seed);
            }
            let ea = simulate_ensemble(&cfg_a)?;
            let eb = simulate_ensemble(&cfg_b)?;
            let (ta, tb) = (terminals(&ea), terminals(&eb));
            Ok(UniquenessPoint {
                index,
                eps_a: family_a.scale(index)?,
                eps_b: family_b.scale(index)?,
                distance: projected_energy_distance(&ta, &tb, &dirs),
                floor: split_noise_floor(&ta, &dirs, config.seed, settings.splits),
            })
        })
        .collect()
}
