//! Euler–Maruyama ensembles of the N-particle system
//! `dX = −(b_ε + q_ε)(X) dt + √2 dB` and their statistics.

mod analysis;
mod config;
mod simulate;
mod uniqueness;

pub use analysis::{collision_statistics, com_diffusion_check, scan_kappa, CollisionStats, ComSlope, ScanRow};
pub use config::{InitialCondition, ParticleConfig, StreamPerturbation, DEFAULT_DWELL};
pub use simulate::{reduce_r, simulate_ensemble, simulate_paths, Ensemble, PathRecord};
pub use uniqueness::{
    family_b_seed, mollifier_uniqueness_test, projected_energy_distance, projection_directions,
    split_noise_floor, Coupling, UniquenessPoint, UniquenessSettings,
};
