//! Fixed workloads shared by the benchmarks and their smoke tests.

use driftlab_core::bessel::BesselParams;
use driftlab_core::fields::{Modulation, MollifierFamily, MollifierKind, PairMollifiedKernel, ParticleKernel};
use driftlab_core::hardy::VariationalSpec;
use driftlab_core::particles::ParticleConfig;
use driftlab_core::Result;

/// Small ensemble: `N = 3` in `d = 3`, 64 paths to `T = 0.1`.
pub fn small_ensemble(kappa: f64) -> ParticleConfig {
    ParticleConfig {
        paths: 64,
        horizon: 0.1,
        seed: 1,
        ..ParticleConfig::new(3, 3, kappa)
    }
}

/// Heat-mollified pair kernel at the default scale.
pub fn heat_kernel(n: usize, d: usize, kappa: f64) -> Result<PairMollifiedKernel> {
    let kernel = ParticleKernel::new(n, d, kappa, Modulation::Uniform)?;
    MollifierFamily::new(MollifierKind::Heat, vec![1e-4])?.pair_mollified(&kernel, 0)
}

/// Configuration points spread over `[-1, 1]^{nd}`.
pub fn states(n: usize, d: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| (0..n * d).map(|j| ((k * 31 + j * 17) % 97) as f64 / 48.5 - 1.0).collect())
        .collect()
}

pub fn besq(mu: f64) -> Result<BesselParams> {
    BesselParams::new(mu, 1.0)
}

/// Cheap variational run at `d = 3`.
pub fn quick_variational() -> VariationalSpec {
    VariationalSpec {
        samples: 4000,
        iters: 4,
        seed: 2,
        ..VariationalSpec::for_dim(3)
    }
}
