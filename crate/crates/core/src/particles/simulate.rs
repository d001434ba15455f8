use std::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::ParticleConfig;
use crate::error::{check_dim, LabError, Result};
use crate::fields::{truncate_stream, PairMollifiedKernel, StreamMatrix};
use crate::rng;

/// Dispersion `R = (1/(4N)) Σ_{i,j} |x^i − x^j|²`, computed as
/// `½ Σ_i |x^i − x̄|²`.
pub fn reduce_r(state: &[f64], n: usize, d: usize) -> Result<f64> {
    check_dim(n * d, state.len())?;
    Ok(dispersion(state, n, d))
}

#[inline]
fn dispersion(x: &[f64], n: usize, d: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..d {
        let mut mean = 0.0;
        for i in 0..n {
            mean += x[i * d + c];
        }
        mean /= n as f64;
        for i in 0..n {
            let u = x[i * d + c] - mean;
            acc += u * u;
        }
    }
    0.5 * acc
}

fn center_of_mass(x: &[f64], n: usize, d: usize, out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        *o = (0..n).map(|i| x[i * d + c]).sum::<f64>() / n as f64;
    }
}

/// Outcome of one path. Equality is bitwise on every float, so records with
/// NaN placeholders compare equal to their exact replays.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub path_id: u64,
    /// `X_T`, or the state at the stopping time when the run ends at the
    /// first collision.
    pub terminal: Vec<f64>,
    /// `R` at the configured checkpoints (NaN past a stopping time).
    pub r_trace: Vec<f64>,
    /// Centre-of-mass displacement at the checkpoints, `d` values each.
    pub com_trace: Vec<f64>,
    pub collision_time: Option<f64>,
    /// `R` stayed below the tolerance for a full dwell window.
    pub sticky: bool,
    /// Sticky and still collapsed at the horizon.
    pub absorbed: bool,
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl PartialEq for PathRecord {
    fn eq(&self, other: &Self) -> bool {
        self.path_id == other.path_id
            && same_bits(&self.terminal, &other.terminal)
            && same_bits(&self.r_trace, &other.r_trace)
            && same_bits(&self.com_trace, &other.com_trace)
            && self.collision_time.map(f64::to_bits) == other.collision_time.map(f64::to_bits)
            && self.sticky == other.sticky
            && self.absorbed == other.absorbed
    }
}

/// All retained paths of a run plus the settings needed to read them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
    pub horizon: f64,
    pub h: f64,
    pub eps_coll: f64,
    pub dwell: f64,
    pub checkpoints: Vec<f64>,
    pub records: Vec<PathRecord>,
    /// Paths dropped because the state stopped being finite.
    pub excluded: usize,
    pub uniform_modulation: bool,
    pub has_stream: bool,
    pub stopped_at_collision: bool,
}

struct Engine<'a> {
    cfg: &'a ParticleConfig,
    kernel: PairMollifiedKernel,
    stream: Option<StreamMatrix>,
    eps_coll: f64,
    steps: u64,
    checkpoint_steps: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ParticleConfig) -> Result<Self> {
        cfg.validate()?;
        let kernel = cfg.mollifier.pair_mollified(&cfg.kernel()?, cfg.mollifier_index)?;
        let stream = match &cfg.stream {
            Some(s) => Some(truncate_stream(&s.matrix, s.eps, s.settings)?),
            None => None,
        };
        let checkpoint_steps = cfg
            .checkpoint_times()
            .iter()
            .map(|t| (t / cfg.h).round() as u64)
            .collect();
        Ok(Self { cfg, kernel, stream, eps_coll: cfg.eps_coll(), steps: cfg.steps(), checkpoint_steps })
    }

    fn run(&self, path: u64) -> Result<Option<PathRecord>> {
        let cfg = self.cfg;
        let (n, d) = (cfg.n, cfg.d);
        let dim = n * d;
        let h = cfg.h;
        let noise = (2.0 * h).sqrt();
        let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| rng::particle_stream(cfg.seed, path, i)).collect();
        let mut x = cfg.initial.state(n, d, cfg.seed, path);
        let mut com0 = vec![0.0; d];
        center_of_mass(&x, n, d, &mut com0);
        let mut com = vec![0.0; d];
        let mut drift = vec![0.0; dim];
        let with_kernel = cfg.kappa > 0.0;

        let ncp = self.checkpoint_steps.len();
        let mut r_trace = vec![f64::NAN; ncp];
        let mut com_trace = vec![f64::NAN; ncp * d];
        let mut next_cp = 0;
        let mut record_cp = |k: u64, x: &[f64], r_trace: &mut [f64], com_trace: &mut [f64], next_cp: &mut usize| {
            while *next_cp < ncp && self.checkpoint_steps[*next_cp] == k {
                r_trace[*next_cp] = dispersion(x, n, d);
                center_of_mass(x, n, d, &mut com);
                for c in 0..d {
                    com_trace[*next_cp * d + c] = com[c] - com0[c];
                }
                *next_cp += 1;
            }
        };
        record_cp(0, &x, &mut r_trace, &mut com_trace, &mut next_cp);

        let mut collision_time = None;
        let mut below_since: Option<f64> = None;
        let mut sticky = false;
        let mut last_r = dispersion(&x, n, d);
        let with_drift = with_kernel || self.stream.is_some();
        let stride = cfg.monitor_stride as u64;
        let mut until_monitor = stride;
        for k in 1..=self.steps {
            if with_kernel {
                self.kernel.eval_into(&x, &mut drift);
            }
            if let Some(q) = &self.stream {
                let qv = q.row_divergence(&x)?;
                if with_kernel {
                    drift.iter_mut().zip(&qv).for_each(|(a, b)| *a += b);
                } else {
                    drift.copy_from_slice(&qv);
                }
            }
            for (i, r) in rngs.iter_mut().enumerate() {
                let block = &mut x[i * d..(i + 1) * d];
                if with_drift {
                    let db = &drift[i * d..(i + 1) * d];
                    for (xc, dc) in block.iter_mut().zip(db) {
                        let z: f64 = StandardNormal.sample(r);
                        *xc += -h * dc + noise * z;
                    }
                } else {
                    for xc in block.iter_mut() {
                        let z: f64 = StandardNormal.sample(r);
                        *xc += noise * z;
                    }
                }
            }
            until_monitor -= 1;
            if until_monitor == 0 || k == self.steps {
                until_monitor = stride;
                let t = k as f64 * h;
                last_r = dispersion(&x, n, d);
                if !last_r.is_finite() {
                    return Ok(None);
                }
                if last_r <= self.eps_coll {
                    if collision_time.is_none() {
                        collision_time = Some(t);
                    }
                    let start = *below_since.get_or_insert(t);
                    if t - start >= cfg.dwell - 0.5 * h {
                        sticky = true;
                    }
                } else {
                    below_since = None;
                }
            }
            if next_cp < ncp && self.checkpoint_steps[next_cp] == k {
                record_cp(k, &x, &mut r_trace, &mut com_trace, &mut next_cp);
            }
            if cfg.stop_at_collision && collision_time.is_some() {
                break;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let absorbed = sticky && below_since.is_some() && last_r <= self.eps_coll;
        Ok(Some(PathRecord { path_id: path, terminal: x, r_trace, com_trace, collision_time, sticky, absorbed }))
    }
}

/// Simulate the paths with ids in `range`. Each path is a pure function of
/// `(config, path id)`, so any subset can be recomputed in isolation.
pub fn simulate_paths(config: &ParticleConfig, range: Range<u64>) -> Result<Ensemble> {
    let engine = Engine::new(config)?;
    let go = || -> Result<Vec<Option<PathRecord>>> {
        range.clone().into_par_iter().map(|p| engine.run(p)).collect()
    };
    let outcomes = if config.workers > 0 { rng::with_workers(config.workers, go) } else { go() }?;
    let total = outcomes.len();
    let records: Vec<PathRecord> = outcomes.into_iter().flatten().collect();
    Ok(Ensemble {
        n: config.n,
        d: config.d,
        kappa: config.kappa,
        horizon: config.horizon,
        h: config.h,
        eps_coll: engine.eps_coll,
        dwell: config.dwell,
        checkpoints: config.checkpoint_times(),
        excluded: total - records.len(),
        records,
        uniform_modulation: config.modulation.is_uniform(),
        has_stream: config.stream.is_some(),
        stopped_at_collision: config.stop_at_collision,
    })
}

/// `M` independent Euler–Maruyama paths of
/// `dX = −(b_ε + q_ε)(X) dt + √2 dB`.
pub fn simulate_ensemble(config: &ParticleConfig) -> Result<Ensemble> {
    let e = simulate_paths(config, 0..config.paths as u64)?;
    if e.records.is_empty() {
        return Err(LabError::NumericOverflow(format!("all {} paths left the finite range", e.excluded)));
    }
    Ok(e)
}
