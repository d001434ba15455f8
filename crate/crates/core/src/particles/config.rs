use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};
use crate::fields::{
    Modulation, MollifierFamily, MollifierKind, ParticleKernel, StreamMatrix, TruncationSettings,
};
use crate::rng::{self, domain};

/// Dwell window for stickiness, in time units.
pub const DEFAULT_DWELL: f64 = 0.5;

/// Initial configuration of the `N` particles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// The same point of `R^{Nd}` for every path.
    Fixed(Vec<f64>),
    /// Particles evenly spaced on the first axis, centred at 0, scaled so
    /// that the dispersion equals `r0`.
    Line { r0: f64 },
    /// Independent Gaussian perturbation of `center` with standard
    /// deviation `std` per coordinate, drawn per path.
    Gaussian { center: Vec<f64>, std: f64 },
}

impl InitialCondition {
    /// Resolve the initial state of `path`.
    pub fn state(&self, n: usize, d: usize, seed: u64, path: u64) -> Vec<f64> {
        match self {
            InitialCondition::Fixed(x) => x.clone(),
            InitialCondition::Line { r0 } => {
                let m = (n as f64 - 1.0) / 2.0;
                let spread: f64 = (0..n).map(|i| (i as f64 - m).powi(2)).sum();
                let c = (2.0 * r0 / spread).sqrt();
                let mut x = vec![0.0; n * d];
                for i in 0..n {
                    x[i * d] = c * (m - i as f64);
                }
                x
            }
            InitialCondition::Gaussian { center, std } => {
                let mut r = rng::stream(seed, domain::INITIAL_STATE, path);
                center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(&mut r);
                        c + std * z
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, n: usize, d: usize) -> Result<()> {
        let len = match self {
            InitialCondition::Fixed(x) => x.len(),
            InitialCondition::Gaussian { center, std } => {
                if !(*std >= 0.0) {
                    return Err(LabError::ConfigInvalid("initial std must be >= 0".into()));
                }
                center.len()
            }
            InitialCondition::Line { r0 } => {
                if !(*r0 > 0.0) {
                    return Err(LabError::ConfigInvalid("initial dispersion must be > 0".into()));
                }
                n * d
            }
        };
        if len != n * d {
            return Err(LabError::DimensionMismatch { expected: n * d, got: len });
        }
        Ok(())
    }
}

/// Divergence-free perturbation `q = ∇Q` regularised by clip-then-smooth.
#[derive(Debug, Clone)]
pub struct StreamPerturbation {
    pub matrix: StreamMatrix,
    pub eps: f64,
    pub settings: TruncationSettings,
}

/// Full specification of an ensemble run.
#[derive(Debug, Clone)]
pub struct ParticleConfig {
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
    pub modulation: Modulation,
    pub stream: Option<StreamPerturbation>,
    pub mollifier: MollifierFamily,
    pub mollifier_index: usize,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub h: f64,
    pub paths: usize,
    pub seed: u64,
    /// Collision tolerance on `R`; `None` means `max(10h, 1e-4)`.
    pub eps_coll: Option<f64>,
    pub dwell: f64,
    /// Times at which `R` and the centre of mass are recorded; `None` means
    /// ten equally spaced times ending at the horizon.
    pub checkpoints: Option<Vec<f64>>,
    /// Collision monitoring every `monitor_stride` steps.
    pub monitor_stride: usize,
    /// End a path at its first collision.
    pub stop_at_collision: bool,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub workers: usize,
}

impl ParticleConfig {
    /// Defaults: heat mollifier at `ε = 1e-4`, unit dispersion on a line,
    /// `h = 1e-3`, `T = 1`, `M = 10⁴`.
    pub fn new(n: usize, d: usize, kappa: f64) -> Self {
        Self {
            n,
            d,
            kappa,
            modulation: Modulation::Uniform,
            stream: None,
            mollifier: MollifierFamily::new(MollifierKind::Heat, vec![1e-4])
                .expect("static schedule"),
            mollifier_index: 0,
            initial: InitialCondition::Line { r0: 1.0 },
            horizon: 1.0,
            h: 1e-3,
            paths: 10_000,
            seed: 0,
            eps_coll: None,
            dwell: DEFAULT_DWELL,
            checkpoints: None,
            monitor_stride: 1,
            stop_at_collision: false,
            workers: 0,
        }
    }

    pub fn eps_coll(&self) -> f64 {
        self.eps_coll.unwrap_or_else(|| (10.0 * self.h).max(1e-4))
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.h).round() as u64
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        match &self.checkpoints {
            Some(c) => c.clone(),
            None => (1..=10).map(|k| self.horizon * k as f64 / 10.0).collect(),
        }
    }

    pub fn kernel(&self) -> Result<ParticleKernel> {
        ParticleKernel::new(self.n, self.d, self.kappa, self.modulation.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel()?;
        let bad = |m: &str| Err(LabError::ConfigInvalid(m.into()));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("step h must be > 0");
        }
        if !(self.horizon >= self.h) {
            return bad("horizon T must be >= h");
        }
        if self.paths == 0 {
            return bad("paths M must be >= 1");
        }
        if self.n >= 1 << 12 {
            return bad("at most 4095 particles per path");
        }
        if !(self.dwell > 0.0) {
            return bad("dwell window must be > 0");
        }
        if self.monitor_stride == 0 {
            return bad("monitor stride must be >= 1");
        }
        if !(self.eps_coll() > 0.0) {
            return bad("collision tolerance must be > 0");
        }
        self.mollifier.validate()?;
        self.mollifier.scale(self.mollifier_index)?;
        if self.mollifier.kind == MollifierKind::StreamTruncation {
            return bad("the particle kernel needs a heat or bump mollifier");
        }
        let cps = self.checkpoint_times();
        if cps.iter().any(|&t| !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12))) {
            return bad("checkpoints must lie in [0, T]");
        }
        if cps.windows(2).any(|w| w[1] < w[0]) {
            return bad("checkpoints must be sorted");
        }
        self.initial.validate(self.n, self.d)?;
        if let InitialCondition::Fixed(x) = &self.initial {
            let kernel = self.kernel()?;
            let eps = self.eps_coll();
            if super::reduce_r(x, self.n, self.d)? <= eps || kernel.min_pair_distance(x) <= eps {
                return bad("initial pair distances must exceed the collision tolerance");
            }
        }
        if let Some(s) = &self.stream {
            if s.matrix.dim() != self.n * self.d {
                return Err(LabError::DimensionMismatch { expected: self.n * self.d, got: s.matrix.dim() });
            }
            if !(s.eps > 0.0) {
                return bad("stream truncation scale must be > 0");
            }
        }
        Ok(())
    }
}
