//! Run configuration: a TOML document with flat particle-system keys and one
//! table per subcommand. Every key has a default; [`parse_config`] returns the
//! fully resolved form, which is what manifests record.

use driftlab_core::bessel::{bessel_dimension, classify_regime, RegimeLabel};
use driftlab_core::fields::{
    Modulation, MollifierFamily, MollifierKind, StreamMatrix, TruncationSettings,
};
use driftlab_core::norms::formbound_from_kappa;
use driftlab_core::particles::{
    Coupling, InitialCondition, ParticleConfig, StreamPerturbation, UniquenessSettings, DEFAULT_DWELL,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::Subcommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierChoice {
    Heat,
    Bump,
}

impl MollifierChoice {
    fn kind(self) -> MollifierKind {
        match self {
            MollifierChoice::Heat => MollifierKind::Heat,
            MollifierChoice::Bump => MollifierKind::Bump,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingChoice {
    Independent,
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSection {
    #[serde(default = "heat")]
    pub kind: MollifierChoice,
    #[serde(default = "default_mollifier_schedule")]
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub index: usize,
}

impl Default for MollifierSection {
    fn default() -> Self {
        Self { kind: MollifierChoice::Heat, schedule: default_mollifier_schedule(), index: 0 }
    }
}

/// Rotational stream matrix on `R^{Nd}`, truncated at scale `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    pub amplitude: f64,
    pub eps: f64,
    #[serde(default = "one")]
    pub log_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default = "default_scan_grid")]
    pub kappas: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { kappas: default_scan_grid() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSection {
    #[serde(default = "heat")]
    pub family_a: MollifierChoice,
    #[serde(default = "bump")]
    pub family_b: MollifierChoice,
    #[serde(default = "default_uniqueness_schedule")]
    pub schedule: Vec<f64>,
    /// Schedule indices to compare; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default = "default_projections")]
    pub projections: usize,
    #[serde(default = "default_splits")]
    pub splits: usize,
    #[serde(default = "independent")]
    pub coupling: CouplingChoice,
}

impl Default for UniquenessSection {
    fn default() -> Self {
        Self {
            family_a: MollifierChoice::Heat,
            family_b: MollifierChoice::Bump,
            schedule: default_uniqueness_schedule(),
            indices: None,
            projections: default_projections(),
            splits: default_splits(),
            coupling: CouplingChoice::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesselSection {
    /// Dimension; derived from `(N, d, kappa)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub x0: f64,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_bessel_samples")]
    pub samples: usize,
    /// Euler step for the `mu <= 0` reference.
    #[serde(default = "default_h")]
    pub h: f64,
}

impl Default for BesselSection {
    fn default() -> Self {
        Self { mu: None, x0: 1.0, t: 1.0, samples: default_bessel_samples(), h: default_h() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardySection {
    #[serde(default = "default_hardy_d")]
    pub d_range: (usize, usize),
    #[serde(default = "default_hardy_n")]
    pub n_range: (usize, usize),
    #[serde(default)]
    pub variational: bool,
    #[serde(default = "default_variational_samples")]
    pub samples: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_golden_iters")]
    pub iters: usize,
}

impl Default for HardySection {
    fn default() -> Self {
        Self {
            d_range: default_hardy_d(),
            n_range: default_hardy_n(),
            variational: false,
            samples: default_variational_samples(),
            batches: default_batches(),
            iters: default_golden_iters(),
        }
    }
}

/// Size functionals of the Hardy drift `√δ (d−2)/2 · x/|x|²` on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsSection {
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(default = "two")]
    pub p: f64,
    /// Chang–Wilson–Wolff exponent; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cww_alpha: Option<f64>,
    /// Ball centres; the origin only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_mc_nodes")]
    pub mc_nodes: usize,
    #[serde(default = "yes")]
    pub rayleigh: bool,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            delta: 1.0,
            dim: 3,
            p: 2.0,
            cww_alpha: None,
            centers: None,
            r_min: default_r_min(),
            k_max: default_k_max(),
            mc_nodes: default_mc_nodes(),
            rayleigh: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N", alias = "n", default = "two_usize")]
    pub n: usize,
    #[serde(default = "three")]
    pub d: usize,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(rename = "T", alias = "horizon", default = "one")]
    pub horizon: f64,
    #[serde(rename = "M", alias = "paths", default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Collision tolerance; `max(10h, 1e-4)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_coll: Option<f64>,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    /// Initial dispersion of the particles placed on a line.
    #[serde(default = "one")]
    pub r0: f64,
    /// Checkpoint times; ten equally spaced times when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<f64>>,
    #[serde(default)]
    pub stop_at_collision: bool,
    #[serde(default = "one_usize")]
    pub monitor_stride: usize,
    /// Row-major `N × N` table `e_ij`; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Vec<f64>>,
    #[serde(default)]
    pub mollifier: MollifierSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamSection>,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub uniqueness: UniquenessSection,
    #[serde(default)]
    pub bessel: BesselSection,
    #[serde(default)]
    pub hardy: HardySection,
    #[serde(default)]
    pub norms: NormsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every key has a default")
    }
}

/// Parse a TOML document and fill in every default.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        CliError::Parse { line, column, message: e.message().to_string() }
    })?;
    Ok(cfg.resolved())
}

/// One-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl RunConfig {
    /// Replace every derived default by its value. Idempotent.
    pub fn resolved(mut self) -> Self {
        if self.eps_coll.is_none() {
            self.eps_coll = Some((10.0 * self.h).max(1e-4));
        }
        if self.checkpoints.is_none() {
            self.checkpoints = Some((1..=10).map(|k| self.horizon * k as f64 / 10.0).collect());
        }
        if self.uniqueness.indices.is_none() {
            self.uniqueness.indices = Some((0..self.uniqueness.schedule.len()).collect());
        }
        if self.bessel.mu.is_none() && self.n >= 2 && self.d >= 3 && self.kappa >= 0.0 {
            self.bessel.mu = Some(bessel_dimension(self.n, self.d, self.kappa));
        }
        if self.norms.centers.is_none() {
            self.norms.centers = Some(vec![vec![0.0; self.norms.dim]]);
        }
        self
    }

    /// Check the preconditions of `sub` and collect regime warnings.
    pub fn validate(&self, sub: Subcommand) -> CliResult<Vec<String>> {
        let mut warnings = Vec::new();
        match sub {
            Subcommand::Simulate | Subcommand::ScanKappa | Subcommand::Uniqueness => {
                self.validate_system()?;
                self.particle_config()?.validate()?;
                if sub == Subcommand::ScanKappa {
                    if self.scan.kappas.is_empty() {
                        return Err(CliError::validation("scan.kappas is nonempty", "a scan needs at least one kappa"));
                    }
                    if self.scan.kappas.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
                        return Err(CliError::validation(
                            "scan.kappas >= 0",
                            "the attraction strength is nonnegative",
                        ));
                    }
                } else {
                    warnings.extend(self.regime_warning()?);
                }
                if sub == Subcommand::Uniqueness {
                    self.validate_uniqueness()?;
                }
            }
            Subcommand::BesselCheck => self.validate_bessel()?,
            Subcommand::HardyBounds => self.validate_hardy(&mut warnings)?,
            Subcommand::Norms => self.validate_norms(&mut warnings)?,
        }
        Ok(warnings)
    }

    fn validate_system(&self) -> CliResult<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(CliError::validation(
                format!("kappa >= 0 (got {})", self.kappa),
                "the attraction strength is nonnegative",
            ));
        }
        if self.n < 2 || self.d < 3 {
            return Err(CliError::validation(
                format!("N >= 2 and d >= 3 (got N = {}, d = {})", self.n, self.d),
                "the particle kernel acts between at least two particles in dimension three or more",
            ));
        }
        Ok(())
    }

    fn regime_warning(&self) -> CliResult<Option<String>> {
        let r = classify_regime(self.n, self.d, self.kappa)?;
        Ok(match r.label {
            RegimeLabel::Sticky => Some(format!(
                "kappa = {} >= kappa* = {}: mu = {:.6} <= 0, collisions are sticky and weak well-posedness fails",
                self.kappa, r.kappa_star, r.mu
            )),
            RegimeLabel::NonSticky => Some(format!(
                "0 < mu = {:.6} < 2: collisions occur and separate instantly",
                r.mu
            )),
            RegimeLabel::NoCollision => None,
        })
    }

    fn validate_uniqueness(&self) -> CliResult<()> {
        let delta = formbound_from_kappa(self.n, self.kappa);
        if !(delta < 4.0) {
            return Err(CliError::validation(
                format!("δ < 4 (δ = (N−1)²κ/N² = {delta:.6})"),
                "form-bound hypothesis under which the limit does not depend on the mollifier",
            ));
        }
        let u = &self.uniqueness;
        MollifierFamily::new(u.family_a.kind(), u.schedule.clone())?;
        let len = u.schedule.len();
        if let Some(bad) = u.indices.iter().flatten().find(|&&i| i >= len) {
            return Err(CliError::validation(
                format!("uniqueness.indices < {len} (got {bad})"),
                "indices select entries of the mollifier schedule",
            ));
        }
        if u.projections == 0 || u.splits == 0 {
            return Err(CliError::validation(
                "uniqueness.projections >= 1 and uniqueness.splits >= 1",
                "the noise floor needs at least one projection and one split",
            ));
        }
        Ok(())
    }

    fn validate_bessel(&self) -> CliResult<()> {
        let b = &self.bessel;
        let Some(mu) = b.mu else {
            return Err(CliError::validation(
                "bessel.mu given, or N >= 2, d >= 3, kappa >= 0",
                "the dimension is derived from the particle system",
            ));
        };
        if !mu.is_finite() || !(b.x0 >= 0.0) || !(b.t > 0.0) || b.samples < 2 || !(b.h > 0.0) {
            return Err(CliError::validation(
                "finite mu, x0 >= 0, t > 0, samples >= 2, h > 0",
                "squared Bessel transition from a nonnegative start",
            ));
        }
        if mu <= 0.0 && b.t < b.h {
            return Err(CliError::validation("bessel.t >= bessel.h", "Euler reference needs one step"));
        }
        Ok(())
    }

    fn validate_hardy(&self, warnings: &mut Vec<String>) -> CliResult<()> {
        let h = &self.hardy;
        if h.d_range.0 < 3 || h.d_range.1 < h.d_range.0 || h.n_range.0 < 2 || h.n_range.1 < h.n_range.0 {
            return Err(CliError::validation(
                format!("3 <= d_lo <= d_hi and 2 <= n_lo <= n_hi (got {:?}, {:?})", h.d_range, h.n_range),
                "the many-particle Hardy inequality needs d >= 3 and N >= 2",
            ));
        }
        if h.variational && h.n_range.1 > 3 {
            warnings.push("variational estimates are computed for N <= 3 only".into());
        }
        warnings.push(driftlab_core::hardy::RADICAND_NOTE.to_string());
        Ok(())
    }

    fn validate_norms(&self, warnings: &mut Vec<String>) -> CliResult<()> {
        let m = &self.norms;
        if m.dim < 3 {
            return Err(CliError::validation(
                format!("norms.dim >= 3 (got {})", m.dim),
                "the Hardy drift is form-bounded only in dimension three or more",
            ));
        }
        if !(m.delta >= 0.0) {
            return Err(CliError::validation("norms.delta >= 0", "form-bounds are nonnegative"));
        }
        if m.delta >= 4.0 {
            warnings.push(format!("delta = {} >= 4: no critical exponent", m.delta));
        }
        if !(m.p >= 1.0) {
            return Err(CliError::validation("norms.p >= 1", "Morrey exponents are at least 1"));
        }
        Ok(())
    }

    /// The simulator configuration. `workers = 0` uses the ambient pool.
    pub fn particle_config(&self) -> CliResult<ParticleConfig> {
        let mut c = ParticleConfig::new(self.n, self.d, self.kappa);
        c.modulation = match &self.modulation {
            Some(t) => Modulation::Table(t.clone()),
            None => Modulation::Uniform,
        };
        c.mollifier = MollifierFamily::new(self.mollifier.kind.kind(), self.mollifier.schedule.clone())?;
        c.mollifier_index = self.mollifier.index;
        c.stream = self.stream.as_ref().map(|s| StreamPerturbation {
            matrix: StreamMatrix::rotational(self.n * self.d, s.amplitude),
            eps: s.eps,
            settings: TruncationSettings { log_coeff: s.log_coeff, ..TruncationSettings::default() },
        });
        if !(self.r0 > 0.0) {
            return Err(CliError::validation("r0 > 0", "particles start apart"));
        }
        c.initial = InitialCondition::Line { r0: self.r0 };
        c.horizon = self.horizon;
        c.h = self.h;
        c.paths = self.paths;
        c.seed = self.seed;
        c.eps_coll = self.eps_coll;
        c.dwell = self.dwell;
        c.checkpoints = self.checkpoints.clone();
        c.monitor_stride = self.monitor_stride;
        c.stop_at_collision = self.stop_at_collision;
        c.workers = 0;
        Ok(c)
    }

    pub fn uniqueness_families(&self) -> CliResult<(MollifierFamily, MollifierFamily, Vec<usize>, UniquenessSettings)> {
        let u = &self.uniqueness;
        let a = MollifierFamily::new(u.family_a.kind(), u.schedule.clone())?;
        let b = MollifierFamily::new(u.family_b.kind(), u.schedule.clone())?;
        let indices = u.indices.clone().unwrap_or_else(|| (0..u.schedule.len()).collect());
        let settings = UniquenessSettings {
            projections: u.projections,
            splits: u.splits,
            coupling: match u.coupling {
                CouplingChoice::Independent => Coupling::Independent,
                CouplingChoice::Common => Coupling::Common,
            },
        };
        Ok((a, b, indices, settings))
    }
}

fn heat() -> MollifierChoice {
    MollifierChoice::Heat
}
fn bump() -> MollifierChoice {
    MollifierChoice::Bump
}
fn independent() -> CouplingChoice {
    CouplingChoice::Independent
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn one_usize() -> usize {
    1
}
fn two_usize() -> usize {
    2
}
fn three() -> usize {
    3
}
fn default_h() -> f64 {
    1e-3
}
fn default_paths() -> usize {
    10_000
}
fn default_dwell() -> f64 {
    DEFAULT_DWELL
}
fn default_mollifier_schedule() -> Vec<f64> {
    vec![1e-4]
}
fn default_scan_grid() -> Vec<f64> {
    vec![0.0, 16.0, 48.0, 100.0, 144.0, 160.0]
}
fn default_uniqueness_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_projections() -> usize {
    32
}
fn default_splits() -> usize {
    8
}
fn default_bessel_samples() -> usize {
    100_000
}
fn default_hardy_d() -> (usize, usize) {
    (3, 12)
}
fn default_hardy_n() -> (usize, usize) {
    (2, 10)
}
fn default_variational_samples() -> usize {
    200_000
}
fn default_batches() -> usize {
    20
}
fn default_golden_iters() -> usize {
    24
}
fn default_r_min() -> f64 {
    0.125
}
fn default_k_max() -> usize {
    3
}
fn default_mc_nodes() -> usize {
    20_000
}
