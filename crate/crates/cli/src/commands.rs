//! Subcommand bodies: run the computation and lay the results out as a table.

use driftlab_core::bessel::{
    besq_euler_outcome, hitting_time_cdf, sample_besq_transition, sample_hitting_time, BesselParams,
};
use driftlab_core::fields::VectorField;
use driftlab_core::hardy::{variational_upper, BoundTable, VariationalSpec, RADICAND_NOTE};
use driftlab_core::norms::{
    critical_p, cww_functional, morrey_functional, rayleigh_formbound, BallGrid, TrialFamily,
};
use driftlab_core::particles::{
    collision_statistics, com_diffusion_check, mollifier_uniqueness_test, scan_kappa, simulate_ensemble,
};
use driftlab_core::rng::{self, domain};
use driftlab_core::stats;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::Stopwatch;
use crate::output::{Cell, Output, Table};

/// Node budget for the variational quadrature.
pub const VARIATIONAL_BUDGET: usize = 1 << 24;
/// Node budget for the Rayleigh quotient quadrature.
pub const RAYLEIGH_BUDGET: usize = 1 << 22;

pub fn simulate(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let pc = cfg.particle_config()?;
    let e = sw.stage("simulate", || simulate_ensemble(&pc))?;
    let (collision, com) = sw.stage("statistics", || {
        let com = (e.uniform_modulation && !e.has_stream && !e.stopped_at_collision)
            .then(|| com_diffusion_check(&e).ok())
            .flatten();
        (collision_statistics(&e), com)
    });
    let collision = collision?;
    let mut table = Table::new(
        ["path_id", "collision_time", "sticky", "absorbed"]
            .into_iter()
            .map(String::from)
            .chain(e.checkpoints.iter().map(|t| format!("r_t{t}"))),
    );
    for r in &e.records {
        let mut row = vec![Cell::from(r.path_id), Cell::opt(r.collision_time), r.sticky.into(), r.absorbed.into()];
        row.extend(r.r_trace.iter().map(|&v| Cell::Float(v)));
        table.push(row);
    }
    let extra = json!({
        "ensemble": {
            "paths": e.records.len(),
            "excluded": e.excluded,
            "eps_coll": e.eps_coll,
            "dwell": e.dwell,
            "checkpoints": e.checkpoints,
        },
        "collision": collision,
        "centre_of_mass": com,
    });
    Ok(Output::new(table, extra))
}

pub fn scan(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let pc = cfg.particle_config()?;
    let rows = sw.stage("scan", || scan_kappa(&pc, &cfg.scan.kappas))?;
    let mut table = Table::new([
        "kappa",
        "label",
        "mu",
        "collision_probability",
        "collision_se",
        "sticky_fraction",
        "sticky_se",
    ]);
    for r in &rows {
        table.push(vec![
            r.kappa.into(),
            r.label.as_str().into(),
            r.mu.into(),
            r.collision_probability.into(),
            r.collision_se.into(),
            r.sticky_fraction.into(),
            r.sticky_se.into(),
        ]);
    }
    Ok(Output::new(table, json!({ "rows": rows.len() })))
}

pub fn uniqueness(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let pc = cfg.particle_config()?;
    let (a, b, indices, settings) = cfg.uniqueness_families()?;
    let points = sw.stage("uniqueness", || mollifier_uniqueness_test(&pc, &a, &b, &indices, settings))?;
    let mut table = Table::new(["index", "eps_a", "eps_b", "distance", "floor", "ratio"]);
    for p in &points {
        table.push(vec![
            p.index.into(),
            p.eps_a.into(),
            p.eps_b.into(),
            p.distance.into(),
            p.floor.into(),
            (p.distance / p.floor).into(),
        ]);
    }
    let last = points.last().map(|p| p.distance / p.floor);
    Ok(Output::new(table, json!({ "final_ratio": last })))
}

pub fn bessel_check(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let b = &cfg.bessel;
    let mu = b.mu.expect("validated");
    let p = BesselParams::new(mu, b.x0)?;
    let n = b.samples;
    let mut table = Table::new([
        "method",
        "mu",
        "x0",
        "t",
        "samples",
        "mean",
        "exact_mean",
        "mean_stderr",
        "variance",
        "exact_variance",
        "hit_probability",
        "exact_hit_probability",
        "hit_stderr",
    ]);
    let row = sw.stage("sample", || -> CliResult<Vec<Cell>> {
        let mut r = rng::stream(cfg.seed, domain::BESSEL, 0);
        let (method, draws, hits, exact_mean, exact_var) = if mu > 0.0 {
            let draws = (0..n)
                .map(|_| sample_besq_transition(&p, b.t, &mut r))
                .collect::<Result<Vec<f64>, _>>()?;
            let hits = if mu < 2.0 && b.x0 > 0.0 {
                let mut rh = rng::stream(cfg.seed, domain::BESSEL, 1);
                let mut count = 0;
                for _ in 0..n {
                    if sample_hitting_time(&p, &mut rh)? <= b.t {
                        count += 1;
                    }
                }
                count
            } else {
                0
            };
            let exact_var = 4.0 * b.x0 * b.t + 2.0 * mu * b.t * b.t;
            ("exact", draws, hits, Some(b.x0 + mu * b.t), Some(exact_var))
        } else {
            let mut draws = Vec::with_capacity(n);
            let mut hits = 0;
            for _ in 0..n {
                let o = besq_euler_outcome(&p, b.h, b.t, &mut r)?;
                draws.push(o.terminal);
                hits += o.first_hit.is_some() as usize;
            }
            ("euler", draws, hits, None, None)
        };
        let exact_hit = if mu < 2.0 { hitting_time_cdf(&p, b.t)? } else { 0.0 };
        let (_, _, hit_se) = stats::wilson(hits, n, 1.0);
        let var = stats::variance(&draws);
        Ok(vec![
            method.into(),
            mu.into(),
            b.x0.into(),
            b.t.into(),
            n.into(),
            stats::mean(&draws).into(),
            Cell::opt(exact_mean),
            (var / n as f64).sqrt().into(),
            var.into(),
            Cell::opt(exact_var),
            (hits as f64 / n as f64).into(),
            exact_hit.into(),
            hit_se.into(),
        ])
    })?;
    table.push(row);
    Ok(Output::new(table, json!({ "regime_mu": mu })))
}

pub fn hardy_bounds(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let h = &cfg.hardy;
    let bounds = sw.stage("closed_forms", || BoundTable::new(h.d_range.0..=h.d_range.1, h.n_range.0..=h.n_range.1))?;
    let mut columns = vec!["d", "N", "hhlt_lower", "paper_upper", "hhlt_upper", "kappa_hyp", "k_int"];
    if h.variational {
        columns.extend(["variational", "variational_stderr"]);
    }
    let mut table = Table::new(columns);
    let mut thresholds = Vec::new();
    for row in &bounds.rows {
        let mut cells = vec![
            row.d.into(),
            row.n.into(),
            row.hhlt_lower.into(),
            row.paper_upper.into(),
            row.hhlt_upper.into(),
            row.kappa_hyp.into(),
            row.admissible_endpoint.into(),
        ];
        if h.variational {
            let est = if row.n <= 3 {
                let spec = VariationalSpec {
                    samples: h.samples,
                    batches: h.batches,
                    iters: h.iters,
                    seed: cfg.seed,
                    ..VariationalSpec::for_dim(row.d)
                };
                Some(sw.stage(&format!("variational_d{}_n{}", row.d, row.n), || {
                    variational_upper(row.d, row.n, &spec, VARIATIONAL_BUDGET)
                })?)
            } else {
                None
            };
            cells.push(Cell::opt(est.map(|e| e.value)));
            cells.push(Cell::opt(est.map(|e| e.stderr)));
        }
        table.push(cells);
        thresholds.push(json!({ "d": row.d, "N": row.n, "kappa_hyp2": row.kappa_hyp2 }));
    }
    Ok(Output::new(table, json!({ "radicand_note": RADICAND_NOTE, "thresholds": thresholds })))
}

pub fn norms(cfg: &RunConfig, sw: &mut Stopwatch) -> CliResult<Output> {
    let m = &cfg.norms;
    let field = VectorField::hardy(m.delta, m.dim)?;
    let mut table = Table::new(["quantity", "value"]);
    table.push(vec!["declared_delta".into(), m.delta.into()]);
    if m.delta < 4.0 {
        table.push(vec!["critical_p".into(), critical_p(m.delta)?.into()]);
    }
    let centers = m.centers.clone().unwrap_or_else(|| vec![vec![0.0; m.dim]]);
    let grid = BallGrid::dyadic(centers, m.r_min, m.k_max, m.mc_nodes, cfg.seed)?;
    let morrey = sw.stage("morrey", || morrey_functional(&field, m.p, &grid))?;
    table.push(vec!["morrey".into(), morrey.value.into()]);
    table.push(vec!["morrey_radius".into(), morrey.radius.into()]);
    table.push(vec!["morrey_center_index".into(), morrey.center_index.into()]);
    table.push(vec!["morrey_rejection_fraction".into(), morrey.rejection_fraction.into()]);
    if let Some(alpha) = m.cww_alpha {
        let cww = sw.stage("cww", || cww_functional(&field, alpha, &grid))?;
        table.push(vec!["cww".into(), cww.value.into()]);
    }
    if m.rayleigh {
        let est = sw.stage("rayleigh", || rayleigh_formbound(&field, &TrialFamily::radial(m.dim), RAYLEIGH_BUDGET))?;
        table.push(vec!["rayleigh_delta".into(), est.delta.into()]);
        table.push(vec!["rayleigh_a".into(), est.a.into()]);
        table.push(vec!["rayleigh_lambda".into(), est.lambda.into()]);
    }
    Ok(Output::new(table, json!({ "field": "hardy", "dim": m.dim, "p": m.p })))
}
